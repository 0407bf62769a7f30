use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-action reward estimates maintained by exponential averaging.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueEstimate {
    r_hat: Vec<f64>,
    alpha: f64,
}

impl ValueEstimate {
    pub fn new(actions: usize, alpha: f64) -> Result<Self> {
        Self::with_values(vec![0.0; actions], alpha)
    }

    pub fn with_values(r_hat: Vec<f64>, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::Domain(format!(
                "value learning rate {alpha} not in (0, 1]"
            )));
        }
        if r_hat.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("value estimates must be finite".into()));
        }
        Ok(Self { r_hat, alpha })
    }

    pub fn values(&self) -> &[f64] {
        &self.r_hat
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `r(a) <- alpha R + (1 - alpha) r(a)` for the executed action only.
    pub fn update(&mut self, action: usize, reward: f64) -> Result<()> {
        let actions = self.r_hat.len();
        let slot = self.r_hat.get_mut(action).ok_or(Error::ActionIndex {
            index: action,
            actions,
        })?;
        *slot = self.alpha * reward + (1.0 - self.alpha) * *slot;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn update_rule() {
        let mut v = ValueEstimate::with_values(vec![-3.0, 7.0], 1.0).unwrap();
        v.update(0, 5.0).unwrap();
        assert_eq!(v.values(), &[5.0, 7.0]);

        let mut v = ValueEstimate::new(2, 0.1).unwrap();
        v.update(1, 1.0).unwrap();
        assert!((v.values()[1] - 0.1).abs() < 1e-15);
        assert_eq!(v.values()[0], 0.0);

        let mut v = ValueEstimate::with_values(vec![1.0, 0.0], 0.1).unwrap();
        v.update(0, 1.0).unwrap();
        assert_eq!(v.values()[0], 1.0);
    }

    #[test]
    fn bad_inputs() {
        let mut v = ValueEstimate::new(2, 0.5).unwrap();
        assert!(matches!(v.update(2, 1.0), Err(Error::ActionIndex { .. })));
        assert!(ValueEstimate::new(2, 0.0).is_err());
        assert!(ValueEstimate::new(2, 1.5).is_err());
    }

    #[test]
    fn constant_stream_contracts_by_one_minus_alpha() {
        let alpha = 0.3;
        let c = 2.5;
        let mut v = ValueEstimate::with_values(vec![-4.0], alpha).unwrap();
        let mut gap = (v.values()[0] - c).abs();
        for _ in 0..20 {
            v.update(0, c).unwrap();
            let next = (v.values()[0] - c).abs();
            assert!((next - (1.0 - alpha) * gap).abs() < 1e-12);
            gap = next;
        }
    }
}
