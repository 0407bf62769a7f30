use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack allowed on the sum-to-one constraint.
pub const SUM_TOL: f64 = 1e-9;

/// A probability distribution over an agent's actions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Policy {
    probs: Vec<f64>,
}

impl Policy {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Shape("policy over zero actions".into()));
        }
        if probs
            .iter()
            .any(|p| !p.is_finite() || *p < -SUM_TOL || *p > 1.0 + SUM_TOL)
        {
            return Err(Error::Domain(format!("invalid probabilities {probs:?}")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(Error::Domain(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(Self { probs })
    }

    pub fn uniform(k: usize) -> Self {
        Self {
            probs: vec![1.0 / k as f64; k],
        }
    }

    pub fn pure(k: usize, action: usize) -> Self {
        let mut probs = vec![0.0; k];
        probs[action] = 1.0;
        Self { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, action: usize) -> f64 {
        self.probs[action]
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Draws an action by inverse-CDF sampling.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (a, &p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return a;
            }
        }
        // u landed in the rounding gap above the cumulative sum.
        self.probs
            .iter()
            .rposition(|&p| p > 0.0)
            .unwrap_or(self.probs.len() - 1)
    }

    /// Expected value of a per-action quantity under this policy.
    pub fn dot(&self, values: &[f64]) -> f64 {
        self.probs.iter().zip(values).map(|(p, v)| p * v).sum()
    }

    /// Euclidean distance between two policies.
    pub fn distance(&self, other: &Policy) -> f64 {
        l2(&self.probs, &other.probs)
    }

    /// True when every component lies in `[floor, 1 - floor (k - 1)]` and the
    /// components sum to one.
    pub fn respects_floor(&self, floor: f64, tol: f64) -> bool {
        let k = self.len() as f64;
        let hi = 1.0 - floor * (k - 1.0);
        let total: f64 = self.probs.iter().sum();
        (total - 1.0).abs() <= SUM_TOL
            && self
                .probs
                .iter()
                .all(|&p| p >= floor - tol && p <= hi + tol)
    }
}

impl TryFrom<Vec<f64>> for Policy {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Policy::new(v)
    }
}

impl From<Policy> for Vec<f64> {
    fn from(p: Policy) -> Self {
        p.probs
    }
}

pub(crate) fn l2(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Nearest point (in Euclidean distance) to `x` among distributions whose
/// components are all at least `floor`.
///
/// Shifts by the floor, projects onto the simplex of mass `1 - k * floor`
/// with the sort-based algorithm, and shifts back.
pub fn project(x: &[f64], floor: f64) -> Result<Policy> {
    let k = x.len();
    if k == 0 {
        return Err(Error::Shape("cannot project an empty vector".into()));
    }
    if !(floor >= 0.0) || floor * k as f64 > 1.0 + 1e-12 {
        return Err(Error::InfeasibleFloor { floor, actions: k });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain(format!(
            "cannot project non-finite vector {x:?}"
        )));
    }
    let total: f64 = x.iter().sum();
    if (total - 1.0).abs() <= 1e-14 && x.iter().all(|&v| v >= floor) {
        return Ok(Policy { probs: x.to_vec() });
    }
    let mass = (1.0 - floor * k as f64).max(0.0);
    let shifted: Vec<f64> = x.iter().map(|v| v - floor).collect();
    let on_simplex = simplex_projection(&shifted, mass);
    let mut probs: Vec<f64> = on_simplex.into_iter().map(|v| v + floor).collect();

    // Fold the rounding residue into the largest component.
    let residue = 1.0 - probs.iter().sum::<f64>();
    if let Some(big) = probs
        .iter_mut()
        .max_by(|a, b| a.partial_cmp(b).expect("finite"))
    {
        *big += residue;
    }
    Ok(Policy { probs })
}

/// Euclidean projection of `y` onto `{w >= 0, sum w = mass}`.
fn simplex_projection(y: &[f64], mass: f64) -> Vec<f64> {
    if mass == 0.0 {
        return vec![0.0; y.len()];
    }
    let mut sorted = y.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &v) in sorted.iter().enumerate() {
        cumsum += v;
        let t = (cumsum - mass) / (j + 1) as f64;
        if v - t > 0.0 {
            theta = t;
        }
    }
    y.iter().map(|v| (v - theta).max(0.0)).collect()
}
