//! Policies, value estimates and the gradient-ascent learning rules.
//!
//! Every rule takes the learner's current policy and a per-action gradient
//! and produces a new policy on the floored simplex:
//!
//! * IGA / GIGA: plain projected gradient ascent.
//! * IGA-WoLF: two step sizes, chosen by comparing against a known
//!   equilibrium policy.
//! * PHC-WoLF: the equilibrium is approximated by the running average policy.
//! * GIGA-WoLF: a slow auxiliary policy `z` pulls the fast policy back.
//! * WPL: each component's step is weighted by `1 - pi(a)` when the gradient
//!   is positive and by `pi(a)` when it is negative.

mod gradient;
mod policy;
mod value;

pub use gradient::{estimate_gradient, exact_gradient, GradientEstimate};
pub use policy::{project, Policy, SUM_TOL};
pub use value::ValueEstimate;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Iga,
    Giga,
    IgaWolf,
    PhcWolf,
    GigaWolf,
    Wpl,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::Iga,
        Algorithm::Giga,
        Algorithm::IgaWolf,
        Algorithm::PhcWolf,
        Algorithm::GigaWolf,
        Algorithm::Wpl,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Iga => "iga",
            Algorithm::Giga => "giga",
            Algorithm::IgaWolf => "iga-wolf",
            Algorithm::PhcWolf => "phc-wolf",
            Algorithm::GigaWolf => "giga-wolf",
            Algorithm::Wpl => "wpl",
        }
    }

    /// Whether the rule needs the game (an equilibrium policy and exact values).
    pub fn needs_oracle(self) -> bool {
        self == Algorithm::IgaWolf
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown algorithm `{s}`")))
    }
}

/// Learning parameters for one agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnerSpec {
    pub algo: Algorithm,
    /// Policy learning rate. Also GIGA-WoLF's step size and PHC-WoLF's
    /// winning rate.
    pub eta: f64,
    /// Value learning rate.
    pub alpha: f64,
    /// Exploration floor applied by the projection.
    pub epsilon: f64,
    /// PHC-WoLF's losing/winning rate ratio.
    pub delta_ratio: f64,
    /// IGA-WoLF's factored rates.
    pub l_win: f64,
    pub l_lose: f64,
}

impl Default for LearnerSpec {
    fn default() -> Self {
        Self {
            algo: Algorithm::Wpl,
            eta: 0.002,
            alpha: 0.1,
            epsilon: 0.1,
            delta_ratio: 2.0,
            l_win: 1.0,
            l_lose: 2.0,
        }
    }
}

impl LearnerSpec {
    pub fn new(algo: Algorithm) -> Self {
        Self {
            algo,
            ..Self::default()
        }
    }

    pub fn eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    pub fn alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    /// All violated constraints, so config validation can report them together.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            out.push(format!("eta must be positive, got {}", self.eta));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            out.push(format!("alpha must be in (0, 1], got {}", self.alpha));
        }
        if !(self.epsilon >= 0.0 && self.epsilon < 1.0) {
            out.push(format!("epsilon must be in [0, 1), got {}", self.epsilon));
        }
        if !(self.delta_ratio > 1.0) {
            out.push(format!(
                "delta_ratio must exceed 1, got {}",
                self.delta_ratio
            ));
        }
        if !(self.l_win > 0.0 && self.l_lose > self.l_win) {
            out.push(format!(
                "need l_lose > l_win > 0, got l_win={} l_lose={}",
                self.l_win, self.l_lose
            ));
        }
        out
    }

    /// Creates a learner starting from `initial` (projected onto the floor).
    /// `oracle_ne` is required for IGA-WoLF and ignored otherwise.
    pub fn build(&self, initial: &Policy, oracle_ne: Option<Policy>) -> Result<LearnerState> {
        let problems = self.problems();
        if !problems.is_empty() {
            return Err(Error::Config(problems.join("; ")));
        }
        let k = initial.len();
        let policy = project(initial.probs(), self.epsilon)?;
        let aux = match self.algo {
            Algorithm::Iga | Algorithm::Giga | Algorithm::Wpl => Auxiliary::None,
            Algorithm::GigaWolf => Auxiliary::GigaWolf {
                z: policy.clone(),
                delta: self.eta,
            },
            Algorithm::PhcWolf => Auxiliary::PhcWolf {
                average: policy.clone(),
                count: 0,
                delta_win: self.eta,
                delta_lose: self.eta * self.delta_ratio,
            },
            Algorithm::IgaWolf => {
                let oracle = oracle_ne
                    .ok_or_else(|| Error::Config("iga-wolf needs the equilibrium policy".into()))?;
                if oracle.len() != k {
                    return Err(Error::Shape("equilibrium policy has wrong length".into()));
                }
                Auxiliary::IgaWolf {
                    oracle: Some(oracle),
                    l_win: self.l_win,
                    l_lose: self.l_lose,
                }
            }
        };
        Ok(LearnerState {
            algorithm: self.algo,
            policy,
            values: ValueEstimate::new(k, self.alpha)?,
            eta: self.eta,
            epsilon: self.epsilon,
            aux,
        })
    }
}

/// Algorithm-specific state carried between steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Auxiliary {
    None,
    GigaWolf {
        z: Policy,
        delta: f64,
    },
    PhcWolf {
        average: Policy,
        count: u64,
        delta_win: f64,
        delta_lose: f64,
    },
    IgaWolf {
        oracle: Option<Policy>,
        l_win: f64,
        l_lose: f64,
    },
}

/// What a step learned about which branch of a two-rate rule it took.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Win,
    Lose,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerState {
    pub algorithm: Algorithm,
    pub policy: Policy,
    pub values: ValueEstimate,
    pub eta: f64,
    pub epsilon: f64,
    pub aux: Auxiliary,
}

impl LearnerState {
    pub fn num_actions(&self) -> usize {
        self.policy.len()
    }

    /// Records a sampled reward for the executed action.
    pub fn observe(&mut self, action: usize, reward: f64) -> Result<()> {
        self.values.update(action, reward)
    }

    /// Gradient estimate from the current value estimates.
    pub fn estimate_gradient(&self) -> GradientEstimate {
        estimate_gradient(&self.policy, self.values.values())
    }

    fn check_len(&self, gradient: &GradientEstimate) -> Result<()> {
        if gradient.len() != self.policy.len() {
            return Err(Error::Shape(format!(
                "gradient has {} entries for {} actions",
                gradient.len(),
                self.policy.len()
            )));
        }
        Ok(())
    }

    /// Applies this learner's own rule. `action_values` (the exact value of
    /// each own action against the opponents) is consulted only by IGA-WoLF.
    pub fn step(
        &mut self,
        gradient: &GradientEstimate,
        action_values: Option<&[f64]>,
    ) -> Result<()> {
        match self.algorithm {
            Algorithm::Iga | Algorithm::Giga => self.iga_step(gradient),
            Algorithm::Wpl => self.wpl_step(gradient),
            Algorithm::GigaWolf => self.giga_wolf_step(gradient),
            Algorithm::PhcWolf => self.phc_wolf_step(gradient).map(|_| ()),
            Algorithm::IgaWolf => {
                let values = action_values.ok_or_else(|| {
                    Error::Config("iga-wolf step needs exact action values".into())
                })?;
                self.iga_wolf_step(gradient, values).map(|_| ())
            }
        }
    }

    /// `pi <- project(pi + eta g)`.
    pub fn iga_step(&mut self, gradient: &GradientEstimate) -> Result<()> {
        self.check_len(gradient)?;
        let moved: Vec<f64> = self
            .policy
            .probs()
            .iter()
            .zip(&gradient.g)
            .map(|(p, g)| p + self.eta * g)
            .collect();
        self.policy = project(&moved, self.epsilon)?;
        Ok(())
    }

    /// Weighted step: positive gradients scaled by `1 - pi(a)`, negative ones
    /// by `pi(a)`, then projected.
    pub fn wpl_step(&mut self, gradient: &GradientEstimate) -> Result<()> {
        self.check_len(gradient)?;
        let moved: Vec<f64> = self
            .policy
            .probs()
            .iter()
            .zip(&gradient.g)
            .map(|(&p, &g)| p + wpl_delta(p, g, self.eta))
            .collect();
        self.policy = project(&moved, self.epsilon)?;
        Ok(())
    }

    pub fn giga_wolf_step(&mut self, gradient: &GradientEstimate) -> Result<()> {
        self.check_len(gradient)?;
        let Auxiliary::GigaWolf { z, delta } = &mut self.aux else {
            return Err(Error::Config(
                "giga-wolf step on a learner without z".into(),
            ));
        };
        let pi = self.policy.probs();
        let fast: Vec<f64> = pi
            .iter()
            .zip(&gradient.g)
            .map(|(p, g)| p + *delta * g)
            .collect();
        let pi_hat = project(&fast, self.epsilon)?;
        let slow: Vec<f64> = z
            .probs()
            .iter()
            .zip(&gradient.g)
            .map(|(p, g)| p + *delta * g / 3.0)
            .collect();
        let z_new = project(&slow, self.epsilon)?;

        let gap = z_new.distance(&pi_hat);
        let mix = if gap == 0.0 {
            1.0
        } else {
            (z_new.distance(z) / gap).min(1.0)
        };
        let probs: Vec<f64> = pi_hat
            .probs()
            .iter()
            .zip(z_new.probs())
            .map(|(h, zn)| h + mix * (zn - h))
            .collect();
        *z = z_new;
        // Convex combination of two valid policies; renormalize rounding only.
        self.policy = project(&probs, self.epsilon)?;
        Ok(())
    }

    /// PHC-WoLF step: hill-climbs toward the action with the highest reward
    /// estimate, by `delta_lose` when the current policy scores below the
    /// running average policy and by `delta_win` otherwise. The gradient is
    /// only checked for shape. Returns the branch taken.
    pub fn phc_wolf_step(&mut self, gradient: &GradientEstimate) -> Result<Branch> {
        self.check_len(gradient)?;
        let Auxiliary::PhcWolf {
            average,
            count,
            delta_win,
            delta_lose,
        } = &mut self.aux
        else {
            return Err(Error::Config(
                "phc-wolf step on a learner without an average policy".into(),
            ));
        };
        *count += 1;
        let n = *count as f64;
        let avg: Vec<f64> = average
            .probs()
            .iter()
            .zip(self.policy.probs())
            .map(|(m, p)| m + (p - m) / n)
            .collect();
        *average = Policy::new(avg)?;

        let r_hat = self.values.values();
        let branch = if self.policy.dot(r_hat) < average.dot(r_hat) {
            Branch::Lose
        } else {
            Branch::Win
        };
        let rate = match branch {
            Branch::Win => *delta_win,
            Branch::Lose => *delta_lose,
        };
        let k = r_hat.len();
        let best = (0..k).fold(0, |b, a| if r_hat[a] > r_hat[b] { a } else { b });
        if (0..k).any(|a| a != best && r_hat[a] == r_hat[best]) {
            // No unique greedy action to climb toward.
            return Ok(branch);
        }
        let share = rate / (k - 1) as f64;
        let mut moved = self.policy.probs().to_vec();
        let mut gained = 0.0;
        for (a, p) in moved.iter_mut().enumerate() {
            if a != best {
                let take = p.min(share);
                *p -= take;
                gained += take;
            }
        }
        moved[best] += gained;
        self.policy = project(&moved, self.epsilon)?;
        Ok(branch)
    }

    /// IGA-WoLF step against exact per-action values `V(a, pi_-i)`.
    /// Returns the branch taken.
    pub fn iga_wolf_step(
        &mut self,
        gradient: &GradientEstimate,
        action_values: &[f64],
    ) -> Result<Branch> {
        self.check_len(gradient)?;
        let Auxiliary::IgaWolf {
            oracle,
            l_win,
            l_lose,
        } = &self.aux
        else {
            return Err(Error::Config(
                "iga-wolf step on a learner without rates".into(),
            ));
        };
        let oracle = oracle
            .as_ref()
            .ok_or_else(|| Error::Config("iga-wolf needs the equilibrium policy".into()))?;
        if action_values.len() != self.policy.len() {
            return Err(Error::Shape("action values have wrong length".into()));
        }
        let branch = if self.policy.dot(action_values) < oracle.dot(action_values) {
            Branch::Lose
        } else {
            Branch::Win
        };
        let rate = match branch {
            Branch::Win => *l_win,
            Branch::Lose => *l_lose,
        };
        let moved: Vec<f64> = self
            .policy
            .probs()
            .iter()
            .zip(&gradient.g)
            .map(|(p, g)| p + self.eta * rate * g)
            .collect();
        self.policy = project(&moved, self.epsilon)?;
        Ok(branch)
    }
}

/// Unprojected WPL change of one component.
pub fn wpl_delta(prob: f64, gradient: f64, eta: f64) -> f64 {
    let weight = if gradient < 0.0 { prob } else { 1.0 - prob };
    gradient * eta * weight
}


#[cfg(test)]
mod properties {
    use super::*;
    use proptest::prelude::*;

    fn simplex(k: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(0.01..1.0f64, k).prop_map(|v| {
            let s: f64 = v.iter().sum();
            v.into_iter().map(|x| x / s).collect()
        })
    }

    fn case() -> impl Strategy<Value = (usize, Vec<f64>, Vec<f64>, f64, f64, usize)> {
        (2usize..=5).prop_flat_map(|k| {
            (
                Just(k),
                simplex(k),
                proptest::collection::vec(-50.0..50.0f64, k),
                prop_oneof![Just(0.0), 0.0..(0.9 / k as f64)],
                1e-4..0.5f64,
                0usize..6,
            )
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]

        #[test]
        fn every_rule_keeps_policy_valid((k, init, g, eps, eta, which) in case()) {
            let algo = Algorithm::ALL[which];
            let mut s = LearnerSpec::new(algo)
                .eta(eta)
                .epsilon(eps)
                .build(&Policy::new(init).unwrap(), Some(Policy::uniform(k)))
                .unwrap();
            s.values = ValueEstimate::with_values(g.clone(), 0.5).unwrap();
            let grad = GradientEstimate::new(g.clone());
            for _ in 0..3 {
                s.step(&grad, Some(&g)).unwrap();
                prop_assert!(s.policy.respects_floor(eps, 1e-12), "{algo}: {:?}", s.policy);
            }
        }
    }

    proptest! {
        #[test]
        fn wpl_signs_and_magnitudes(p in 0.0..=1.0f64, g in -10.0..10.0f64, eta in 1e-5..1.0f64) {
            let d = wpl_delta(p, g, eta);
            prop_assert!(d == 0.0 || d.signum() == g.signum());
            prop_assert!(d.abs() <= eta * g.abs() + 1e-15);
        }

        #[test]
        fn wpl_branches_agree_at_zero(p in 0.0..=1.0f64, eta in 1e-5..1.0f64) {
            prop_assert_eq!(wpl_delta(p, 0.0, eta), 0.0);
            prop_assert!(wpl_delta(p, 1e-12, eta).abs() < 1e-12);
            prop_assert!(wpl_delta(p, -1e-12, eta).abs() < 1e-12);
        }

        #[test]
        fn conditional_baseline_vanishes((k, pol, r, _eps, _eta, _w) in case()) {
            let pol = Policy::new(pol).unwrap();
            let g = estimate_gradient(&pol, &r);
            let weighted: f64 = (0..k).map(|a| pol.prob(a) * (1.0 - pol.prob(a)) * g.g[a]).sum();
            prop_assert!(weighted.abs() < 1e-10);
        }

        #[test]
        fn projection_idempotent(x in proptest::collection::vec(-2.0..2.0f64, 2..6), eps in 0.0..0.15f64) {
            let once = project(&x, eps).unwrap();
            let twice = project(once.probs(), eps).unwrap();
            for (a, b) in once.probs().iter().zip(twice.probs()) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
