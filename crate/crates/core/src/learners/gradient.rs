use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::games::{action_values, gradient_2x2, Game, JointPolicy};

use super::policy::Policy;

/// Below this remaining mass the conditional baseline falls back to the
/// plain mean of the other actions' estimates.
const MASS_EPS: f64 = 1e-12;

/// Estimated partial derivative of the expected reward for each own action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientEstimate {
    pub g: Vec<f64>,
}

impl GradientEstimate {
    pub fn new(g: Vec<f64>) -> Self {
        Self { g }
    }

    pub fn zeros(k: usize) -> Self {
        Self { g: vec![0.0; k] }
    }

    pub fn len(&self) -> usize {
        self.g.len()
    }

    pub fn is_empty(&self) -> bool {
        self.g.is_empty()
    }
}

/// Gradient of the policy's value with respect to shifting probability onto
/// each action, given per-action value estimates.
///
/// For action `a` this is `r(a)` minus the policy-weighted value of the other
/// actions (the direction that grows `pi(a)` while shrinking the rest in
/// proportion). With two actions it is exactly `(d, -d)` where
/// `d = r(a1) - r(a2)`, the 2x2 gradient `V(1, q) - V(0, q)`.
pub fn estimate_gradient(policy: &Policy, r_hat: &[f64]) -> GradientEstimate {
    debug_assert_eq!(policy.len(), r_hat.len());
    let k = r_hat.len();
    let total = policy.dot(r_hat);
    let g = (0..k)
        .map(|a| {
            let rest_mass = 1.0 - policy.prob(a);
            let baseline = if rest_mass > MASS_EPS && k > 1 {
                (total - policy.prob(a) * r_hat[a]) / rest_mass
            } else if k > 1 {
                (r_hat.iter().sum::<f64>() - r_hat[a]) / (k - 1) as f64
            } else {
                r_hat[a]
            };
            r_hat[a] - baseline
        })
        .collect();
    GradientEstimate { g }
}

/// True gradient from full knowledge of the game and the other players'
/// policies. 2x2 games use the closed form `u1 q + u2` (or `u3 p + u4`).
pub fn exact_gradient(game: &Game, player: usize, joint: &JointPolicy) -> Result<GradientEstimate> {
    if player >= game.num_players() {
        return Err(Error::Shape(format!("no player {player}")));
    }
    let values = action_values(game, player, joint)?;
    if game.is_2x2() {
        let opp = joint.get(1 - player).prob(0);
        let d = gradient_2x2(game, player, opp.clamp(0.0, 1.0))?;
        return Ok(GradientEstimate { g: vec![d, -d] });
    }
    Ok(estimate_gradient(joint.get(player), &values))
}
