//! Normal-form games: payoff tensors, the benchmark catalog, expected values,
//! the 2x2 gradient constants and equilibrium reference points.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learners::Policy;

/// Tolerance used when deciding whether an interior mixed equilibrium exists.
pub const INTERIOR_TOL: f64 = 1e-9;

/// An n-player normal-form game with a dense payoff tensor.
///
/// Joint actions are laid out row-major: the last player's action varies
/// fastest. Each cell stores one reward per player.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Game {
    name: Option<String>,
    actions: Vec<usize>,
    payoff: Vec<f64>,
}

impl Game {
    /// Builds a game from per-player action counts and a flat payoff table of
    /// `prod(actions) * players` rewards in row-major joint-action order.
    pub fn new(actions: Vec<usize>, payoff: Vec<f64>) -> Result<Self> {
        if actions.len() < 2 {
            return Err(Error::Shape(format!(
                "a game needs at least 2 players, got {}",
                actions.len()
            )));
        }
        if let Some(&k) = actions.iter().find(|&&k| k < 2) {
            return Err(Error::Shape(format!(
                "every player needs at least 2 actions, got {k}"
            )));
        }
        let cells: usize = actions.iter().product();
        if payoff.len() != cells * actions.len() {
            return Err(Error::Shape(format!(
                "payoff table has {} entries, expected {}",
                payoff.len(),
                cells * actions.len()
            )));
        }
        if payoff.iter().any(|r| !r.is_finite()) {
            return Err(Error::Domain("payoffs must be finite".into()));
        }
        Ok(Self {
            name: None,
            actions,
            payoff,
        })
    }

    /// Two-player game from row and column payoff matrices.
    pub fn bimatrix(row: &[Vec<f64>], col: &[Vec<f64>]) -> Result<Self> {
        let m = row.len();
        let n = row.first().map_or(0, Vec::len);
        if col.len() != m || row.iter().chain(col).any(|r| r.len() != n) {
            return Err(Error::Shape(
                "row and column matrices differ in shape".into(),
            ));
        }
        let mut payoff = Vec::with_capacity(m * n * 2);
        for i in 0..m {
            for j in 0..n {
                payoff.push(row[i][j]);
                payoff.push(col[i][j]);
            }
        }
        Game::new(vec![m, n], payoff)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn num_players(&self) -> usize {
        self.actions.len()
    }

    pub fn actions(&self) -> &[usize] {
        &self.actions
    }

    pub fn num_actions(&self, player: usize) -> usize {
        self.actions[player]
    }

    pub fn is_2x2(&self) -> bool {
        self.actions == [2, 2]
    }

    fn cell_index(&self, joint: &[usize]) -> Result<usize> {
        if joint.len() != self.actions.len() {
            return Err(Error::Shape(format!(
                "joint action has {} entries for {} players",
                joint.len(),
                self.actions.len()
            )));
        }
        let mut idx = 0;
        for (&a, &k) in joint.iter().zip(&self.actions) {
            if a >= k {
                return Err(Error::ActionIndex {
                    index: a,
                    actions: k,
                });
            }
            idx = idx * k + a;
        }
        Ok(idx)
    }

    /// Reward vector (one entry per player) for a joint action.
    pub fn rewards(&self, joint: &[usize]) -> Result<&[f64]> {
        let n = self.num_players();
        let c = self.cell_index(joint)?;
        Ok(&self.payoff[c * n..(c + 1) * n])
    }

    pub fn reward(&self, joint: &[usize], player: usize) -> Result<f64> {
        Ok(self.rewards(joint)?[player])
    }

    /// Iterates all joint actions in storage order.
    pub fn joint_actions(&self) -> JointActions<'_> {
        JointActions {
            actions: &self.actions,
            next: Some(vec![0; self.actions.len()]),
        }
    }

    /// Serializes to the plain-text game file format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if let Some(name) = &self.name {
            let _ = writeln!(out, "name {name}");
        }
        let _ = writeln!(out, "players {}", self.num_players());
        let counts: Vec<String> = self.actions.iter().map(usize::to_string).collect();
        let _ = writeln!(out, "actions {}", counts.join(" "));
        for joint in self.joint_actions() {
            let idx: Vec<String> = joint.iter().map(usize::to_string).collect();
            let rewards: Vec<String> = self
                .rewards(&joint)
                .expect("joint action from iterator")
                .iter()
                .map(|r| format!("{r}"))
                .collect();
            let _ = writeln!(out, "payoff {} = {}", idx.join(" "), rewards.join(" "));
        }
        out
    }

    /// Parses the plain-text game file format.
    ///
    /// ```text
    /// # matching pennies
    /// players 2
    /// actions 2 2
    /// payoff 0 0 = 1 -1
    /// payoff 0 1 = -1 1
    /// payoff 1 0 = -1 1
    /// payoff 1 1 = 1 -1
    /// ```
    pub fn from_text(text: &str) -> Result<Self> {
        let err = |line: usize, message: String| Error::GameFile { line, message };
        let mut name = None;
        let mut players: Option<usize> = None;
        let mut actions: Option<Vec<usize>> = None;
        let mut cells: Vec<(usize, Vec<usize>, Vec<f64>)> = Vec::new();

        for (i, raw) in text.lines().enumerate() {
            let lineno = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
            let rest = rest.trim();
            match key {
                "name" => name = Some(rest.to_string()),
                "players" => {
                    players = Some(
                        rest.parse()
                            .map_err(|_| err(lineno, format!("bad player count `{rest}`")))?,
                    )
                }
                "actions" => {
                    let counts = rest
                        .split_whitespace()
                        .map(|t| t.parse::<usize>())
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .map_err(|_| err(lineno, format!("bad action counts `{rest}`")))?;
                    actions = Some(counts);
                }
                "payoff" => {
                    let (lhs, rhs) = rest
                        .split_once('=')
                        .ok_or_else(|| err(lineno, "payoff line needs `=`".into()))?;
                    let joint = lhs
                        .split_whitespace()
                        .map(|t| t.parse::<usize>())
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .map_err(|_| err(lineno, format!("bad joint action `{}`", lhs.trim())))?;
                    let rewards = rhs
                        .split_whitespace()
                        .map(|t| t.parse::<f64>())
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .map_err(|_| err(lineno, format!("bad rewards `{}`", rhs.trim())))?;
                    cells.push((lineno, joint, rewards));
                }
                other => return Err(err(lineno, format!("unknown key `{other}`"))),
            }
        }

        let actions = actions.ok_or_else(|| err(0, "missing `actions` line".into()))?;
        let n = players.unwrap_or(actions.len());
        if n != actions.len() {
            return Err(err(
                0,
                format!(
                    "`players {n}` disagrees with {} action counts",
                    actions.len()
                ),
            ));
        }
        let total: usize = actions.iter().product();
        let mut payoff = vec![f64::NAN; total * n];
        let mut seen = vec![false; total];
        let shape = Game {
            name: None,
            actions: actions.clone(),
            payoff: Vec::new(),
        };
        for (lineno, joint, rewards) in cells {
            let c = shape
                .cell_index(&joint)
                .map_err(|e| err(lineno, e.to_string()))?;
            if rewards.len() != n {
                return Err(err(
                    lineno,
                    format!("expected {n} rewards, got {}", rewards.len()),
                ));
            }
            if seen[c] {
                return Err(err(lineno, "duplicate payoff cell".into()));
            }
            seen[c] = true;
            payoff[c * n..(c + 1) * n].copy_from_slice(&rewards);
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(err(0, format!("payoff cell {missing} is undefined")));
        }
        let game = Game::new(actions, payoff)?;
        Ok(match name {
            Some(n) => game.with_name(n),
            None => game,
        })
    }
}

/// Iterator over joint actions in row-major order.
pub struct JointActions<'a> {
    actions: &'a [usize],
    next: Option<Vec<usize>>,
}

impl Iterator for JointActions<'_> {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        for i in (0..succ.len()).rev() {
            succ[i] += 1;
            if succ[i] < self.actions[i] {
                self.next = Some(succ);
                break;
            }
            succ[i] = 0;
        }
        Some(current)
    }
}

/// Names accepted by [`benchmark`].
pub const BENCHMARKS: [&str; 6] = [
    "coordination",
    "matching-pennies",
    "tricky",
    "rock-paper-scissors",
    "shapleys",
    "biased",
];

/// Looks up a catalog game by name.
pub fn benchmark(name: &str) -> Result<Game> {
    let g = |row: [[f64; 2]; 2], col: [[f64; 2]; 2]| {
        Game::bimatrix(
            &row.iter().map(|r| r.to_vec()).collect::<Vec<_>>(),
            &col.iter().map(|r| r.to_vec()).collect::<Vec<_>>(),
        )
    };
    let g3 = |row: [[f64; 3]; 3], col: [[f64; 3]; 3]| {
        Game::bimatrix(
            &row.iter().map(|r| r.to_vec()).collect::<Vec<_>>(),
            &col.iter().map(|r| r.to_vec()).collect::<Vec<_>>(),
        )
    };
    let game = match name {
        "coordination" => g([[2.0, 0.0], [0.0, 1.0]], [[1.0, 0.0], [0.0, 2.0]]),
        "matching-pennies" => g([[1.0, -1.0], [-1.0, 1.0]], [[-1.0, 1.0], [1.0, -1.0]]),
        "tricky" => g([[0.0, 3.0], [1.0, 2.0]], [[3.0, 2.0], [0.0, 1.0]]),
        "biased" => g([[1.0, 1.85], [1.15, 1.0]], [[1.85, 1.0], [1.0, 1.15]]),
        "rock-paper-scissors" => g3(
            [[0.0, -1.0, 1.0], [1.0, 0.0, -1.0], [-1.0, 1.0, 0.0]],
            [[0.0, 1.0, -1.0], [-1.0, 0.0, 1.0], [1.0, -1.0, 0.0]],
        ),
        "shapleys" => g3(
            [[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]],
            [[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
        ),
        other => return Err(Error::UnknownGame(other.to_string())),
    }?;
    Ok(game.with_name(name))
}

/// One policy per player.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointPolicy {
    pub policies: Vec<Policy>,
}

impl JointPolicy {
    pub fn new(policies: Vec<Policy>) -> Self {
        Self { policies }
    }

    /// Joint policy of a 2x2 game from first-action probabilities.
    pub fn from_pq(p: f64, q: f64) -> Result<Self> {
        Ok(Self::new(vec![
            Policy::new(vec![p, 1.0 - p])?,
            Policy::new(vec![q, 1.0 - q])?,
        ]))
    }

    pub fn uniform(game: &Game) -> Self {
        Self::new(game.actions().iter().map(|&k| Policy::uniform(k)).collect())
    }

    pub fn get(&self, player: usize) -> &Policy {
        &self.policies[player]
    }

    fn check(&self, game: &Game) -> Result<()> {
        if self.policies.len() != game.num_players() {
            return Err(Error::Shape(format!(
                "joint policy has {} players, game has {}",
                self.policies.len(),
                game.num_players()
            )));
        }
        for (i, (pol, &k)) in self.policies.iter().zip(game.actions()).enumerate() {
            if pol.len() != k {
                return Err(Error::Shape(format!(
                    "player {i} policy has {} actions, game has {k}",
                    pol.len()
                )));
            }
        }
        Ok(())
    }
}

/// Expected reward of `player` under a joint policy.
pub fn expected_value(game: &Game, player: usize, joint: &JointPolicy) -> Result<f64> {
    joint.check(game)?;
    let probs: Vec<&[f64]> = joint.policies.iter().map(Policy::probs).collect();
    Ok(expected_value_raw(game, player, &probs))
}

/// Expected value over raw probability slices; callers guarantee shapes.
pub(crate) fn expected_value_raw(game: &Game, player: usize, probs: &[&[f64]]) -> f64 {
    let n = game.num_players();
    game.joint_actions()
        .enumerate()
        .map(|(c, joint)| {
            let weight: f64 = joint.iter().zip(probs).map(|(&a, p)| p[a]).product();
            weight * game.payoff[c * n + player]
        })
        .sum()
}

/// Expected reward of each pure action of `player` against the others'
/// policies, i.e. `V_i(a, pi_-i)` for every `a`.
pub fn action_values(game: &Game, player: usize, joint: &JointPolicy) -> Result<Vec<f64>> {
    joint.check(game)?;
    let k = game.num_actions(player);
    let n = game.num_players();
    let mut values = vec![0.0; k];
    for (c, joint_a) in game.joint_actions().enumerate() {
        let weight: f64 = joint_a
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != player)
            .map(|(j, &a)| joint.policies[j].prob(a))
            .product();
        values[joint_a[player]] += weight * game.payoff[c * n + player];
    }
    Ok(values)
}

/// The constants reducing a 2x2 game's gradients to affine functions of the
/// opponent's first-action probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientConstants {
    pub u1: f64,
    pub u2: f64,
    pub u3: f64,
    pub u4: f64,
}

impl GradientConstants {
    pub fn new(u1: f64, u2: f64, u3: f64, u4: f64) -> Self {
        Self { u1, u2, u3, u4 }
    }

    /// Constants whose interior equilibrium sits at `(p_star, q_star)`,
    /// scaled by `s` (row gradient rises with q, column gradient falls with p).
    pub fn with_interior_ne(p_star: f64, q_star: f64, s: f64) -> Self {
        Self::new(s, -s * q_star, -s, s * p_star)
    }

    /// Row player's gradient `u1 q + u2`.
    pub fn row_gradient(&self, q: f64) -> f64 {
        self.u1 * q + self.u2
    }

    /// Column player's gradient `u3 p + u4`.
    pub fn col_gradient(&self, p: f64) -> f64 {
        self.u3 * p + self.u4
    }

    /// `(p*, q*) = (-u4/u3, -u2/u1)` when both coordinates are strictly interior.
    pub fn interior_ne(&self) -> Option<(f64, f64)> {
        if self.u1 == 0.0 || self.u3 == 0.0 {
            return None;
        }
        let p = -self.u4 / self.u3;
        let q = -self.u2 / self.u1;
        let inside = |x: f64| x > INTERIOR_TOL && x < 1.0 - INTERIOR_TOL;
        (inside(p) && inside(q)).then_some((p, q))
    }
}

fn require_2x2(game: &Game) -> Result<()> {
    if game.is_2x2() {
        Ok(())
    } else {
        Err(Error::Shape(format!(
            "expected a 2-player 2-action game, got actions {:?}",
            game.actions()
        )))
    }
}

fn cell(game: &Game, i: usize, j: usize) -> (f64, f64) {
    let r = game.rewards(&[i, j]).expect("2x2 cell");
    (r[0], r[1])
}

pub fn gradient_constants(game: &Game) -> Result<GradientConstants> {
    require_2x2(game)?;
    let (r11, c11) = cell(game, 0, 0);
    let (r12, c12) = cell(game, 0, 1);
    let (r21, c21) = cell(game, 1, 0);
    let (r22, c22) = cell(game, 1, 1);
    Ok(GradientConstants {
        u1: r11 - r12 - r21 + r22,
        u2: r12 - r22,
        u3: c11 - c12 - c21 + c22,
        u4: c21 - c22,
    })
}

/// `V(1, .) - V(0, .)` for `player` in a 2x2 game, given the opponent's
/// first-action probability.
pub fn gradient_2x2(game: &Game, player: usize, opponent_first_prob: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&opponent_first_prob) {
        return Err(Error::Domain(format!(
            "probability {opponent_first_prob} outside [0, 1]"
        )));
    }
    let u = gradient_constants(game)?;
    match player {
        0 => Ok(u.row_gradient(opponent_first_prob)),
        1 => Ok(u.col_gradient(opponent_first_prob)),
        _ => Err(Error::Shape(format!("player {player} in a 2-player game"))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NashKind {
    Pure,
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NashPoint {
    pub joint: JointPolicy,
    pub kind: NashKind,
}

impl NashPoint {
    /// First-action probabilities of a 2x2 equilibrium.
    pub fn pq(&self) -> (f64, f64) {
        (self.joint.get(0).prob(0), self.joint.get(1).prob(0))
    }
}

/// All equilibria of a 2x2 game: pure ones by cell enumeration plus the
/// interior mixed one when it exists.
pub fn nash_2x2(game: &Game) -> Result<Vec<NashPoint>> {
    require_2x2(game)?;
    let mut out = Vec::new();
    for i in 0..2 {
        for j in 0..2 {
            let (r, c) = cell(game, i, j);
            let (r_dev, _) = cell(game, 1 - i, j);
            let (_, c_dev) = cell(game, i, 1 - j);
            if r >= r_dev && c >= c_dev {
                out.push(NashPoint {
                    joint: JointPolicy::new(vec![Policy::pure(2, i), Policy::pure(2, j)]),
                    kind: NashKind::Pure,
                });
            }
        }
    }
    if let Some((p, q)) = gradient_constants(game)?.interior_ne() {
        out.push(NashPoint {
            joint: JointPolicy::from_pq(p, q)?,
            kind: NashKind::Mixed,
        });
    }
    Ok(out)
}

/// Reference equilibria for any catalog game: exact for 2x2 games, the known
/// uniform equilibrium for the 3-action catalog games.
pub fn nash_equilibria(game: &Game) -> Result<Vec<NashPoint>> {
    if game.is_2x2() {
        return nash_2x2(game);
    }
    match game.name() {
        Some("rock-paper-scissors") | Some("shapleys") => Ok(vec![NashPoint {
            joint: JointPolicy::uniform(game),
            kind: NashKind::Mixed,
        }]),
        _ => Err(Error::Domain(
            "no reference equilibrium known for this game".into(),
        )),
    }
}

/// Largest gain any single player can obtain by deviating unilaterally.
///
/// Two-action players are swept over a `grid`-point deviation grid; larger
/// action sets are checked against every pure deviation, which suffices
/// because the value is linear in the deviating player's own policy.
pub fn max_deviation_gain(game: &Game, joint: &JointPolicy, grid: usize) -> Result<f64> {
    let mut worst = f64::NEG_INFINITY;
    for player in 0..game.num_players() {
        let base = expected_value(game, player, joint)?;
        let k = game.num_actions(player);
        let candidates: Vec<Policy> = if k == 2 {
            (0..grid.max(2))
                .map(|s| {
                    let p = s as f64 / (grid.max(2) - 1) as f64;
                    Policy::new(vec![p, 1.0 - p]).expect("grid policy")
                })
                .collect()
        } else {
            (0..k).map(|a| Policy::pure(k, a)).collect()
        };
        for dev in candidates {
            let mut trial = joint.clone();
            trial.policies[player] = dev;
            worst = worst.max(expected_value(game, player, &trial)? - base);
        }
    }
    Ok(worst)
}


#[cfg(test)]
mod properties {
    use super::*;
    use proptest::prelude::*;

    fn prob() -> impl Strategy<Value = f64> {
        0.0..=1.0f64
    }

    proptest! {
        #[test]
        fn value_is_multilinear(a in prob(), p1 in prob(), p2 in prob(), q in prob(), name in 0usize..6) {
            let g = benchmark(BENCHMARKS[name]).unwrap();
            let k0 = g.num_actions(0);
            let mk = |p: f64| {
                let mut v = vec![(1.0 - p) / (k0 - 1) as f64; k0];
                v[0] = p;
                Policy::new(v).unwrap()
            };
            let k1 = g.num_actions(1);
            let mut opp = vec![(1.0 - q) / (k1 - 1) as f64; k1];
            opp[0] = q;
            let opp = Policy::new(opp).unwrap();
            let mix = mk(a * p1 + (1.0 - a) * p2);
            let v = |pol: Policy| expected_value(&g, 0, &JointPolicy::new(vec![pol, opp.clone()])).unwrap();
            let lhs = v(mix);
            let rhs = a * v(mk(p1)) + (1.0 - a) * v(mk(p2));
            prop_assert!((lhs - rhs).abs() < 1e-12);
        }

        #[test]
        fn gradient_is_value_difference(q in prob(), name in 0usize..6) {
            let g = benchmark(BENCHMARKS[name]).unwrap();
            prop_assume!(g.is_2x2());
            let at = |p| expected_value(&g, 0, &JointPolicy::from_pq(p, q).unwrap()).unwrap();
            let diff = at(1.0) - at(0.0);
            prop_assert!((gradient_2x2(&g, 0, q).unwrap() - diff).abs() < 1e-12);
        }

        #[test]
        fn constants_match_definitions(m in proptest::array::uniform8(-10.0..10.0f64)) {
            let g = Game::bimatrix(
                &[vec![m[0], m[1]], vec![m[2], m[3]]],
                &[vec![m[4], m[5]], vec![m[6], m[7]]],
            ).unwrap();
            let u = gradient_constants(&g).unwrap();
            prop_assert_eq!(u.u1, m[0] - m[1] - m[2] + m[3]);
            prop_assert_eq!(u.u2, m[1] - m[3]);
            prop_assert_eq!(u.u3, m[4] - m[5] - m[6] + m[7]);
            prop_assert_eq!(u.u4, m[6] - m[7]);
        }
    }
}
