//! Repeated play of a normal-form game between learning agents.
//!
//! Each step every player samples an action from its current policy, the
//! joint action picks a payoff cell, and each player sees only its own reward.
//! All players then update simultaneously.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::games::{action_values, nash_equilibria, Game, JointPolicy, NashKind};
use crate::learners::{exact_gradient, GradientEstimate, LearnerSpec, LearnerState, Policy};
use crate::rng;

/// Where learners get their gradient from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GradientMode {
    /// From the agent's own reward estimates (bandit feedback).
    #[default]
    Estimated,
    /// From the game and the opponents' current policies.
    Exact,
}

/// One seat at the table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Participant {
    Learner(LearnerSpec),
    /// Keeps playing its initial policy.
    Fixed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArenaConfig {
    pub game: Game,
    pub players: Vec<Participant>,
    pub steps: usize,
    pub runs: usize,
    pub initial: JointPolicy,
    pub seed: u64,
    pub gradient: GradientMode,
}

impl ArenaConfig {
    /// Self-play of one learner spec from the given initial joint policy.
    pub fn self_play(game: Game, spec: LearnerSpec, initial: JointPolicy) -> Self {
        let players = vec![Participant::Learner(spec); game.num_players()];
        Self {
            game,
            players,
            steps: 1,
            runs: 1,
            initial,
            seed: 0,
            gradient: GradientMode::Estimated,
        }
    }

    pub fn steps(mut self, steps: usize) -> Self {
        self.steps = steps;
        self
    }

    pub fn runs(mut self, runs: usize) -> Self {
        self.runs = runs;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn gradient(mut self, mode: GradientMode) -> Self {
        self.gradient = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.steps == 0 {
            problems.push("steps must be at least 1".to_string());
        }
        if self.runs == 0 {
            problems.push("runs must be at least 1".to_string());
        }
        if self.players.len() != self.game.num_players() {
            problems.push(format!(
                "{} participants for a {}-player game",
                self.players.len(),
                self.game.num_players()
            ));
        }
        if self.initial.policies.len() != self.game.num_players() {
            problems.push("initial joint policy has the wrong number of players".into());
        } else {
            for (i, (pol, &k)) in self
                .initial
                .policies
                .iter()
                .zip(self.game.actions())
                .enumerate()
            {
                if pol.len() != k {
                    problems.push(format!(
                        "initial policy of player {i} has {} actions, game has {k}",
                        pol.len()
                    ));
                }
            }
        }
        for p in &self.players {
            if let Participant::Learner(spec) = p {
                problems.extend(spec.problems());
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("; ")))
        }
    }
}

/// State of one player after one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerRecord {
    /// Policy after this step's update.
    pub policy: Vec<f64>,
    pub action: usize,
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub players: Vec<PlayerRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub run: usize,
    pub records: Vec<StepRecord>,
}

impl Trajectory {
    /// Series of one player's probability of `action`.
    pub fn prob_series(&self, player: usize, action: usize) -> impl Iterator<Item = f64> + '_ {
        self.records
            .iter()
            .map(move |r| r.players[player].policy[action])
    }
}

fn oracle_policy(game: &Game, player: usize) -> Option<Policy> {
    let ne = nash_equilibria(game).ok()?;
    let pick = ne
        .iter()
        .find(|n| n.kind == NashKind::Mixed)
        .or_else(|| ne.first())?;
    Some(pick.joint.get(player).clone())
}

enum Seat {
    Learner(Box<LearnerState>),
    Fixed(Policy),
}

impl Seat {
    fn policy(&self) -> &Policy {
        match self {
            Seat::Learner(s) => &s.policy,
            Seat::Fixed(p) => p,
        }
    }
}

fn seats(config: &ArenaConfig) -> Result<Vec<Seat>> {
    config
        .players
        .iter()
        .enumerate()
        .map(|(i, p)| match p {
            Participant::Fixed => Ok(Seat::Fixed(config.initial.get(i).clone())),
            Participant::Learner(spec) => {
                let oracle = if spec.algo.needs_oracle() {
                    oracle_policy(&config.game, i)
                } else {
                    None
                };
                Ok(Seat::Learner(Box::new(
                    spec.build(config.initial.get(i), oracle)?,
                )))
            }
        })
        .collect()
}

/// Runs every configured run (in parallel) and returns them in run order.
pub fn run(config: &ArenaConfig) -> Result<Vec<Trajectory>> {
    config.validate()?;
    (0..config.runs)
        .into_par_iter()
        .map(|r| run_single(config, r))
        .collect()
}

/// One run, driven by the streams derived from `(seed, run, player)`.
pub fn run_single(config: &ArenaConfig, run: usize) -> Result<Trajectory> {
    config.validate()?;
    let game = &config.game;
    let n = game.num_players();
    let mut seats = seats(config)?;
    let mut rngs: Vec<_> = (0..n)
        .map(|i| rng::stream(config.seed, &[run as u64, i as u64]))
        .collect();
    let mut records = Vec::with_capacity(config.steps);
    let mut joint_action = vec![0; n];

    for step in 0..config.steps {
        for (i, seat) in seats.iter().enumerate() {
            joint_action[i] = seat.policy().sample(&mut rngs[i]);
        }
        let rewards = game.rewards(&joint_action)?.to_vec();

        // Everything that depends on the opponents is read before anyone moves.
        let joint_now = JointPolicy::new(seats.iter().map(|s| s.policy().clone()).collect());
        let mut exact: Vec<Option<(GradientEstimate, Vec<f64>)>> = vec![None; n];
        for (i, seat) in seats.iter().enumerate() {
            if let Seat::Learner(s) = seat {
                let needs_values = s.algorithm.needs_oracle();
                if config.gradient == GradientMode::Exact || needs_values {
                    let g = exact_gradient(game, i, &joint_now)?;
                    let v = action_values(game, i, &joint_now)?;
                    exact[i] = Some((g, v));
                }
            }
        }

        for (i, seat) in seats.iter_mut().enumerate() {
            if let Seat::Learner(s) = seat {
                s.observe(joint_action[i], rewards[i])?;
                let values = exact[i].as_ref().map(|(_, v)| v.as_slice());
                let gradient = match (&exact[i], config.gradient) {
                    (Some((g, _)), GradientMode::Exact) => g.clone(),
                    _ => s.estimate_gradient(),
                };
                s.step(&gradient, values)?;
            }
        }

        records.push(StepRecord {
            step,
            players: seats
                .iter()
                .zip(&joint_action)
                .zip(&rewards)
                .map(|((s, &a), &r)| PlayerRecord {
                    policy: s.policy().probs().to_vec(),
                    action: a,
                    reward: r,
                })
                .collect(),
        });
    }
    Ok(Trajectory { run, records })
}

/// Summary statistics over a set of equal-length runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub steps: usize,
    /// First step index of the trailing window (final 10% of steps).
    pub window_start: usize,
    /// Per player: mean policy over runs and window steps.
    pub window_mean: Vec<Vec<f64>>,
    /// Per player, per action: max - min of the across-run mean series over
    /// the window.
    pub amplitude: Vec<Vec<f64>>,
    /// Per player, per action: max - min over the window within each run,
    /// averaged over runs. Includes sampling noise that the mean series
    /// averages out.
    pub run_amplitude: Vec<Vec<f64>>,
    /// Per player, per action, per step: mean across runs.
    pub mean: Vec<Vec<Vec<f64>>>,
    /// Per player, per action, per step: population standard deviation across runs.
    pub std: Vec<Vec<Vec<f64>>>,
    /// L-infinity distance from the window mean to the nearest reference
    /// equilibrium, when one was supplied.
    pub ne_distance: Option<f64>,
}

impl ConvergenceReport {
    /// Largest amplitude over all players and actions.
    pub fn max_amplitude(&self) -> f64 {
        self.amplitude
            .iter()
            .flatten()
            .fold(0.0, |m: f64, &a| m.max(a))
    }

    /// L-infinity distance from the window mean policies to a joint policy.
    pub fn distance_to(&self, joint: &JointPolicy) -> f64 {
        self.window_mean
            .iter()
            .zip(&joint.policies)
            .flat_map(|(m, p)| m.iter().zip(p.probs()).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max)
    }

    /// Attaches the distance to the nearest of `equilibria`.
    pub fn with_equilibria(mut self, equilibria: &[JointPolicy]) -> Self {
        self.ne_distance = equilibria
            .iter()
            .map(|e| self.distance_to(e))
            .min_by(|a, b| a.partial_cmp(b).expect("finite"));
        self
    }
}

/// Length of the trailing measurement window for a run of `steps` steps.
pub fn window_len(steps: usize) -> usize {
    (steps / 10).max(1)
}

pub fn aggregate(trajectories: &[Trajectory]) -> Result<ConvergenceReport> {
    let first = trajectories
        .first()
        .ok_or_else(|| Error::Domain("no trajectories to aggregate".into()))?;
    let steps = first.records.len();
    if steps == 0 {
        return Err(Error::Domain("empty trajectories".into()));
    }
    if trajectories.iter().any(|t| t.records.len() != steps) {
        return Err(Error::Domain("trajectories differ in length".into()));
    }
    let runs = trajectories.len() as f64;
    let shape: Vec<usize> = first.records[0]
        .players
        .iter()
        .map(|p| p.policy.len())
        .collect();
    let start = steps - window_len(steps);

    let mut mean = Vec::new();
    let mut std = Vec::new();
    let mut window_mean = Vec::new();
    let mut amplitude = Vec::new();
    let mut run_amplitude = Vec::new();
    for (player, &k) in shape.iter().enumerate() {
        let mut m_p = Vec::with_capacity(k);
        let mut s_p = Vec::with_capacity(k);
        let mut wm_p = Vec::with_capacity(k);
        let mut amp_p = Vec::with_capacity(k);
        let mut run_amp_p = Vec::with_capacity(k);
        for action in 0..k {
            let mut m = vec![0.0; steps];
            let mut sq = vec![0.0; steps];
            let mut amp = 0.0;
            for t in trajectories {
                let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
                for (s, x) in t.prob_series(player, action).enumerate() {
                    m[s] += x;
                    sq[s] += x * x;
                    if s >= start {
                        lo = lo.min(x);
                        hi = hi.max(x);
                    }
                }
                amp += hi - lo;
            }
            let sd: Vec<f64> = m
                .iter()
                .zip(&sq)
                .map(|(a, b)| {
                    let mu = a / runs;
                    (b / runs - mu * mu).max(0.0).sqrt()
                })
                .collect();
            let m: Vec<f64> = m.into_iter().map(|v| v / runs).collect();
            let window = &m[start..];
            wm_p.push(window.iter().sum::<f64>() / window.len() as f64);
            let hi = window.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lo = window.iter().copied().fold(f64::INFINITY, f64::min);
            amp_p.push(hi - lo);
            run_amp_p.push(amp / runs);
            m_p.push(m);
            s_p.push(sd);
        }
        mean.push(m_p);
        std.push(s_p);
        window_mean.push(wm_p);
        amplitude.push(amp_p);
        run_amplitude.push(run_amp_p);
    }
    Ok(ConvergenceReport {
        steps,
        window_start: start,
        window_mean,
        amplitude,
        run_amplitude,
        mean,
        std,
        ne_distance: None,
    })
}

/// True when the window mean is within `tol` (L-infinity) of `ne` and the
/// window amplitude is below `tol`.
pub fn converged(report: &ConvergenceReport, ne: &JointPolicy, tol: f64) -> bool {
    report.distance_to(ne) <= tol && report.max_amplitude() < tol
}
