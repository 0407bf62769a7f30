use std::path::PathBuf;

use marl_lab::arena::GradientMode;
use marl_lab::dtap::DtapConfig;
use marl_lab::dynamics::DEFAULT_DT;
use marl_lab::games::{benchmark, gradient_constants};
use marl_lab::{Algorithm, GradientConstants, LearnerSpec};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{} problem(s): {}", .0.len(), .0.join("; "))]
    Invalid(Vec<String>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Arena,
    Dynamics,
    Dtap,
    Sweep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default)]
    pub format: Format,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arena: Option<ArenaSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dynamics: Option<DynamicsSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dtap: Option<DtapConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

/// Who sits in a seat: a learning rule or a policy frozen at its initial value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Seat {
    Fixed,
    #[serde(untagged)]
    Learner(Algorithm),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArenaSection {
    pub game: String,
    pub algo: Algorithm,
    /// Per-seat override of `algo`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seats: Option<Vec<Seat>>,
    pub eta: f64,
    pub alpha: f64,
    pub epsilon: f64,
    pub delta_ratio: f64,
    /// Signed so negative counts surface as validation errors.
    pub steps: i64,
    pub runs: i64,
    /// One distribution per player; uniform when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub init: Option<Vec<Vec<f64>>>,
    pub gradient: GradientMode,
    /// Keep every n-th step in the output.
    pub record_every: usize,
}

impl Default for ArenaSection {
    fn default() -> Self {
        let spec = LearnerSpec::default();
        Self {
            game: "matching-pennies".into(),
            algo: spec.algo,
            seats: None,
            eta: spec.eta,
            alpha: spec.alpha,
            epsilon: spec.epsilon,
            delta_ratio: spec.delta_ratio,
            steps: 40_000,
            runs: 10,
            init: None,
            gradient: GradientMode::Estimated,
            record_every: 1,
        }
    }
}

impl ArenaSection {
    pub fn spec(&self, algo: Algorithm) -> LearnerSpec {
        LearnerSpec {
            algo,
            eta: self.eta,
            alpha: self.alpha,
            epsilon: self.epsilon,
            delta_ratio: self.delta_ratio,
            ..LearnerSpec::default()
        }
    }

    fn problems(&self, out: &mut Vec<String>) {
        let game = match benchmark(&self.game) {
            Ok(g) => Some(g),
            Err(e) => {
                out.push(format!("arena.game: {e}"));
                None
            }
        };
        if self.steps <= 0 {
            out.push(format!("arena.steps must be positive, got {}", self.steps));
        }
        if self.runs <= 0 {
            out.push(format!("arena.runs must be positive, got {}", self.runs));
        }
        if self.record_every == 0 {
            out.push("arena.record_every must be positive".into());
        }
        let algos: Vec<Algorithm> = match &self.seats {
            Some(seats) => seats
                .iter()
                .filter_map(|s| match s {
                    Seat::Learner(a) => Some(*a),
                    Seat::Fixed => None,
                })
                .collect(),
            None => vec![self.algo],
        };
        let mut seen = Vec::new();
        for a in algos {
            if !seen.contains(&a) {
                seen.push(a);
                out.extend(
                    self.spec(a)
                        .problems()
                        .into_iter()
                        .map(|p| format!("arena: {p}")),
                );
            }
        }
        let Some(game) = game else { return };
        if let Some(seats) = &self.seats {
            if seats.len() != game.num_players() {
                out.push(format!(
                    "arena.seats has {} entries, game has {} players",
                    seats.len(),
                    game.num_players()
                ));
            }
        }
        if let Some(init) = &self.init {
            if init.len() != game.num_players() {
                out.push(format!(
                    "arena.init has {} policies, game has {} players",
                    init.len(),
                    game.num_players()
                ));
            }
            for (i, (pol, &k)) in init.iter().zip(game.actions()).enumerate() {
                if pol.len() != k {
                    out.push(format!(
                        "arena.init[{i}] has {} entries, player has {k} actions",
                        pol.len()
                    ));
                } else if let Err(e) = marl_lab::Policy::new(pol.clone()) {
                    out.push(format!("arena.init[{i}]: {e}"));
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DynamicsTask {
    /// Trajectories of each listed algorithm from each start.
    Portrait,
    /// WPL from every boundary start towards a grid of equilibria.
    Grid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynamicsSection {
    pub task: DynamicsTask,
    /// Gradient constants `[u1, u2, u3, u4]`; taken from `game` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u: Option<[f64; 4]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub game: Option<String>,
    pub algorithms: Vec<Algorithm>,
    pub starts: Vec<[f64; 2]>,
    pub horizon: f64,
    pub dt: f64,
    pub l_win: f64,
    pub l_lose: f64,
    pub record_every: usize,
    pub ne_per_axis: usize,
    pub starts_per_side: usize,
    pub late_window: f64,
}

impl Default for DynamicsSection {
    fn default() -> Self {
        let spec = LearnerSpec::default();
        Self {
            task: DynamicsTask::Portrait,
            u: None,
            game: None,
            algorithms: vec![Algorithm::Wpl],
            starts: vec![[0.2, 0.5]],
            horizon: 50.0,
            dt: DEFAULT_DT,
            l_win: spec.l_win,
            l_lose: spec.l_lose,
            record_every: 1,
            ne_per_axis: 10,
            starts_per_side: 40,
            late_window: 100.0,
        }
    }
}

impl DynamicsSection {
    /// The gradient constants this section describes.
    pub fn constants(&self) -> Result<GradientConstants, String> {
        match (&self.u, &self.game) {
            (Some(u), None) => Ok(GradientConstants::new(u[0], u[1], u[2], u[3])),
            (None, Some(name)) => benchmark(name)
                .and_then(|g| gradient_constants(&g))
                .map_err(|e| format!("dynamics.game: {e}")),
            (None, None) => Err("dynamics needs either `u` or `game`".into()),
            (Some(_), Some(_)) => Err("dynamics takes `u` or `game`, not both".into()),
        }
    }

    fn problems(&self, out: &mut Vec<String>) {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            out.push(format!(
                "dynamics.horizon must be positive, got {}",
                self.horizon
            ));
        }
        if !(self.dt > 0.0 && self.dt <= self.horizon) {
            out.push(format!(
                "dynamics.dt must be in (0, horizon], got {}",
                self.dt
            ));
        }
        if self.record_every == 0 {
            out.push("dynamics.record_every must be positive".into());
        }
        match self.task {
            DynamicsTask::Portrait => {
                if let Err(e) = self.constants() {
                    out.push(e);
                }
                if self.algorithms.is_empty() {
                    out.push("dynamics.algorithms is empty".into());
                }
                for a in &self.algorithms {
                    if !matches!(a, Algorithm::Iga | Algorithm::IgaWolf | Algorithm::Wpl) {
                        out.push(format!("dynamics has no continuous field for {a}"));
                    }
                }
                if self.starts.is_empty() {
                    out.push("dynamics.starts is empty".into());
                }
                for s in &self.starts {
                    if !s.iter().all(|x| (0.0..=1.0).contains(x)) {
                        out.push(format!("dynamics start {s:?} outside the unit square"));
                    }
                }
                if !(self.l_win > 0.0 && self.l_lose > self.l_win) {
                    out.push("dynamics needs l_lose > l_win > 0".into());
                }
            }
            DynamicsTask::Grid => {
                if self.ne_per_axis == 0 || self.starts_per_side == 0 {
                    out.push("dynamics grid sizes must be positive".into());
                }
                if !(self.late_window >= 0.0 && self.late_window <= self.horizon) {
                    out.push("dynamics.late_window must be in [0, horizon]".into());
                }
            }
        }
    }
}

/// A grid of experiments over one base section. Empty lists keep the base
/// value.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub arena: Option<ArenaSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dtap: Option<DtapConfig>,
    pub algos: Vec<Algorithm>,
    pub alphas: Vec<f64>,
    pub etas: Vec<f64>,
    pub seeds: Vec<u64>,
}

impl SweepSection {
    fn problems(&self, out: &mut Vec<String>) {
        match (&self.arena, &self.dtap) {
            (Some(a), None) => a.problems(out),
            (None, Some(d)) => {
                out.extend(d.problems().into_iter().map(|p| format!("sweep.dtap: {p}")))
            }
            _ => out.push("sweep needs exactly one of `arena` or `dtap`".into()),
        }
        for &a in &self.alphas {
            if !(a > 0.0 && a <= 1.0) {
                out.push(format!("sweep alpha {a} outside (0, 1]"));
            }
        }
        for &e in &self.etas {
            if !(e > 0.0 && e.is_finite()) {
                out.push(format!("sweep eta {e} must be positive"));
            }
        }
    }
}

impl ExperimentConfig {
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        let present = [
            (Mode::Arena, self.arena.is_some()),
            (Mode::Dynamics, self.dynamics.is_some()),
            (Mode::Dtap, self.dtap.is_some()),
            (Mode::Sweep, self.sweep.is_some()),
        ];
        for (mode, set) in present {
            if mode == self.mode && !set {
                out.push(format!(
                    "mode is {} but the [{}] section is missing",
                    mode.name(),
                    mode.name()
                ));
            }
            if mode != self.mode && set {
                out.push(format!(
                    "[{}] section given but mode is {}",
                    mode.name(),
                    self.mode.name()
                ));
            }
        }
        if let Some(a) = &self.arena {
            a.problems(&mut out);
        }
        if let Some(d) = &self.dynamics {
            d.problems(&mut out);
        }
        if let Some(d) = &self.dtap {
            out.extend(d.problems().into_iter().map(|p| format!("dtap: {p}")));
        }
        if let Some(s) = &self.sweep {
            s.problems(&mut out);
        }
        out
    }

    pub fn validate(self) -> Result<Self, ConfigError> {
        let problems = self.problems();
        if problems.is_empty() {
            Ok(self)
        } else {
            Err(ConfigError::Invalid(problems))
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is representable as TOML")
    }
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Arena => "arena",
            Mode::Dynamics => "dynamics",
            Mode::Dtap => "dtap",
            Mode::Sweep => "sweep",
        }
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, column)
}

/// Parses and validates a TOML experiment config.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((1, 1), |s| line_col(text, s.start));
        ConfigError::Syntax {
            line,
            column,
            message: e.message().to_string(),
        }
    })?;
    cfg.validate()
}
