use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use marl_lab::arena::{self, aggregate, ArenaConfig, ConvergenceReport, Participant};
use marl_lab::dtap::{self, DtapConfig};
use marl_lab::dynamics::{
    grid_experiment, integrate, integrate_constrained, Field2x2, GridConfig, PhasePoint,
};
use marl_lab::{benchmark, Algorithm, JointPolicy, Policy};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{
    ArenaSection, DynamicsSection, DynamicsTask, ExperimentConfig, Format, Mode, Seat, SweepSection,
};
use crate::output::{write_rows, write_summary, ArenaRow, AtstRow, GridRow, PhaseRow};

/// Fraction of windows averaged into the steady-state ATST.
pub const STEADY_FRACTION: f64 = 0.1;

#[derive(Debug, Serialize)]
struct ArenaSummary<'a> {
    game: &'a str,
    seats: Vec<String>,
    report: ConvergenceReport,
}

#[derive(Debug, Serialize)]
struct PortraitSummary {
    u: [f64; 4],
    ne: Option<(f64, f64)>,
    /// Final `(p, q)` per start and algorithm.
    finals: Vec<(usize, String, f64, f64)>,
}

#[derive(Debug, Serialize)]
struct GridSummaryOut {
    starts: usize,
    equilibria: usize,
    worst_late_distance: f64,
}

#[derive(Debug, Serialize)]
struct DtapSummary {
    algorithm: Algorithm,
    seed: u64,
    steady_atst: Option<f64>,
    windows: usize,
}

/// Runs a validated config and returns the files written.
pub fn run_experiment(cfg: &ExperimentConfig) -> anyhow::Result<Vec<PathBuf>> {
    let problems = cfg.problems();
    if !problems.is_empty() {
        return Err(anyhow!("invalid config: {}", problems.join("; ")));
    }
    let section = |name: &str| anyhow!("missing [{name}] section");
    match cfg.mode {
        Mode::Arena => run_arena(
            cfg.arena.as_ref().ok_or_else(|| section("arena"))?,
            cfg.seed,
            &cfg.output,
            cfg.format,
        ),
        Mode::Dynamics => run_dynamics(
            cfg.dynamics.as_ref().ok_or_else(|| section("dynamics"))?,
            &cfg.output,
            cfg.format,
        ),
        Mode::Dtap => run_dtap(
            cfg.dtap.as_ref().ok_or_else(|| section("dtap"))?,
            cfg.seed,
            &cfg.output,
            cfg.format,
        ),
        Mode::Sweep => run_sweep(
            cfg.sweep.as_ref().ok_or_else(|| section("sweep"))?,
            cfg.seed,
            &cfg.output,
            cfg.format,
        ),
    }
}

pub fn arena_config(a: &ArenaSection, seed: u64) -> anyhow::Result<ArenaConfig> {
    let game = benchmark(&a.game)?;
    let initial = match &a.init {
        Some(init) => JointPolicy::new(
            init.iter()
                .map(|p| Policy::new(p.clone()))
                .collect::<Result<_, _>>()?,
        ),
        None => JointPolicy::uniform(&game),
    };
    let seats = a
        .seats
        .clone()
        .unwrap_or_else(|| vec![Seat::Learner(a.algo); game.num_players()]);
    let mut cfg = ArenaConfig::self_play(game, a.spec(a.algo), initial)
        .steps(usize::try_from(a.steps)?)
        .runs(usize::try_from(a.runs)?)
        .seed(seed)
        .gradient(a.gradient);
    cfg.players = seats
        .iter()
        .map(|s| match s {
            Seat::Fixed => Participant::Fixed,
            Seat::Learner(algo) => Participant::Learner(a.spec(*algo)),
        })
        .collect();
    Ok(cfg)
}

fn seat_name(s: &Seat) -> String {
    match s {
        Seat::Fixed => "fixed".into(),
        Seat::Learner(a) => a.to_string(),
    }
}

fn run_arena(
    a: &ArenaSection,
    seed: u64,
    dir: &Path,
    format: Format,
) -> anyhow::Result<Vec<PathBuf>> {
    let cfg = arena_config(a, seed)?;
    let runs = arena::run(&cfg)?;
    let mut rows = Vec::new();
    for traj in &runs {
        for rec in traj
            .records
            .iter()
            .filter(|r| (r.step + 1) % a.record_every == 0)
        {
            for (player, pr) in rec.players.iter().enumerate() {
                for (action, &prob) in pr.policy.iter().enumerate() {
                    rows.push(ArenaRow {
                        step: rec.step + 1,
                        run: traj.run,
                        player,
                        action,
                        prob,
                        sampled: pr.action == action,
                        reward: pr.reward,
                    });
                }
            }
        }
    }
    let data = write_rows(dir, "trajectory", &rows, format)?;
    let summary = ArenaSummary {
        game: &a.game,
        seats: match &a.seats {
            Some(s) => s.iter().map(seat_name).collect(),
            None => vec![a.algo.to_string(); cfg.game.num_players()],
        },
        report: aggregate(&runs)?,
    };
    Ok(vec![data, write_summary(dir, &summary)?])
}

fn field_for(d: &DynamicsSection, algo: Algorithm) -> anyhow::Result<Field2x2> {
    let u = d.constants().map_err(|e| anyhow!(e))?;
    Ok(match algo {
        Algorithm::Iga => Field2x2::iga(u),
        Algorithm::Wpl => Field2x2::wpl(u),
        Algorithm::IgaWolf => {
            let ne = u
                .interior_ne()
                .ok_or_else(|| anyhow!("IGA-WoLF needs an interior equilibrium"))?;
            Field2x2::iga_wolf(u, ne, d.l_win, d.l_lose)?
        }
        other => return Err(anyhow!("no continuous field for {other}")),
    })
}

fn run_dynamics(d: &DynamicsSection, dir: &Path, format: Format) -> anyhow::Result<Vec<PathBuf>> {
    match d.task {
        DynamicsTask::Grid => {
            let summary = grid_experiment(&GridConfig {
                ne_per_axis: d.ne_per_axis,
                starts_per_side: d.starts_per_side,
                horizon: d.horizon,
                late_window: d.late_window,
                dt: d.dt,
                ..GridConfig::default()
            })?;
            let rows: Vec<GridRow> = summary
                .cases
                .iter()
                .map(|c| GridRow {
                    p_star: c.ne.0,
                    q_star: c.ne.1,
                    max_late_distance: c.max_late_distance,
                })
                .collect();
            let out = GridSummaryOut {
                starts: summary.starts,
                equilibria: summary.cases.len(),
                worst_late_distance: summary.worst(),
            };
            Ok(vec![
                write_rows(dir, "grid", &rows, format)?,
                write_summary(dir, &out)?,
            ])
        }
        DynamicsTask::Portrait => {
            let u = d.constants().map_err(|e| anyhow!(e))?;
            let mut files = Vec::new();
            let mut finals = Vec::new();
            for (i, s) in d.starts.iter().enumerate() {
                let mut rows = Vec::new();
                for &algo in &d.algorithms {
                    let field = field_for(d, algo)?;
                    let start = PhasePoint::new(0.0, s[0], s[1]);
                    // Only WPL keeps itself inside the square.
                    let points = if algo == Algorithm::Wpl {
                        integrate(&field, start, d.horizon, d.dt)?
                    } else {
                        integrate_constrained(&field, start, d.horizon, d.dt)?
                    };
                    let last = points.last().copied().unwrap_or(start);
                    finals.push((i, algo.to_string(), last.p, last.q));
                    let n = points.len();
                    rows.extend(
                        points
                            .into_iter()
                            .enumerate()
                            .filter(|(k, _)| k % d.record_every == 0 || *k + 1 == n)
                            .map(|(_, pt)| PhaseRow {
                                t: pt.t,
                                p: pt.p,
                                q: pt.q,
                                algorithm: algo.to_string(),
                            }),
                    );
                }
                files.push(write_rows(dir, &format!("phase_{i}"), &rows, format)?);
            }
            let summary = PortraitSummary {
                u: [u.u1, u.u2, u.u3, u.u4],
                ne: u.interior_ne(),
                finals,
            };
            files.push(write_summary(dir, &summary)?);
            Ok(files)
        }
    }
}

fn run_dtap(d: &DtapConfig, seed: u64, dir: &Path, format: Format) -> anyhow::Result<Vec<PathBuf>> {
    let cfg = DtapConfig { seed, ..d.clone() };
    let samples = dtap::run_experiment(&cfg)?;
    let rows: Vec<AtstRow> = samples
        .iter()
        .map(|s| AtstRow {
            window_end: s.window_end,
            atst: s.atst,
            completed: s.completed,
            max_hops: s.max_hops,
        })
        .collect();
    let summary = DtapSummary {
        algorithm: cfg.learner.algo,
        seed,
        steady_atst: dtap::steady_atst(&samples, STEADY_FRACTION),
        windows: samples.len(),
    };
    Ok(vec![
        write_rows(dir, "atst", &rows, format)?,
        write_summary(dir, &summary)?,
    ])
}

/// One point of a sweep grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub label: String,
    pub seed: u64,
    pub arena: Option<ArenaSection>,
    pub dtap: Option<DtapConfig>,
}

fn or_base<T: Copy>(list: &[T], base: T) -> Vec<T> {
    if list.is_empty() {
        vec![base]
    } else {
        list.to_vec()
    }
}

/// Expands the cartesian product of the sweep lists in a fixed order.
pub fn expand_sweep(s: &SweepSection, seed: u64) -> Vec<SweepPoint> {
    let (algo, alpha, eta) = match (&s.arena, &s.dtap) {
        (Some(a), _) => (a.algo, a.alpha, a.eta),
        (None, Some(d)) => (d.learner.algo, d.learner.alpha, d.learner.eta),
        (None, None) => return Vec::new(),
    };
    let mut out = Vec::new();
    for &algo in &or_base(&s.algos, algo) {
        for &alpha in &or_base(&s.alphas, alpha) {
            for &eta in &or_base(&s.etas, eta) {
                for &seed in &or_base(&s.seeds, seed) {
                    let label = format!("{algo}_alpha{alpha}_eta{eta}_seed{seed}");
                    let arena = s.arena.as_ref().map(|a| ArenaSection {
                        algo,
                        alpha,
                        eta,
                        ..a.clone()
                    });
                    let dtap = s.dtap.as_ref().map(|d| {
                        let mut d = d.clone();
                        d.learner.algo = algo;
                        d.learner.alpha = alpha;
                        d.learner.eta = eta;
                        d
                    });
                    out.push(SweepPoint {
                        label,
                        seed,
                        arena,
                        dtap,
                    });
                }
            }
        }
    }
    out
}

fn run_sweep(
    s: &SweepSection,
    seed: u64,
    dir: &Path,
    format: Format,
) -> anyhow::Result<Vec<PathBuf>> {
    let points = expand_sweep(s, seed);
    let written: Vec<Vec<PathBuf>> = points
        .par_iter()
        .map(|pt| {
            let sub = dir.join(&pt.label);
            match (&pt.arena, &pt.dtap) {
                (Some(a), _) => run_arena(a, pt.seed, &sub, format),
                (None, Some(d)) => run_dtap(d, pt.seed, &sub, format),
                (None, None) => Err(anyhow!("empty sweep point")),
            }
            .with_context(|| format!("sweep point {}", pt.label))
        })
        .collect::<anyhow::Result<_>>()?;
    Ok(written.into_iter().flatten().collect())
}
