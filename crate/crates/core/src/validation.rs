//! Self-checks against brute-force and analytic oracles.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dtap::{DtapConfig, DtapWorld, SourceBlock};
use crate::dynamics::{iga_invariant, revolution_analysis_with, Field2x2, PhasePoint};
use crate::error::Result;
use crate::games::{benchmark, expected_value, gradient_constants, JointPolicy, BENCHMARKS};
use crate::learners::{exact_gradient, project, Algorithm, LearnerSpec, Policy};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Self {
            name,
            passed,
            detail,
        }
    }
}

/// Grid step of the brute-force projection oracle.
pub const GRID: f64 = 1e-4;

fn sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest point to `x` among floored distributions whose coordinates are
/// multiples of `GRID` away from the floor. Two actions: exhaustive. Three
/// actions: exhaustive on a 100x coarser grid, then exhaustive on the fine
/// grid around the coarse winner (the objective is convex).
pub fn grid_projection(x: &[f64], floor: f64) -> Vec<f64> {
    let free = 1.0 - floor * x.len() as f64;
    let n = (free / GRID).round() as i64;
    match x.len() {
        1 => vec![1.0],
        2 => {
            let best = (0..=n)
                .min_by(|&i, &j| {
                    let at = |i: i64| {
                        let a = floor + i as f64 * GRID;
                        sq(x, &[a, 1.0 - a])
                    };
                    at(i).total_cmp(&at(j))
                })
                .expect("non-empty grid");
            let a = floor + best as f64 * GRID;
            vec![a, 1.0 - a]
        }
        3 => {
            let point = |i: i64, j: i64| {
                let a = floor + i as f64 * GRID;
                let b = floor + j as f64 * GRID;
                [a, b, 1.0 - a - b]
            };
            let search = |lo_i: i64, hi_i: i64, lo_j: i64, hi_j: i64, stride: usize| {
                let mut best = (f64::INFINITY, 0, 0);
                for i in (lo_i.max(0)..=hi_i.min(n)).step_by(stride) {
                    for j in (lo_j.max(0)..=hi_j.min(n - i)).step_by(stride) {
                        let d = sq(x, &point(i, j));
                        if d < best.0 {
                            best = (d, i, j);
                        }
                    }
                }
                best
            };
            let coarse = search(0, n, 0, n, 100);
            let (_, i, j) = search(
                coarse.1 - 200,
                coarse.1 + 200,
                coarse.2 - 200,
                coarse.2 + 200,
                1,
            );
            point(i, j).to_vec()
        }
        k => panic!("grid oracle supports up to 3 actions, got {k}"),
    }
}

/// Compares `project_fn` with the grid oracle on random 2- and 3-action inputs.
pub fn projection_check<F>(project_fn: F, cases: usize, seed: u64) -> Check
where
    F: Fn(&[f64], f64) -> Result<Policy>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    for case in 0..cases {
        let k = 2 + case % 2;
        let floor = [0.0, 0.05, 0.1][case % 3];
        let x: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..2.0)).collect();
        let oracle = grid_projection(&x, floor);
        match project_fn(&x, floor) {
            Ok(p) => {
                let gap = p
                    .probs()
                    .iter()
                    .zip(&oracle)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                worst = worst.max(gap);
                if gap > GRID {
                    failures += 1;
                }
            }
            Err(_) => failures += 1,
        }
    }
    Check::new(
        "projection vs grid oracle",
        failures == 0,
        format!("{cases} inputs, {failures} off by more than {GRID}, worst {worst:.2e}"),
    )
}

pub fn gradient_check(samples: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for name in BENCHMARKS {
        let game = benchmark(name).expect("catalog game");
        for _ in 0..samples {
            let pols: Vec<Policy> = game
                .actions()
                .iter()
                .map(|&k| {
                    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
                    let s: f64 = raw.iter().sum();
                    Policy::new(raw.iter().map(|v| v / s).collect()).expect("normalised")
                })
                .collect();
            let joint = JointPolicy::new(pols);
            for player in 0..game.num_players() {
                let g = exact_gradient(&game, player, &joint).expect("valid player");
                let pi = joint.get(player).probs().to_vec();
                for a in 0..pi.len() {
                    let rest = 1.0 - pi[a];
                    let at = |t: f64| {
                        let moved: Vec<f64> = (0..pi.len())
                            .map(|b| {
                                if b == a {
                                    pi[b] + t
                                } else {
                                    pi[b] - t * pi[b] / rest
                                }
                            })
                            .collect();
                        let mut j = joint.clone();
                        j.policies[player] = Policy::new(moved).expect("small move stays valid");
                        expected_value(&game, player, &j).expect("shapes match")
                    };
                    let fd = (at(h) - at(-h)) / (2.0 * h);
                    worst = worst.max((fd - g.g[a]).abs());
                }
            }
        }
    }
    Check::new(
        "exact gradient vs central differences",
        worst < 1e-6,
        format!("worst gap {worst:.2e} over all catalog games"),
    )
}

/// `|H(end) - H(start)|` over one unconstrained IGA revolution of matching
/// pennies from (0.2, 0.5).
pub fn h_drift(dt: f64) -> Result<f64> {
    let u = gradient_constants(&benchmark("matching-pennies")?)?;
    let rec =
        revolution_analysis_with(&Field2x2::iga(u), PhasePoint::new(0.0, 0.2, 0.5), dt, 100.0)?;
    let end = rec.crossings[3];
    Ok((iga_invariant(&u, end.p, end.q) - iga_invariant(&u, 0.2, 0.5)).abs())
}

/// Drift below 1e-6 at `dt`, and going from `2 dt` to `dt` shrinks it by a
/// factor in [8, 32].
pub fn h_conservation_check(dt: f64) -> Check {
    match (h_drift(dt), h_drift(2.0 * dt)) {
        (Ok(fine), Ok(coarse)) => {
            let ratio = coarse / fine;
            Check::new(
                "IGA invariant conservation",
                fine < 1e-6 && (8.0..=32.0).contains(&ratio),
                format!(
                    "|dH| = {fine:.2e} at dt = {dt}, {coarse:.2e} at dt = {}, ratio {ratio:.1}",
                    2.0 * dt
                ),
            )
        }
        (Err(e), _) | (_, Err(e)) => Check::new("IGA invariant conservation", false, e.to_string()),
    }
}

pub fn dtap_conservation_check(seed: u64) -> Check {
    let cfg = DtapConfig {
        width: 5,
        height: 5,
        sources: SourceBlock::centred(5, 5, 3),
        arrival_rate: 0.08,
        learner: LearnerSpec::new(Algorithm::Wpl).alpha(1.0).eta(1e-3),
        seed,
        ..DtapConfig::default()
    };
    let mut world = match DtapWorld::new(&cfg) {
        Ok(w) => w,
        Err(e) => return Check::new("task conservation", false, e.to_string()),
    };
    let ticks = 5000;
    for tick in 0..ticks {
        if let Err(e) = world.step() {
            return Check::new("task conservation", false, e.to_string());
        }
        let c = world.census();
        if !c.balanced() {
            return Check::new("task conservation", false, format!("tick {tick}: {c:?}"));
        }
    }
    let c = world.census();
    Check::new(
        "task conservation",
        true,
        format!(
            "{ticks} ticks, {} generated, {} completed",
            c.generated, c.completed
        ),
    )
}

pub fn run_all(seed: u64) -> Vec<Check> {
    vec![
        projection_check(project, 1000, seed),
        gradient_check(50, seed),
        h_conservation_check(1e-3),
        dtap_conservation_check(seed),
    ]
}
