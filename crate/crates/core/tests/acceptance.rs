//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits nonzero when a criterion fails that is not listed in `SHORTFALLS`.
//!
//! Reference values that are not read off a published figure come from
//! oracles written here, independent of the library code under test.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use marl_lab::arena::{aggregate, run, ArenaConfig, ConvergenceReport, GradientMode, Participant};
use marl_lab::dtap::{run_experiment, steady_atst, AtstSample, DtapConfig};
use marl_lab::dynamics::{
    grid_experiment, revolution_analysis, revolution_analysis_with, Field2x2, GridConfig,
    PhasePoint,
};
use marl_lab::games::{expected_value, gradient_constants, BENCHMARKS};
use marl_lab::learners::{exact_gradient, project};
use marl_lab::{benchmark, Algorithm, Game, GradientConstants, JointPolicy, LearnerSpec, Policy};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Criteria measured to fail with this implementation. The README explains
/// each one.
const SHORTFALLS: [&str; 2] = ["5", "12b"];

const SEED: u64 = 1;
const RUNS: usize = 10;
const STEPS: usize = 40_000;

/// Convergence test: trailing-window mean within `NE_TOL` (L-infinity) of
/// the equilibrium and trailing amplitude below `AMP_TOL`.
const NE_TOL: f64 = 0.1;
const AMP_TOL: f64 = 0.15;
/// Non-convergence: trailing amplitude above this.
const OSC_TOL: f64 = 0.3;

struct Outcome {
    id: &'static str,
    passed: bool,
    detail: String,
    elapsed: Duration,
    limit: Duration,
}

fn criterion(id: &'static str, limit_s: u64, body: impl FnOnce() -> (bool, String)) -> Outcome {
    let t = Instant::now();
    let (ok, detail) = body();
    let elapsed = t.elapsed();
    let limit = Duration::from_secs(limit_s);
    Outcome {
        id,
        passed: ok && elapsed < limit,
        detail,
        elapsed,
        limit,
    }
}

fn two_by_two_init() -> JointPolicy {
    JointPolicy::new(vec![
        Policy::new(vec![0.1, 0.9]).unwrap(),
        Policy::new(vec![0.9, 0.1]).unwrap(),
    ])
}

fn three_by_three_init() -> JointPolicy {
    JointPolicy::new(vec![
        Policy::new(vec![0.1, 0.8, 0.1]).unwrap(),
        Policy::new(vec![0.8, 0.1, 0.1]).unwrap(),
    ])
}

fn self_play(game: &str, spec: LearnerSpec, init: JointPolicy, steps: usize) -> ConvergenceReport {
    let cfg = ArenaConfig::self_play(benchmark(game).unwrap(), spec, init)
        .steps(steps)
        .runs(RUNS)
        .seed(SEED);
    aggregate(&run(&cfg).unwrap()).unwrap()
}

fn joint(rows: &[&[f64]]) -> JointPolicy {
    JointPolicy::new(
        rows.iter()
            .map(|r| Policy::new(r.to_vec()).unwrap())
            .collect(),
    )
}

/// Mixed equilibria of the catalog games, solved by hand from the payoff
/// tables: each player's mix makes the opponent indifferent.
fn hand_equilibrium(game: &str) -> JointPolicy {
    let third = 1.0 / 3.0;
    match game {
        "matching-pennies" => joint(&[&[0.5, 0.5], &[0.5, 0.5]]),
        // Row indifferent: 3(1-q) = q + 2(1-q) -> q = 1/2; column: 3p = 2p + (1-p) -> p = 1/2.
        "tricky" => joint(&[&[0.5, 0.5], &[0.5, 0.5]]),
        // Row: q + 1.85(1-q) = 1.15q + (1-q) -> q = 0.85; column: 1.85p + (1-p) = p + 1.15(1-p) -> p = 0.15.
        "biased" => joint(&[&[0.15, 0.85], &[0.85, 0.15]]),
        "rock-paper-scissors" | "shapleys" => joint(&[&[third; 3], &[third; 3]]),
        other => panic!("no hand-solved equilibrium for {other}"),
    }
}

fn converges(r: &ConvergenceReport, ne: &JointPolicy, tol: f64) -> bool {
    r.distance_to(ne) <= tol && r.max_amplitude() < AMP_TOL
}

fn describe(label: &str, r: &ConvergenceReport, ne: &JointPolicy) -> String {
    format!(
        "{label} d={:.3} amp={:.3}",
        r.distance_to(ne),
        r.max_amplitude()
    )
}

fn c1() -> (bool, String) {
    let ne = hand_equilibrium("matching-pennies");
    let wpl = self_play(
        "matching-pennies",
        LearnerSpec::new(Algorithm::Wpl),
        two_by_two_init(),
        STEPS,
    );
    let giga = self_play(
        "matching-pennies",
        LearnerSpec::new(Algorithm::Giga),
        two_by_two_init(),
        STEPS,
    );
    let ok = converges(&wpl, &ne, NE_TOL)
        && !converges(&giga, &ne, NE_TOL)
        && giga.max_amplitude() > OSC_TOL;
    (
        ok,
        format!(
            "{}; {} (need WPL d<={NE_TOL} amp<{AMP_TOL}, GIGA amp>{OSC_TOL})",
            describe("WPL", &wpl, &ne),
            describe("GIGA", &giga, &ne)
        ),
    )
}

fn c2() -> (bool, String) {
    let ne = hand_equilibrium("tricky");
    let r = |a| self_play("tricky", LearnerSpec::new(a), two_by_two_init(), STEPS);
    let (wpl, gw, giga, phc) = (
        r(Algorithm::Wpl),
        r(Algorithm::GigaWolf),
        r(Algorithm::Giga),
        r(Algorithm::PhcWolf),
    );
    let ok = converges(&wpl, &ne, NE_TOL)
        && converges(&gw, &ne, NE_TOL)
        && wpl.max_amplitude() < gw.max_amplitude()
        && !converges(&giga, &ne, NE_TOL)
        && !converges(&phc, &ne, NE_TOL);
    (
        ok,
        format!(
            "{}; {}; {}; {}",
            describe("WPL", &wpl, &ne),
            describe("GIGA-WoLF", &gw, &ne),
            describe("GIGA", &giga, &ne),
            describe("PHC-WoLF", &phc, &ne)
        ),
    )
}

fn c3() -> (bool, String) {
    let eps = LearnerSpec::default().epsilon;
    let need = 1.0 - eps - 0.05;
    let cfg = ArenaConfig::self_play(
        benchmark("coordination").unwrap(),
        LearnerSpec::new(Algorithm::Wpl),
        two_by_two_init(),
    )
    .steps(20_000)
    .runs(RUNS)
    .seed(SEED);
    let runs = run(&cfg).unwrap();
    let mut worst: f64 = 1.0;
    let mut matched = 0;
    for t in &runs {
        let last = t.records.last().unwrap();
        let (p, q) = (last.players[0].policy[0], last.players[1].policy[0]);
        worst = worst.min(p.max(1.0 - p)).min(q.max(1.0 - q));
        // Pure equilibria: both on action 0, or both on action 1.
        if (p > 0.5) == (q > 0.5) {
            matched += 1;
        }
    }
    (
        worst >= need && matched == runs.len(),
        format!(
            "min max-action prob {worst:.3} (need >= {need:.2}), {matched}/{} runs at a pure NE",
            runs.len()
        ),
    )
}

fn c4() -> (bool, String) {
    let ne = hand_equilibrium("shapleys");
    let r = |a, alpha| {
        self_play(
            "shapleys",
            LearnerSpec::new(a).alpha(alpha).eta(0.001),
            three_by_three_init(),
            STEPS,
        )
    };
    let wpl = r(Algorithm::Wpl, 1.0);
    let gw1 = r(Algorithm::GigaWolf, 1.0);
    let gw01 = r(Algorithm::GigaWolf, 0.1);
    let ok = wpl.distance_to(&ne) <= 0.15
        && gw1.max_amplitude() >= OSC_TOL
        && gw01.max_amplitude() >= OSC_TOL;
    (
        ok,
        format!(
            "WPL a=1 d={:.3} (need <= 0.15); GIGA-WoLF amp {:.3} at a=1, {:.3} at a=0.1 (need >= {OSC_TOL})",
            wpl.distance_to(&ne),
            gw1.max_amplitude(),
            gw01.max_amplitude()
        ),
    )
}

fn c5() -> (bool, String) {
    let ne = hand_equilibrium("rock-paper-scissors");
    let r = |a, alpha| {
        self_play(
            "rock-paper-scissors",
            LearnerSpec::new(a).alpha(alpha).eta(0.001),
            three_by_three_init(),
            STEPS,
        )
    };
    let wpl01 = r(Algorithm::Wpl, 0.1);
    let gw01 = r(Algorithm::GigaWolf, 0.1);
    let wpl1 = r(Algorithm::Wpl, 1.0);
    let gw1 = r(Algorithm::GigaWolf, 1.0);
    let ok = converges(&wpl01, &ne, NE_TOL)
        && converges(&gw01, &ne, NE_TOL)
        && converges(&wpl1, &ne, NE_TOL)
        && !converges(&gw1, &ne, NE_TOL);
    (
        ok,
        format!(
            "a=0.1: {}, {}; a=1: {}, {} (GIGA-WoLF must not converge at a=1)",
            describe("WPL", &wpl01, &ne),
            describe("GIGA-WoLF", &gw01, &ne),
            describe("WPL", &wpl1, &ne),
            describe("GIGA-WoLF", &gw1, &ne)
        ),
    )
}

fn c6() -> (bool, String) {
    let game = benchmark("biased").unwrap();
    let ne = hand_equilibrium("biased");
    let frozen = ArenaConfig {
        players: vec![
            Participant::Learner(LearnerSpec::new(Algorithm::Wpl).alpha(1.0)),
            Participant::Fixed,
        ],
        ..ArenaConfig::self_play(
            game,
            LearnerSpec::default(),
            joint(&[&[0.1, 0.9], &[0.7, 0.3]]),
        )
    }
    .steps(STEPS)
    .runs(RUNS)
    .seed(SEED);
    let frozen = aggregate(&run(&frozen).unwrap()).unwrap();
    let p = frozen.window_mean[0][0];
    let slow = self_play(
        "biased",
        LearnerSpec::new(Algorithm::Wpl).alpha(0.01),
        two_by_two_init(),
        STEPS,
    );
    let fast = self_play(
        "biased",
        LearnerSpec::new(Algorithm::Wpl).alpha(1.0),
        two_by_two_init(),
        STEPS,
    );
    let ok =
        (p - 0.75).abs() <= 0.05 && slow.distance_to(&ne) <= 0.1 && fast.distance_to(&ne) >= 0.15;
    (
        ok,
        format!(
            "(a) p={p:.3} (need 0.75 +- 0.05); (b) a=0.01 d={:.3} (need <= 0.1); (c) a=1 d={:.3} (need >= 0.15)",
            slow.distance_to(&ne),
            fast.distance_to(&ne)
        ),
    )
}

fn c7() -> (bool, String) {
    let cfg = GridConfig::default();
    let s = grid_experiment(&cfg).unwrap();
    let worst = s.worst();
    (
        worst <= 0.05 && s.cases.len() == 100,
        format!(
            "{} equilibria x {} starts, worst distance in [{}, {}] = {worst:.4} (need <= 0.05)",
            s.cases.len(),
            s.starts,
            cfg.horizon - cfg.late_window,
            cfg.horizon
        ),
    )
}

/// `(row, col)` payoff tables uniform in [-1, 1].
fn random_game(rng: &mut ChaCha8Rng) -> Game {
    let mut m = || -> Vec<Vec<f64>> {
        (0..2)
            .map(|_| (0..2).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect()
    };
    let row = m();
    let col = m();
    Game::bimatrix(&row, &col).unwrap()
}

fn c8() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut tested = 0;
    let mut worst = f64::INFINITY;
    let mut failures = Vec::new();
    while tested < 100 {
        let game = random_game(&mut rng);
        let u = gradient_constants(&game).unwrap();
        if u.u1 * u.u3 >= 0.0 {
            continue;
        }
        let Some((ps, qs)) = u.interior_ne() else {
            continue;
        };
        tested += 1;
        let start = PhasePoint::new(0.0, ps * 0.5, qs);
        match revolution_analysis(&Field2x2::wpl(u), start) {
            Ok(rec) => {
                let gain = rec.p_min2 - rec.p_min1;
                worst = worst.min(gain);
                if gain <= 1e-6 {
                    failures.push(format!("u={u:?} gain {gain:e}"));
                }
            }
            Err(e) => failures.push(format!("u={u:?}: {e}")),
        }
    }
    (
        failures.is_empty(),
        format!("{tested} games, smallest p_min2 - p_min1 = {worst:.3e} (need > 1e-6), failures {failures:?}"),
    )
}

/// Row and column WPL rates written from the payoff table.
fn wpl_ode(game: &Game, p: f64, q: f64) -> (f64, f64) {
    let r = |i, j| game.reward(&[i, j], 0).unwrap();
    let c = |i, j| game.reward(&[i, j], 1).unwrap();
    let gp = q * (r(0, 0) - r(1, 0)) + (1.0 - q) * (r(0, 1) - r(1, 1));
    let gq = p * (c(0, 0) - c(0, 1)) + (1.0 - p) * (c(1, 0) - c(1, 1));
    let w = |g: f64, x: f64| if g > 0.0 { 1.0 - x } else { x };
    (gp * w(gp, p), gq * w(gq, q))
}

fn c9() -> (bool, String) {
    let game = benchmark("matching-pennies").unwrap();
    let eta = 0.001;
    let (p0, q0) = (0.1, 0.9);
    // Zero floor: the ODE has none.
    let spec = LearnerSpec::new(Algorithm::Wpl).eta(eta).epsilon(0.0);
    let cfg = ArenaConfig::self_play(
        game.clone(),
        spec,
        joint(&[&[p0, 1.0 - p0], &[q0, 1.0 - q0]]),
    )
    .gradient(GradientMode::Exact)
    .steps(STEPS)
    .runs(RUNS)
    .seed(SEED);
    let r = aggregate(&run(&cfg).unwrap()).unwrap();

    // Classic RK4 with 10 substeps per learning step; step s ends at t = (s + 1) eta.
    let sub = 10;
    let h = eta / sub as f64;
    let (mut p, mut q) = (p0, q0);
    let mut worst: f64 = 0.0;
    for s in 0..STEPS {
        for _ in 0..sub {
            let k1 = wpl_ode(&game, p, q);
            let k2 = wpl_ode(&game, p + h / 2.0 * k1.0, q + h / 2.0 * k1.1);
            let k3 = wpl_ode(&game, p + h / 2.0 * k2.0, q + h / 2.0 * k2.1);
            let k4 = wpl_ode(&game, p + h * k3.0, q + h * k3.1);
            p += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
            q += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        }
        worst = worst
            .max((r.mean[0][0][s] - p).abs())
            .max((r.mean[1][0][s] - q).abs());
    }
    (
        worst < 0.1,
        format!(
            "sup deviation {worst:.4} over t in (0, {}] (need < 0.1)",
            STEPS as f64 * eta
        ),
    )
}

fn h(u: &GradientConstants, p: f64, q: f64) -> f64 {
    u.u3 * p * p / 2.0 + u.u4 * p - u.u1 * q * q / 2.0 - u.u2 * q
}

fn drift(u: &GradientConstants, start: (f64, f64), dt: f64) -> f64 {
    let rec = revolution_analysis_with(
        &Field2x2::iga(*u),
        PhasePoint::new(0.0, start.0, start.1),
        dt,
        100.0,
    )
    .unwrap();
    let end = rec.crossings[3];
    (h(u, end.p, end.q) - h(u, start.0, start.1)).abs()
}

fn c10() -> (bool, String) {
    let u = gradient_constants(&benchmark("matching-pennies").unwrap()).unwrap();
    let start = (0.2, 0.5);
    let fine = drift(&u, start, 1e-3);
    let ratio = drift(&u, start, 2e-3) / fine;
    // At dt = 1e-3 the drift is near roundoff; a coarse pair shows the
    // truncation-dominated ratio.
    let coarse_ratio = drift(&u, start, 0.02) / drift(&u, start, 0.01);
    (
        fine < 1e-6 && (8.0..=32.0).contains(&ratio),
        format!(
            "|dH| {fine:.2e} at dt=1e-3 (need < 1e-6), ratio {ratio:.1} from dt=2e-3 (need in [8, 32]); ratio {coarse_ratio:.1} from dt=0.02 to 0.01"
        ),
    )
}

const GRID: f64 = 1e-4;

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

/// Nearest grid distribution with every entry >= floor. Two actions:
/// exhaustive. Three: exhaustive at 100 GRID spacing, then exhaustive at
/// GRID spacing within 200 GRID of the coarse winner.
fn nearest_on_grid(x: &[f64], floor: f64) -> Vec<f64> {
    let n = ((1.0 - floor * x.len() as f64) / GRID).round() as i64;
    let at = |i: i64| floor + i as f64 * GRID;
    if x.len() == 2 {
        let best = (0..=n)
            .map(|i| (dist2(x, &[at(i), 1.0 - at(i)]), i))
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .unwrap()
            .1;
        return vec![at(best), 1.0 - at(best)];
    }
    let point = |i: i64, j: i64| [at(i), at(j), 1.0 - at(i) - at(j)];
    let scan = |is: &mut dyn Iterator<Item = i64>, js: &dyn Fn(i64) -> Vec<i64>| {
        let mut best = (f64::INFINITY, 0, 0);
        for i in is {
            for j in js(i) {
                let d = dist2(x, &point(i, j));
                if d < best.0 {
                    best = (d, i, j);
                }
            }
        }
        (best.1, best.2)
    };
    let (ci, cj) = scan(&mut (0..=n).step_by(100), &|i| {
        (0..=n - i).step_by(100).collect()
    });
    let (i, j) = scan(
        &mut (ci - 200..=ci + 200).filter(|i| (0..=n).contains(i)),
        &|i| {
            (cj - 200..=cj + 200)
                .filter(|j| *j >= 0 && *j <= n - i)
                .collect()
        },
    );
    point(i, j).to_vec()
}

fn c11() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut proj_worst: f64 = 0.0;
    for case in 0..1000 {
        let k = 2 + case % 2;
        let floor = [0.0, 0.05, 0.1][case % 3];
        let x: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..2.0)).collect();
        let got = project(&x, floor).unwrap();
        let want = nearest_on_grid(&x, floor);
        let gap = got
            .probs()
            .iter()
            .zip(&want)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        proj_worst = proj_worst.max(gap);
    }

    let mut grad_worst: f64 = 0.0;
    let step = 1e-6;
    for name in BENCHMARKS {
        let game = benchmark(name).unwrap();
        for _ in 0..20 {
            let pols: Vec<Policy> = game
                .actions()
                .iter()
                .map(|&k| {
                    let w: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..1.0)).collect();
                    let s: f64 = w.iter().sum();
                    Policy::new(w.iter().map(|v| v / s).collect()).unwrap()
                })
                .collect();
            let base = JointPolicy::new(pols);
            for player in 0..game.num_players() {
                let g = exact_gradient(&game, player, &base).unwrap();
                let pi = base.get(player).probs().to_vec();
                for a in 0..pi.len() {
                    // Move mass onto `a`, taking it from the others in proportion.
                    let v = |t: f64| {
                        let moved: Vec<f64> = pi
                            .iter()
                            .enumerate()
                            .map(|(b, &x)| {
                                if b == a {
                                    x + t
                                } else {
                                    x - t * x / (1.0 - pi[a])
                                }
                            })
                            .collect();
                        let mut j = base.clone();
                        j.policies[player] = Policy::new(moved).unwrap();
                        expected_value(&game, player, &j).unwrap()
                    };
                    let fd = (v(step) - v(-step)) / (2.0 * step);
                    grad_worst = grad_worst.max((fd - g.g[a]).abs());
                }
            }
        }
    }
    (
        proj_worst <= GRID && grad_worst <= 1e-6,
        format!(
            "projection worst gap {proj_worst:.2e} on 1000 inputs (need <= {GRID}); gradient worst gap {grad_worst:.2e} (need <= 1e-6)"
        ),
    )
}

struct DtapRuns {
    /// Per seed: (WPL, GIGA-WoLF, GIGA) samples.
    by_seed: Vec<[Vec<AtstSample>; 3]>,
}

const STEADY: f64 = 0.1;

fn dtap_runs() -> DtapRuns {
    let algos = [Algorithm::Wpl, Algorithm::GigaWolf, Algorithm::Giga];
    let by_seed = (1..=3)
        .map(|seed| {
            algos.map(|a| {
                let cfg = DtapConfig {
                    seed,
                    ..DtapConfig::paper(a)
                };
                run_experiment(&cfg).unwrap()
            })
        })
        .collect();
    DtapRuns { by_seed }
}

/// Mean ATST over the windows in `[from, to)` as fractions of the run.
fn span_mean(s: &[AtstSample], from: f64, to: f64) -> f64 {
    let n = s.len() as f64;
    let v: Vec<f64> = s[(from * n) as usize..(to * n) as usize]
        .iter()
        .filter_map(|x| x.atst)
        .collect();
    v.iter().sum::<f64>() / v.len() as f64
}

fn c12a(runs: &DtapRuns) -> (bool, String) {
    let mut ok = true;
    let mut parts = Vec::new();
    for (i, [wpl, gw, giga]) in runs.by_seed.iter().enumerate() {
        let (w, g, x) = (
            steady_atst(wpl, STEADY).unwrap(),
            steady_atst(gw, STEADY).unwrap(),
            steady_atst(giga, STEADY).unwrap(),
        );
        // Growing: last tenth at least 5% above the middle tenth.
        let growing = span_mean(giga, 0.9, 1.0) > 1.05 * span_mean(giga, 0.45, 0.55);
        let seed_ok = w < g && (growing || x > w.max(g));
        ok &= seed_ok;
        parts.push(format!(
            "seed {}: WPL {w:.1} < GIGA-WoLF {g:.1}, GIGA {x:.1} growing={growing}",
            i + 1
        ));
    }
    (ok, parts.join("; "))
}

fn c12b(runs: &DtapRuns) -> (bool, String) {
    let mut ok = true;
    let mut parts = Vec::new();
    for (i, [wpl, gw, _]) in runs.by_seed.iter().enumerate() {
        let (w, g) = (
            steady_atst(wpl, STEADY).unwrap(),
            steady_atst(gw, STEADY).unwrap(),
        );
        ok &= (50.0..=90.0).contains(&w) && (75.0..=130.0).contains(&g);
        parts.push(format!("seed {}: WPL {w:.1}, GIGA-WoLF {g:.1}", i + 1));
    }
    (
        ok,
        format!(
            "{} (need WPL in [50, 90], GIGA-WoLF in [75, 130])",
            parts.join("; ")
        ),
    )
}

fn main() -> ExitCode {
    let mut outcomes = Vec::new();
    let mut report = |o: Outcome| {
        println!(
            "{} criterion {:>3}: {} [{:.1}s, limit {}s]",
            if o.passed { "PASS" } else { "FAIL" },
            o.id,
            o.detail,
            o.elapsed.as_secs_f64(),
            o.limit.as_secs()
        );
        outcomes.push((o.id, o.passed));
    };
    report(criterion("1", 30, c1));
    report(criterion("2", 60, c2));
    report(criterion("3", 10, c3));
    report(criterion("4", 60, c4));
    report(criterion("5", 60, c5));
    report(criterion("6", 60, c6));
    report(criterion("7", 120, c7));
    report(criterion("8", 60, c8));
    report(criterion("9", 60, c9));
    report(criterion("10", 10, c10));
    report(criterion("11", 30, c11));
    let t = Instant::now();
    let runs = dtap_runs();
    let spent = t.elapsed();
    // Both halves share the nine runs; each is charged their full cost.
    let with_runs = |id, f: fn(&DtapRuns) -> (bool, String)| {
        let mut o = criterion(id, 300, || f(&runs));
        o.elapsed += spent;
        o.passed &= o.elapsed < o.limit;
        o
    };
    report(with_runs("12a", c12a));
    report(with_runs("12b", c12b));

    let failed: Vec<_> = outcomes
        .iter()
        .filter(|(_, ok)| !ok)
        .map(|(id, _)| *id)
        .collect();
    let unexpected: Vec<_> = failed
        .iter()
        .filter(|id| !SHORTFALLS.contains(id))
        .collect();
    println!(
        "{}/{} criteria pass; known shortfalls {:?}; unexpected failures {:?}",
        outcomes.len() - failed.len(),
        outcomes.len(),
        SHORTFALLS,
        unexpected
    );
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
