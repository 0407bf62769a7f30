//! Continuous-time learning dynamics of 2x2 games.
//!
//! `p` and `q` are the row and column players' first-action probabilities;
//! time is measured in units of `eta * steps`.

use std::ops::ControlFlow;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::games::GradientConstants;

pub const DEFAULT_DT: f64 = 0.01;
/// Width of the time bracket left by bisection at a switching surface.
pub const EVENT_TOL: f64 = 1e-9;
/// Integration budget for [`revolution_analysis`].
pub const MAX_REVOLUTION_TIME: f64 = 2000.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "kebab-case")]
pub enum FieldKind {
    Iga,
    IgaWolf {
        ne: (f64, f64),
        l_win: f64,
        l_lose: f64,
    },
    Wpl,
}

impl FieldKind {
    pub fn label(&self) -> &'static str {
        match self {
            FieldKind::Iga => "iga",
            FieldKind::IgaWolf { .. } => "iga-wolf",
            FieldKind::Wpl => "wpl",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Field2x2 {
    pub kind: FieldKind,
    pub u: GradientConstants,
}

impl Field2x2 {
    pub fn wpl(u: GradientConstants) -> Self {
        Self {
            kind: FieldKind::Wpl,
            u,
        }
    }

    pub fn iga(u: GradientConstants) -> Self {
        Self {
            kind: FieldKind::Iga,
            u,
        }
    }

    pub fn iga_wolf(u: GradientConstants, ne: (f64, f64), l_win: f64, l_lose: f64) -> Result<Self> {
        let ok = |x: f64| (0.0..=1.0).contains(&x);
        if !ok(ne.0) || !ok(ne.1) {
            return Err(Error::Domain(format!(
                "equilibrium {ne:?} outside the unit square"
            )));
        }
        Ok(Self {
            kind: FieldKind::IgaWolf { ne, l_win, l_lose },
            u,
        })
    }

    /// Unchecked field value; also used off the unit square by unconstrained IGA.
    fn rate(&self, p: f64, q: f64) -> (f64, f64) {
        let dp = self.u.row_gradient(q);
        let dq = self.u.col_gradient(p);
        match self.kind {
            FieldKind::Iga => (dp, dq),
            FieldKind::Wpl => (
                dp * if dp > 0.0 { 1.0 - p } else { p },
                dq * if dq > 0.0 { 1.0 - q } else { q },
            ),
            FieldKind::IgaWolf { ne, l_win, l_lose } => {
                // V(p, q) - V(p*, q) = (p - p*) * dV/dp, since V is linear in p.
                let rate = |gain: f64| if gain < 0.0 { l_lose } else { l_win };
                (dp * rate((p - ne.0) * dp), dq * rate((q - ne.1) * dq))
            }
        }
    }

    fn switching(&self, p: f64, q: f64) -> [f64; 2] {
        [self.u.row_gradient(q), self.u.col_gradient(p)]
    }
}

/// `(dp/dt, dq/dt)` at a point of the unit square.
pub fn field_eval(field: &Field2x2, p: f64, q: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&p) || !(0.0..=1.0).contains(&q) {
        return Err(Error::Domain(format!("({p}, {q}) outside the unit square")));
    }
    Ok(field.rate(p, q))
}

/// `u3 p^2 / 2 + u4 p - u1 q^2 / 2 - u2 q`, constant along unconstrained IGA orbits.
pub fn iga_invariant(u: &GradientConstants, p: f64, q: f64) -> f64 {
    u.u3 * p * p / 2.0 + u.u4 * p - u.u1 * q * q / 2.0 - u.u2 * q
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub t: f64,
    pub p: f64,
    pub q: f64,
}

impl PhasePoint {
    pub fn new(t: f64, p: f64, q: f64) -> Self {
        Self { t, p, q }
    }

    pub fn distance(&self, p: f64, q: f64) -> f64 {
        ((self.p - p).powi(2) + (self.q - q).powi(2)).sqrt()
    }
}

/// The two switching surfaces: `Row` is `u1 q + u2 = 0` (the line `q = q*`),
/// `Col` is `u3 p + u4 = 0` (the line `p = p*`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Surface {
    Row,
    Col,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub point: PhasePoint,
    pub surface: Surface,
}

/// Switching values this close to zero count as on the surface, so that
/// roundoff jitter around a converged point does not register as crossings.
const SURFACE_BAND: f64 = 1e-12;

fn side(s: f64) -> i8 {
    if s > SURFACE_BAND {
        1
    } else if s < -SURFACE_BAND {
        -1
    } else {
        0
    }
}

/// Fixed-step RK4 with bisection at switching surfaces.
#[derive(Debug, Clone, Copy)]
struct Integrator<'a> {
    field: &'a Field2x2,
    dt: f64,
    clamp: bool,
}

impl Integrator<'_> {
    fn rk4(&self, p: f64, q: f64, h: f64) -> (f64, f64) {
        let f = |p, q| self.field.rate(p, q);
        let (a1, b1) = f(p, q);
        let (a2, b2) = f(p + h / 2.0 * a1, q + h / 2.0 * b1);
        let (a3, b3) = f(p + h / 2.0 * a2, q + h / 2.0 * b2);
        let (a4, b4) = f(p + h * a3, q + h * b3);
        let mut np = p + h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
        let mut nq = q + h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
        if self.clamp {
            np = np.clamp(0.0, 1.0);
            nq = nq.clamp(0.0, 1.0);
        }
        (np, nq)
    }

    /// The surface whose last known side `sides` the point has left, if any.
    fn crossed(&self, sides: [i8; 2], p: f64, q: f64) -> Option<Surface> {
        let now = self.field.switching(p, q);
        let left = |i: usize| sides[i] != 0 && f64::from(sides[i]) * now[i] <= 0.0;
        if left(0) {
            Some(Surface::Row)
        } else if left(1) {
            Some(Surface::Col)
        } else {
            None
        }
    }

    /// One step of at most `h`; stops just past a switching surface.
    fn advance(
        &self,
        at: PhasePoint,
        h: f64,
        sides: &mut [i8; 2],
    ) -> (PhasePoint, Option<Surface>) {
        let (p, q) = self.rk4(at.p, at.q, h);
        let mut out = (PhasePoint::new(at.t + h, p, q), None);
        if let Some(mut surface) = self.crossed(*sides, p, q) {
            let (mut lo, mut hi) = (0.0, h);
            let mut end = (p, q);
            while hi - lo > EVENT_TOL {
                let mid = 0.5 * (lo + hi);
                let (mp, mq) = self.rk4(at.p, at.q, mid);
                match self.crossed(*sides, mp, mq) {
                    Some(s) => {
                        hi = mid;
                        end = (mp, mq);
                        surface = s;
                    }
                    None => lo = mid,
                }
            }
            out = (PhasePoint::new(at.t + hi, end.0, end.1), Some(surface));
            let i = surface as usize;
            sides[i] = -sides[i];
        }
        let now = self.field.switching(out.0.p, out.0.q);
        for (s, v) in sides.iter_mut().zip(now) {
            if side(v) != 0 {
                *s = side(v);
            }
        }
        out
    }

    /// Integrates from `start` for `horizon` time units, calling `visit` on
    /// the start and on every subsequent point.
    fn run<F>(&self, start: PhasePoint, horizon: f64, mut visit: F)
    where
        F: FnMut(&PhasePoint, Option<Surface>) -> ControlFlow<()>,
    {
        if visit(&start, None).is_break() {
            return;
        }
        let end = start.t + horizon;
        let mut at = start;
        let mut sides = self.field.switching(at.p, at.q).map(side);
        while end - at.t > 1e-12 {
            let (next, event) = self.advance(at, self.dt.min(end - at.t), &mut sides);
            at = next;
            if visit(&at, event).is_break() {
                return;
            }
        }
    }
}

fn check_step(horizon: f64, dt: f64) -> Result<()> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Domain(format!("time step {dt} must be positive")));
    }
    if !(horizon >= 0.0) || !horizon.is_finite() {
        return Err(Error::Domain(format!(
            "horizon {horizon} must be non-negative"
        )));
    }
    Ok(())
}

/// Trajectory including the bisected switching points. IGA may leave the
/// unit square.
pub fn integrate(
    field: &Field2x2,
    start: PhasePoint,
    horizon: f64,
    dt: f64,
) -> Result<Vec<PhasePoint>> {
    Ok(integrate_with_events(field, start, horizon, dt)?.0)
}

/// Like [`integrate`], also returning the switching-surface crossings.
pub fn integrate_with_events(
    field: &Field2x2,
    start: PhasePoint,
    horizon: f64,
    dt: f64,
) -> Result<(Vec<PhasePoint>, Vec<Crossing>)> {
    check_step(horizon, dt)?;
    Ok(collect(
        Integrator {
            field,
            dt,
            clamp: false,
        },
        start,
        horizon,
    ))
}

/// Integration clipped to the unit square after every step.
pub fn integrate_constrained(
    field: &Field2x2,
    start: PhasePoint,
    horizon: f64,
    dt: f64,
) -> Result<Vec<PhasePoint>> {
    check_step(horizon, dt)?;
    Ok(collect(
        Integrator {
            field,
            dt,
            clamp: true,
        },
        start,
        horizon,
    )
    .0)
}

fn collect(
    integrator: Integrator,
    start: PhasePoint,
    horizon: f64,
) -> (Vec<PhasePoint>, Vec<Crossing>) {
    let mut points = Vec::with_capacity((horizon / integrator.dt) as usize + 2);
    let mut crossings = Vec::new();
    integrator.run(start, horizon, |pt, event| {
        points.push(*pt);
        if let Some(surface) = event {
            crossings.push(Crossing {
                point: *pt,
                surface,
            });
        }
        ControlFlow::Continue(())
    });
    (points, crossings)
}

/// One loop around an interior equilibrium, starting on the line `q = q*`
/// to the left of it. The four crossings alternate between the lines
/// `p = p*` and `q = q*`; the off-line coordinate at each crossing is the
/// extremum of that quarter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RevolutionRecord {
    pub start: PhasePoint,
    pub crossings: [PhasePoint; 4],
    pub p_min1: f64,
    pub q_max: f64,
    pub p_max: f64,
    pub q_min: f64,
    pub p_min2: f64,
}

impl RevolutionRecord {
    pub fn times(&self) -> [f64; 4] {
        self.crossings.map(|c| c.t)
    }

    pub fn contraction(&self) -> f64 {
        self.p_min2 - self.p_min1
    }
}

pub fn revolution_analysis(field: &Field2x2, start: PhasePoint) -> Result<RevolutionRecord> {
    revolution_analysis_with(field, start, DEFAULT_DT, MAX_REVOLUTION_TIME)
}

pub fn revolution_analysis_with(
    field: &Field2x2,
    start: PhasePoint,
    dt: f64,
    max_time: f64,
) -> Result<RevolutionRecord> {
    check_step(max_time, dt)?;
    let (p_star, q_star) = field
        .u
        .interior_ne()
        .ok_or_else(|| Error::Domain("field has no interior equilibrium".into()))?;
    if (start.q - q_star).abs() > 1e-9 || start.p >= p_star || start.p < 0.0 {
        return Err(Error::Domain(format!(
            "start ({}, {}) must lie on q = {q_star} with p < {p_star}",
            start.p, start.q
        )));
    }
    let start = PhasePoint::new(start.t, start.p, q_star);
    let integrator = Integrator {
        field,
        dt,
        clamp: false,
    };
    let mut found: Vec<PhasePoint> = Vec::with_capacity(4);
    let mut expect = Surface::Col;
    let mut broken = false;
    integrator.run(start, max_time, |pt, event| {
        let Some(surface) = event else {
            return ControlFlow::Continue(());
        };
        if surface != expect {
            broken = true;
            return ControlFlow::Break(());
        }
        found.push(*pt);
        expect = match surface {
            Surface::Row => Surface::Col,
            Surface::Col => Surface::Row,
        };
        if found.len() == 4 {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    });
    if broken || found.len() < 4 {
        return Err(Error::NoRevolution { horizon: max_time });
    }
    let crossings = [found[0], found[1], found[2], found[3]];
    Ok(RevolutionRecord {
        start,
        crossings,
        p_min1: start.p,
        q_max: crossings[0].q.max(crossings[2].q),
        p_max: crossings[1].p,
        q_min: crossings[0].q.min(crossings[2].q),
        p_min2: crossings[3].p,
    })
}

/// `per_side` equally spaced points on each side of the unit square,
/// endpoints included, corners counted once.
pub fn boundary_starts(per_side: usize) -> Vec<(f64, f64)> {
    if per_side < 2 {
        return vec![(0.0, 0.0)];
    }
    let step = 1.0 / (per_side - 1) as f64;
    let mut out = Vec::with_capacity(4 * (per_side - 1));
    for i in 0..per_side - 1 {
        let x = i as f64 * step;
        out.push((x, 0.0));
        out.push((1.0, x));
        out.push((1.0 - x, 1.0));
        out.push((0.0, 1.0 - x));
    }
    out
}

/// Cell centres of an `n x n` grid over the unit square.
pub fn grid_equilibria(n: usize) -> Vec<(f64, f64)> {
    let c = |i: usize| (i as f64 + 0.5) / n as f64;
    (0..n)
        .flat_map(|i| (0..n).map(move |j| (c(i), c(j))))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub ne_per_axis: usize,
    pub starts_per_side: usize,
    pub horizon: f64,
    pub late_window: f64,
    pub dt: f64,
    /// Scale `s` of the constructed constants `(s, -s q*, -s, s p*)`.
    pub scale: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            ne_per_axis: 10,
            starts_per_side: 40,
            horizon: 800.0,
            late_window: 100.0,
            dt: DEFAULT_DT,
            scale: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeDispersion {
    pub ne: (f64, f64),
    /// Largest distance from the equilibrium over all starts and all points
    /// in the late window.
    pub max_late_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub starts: usize,
    pub cases: Vec<NeDispersion>,
}

impl GridSummary {
    pub fn worst(&self) -> f64 {
        self.cases
            .iter()
            .map(|c| c.max_late_distance)
            .fold(0.0, f64::max)
    }
}

/// WPL from every boundary start towards every equilibrium of the grid.
pub fn grid_experiment(cfg: &GridConfig) -> Result<GridSummary> {
    if cfg.ne_per_axis == 0 || cfg.starts_per_side == 0 || !(cfg.scale > 0.0) {
        return Err(Error::Config(
            "grid sizes and scale must be positive".into(),
        ));
    }
    check_step(cfg.horizon, cfg.dt)?;
    if !(cfg.late_window >= 0.0) {
        return Err(Error::Config("late window must be non-negative".into()));
    }
    let starts = boundary_starts(cfg.starts_per_side);
    let equilibria = grid_equilibria(cfg.ne_per_axis);
    let from = cfg.horizon - cfg.late_window;
    let pairs: Vec<(usize, (f64, f64))> = (0..equilibria.len())
        .flat_map(|e| starts.iter().map(move |&s| (e, s)))
        .collect();
    let spreads: Vec<(usize, f64)> = pairs
        .par_iter()
        .map(|&(e, (p0, q0))| {
            let (ps, qs) = equilibria[e];
            let field = Field2x2::wpl(GradientConstants::with_interior_ne(ps, qs, cfg.scale));
            let integrator = Integrator {
                field: &field,
                dt: cfg.dt,
                clamp: false,
            };
            let mut worst: f64 = 0.0;
            integrator.run(PhasePoint::new(0.0, p0, q0), cfg.horizon, |pt, _| {
                if pt.t >= from - 1e-12 {
                    worst = worst.max(pt.distance(ps, qs));
                }
                ControlFlow::Continue(())
            });
            (e, worst)
        })
        .collect();
    let mut cases: Vec<NeDispersion> = equilibria
        .iter()
        .map(|&ne| NeDispersion {
            ne,
            max_late_distance: 0.0,
        })
        .collect();
    for (e, d) in spreads {
        cases[e].max_late_distance = cases[e].max_late_distance.max(d);
    }
    Ok(GridSummary {
        starts: starts.len(),
        cases,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Portrait {
    pub algorithm: String,
    pub points: Vec<PhasePoint>,
}

/// IGA, IGA-WoLF and WPL from the same start. IGA and IGA-WoLF are clipped
/// to the unit square; IGA-WoLF uses `ne` (default: the interior
/// equilibrium) as its reference.
pub fn compare_portraits(
    u: GradientConstants,
    ne: Option<(f64, f64)>,
    start: (f64, f64),
    horizon: f64,
    dt: f64,
    rates: (f64, f64),
) -> Result<Vec<Portrait>> {
    let ne = ne
        .or_else(|| u.interior_ne())
        .ok_or_else(|| Error::Domain("no reference equilibrium for IGA-WoLF".into()))?;
    let start = PhasePoint::new(0.0, start.0, start.1);
    field_eval(&Field2x2::iga(u), start.p, start.q)?;
    let iga = integrate_constrained(&Field2x2::iga(u), start, horizon, dt)?;
    let wolf = integrate_constrained(
        &Field2x2::iga_wolf(u, ne, rates.0, rates.1)?,
        start,
        horizon,
        dt,
    )?;
    let wpl = integrate(&Field2x2::wpl(u), start, horizon, dt)?;
    Ok(vec![
        Portrait {
            algorithm: "iga".into(),
            points: iga,
        },
        Portrait {
            algorithm: "iga-wolf".into(),
            points: wolf,
        },
        Portrait {
            algorithm: "wpl".into(),
            points: wpl,
        },
    ])
}
