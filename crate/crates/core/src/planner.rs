//! Trajectory synthesis with piecewise-constant controls.
//!
//! * Trace zero: every constant control rotates the canonical frame about its
//!   equilibrium, so states hop between circles centred on the equilibrium
//!   line until they land on `v(Ω)`, then one last half-turn reaches `v(u₀)`.
//! * Nonzero trace: targets inside `𝒞` are reached from `v(u⁻)`, either
//!   approximately through the alternating half-turn iterates (`tr A < 0`)
//!   or exactly through a spiral intersection (`tr A > 0`).

use std::f64::consts::PI;

use serde::Serialize;

use crate::controlset::is_trace_zero;
use crate::error::{Error, Result};
use crate::geometry::{build_region_c, Membership, RegionC};
use crate::planar::{ccw_angle, CanonicalForm, Vec2};
use crate::system::{endpoint, ControlSchedule, LinearControlSystem};

/// Default search window, in half-periods, for [`spiral_intersection`].
pub const DEFAULT_WINDOW_HALF_PERIODS: f64 = 8.0;
pub const MAX_WINDOW_HALF_PERIODS: f64 = 2048.0;
/// Hard upper bound on iterate pairs tried by [`reach_plan`].
pub const MAX_ITERATE_PAIRS: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanResult {
    pub start: Vec2,
    pub goal: Vec2,
    pub schedule: ControlSchedule,
    pub endpoint: Vec2,
    pub endpoint_error: f64,
    /// Number of constant-control arcs.
    pub hops: usize,
}

impl PlanResult {
    fn simulate(sys: &LinearControlSystem, start: Vec2, goal: Vec2, schedule: ControlSchedule) -> Result<Self> {
        let end = endpoint(sys, &start, &schedule)?;
        Ok(Self {
            start,
            goal,
            hops: schedule.len(),
            endpoint: end,
            endpoint_error: (end - goal).norm(),
            schedule,
        })
    }
}

/// One arc of the trace-zero construction, in the canonical frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HopArc {
    pub u: f64,
    pub dt: f64,
    /// Canonical coordinates of the arc's centre `v(u)`.
    pub centre: Vec2,
    /// Canonical distance from the arc's start to its centre.
    pub radius: f64,
}

fn check_trace_zero(sys: &LinearControlSystem, u0: f64) -> Result<()> {
    if !is_trace_zero(sys) {
        return Err(Error::TraceNotZero(sys.trace()));
    }
    if !sys.admits(u0) {
        return Err(Error::InvalidControl { u: u0, lower: sys.lower(), upper: sys.upper() });
    }
    Ok(())
}

/// Arcs taking `v` to `v(u₀)` when `tr A = 0`.
///
/// The first circle is centred at whichever of `v(u±)` is closer to `v` (ties
/// go to `u⁺`) and is followed to its intersection with the equilibrium line
/// nearer the other endpoint. From there controls alternate, each a half-turn
/// whose radius is `|v(u⁺) − v(u⁻)|` smaller than the last, until the state is
/// in `v(Ω)`. The last half-turn is centred midway between the state and
/// `v(u₀)`. Distances are canonical-frame distances.
pub fn hop_arcs(sys: &LinearControlSystem, v: &Vec2, u0: f64) -> Result<Vec<HopArc>> {
    check_trace_zero(sys, u0)?;
    let cf = sys.canonical();
    let mu = cf.mu;
    let half = cf.half_period();
    // Canonical equilibrium line: z(u) = u·e.
    let e = cf.to_canonical(&sys.equilibrium_direction());
    let ell = e.norm();
    let unit = e / ell;
    let (lo, hi) = (sys.lower(), sys.upper());
    let delta = (hi - lo) * ell;
    let z0 = cf.to_canonical(&sys.equilibrium(u0));
    let tol = 1e-12 * (1.0 + delta + z0.norm());

    let mut z = cf.to_canonical(v);
    let mut arcs = Vec::new();
    if (z - z0).norm() <= tol {
        return Ok(arcs);
    }

    // Coordinate along the line, in control units.
    let along = |p: &Vec2| p.dot(&unit) / ell;
    let off_line = |p: &Vec2| (p - unit * p.dot(&unit)).norm();
    let in_range = |u: f64| u >= lo - tol / ell && u <= hi + tol / ell;

    if off_line(&z) > tol || !in_range(along(&z)) {
        let d_hi = (z - e * hi).norm();
        let d_lo = (z - e * lo).norm();
        let (c, other) = if d_hi <= d_lo { (hi, lo) } else { (lo, hi) };
        let centre = e * c;
        let radius = (z - centre).norm();
        let target = centre + unit * (radius * (other - c).signum());
        let angle = ccw_angle(&(z - centre), &(target - centre));
        let dt = angle / mu;
        if dt > 0.0 && angle < 2.0 * PI - 1e-14 {
            arcs.push(HopArc { u: c, dt, centre, radius });
        }
        z = target;
        let mut last = c;

        while !in_range(along(&z)) {
            let c = if last == hi { lo } else { hi };
            let centre = e * c;
            let radius = (z - centre).norm();
            arcs.push(HopArc { u: c, dt: half, centre, radius });
            z = centre * 2.0 - z;
            last = c;
        }
    }

    let un = along(&z).clamp(lo, hi);
    if (z - z0).norm() > tol {
        let u_final = 0.5 * (un + u0);
        let centre = e * u_final;
        arcs.push(HopArc { u: u_final, dt: half, centre, radius: (z - centre).norm() });
    }
    Ok(arcs)
}

/// Piecewise-constant control steering `v` to `v(u₀)` when `tr A = 0`.
pub fn hop_plan_trace_zero(sys: &LinearControlSystem, v: &Vec2, u0: f64) -> Result<PlanResult> {
    let arcs = hop_arcs(sys, v, u0)?;
    let schedule = ControlSchedule::from_segments(arcs.iter().map(|a| (a.u, a.dt)))?;
    PlanResult::simulate(sys, *v, sys.equilibrium(u0), schedule)
}

/// Return path from `v(u₀)` to `v`: the complementary part of each circle,
/// in reverse order.
pub fn loop_plan_trace_zero(sys: &LinearControlSystem, v: &Vec2, u0: f64) -> Result<PlanResult> {
    let arcs = hop_arcs(sys, v, u0)?;
    let period = 2.0 * sys.half_period();
    let schedule = ControlSchedule::from_segments(arcs.iter().rev().map(|a| (a.u, period - a.dt)))?;
    PlanResult::simulate(sys, sys.equilibrium(u0), *v, schedule)
}

/// Solution of `φ(s₀, v, u⁻) = φ(−t₀, v(u⁻), u)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpiralIntersection {
    pub s0: f64,
    pub t0: f64,
    pub point: Vec2,
    pub residual: f64,
}

/// Starts with [`DEFAULT_WINDOW_HALF_PERIODS`] and widens the window fourfold
/// up to [`MAX_WINDOW_HALF_PERIODS`] while no root turns up. Slowly decaying
/// spirals need many turns before they meet.
pub fn spiral_intersection(sys: &LinearControlSystem, v: &Vec2, u: f64) -> Result<SpiralIntersection> {
    let mut window = DEFAULT_WINDOW_HALF_PERIODS;
    loop {
        match spiral_intersection_with(sys, v, u, window) {
            Err(Error::NoIntersectionFound { .. }) if window < MAX_WINDOW_HALF_PERIODS => {
                window = (window * 4.0).min(MAX_WINDOW_HALF_PERIODS);
            }
            other => return other,
        }
    }
}

/// As [`spiral_intersection`] with both `s₀` and `t₀` limited to `window`
/// half-periods. Among the roots found the one with least `s₀ + t₀` wins.
///
/// Works in the canonical frame around `c⁻ = v(u⁻)`. For each `t` the point
/// `Y(t) = φ(−t, v(u⁻), u)` lies on the forward `u⁻` spiral through `v` iff its
/// radius fixes `s(t) = ln(r(t)/r_v)/λ ≥ 0` and its angle matches
/// `a_v + μ·s(t)` modulo 2π. Crossings of the lifted angle mismatch are
/// bracketed on a uniform `t` grid, bisected, then polished by Newton steps.
pub fn spiral_intersection_with(
    sys: &LinearControlSystem,
    v: &Vec2,
    u: f64,
    window: f64,
) -> Result<SpiralIntersection> {
    if is_trace_zero(sys) || !(sys.trace() < 0.0) {
        return Err(Error::PreconditionViolated("spiral intersection requires tr A < 0".into()));
    }
    if !sys.admits(u) {
        return Err(Error::InvalidControl { u, lower: sys.lower(), upper: sys.upper() });
    }
    if !(window > 0.0 && window.is_finite()) {
        return Err(Error::InvalidParameter(format!("window {window} must be positive")));
    }
    let v_minus = sys.equilibrium(sys.lower());
    let cf = *sys.canonical();
    let scale = (sys.equilibrium(sys.upper()) - v_minus).norm();
    if (u - sys.lower()).abs() <= 1e-15 * (1.0 + u.abs()) {
        return Err(Error::PreconditionViolated("u must differ from u⁻".into()));
    }
    if (v - v_minus).norm() <= 1e-14 * (1.0 + scale) {
        return Ok(SpiralIntersection { s0: 0.0, t0: 0.0, point: v_minus, residual: 0.0 });
    }

    let (lambda, mu) = (cf.lambda, cf.mu);
    let half = cf.half_period();
    let limit = window * half;
    let cm = cf.to_canonical(&v_minus);
    let cu = cf.to_canonical(&sys.equilibrium(u));
    let zv = cf.to_canonical(v) - cm;
    let r_v = zv.norm();
    let a_v = zv.y.atan2(zv.x);
    // Y(t) − c⁻ in canonical coordinates.
    let y_rel = |t: f64| cu + cf.canonical_exp(-t) * (cm - cu) - cm;
    let s_of = |r: f64| (r / r_v).ln() / lambda;

    let steps = (window * 256.0).ceil() as usize;
    let h = limit / steps as f64;
    // Strong decay puts the first crossings at tiny t, so the uniform grid is
    // preceded by geometric nodes running up from h·1e-12.
    let mut nodes: Vec<f64> = Vec::new();
    let mut t = h * 1e-12;
    while t < h {
        nodes.push(t);
        t *= 1.05;
    }
    nodes.extend((1..=steps).map(|k| h * k as f64));
    let mut roots: Vec<(f64, f64)> = Vec::new();
    // Lifted mismatch at the previous grid node.
    let mut prev: Option<(f64, f64, f64)> = None; // (t, raw angle, lifted mismatch)
    let mut lifted_angle = 0.0;
    for t in nodes {
        let y = y_rel(t);
        let raw = y.y.atan2(y.x);
        lifted_angle = match prev {
            None => raw,
            Some((_, prev_raw, _)) => lifted_angle + wrap(raw - prev_raw),
        };
        let s = s_of(y.norm());
        let valid = s >= 0.0 && s <= limit;
        let g = lifted_angle - a_v - mu * s;
        if let Some((tp, _, gp)) = prev {
            if valid && gp.is_finite() {
                let (kp, kn) = ((gp / (2.0 * PI)).floor(), (g / (2.0 * PI)).floor());
                if kp != kn {
                    // Branch value crossed between tp and t.
                    let level = 2.0 * PI * kp.max(kn);
                    let base_angle = lifted_angle;
                    let base_raw = raw;
                    let mismatch = |tt: f64| {
                        let yy = y_rel(tt);
                        let ang = base_angle + wrap(yy.y.atan2(yy.x) - base_raw);
                        ang - a_v - mu * s_of(yy.norm()) - level
                    };
                    let (mut a, mut b) = (tp, t);
                    let mut fa = mismatch(a);
                    for _ in 0..200 {
                        let m = 0.5 * (a + b);
                        if b - a <= 1e-15 * b {
                            break;
                        }
                        let fm = mismatch(m);
                        if (fm < 0.0) == (fa < 0.0) {
                            a = m;
                            fa = fm;
                        } else {
                            b = m;
                        }
                    }
                    let tt = 0.5 * (a + b);
                    roots.push((s_of(y_rel(tt).norm()), tt));
                }
            }
        }
        prev = Some((t, raw, if valid { g } else { f64::NAN }));
    }

    let mut best: Option<SpiralIntersection> = None;
    for (s, t) in roots {
        let (s, t) = newton_polish(&cf, &zv, &(cm - cu), s, t);
        if !(s >= 0.0 && t >= 0.0 && s <= limit * (1.0 + 1e-9) && t <= limit * (1.0 + 1e-9)) {
            continue;
        }
        let x = sys.flow(s, v, sys.lower());
        let y = sys.flow(-t, &v_minus, u);
        let residual = (x - y).norm();
        if residual >= 1e-9 {
            continue;
        }
        if best.is_none_or(|b| s + t < b.s0 + b.t0) {
            best = Some(SpiralIntersection { s0: s, t0: t, point: x, residual });
        }
    }
    best.ok_or(Error::NoIntersectionFound { window: limit })
}

/// Wraps an angle difference into `(−π, π]`.
fn wrap(a: f64) -> f64 {
    let mut a = a % (2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    } else if a <= -PI {
        a += 2.0 * PI;
    }
    a
}

/// Newton iterations on `e^{sC}·zv − (c_u − c⁻) − e^{−tC}·w = 0`, where
/// `w = c⁻ − c_u`, all relative to `c⁻`.
fn newton_polish(cf: &CanonicalForm, zv: &Vec2, w: &Vec2, mut s: f64, mut t: f64) -> (f64, f64) {
    let c = cf.matrix();
    for _ in 0..8 {
        let x = cf.canonical_exp(s) * zv;
        let ey = cf.canonical_exp(-t) * w;
        let f = x - (ey - w);
        let jx = c * x;
        let jy = c * ey;
        // ∂F/∂s = C·x, ∂F/∂t = C·e^{−tC}w.
        let det = jx.x * jy.y - jx.y * jy.x;
        if det == 0.0 || !det.is_finite() {
            break;
        }
        let ds = (f.x * jy.y - f.y * jy.x) / det;
        let dt = (jx.x * f.y - jx.y * f.x) / det;
        s -= ds;
        t -= dt;
        if ds.abs() + dt.abs() < 1e-16 * (1.0 + s.abs() + t.abs()) {
            break;
        }
    }
    (s, t)
}

/// Route `v → v(u⁻)`: `[(u⁻, s₀), (u, t₀)]` from [`spiral_intersection`].
pub fn return_plan(sys: &LinearControlSystem, v: &Vec2, u: f64) -> Result<PlanResult> {
    let hit = spiral_intersection(sys, v, u)?;
    let mut schedule = ControlSchedule::new();
    if hit.s0 > 0.0 || hit.t0 > 0.0 {
        schedule.push(sys.lower(), hit.s0)?;
        schedule.push(u, hit.t0)?;
    }
    PlanResult::simulate(sys, *v, sys.equilibrium(sys.lower()), schedule)
}

/// Backward exit of `target` from `𝒞` under `u⁻`, for `tr A < 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryExit {
    /// Time `s₀` with `φ(−s₀, target, u⁻) ∈ ∂𝒞`.
    pub s0: f64,
    pub point: Vec2,
    /// Time along the `u⁺` arc from `P⁻` to `point`.
    pub arc_time: f64,
}

fn boundary_exit(sys: &LinearControlSystem, region: &RegionC, target: &Vec2) -> Result<BoundaryExit> {
    let half = sys.half_period();
    let h = half / 128.0;
    let u_lo = sys.lower();
    let margin = |s: f64| region.margin(&sys.flow(-s, target, u_lo));
    // Backward orbits grow like e^{−λs}; this cap is far beyond any exit.
    let cap = 4000.0 * h + 60.0 / -sys.lambda();
    let mut a = 0.0;
    let mut b = h;
    while margin(b) > 0.0 {
        a = b;
        b += h;
        if b > cap {
            return Err(Error::PreconditionViolated("backward orbit never leaves the region".into()));
        }
    }
    while b - a > 1e-13 * (1.0 + b) {
        let m = 0.5 * (a + b);
        if margin(m) > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    let s0 = 0.5 * (a + b);
    let point = sys.flow(-s0, target, u_lo);
    let cf = sys.canonical();
    let cu = cf.to_canonical(&sys.equilibrium(sys.upper()));
    let from = cf.to_canonical(&region.p_minus) - cu;
    let to = cf.to_canonical(&point) - cu;
    let mut angle = ccw_angle(&from, &to);
    if angle > 1.5 * PI {
        angle = 0.0;
    }
    Ok(BoundaryExit { s0, point, arc_time: angle.min(PI) / cf.mu })
}

fn reach_schedule(sys: &LinearControlSystem, pairs: usize, exit: &BoundaryExit) -> Result<ControlSchedule> {
    let half = sys.half_period();
    let mut schedule = ControlSchedule::new();
    for _ in 0..pairs {
        schedule.push(sys.upper(), half)?;
        schedule.push(sys.lower(), half)?;
    }
    if exit.arc_time > 0.0 {
        schedule.push(sys.upper(), exit.arc_time)?;
    }
    if exit.s0 > 0.0 {
        schedule.push(sys.lower(), exit.s0)?;
    }
    Ok(schedule)
}

fn interior_target(sys: &LinearControlSystem, target: &Vec2) -> Result<RegionC> {
    if is_trace_zero(sys) {
        return Err(Error::TraceZero);
    }
    let region = build_region_c(sys)?;
    let verdict = region.contains(target);
    if verdict.membership != Membership::Interior {
        return Err(Error::TargetNotInterior { margin: verdict.margin });
    }
    Ok(region)
}

/// Schedule from `v(u⁻)` to within `epsilon` of an interior `target`.
///
/// For `tr A < 0`: the backward `u⁻` orbit of `target` leaves `𝒞` through
/// the `u⁺` arc at some `b`. From `v(u⁻)`, `k` pairs of half-turns
/// `(u⁺, π/μ), (u⁻, π/μ)` approach `P⁻`, then `u⁺` follows the boundary arc
/// to `b` and `u⁻` flows forward to the target. The error shrinks by
/// `e^{2πλ/μ}` per pair; the smallest sufficient `k` is used.
///
/// For `tr A > 0` the route `[(u⁺, t₀), (u⁻, s₀)]` is exact, with `(s₀, t₀)`
/// the spiral intersection of the time-reversed system.
pub fn reach_plan(sys: &LinearControlSystem, target: &Vec2, epsilon: f64) -> Result<PlanResult> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidParameter(format!("epsilon {epsilon} must be positive")));
    }
    let start = sys.equilibrium(sys.lower());
    let region = interior_target(sys, target)?;
    if (target - start).norm() == 0.0 {
        return PlanResult::simulate(sys, start, *target, ControlSchedule::new());
    }

    if sys.trace() > 0.0 {
        let reversed = sys.time_reversed();
        let hit = spiral_intersection(&reversed, target, sys.upper())?;
        let schedule = ControlSchedule::from_segments([(sys.upper(), hit.t0), (sys.lower(), hit.s0)])?;
        let plan = PlanResult::simulate(sys, start, *target, schedule)?;
        if plan.endpoint_error > epsilon {
            return Err(Error::EpsilonTooSmall { epsilon, cap: 0 });
        }
        return Ok(plan);
    }

    let exit = boundary_exit(sys, &region, target)?;
    let cap = pair_cap(sys, &region, epsilon);
    let half = sys.half_period();
    let tail = |p: &Vec2| {
        let q = sys.flow(exit.arc_time, p, sys.upper());
        sys.flow(exit.s0, &q, sys.lower())
    };
    let mut p = start;
    for k in 0..=cap {
        if (tail(&p) - target).norm() <= epsilon {
            let schedule = reach_schedule(sys, k, &exit)?;
            let plan = PlanResult::simulate(sys, start, *target, schedule)?;
            if plan.endpoint_error <= epsilon {
                return Ok(plan);
            }
        }
        p = sys.flow(half, &sys.flow(half, &p, sys.upper()), sys.lower());
    }
    Err(Error::EpsilonTooSmall { epsilon, cap })
}

/// The `tr A < 0` construction with a fixed number of iterate pairs.
pub fn reach_plan_with_pairs(sys: &LinearControlSystem, target: &Vec2, pairs: usize) -> Result<PlanResult> {
    let region = interior_target(sys, target)?;
    if !(sys.trace() < 0.0) {
        return Err(Error::PreconditionViolated("fixed-pair construction requires tr A < 0".into()));
    }
    let exit = boundary_exit(sys, &region, target)?;
    let schedule = reach_schedule(sys, pairs, &exit)?;
    PlanResult::simulate(sys, sys.equilibrium(sys.lower()), *target, schedule)
}

/// Pairs needed for the contraction bound to reach `epsilon`, plus slack,
/// capped at [`MAX_ITERATE_PAIRS`].
fn pair_cap(sys: &LinearControlSystem, region: &RegionC, epsilon: f64) -> usize {
    let cf = sys.canonical();
    let q = cf.basis;
    let qi = cf.basis_inv;
    let cond = q.norm() * qi.norm();
    let start = sys.equilibrium(sys.lower());
    let initial = cond * (start - region.p_minus).norm().max(f64::MIN_POSITIVE);
    let per_pair = 2.0 * PI * cf.lambda / cf.mu;
    let needed = ((epsilon / initial).ln() / per_pair).max(0.0);
    ((needed.ceil() as usize) + 16).min(MAX_ITERATE_PAIRS)
}
