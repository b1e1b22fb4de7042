//! Alternating half-turn iterates, their limits `P±`, the periodic orbit
//! through them, and the control sets it delimits.
//!
//! Everything for `tr A > 0` is computed on the time-reversed system, whose
//! orbits coincide with the original ones as sets. `P⁺` always denotes the
//! endpoint with the larger coordinate along `−A⁻¹η`, so on that line
//! `P⁻ < v(u⁻) < v(u⁺) < P⁺`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::hausdorff;
use crate::planar::{Mat2, Vec2};
use crate::system::LinearControlSystem;

/// `|tr A| ≤ TRACE_ZERO_BAND·‖A‖` counts as trace zero.
pub const TRACE_ZERO_BAND: f64 = 1e-10;

/// Default number of samples per arc of the periodic orbit.
pub const DEFAULT_SAMPLES_PER_ARC: usize = 256;

pub fn is_trace_zero(sys: &LinearControlSystem) -> bool {
    sys.trace().abs() <= TRACE_ZERO_BAND * sys.drift().norm()
}

fn contracting_nonzero_trace(sys: &LinearControlSystem) -> Result<(LinearControlSystem, bool)> {
    if is_trace_zero(sys) {
        return Err(Error::TraceZero);
    }
    Ok(sys.contracting())
}

/// `P₀ = v(u⁺)`, `P_{2n+1} = φ(π/μ, P_{2n}, u⁻)`, `P_{2n+2} = φ(π/μ, P_{2n+1}, u⁺)`.
///
/// Returns `[P₀, …, P_n]`, computed on the contracting system.
pub fn p_iterates(sys: &LinearControlSystem, n: usize) -> Result<Vec<Vec2>> {
    let (work, _) = contracting_nonzero_trace(sys)?;
    let half = work.half_period();
    let mut out = Vec::with_capacity(n + 1);
    let mut p = work.equilibrium(work.upper());
    out.push(p);
    for k in 1..=n {
        let u = if k % 2 == 1 { work.lower() } else { work.upper() };
        p = work.flow(half, &p, u);
        out.push(p);
    }
    Ok(out)
}

/// Closed form of the `m`-th iterate as geometric sums in `e = e^{πλ/μ}`:
///
/// ```text
/// P_{2n}   = −e·S(2n−1)·v(u⁻) + S(2n)·v(u⁺)
/// P_{2n+1} =    S(2n+1)·v(u⁻) − e·S(2n)·v(u⁺),     S(k) = Σ_{j=0}^{k} e^j
/// ```
pub fn p_iterate_closed_form(sys: &LinearControlSystem, m: usize) -> Result<Vec2> {
    let (work, _) = contracting_nonzero_trace(sys)?;
    let e = work.canonical().half_turn_factor();
    let geometric = |k: isize| -> f64 { (0..=k).map(|j| e.powi(j as i32)).sum() };
    let lo = work.equilibrium(work.lower());
    let hi = work.equilibrium(work.upper());
    let m = m as isize;
    Ok(if m % 2 == 0 {
        -e * geometric(m - 1) * lo + geometric(m) * hi
    } else {
        geometric(m) * lo - e * geometric(m - 1) * hi
    })
}

/// Closed-form limits `(P⁺, P⁻)` of the even and odd iterates.
pub fn fixed_points(sys: &LinearControlSystem) -> Result<(Vec2, Vec2)> {
    let (work, _) = contracting_nonzero_trace(sys)?;
    let e = work.canonical().half_turn_factor();
    let (lo, hi) = (work.lower(), work.upper());
    let w = work.inv_drift_control();
    let p_plus = ((-hi + e * lo) / (1.0 - e)) * w;
    let p_minus = ((-lo + e * hi) / (1.0 - e)) * w;
    Ok((p_plus, p_minus))
}

/// The periodic orbit through `P±`, sampled arc by arc.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryOrbit {
    pub p_plus: Vec2,
    pub p_minus: Vec2,
    pub half_period: f64,
    /// `φ(s, P⁺, u⁻)`, `s ∈ [0, π/μ]`: from `P⁺` to `P⁻`.
    pub arc_minus: Vec<Vec2>,
    /// `φ(s, P⁻, u⁺)`, `s ∈ [0, π/μ]`: from `P⁻` back to `P⁺`.
    pub arc_plus: Vec<Vec2>,
    /// Arcs were traced on the time-reversed system (`tr A > 0`).
    pub reversed: bool,
    /// Largest distance, in the canonical frame, between an arc and the chord
    /// joining consecutive samples.
    pub resolution: f64,
    pub lower: f64,
    pub upper: f64,
}

impl BoundaryOrbit {
    pub fn samples_per_arc(&self) -> usize {
        self.arc_minus.len() - 1
    }

    /// `arc_minus` followed by `arc_plus`; first point equals last.
    pub fn closed_polyline(&self) -> Vec<Vec2> {
        let mut out = self.arc_minus.clone();
        out.extend_from_slice(&self.arc_plus[1..]);
        out
    }

    /// `(t, point, u)` rows along the closed polyline, where `u` is the
    /// control that traces the arc containing the point (the start row
    /// carries `u⁻`).
    pub fn timed_samples(&self) -> Vec<(f64, Vec2, f64)> {
        let n = self.samples_per_arc();
        let dt = self.half_period / n as f64;
        let mut rows = Vec::with_capacity(2 * n + 1);
        for (k, p) in self.arc_minus.iter().enumerate() {
            rows.push((k as f64 * dt, *p, self.lower));
        }
        for (k, p) in self.arc_plus.iter().enumerate().skip(1) {
            rows.push((self.half_period + k as f64 * dt, *p, self.upper));
        }
        rows
    }
}

pub fn periodic_orbit(sys: &LinearControlSystem, samples_per_arc: usize) -> Result<BoundaryOrbit> {
    if samples_per_arc < 16 {
        return Err(Error::InvalidParameter(format!(
            "samples per arc must be at least 16 (got {samples_per_arc})"
        )));
    }
    let (work, reversed) = contracting_nonzero_trace(sys)?;
    let (p_plus, p_minus) = fixed_points(sys)?;
    let half = work.half_period();
    let cf = work.canonical();
    let trace_arc = |start: &Vec2, u: f64| -> (Vec<Vec2>, f64) {
        let mut pts = Vec::with_capacity(samples_per_arc + 1);
        let mut sag: f64 = 0.0;
        for k in 0..=samples_per_arc {
            let s = half * k as f64 / samples_per_arc as f64;
            pts.push(work.flow(s, start, u));
        }
        for k in 0..samples_per_arc {
            let s_mid = half * (k as f64 + 0.5) / samples_per_arc as f64;
            let mid = cf.to_canonical(&work.flow(s_mid, start, u));
            let a = cf.to_canonical(&pts[k]);
            let b = cf.to_canonical(&pts[k + 1]);
            sag = sag.max(point_segment_distance(&mid, &a, &b));
        }
        (pts, sag)
    };
    let (mut arc_minus, sag_minus) = trace_arc(&p_plus, work.lower());
    let (mut arc_plus, sag_plus) = trace_arc(&p_minus, work.upper());
    // Pin the arc ends to the closed-form points so the polyline closes exactly.
    arc_minus[0] = p_plus;
    arc_minus[samples_per_arc] = p_minus;
    arc_plus[0] = p_minus;
    arc_plus[samples_per_arc] = p_plus;
    Ok(BoundaryOrbit {
        p_plus,
        p_minus,
        half_period: half,
        arc_minus,
        arc_plus,
        reversed,
        resolution: sag_minus.max(sag_plus),
        lower: work.lower(),
        upper: work.upper(),
    })
}

pub(crate) fn point_segment_distance(p: &Vec2, a: &Vec2, b: &Vec2) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    /// `tr A = 0`: the whole plane is the control set.
    ControllableTraceZero,
    /// `tr A < 0`: the closed region bounded by the periodic orbit.
    ClosedControlSet,
    /// `tr A > 0`: the open region, plus the periodic orbit itself.
    OpenControlSetWithBoundaryOrbit,
}

impl Classification {
    pub fn label(self) -> &'static str {
        match self {
            Classification::ControllableTraceZero => "controllable",
            Classification::ClosedControlSet => "closed",
            Classification::OpenControlSetWithBoundaryOrbit => "open",
        }
    }
}

pub fn classify(sys: &LinearControlSystem) -> Classification {
    if is_trace_zero(sys) {
        Classification::ControllableTraceZero
    } else if sys.trace() < 0.0 {
        Classification::ClosedControlSet
    } else {
        Classification::OpenControlSetWithBoundaryOrbit
    }
}

/// One control set of the system.
#[derive(Debug, Clone, PartialEq)]
pub enum ControlSetDescriptor {
    WholePlane,
    /// Closure of the region bounded by the orbit.
    ClosedRegion(BoundaryOrbit),
    /// Interior of the region bounded by the orbit.
    OpenRegion(BoundaryOrbit),
    /// The periodic orbit as a set.
    PeriodicOrbit(BoundaryOrbit),
}

impl ControlSetDescriptor {
    pub fn label(&self) -> &'static str {
        match self {
            ControlSetDescriptor::WholePlane => "whole_plane",
            ControlSetDescriptor::ClosedRegion(_) => "closed_region",
            ControlSetDescriptor::OpenRegion(_) => "open_region",
            ControlSetDescriptor::PeriodicOrbit(_) => "periodic_orbit",
        }
    }

    pub fn boundary(&self) -> Option<&BoundaryOrbit> {
        match self {
            ControlSetDescriptor::WholePlane => None,
            ControlSetDescriptor::ClosedRegion(o)
            | ControlSetDescriptor::OpenRegion(o)
            | ControlSetDescriptor::PeriodicOrbit(o) => Some(o),
        }
    }

    pub fn has_interior(&self) -> bool {
        !matches!(self, ControlSetDescriptor::PeriodicOrbit(_))
    }
}

/// Every control set, in the order: region first, then the orbit (if any).
pub fn control_sets(sys: &LinearControlSystem, samples_per_arc: usize) -> Result<Vec<ControlSetDescriptor>> {
    Ok(match classify(sys) {
        Classification::ControllableTraceZero => vec![ControlSetDescriptor::WholePlane],
        Classification::ClosedControlSet => {
            vec![ControlSetDescriptor::ClosedRegion(periodic_orbit(sys, samples_per_arc)?)]
        }
        Classification::OpenControlSetWithBoundaryOrbit => {
            let orbit = periodic_orbit(sys, samples_per_arc)?;
            vec![
                ControlSetDescriptor::OpenRegion(orbit.clone()),
                ControlSetDescriptor::PeriodicOrbit(orbit),
            ]
        }
    })
}

/// Fixed points and boundary of the sub-system with range `[alpha, rho]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub alpha: f64,
    pub rho: f64,
    pub p_plus: Vec2,
    pub p_minus: Vec2,
    /// Coordinate of `P⁺` along `−A⁻¹η`.
    pub p_plus_coordinate: f64,
    pub boundary: Vec<Vec2>,
    /// Hausdorff distance to the previous grid point's boundary.
    pub hausdorff_prev: Option<f64>,
}

/// Evaluates the family `Ω = [α, ρ]`, `α < ν < ρ`, over `grid` in order.
pub fn sweep_family(
    drift: &Mat2,
    control: &Vec2,
    nu: f64,
    grid: &[(f64, f64)],
    samples_per_arc: usize,
) -> Result<Vec<SweepPoint>> {
    let mut out: Vec<SweepPoint> = Vec::with_capacity(grid.len());
    for &(alpha, rho) in grid {
        if !(alpha < nu && nu < rho) {
            return Err(Error::InvalidParameter(format!(
                "sweep point ({alpha}, {rho}) must satisfy alpha < {nu} < rho"
            )));
        }
        let sys = LinearControlSystem::new(*drift, *control, alpha, rho)?;
        if !(sys.trace() < 0.0) || is_trace_zero(&sys) {
            return Err(Error::PreconditionViolated("range sweep needs tr A < 0".into()));
        }
        let orbit = periodic_orbit(&sys, samples_per_arc)?;
        let boundary = orbit.closed_polyline();
        let hausdorff_prev = match out.last() {
            Some(prev) => Some(hausdorff(&prev.boundary, &boundary)?),
            None => None,
        };
        let p_plus_coordinate = orbit.p_plus.dot(&sys.equilibrium_direction().normalize());
        out.push(SweepPoint {
            alpha,
            rho,
            p_plus: orbit.p_plus,
            p_minus: orbit.p_minus,
            p_plus_coordinate,
            boundary,
            hausdorff_prev,
        });
    }
    Ok(out)
}
