//! Spiral regions `𝒞_A(v₁, v₂)` and the region `𝒞` bounded by the periodic
//! orbit.
//!
//! `𝒞_A(v₁, v₂)` is cut out by the line through `v₁, v₂` and the half-turn
//! spiral `τ ↦ e^{τA}(v₁ − v₂) + v₂`, `τ ∈ [0, π/μ]`. Algebraically it is
//!
//! ```text
//! ⟨v − v₂, θ(v₁ − v₂)⟩ ≥ 0   and   ⟨v − φ_A(τ), θ A e^{τA}(v₁ − v₂)⟩ ≥ 0  ∀τ
//! ```
//!
//! evaluated in the canonical frame. Margins reported here are those
//! inequalities normalized to signed distances, so a margin is a length.
//!
//! Each half-turn region is convex, and so is `𝒞` (its boundary is C¹ at
//! `P±` and curves the same way everywhere). Membership in `𝒞` is therefore
//! the intersection of the tangent half-planes of both arcs.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::controlset::{periodic_orbit, point_segment_distance, BoundaryOrbit, DEFAULT_SAMPLES_PER_ARC};
use crate::error::{Error, Result};
use crate::planar::{line_coordinate, theta, CanonicalForm, Vec2};
use crate::system::LinearControlSystem;

pub use crate::planar::angle_between;

pub const DEFAULT_TAU_GRID: usize = 512;
/// Boundary band, relative to the region's scale.
pub const BOUNDARY_BAND: f64 = 1e-6;

const GOLDEN_ITERATIONS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Membership {
    Interior,
    Boundary,
    Exterior,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MembershipVerdict {
    pub membership: Membership,
    /// Smallest normalized constraint value; positive inside.
    pub margin: f64,
}

impl MembershipVerdict {
    pub fn from_margin(margin: f64, tol: f64) -> Self {
        let membership = if margin > tol {
            Membership::Interior
        } else if margin < -tol {
            Membership::Exterior
        } else {
            Membership::Boundary
        };
        Self { membership, margin }
    }

    pub fn is_exterior(&self) -> bool {
        self.membership == Membership::Exterior
    }
}

/// The region `𝒞_A(v₁, v₂)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpiralRegion {
    pub v1: Vec2,
    pub v2: Vec2,
    pub canonical: CanonicalForm,
    pub tau_grid: usize,
    /// `v₁ − v₂` in the canonical frame.
    offset: Vec2,
    /// Unit inward normal of the spiral at `τ = 0` (canonical frame).
    normal0: Vec2,
    /// `⟨v₁ − v₂, −n₀⟩`, the offset of the tangent line at `τ = 0`.
    support0: f64,
    cos_table: Vec<f64>,
    sin_table: Vec<f64>,
    decay_table: Vec<f64>,
}

impl SpiralRegion {
    pub fn new(canonical: CanonicalForm, v1: Vec2, v2: Vec2, tau_grid: usize) -> Result<Self> {
        if tau_grid < 16 {
            return Err(Error::InvalidParameter(format!(
                "tau grid must have at least 16 nodes (got {tau_grid})"
            )));
        }
        let offset = canonical.to_canonical(&(v1 - v2));
        if offset.norm() == 0.0 {
            return Err(Error::DegenerateSpiral);
        }
        let (lambda, mu) = (canonical.lambda, canonical.mu);
        let tangent0 = canonical.matrix() * offset;
        let normal0 = theta(&tangent0) / tangent0.norm();
        let support0 = mu * offset.norm() / lambda.hypot(mu);
        let half = canonical.half_period();
        let mut cos_table = Vec::with_capacity(tau_grid + 1);
        let mut sin_table = Vec::with_capacity(tau_grid + 1);
        let mut decay_table = Vec::with_capacity(tau_grid + 1);
        for k in 0..=tau_grid {
            let tau = half * k as f64 / tau_grid as f64;
            let (s, c) = (mu * tau).sin_cos();
            cos_table.push(c);
            sin_table.push(s);
            decay_table.push((lambda * tau).exp() * support0);
        }
        Ok(Self {
            v1,
            v2,
            canonical,
            tau_grid,
            offset,
            normal0,
            support0,
            cos_table,
            sin_table,
            decay_table,
        })
    }

    /// `|v₁ − v₂|` in the canonical frame.
    pub fn scale(&self) -> f64 {
        self.offset.norm()
    }

    pub fn default_tolerance(&self) -> f64 {
        BOUNDARY_BAND * self.scale()
    }

    /// Point `φ_A(τ, v₁, v₂)` of the bounding spiral.
    pub fn spiral_point(&self, tau: f64) -> Vec2 {
        self.canonical.spiral(tau, &self.v1, &self.v2)
    }

    /// Canonical coordinates of `v` relative to `v₂`.
    fn local(&self, v: &Vec2) -> Vec2 {
        self.canonical.to_canonical(&(v - self.v2))
    }

    /// Signed distance to the chord line; nonnegative on the spiral's side.
    pub fn line_margin(&self, v: &Vec2) -> f64 {
        let z = self.local(v);
        z.dot(&theta(&self.offset)) / self.offset.norm()
    }

    fn tangent_value(&self, z: &Vec2, tau: f64) -> f64 {
        let (s, c) = (self.canonical.mu * tau).sin_cos();
        let a = z.dot(&self.normal0);
        let b = z.dot(&theta(&self.normal0));
        c * a + s * b + (self.canonical.lambda * tau).exp() * self.support0
    }

    /// Minimum over `τ ∈ [0, π/μ]` of the signed distance to the tangent line
    /// at `φ_A(τ)`, with the minimizing `τ`.
    pub fn tangent_margin(&self, v: &Vec2) -> (f64, f64) {
        let z = self.local(v);
        self.tangent_margin_local(&z)
    }

    fn tangent_margin_local(&self, z: &Vec2) -> (f64, f64) {
        let a = z.dot(&self.normal0);
        let b = z.dot(&theta(&self.normal0));
        let mut best = f64::INFINITY;
        let mut best_k = 0;
        for k in 0..=self.tau_grid {
            let f = self.cos_table[k] * a + self.sin_table[k] * b + self.decay_table[k];
            if f < best {
                best = f;
                best_k = k;
            }
        }
        let half = self.canonical.half_period();
        let h = half / self.tau_grid as f64;
        let lo = (best_k as f64 - 1.0).max(0.0) * h;
        let hi = ((best_k + 1) as f64 * h).min(half);
        let (tau, value) = golden_minimize(|t| self.tangent_value(z, t), lo, hi);
        if value < best {
            (value, tau)
        } else {
            (best, best_k as f64 * h)
        }
    }

    /// Smallest constraint value over the line and the whole `τ` family.
    pub fn margin(&self, v: &Vec2) -> f64 {
        self.line_margin(v).min(self.tangent_margin(v).0)
    }

    pub fn contains_with(&self, v: &Vec2, tol: f64) -> MembershipVerdict {
        MembershipVerdict::from_margin(self.margin(v), tol)
    }
}

/// Membership of `v` in `𝒞_A(v₁, v₂)` with the default boundary band.
pub fn region_contains(region: &SpiralRegion, v: &Vec2) -> MembershipVerdict {
    region.contains_with(v, region.default_tolerance())
}

/// Golden-section search for the minimum of a unimodal function on `[lo, hi]`.
fn golden_minimize(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..GOLDEN_ITERATIONS {
        if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
            break;
        }
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 < f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// `g(s, τ) = ⟨φ_A(s, w₁, w₂) − e^{τA}v₁, θ A e^{τA} v₁⟩` in canonical
/// coordinates with `v₂` translated to the origin.
///
/// The domain is `[0, (π − σ)/μ] × [0, π/μ]`, `σ` the angle between `v₁` and
/// `w₁ − w₂`; `w₂` must lie on the segment `[0, v₁]`.
pub fn g_value(cf: &CanonicalForm, s: f64, tau: f64, w1: &Vec2, w2: &Vec2, v1: &Vec2) -> Result<f64> {
    let (s_max, tau_max) = g_domain(cf, w1, w2, v1)?;
    let slack = 1e-12 * tau_max;
    if s < -slack || s > s_max + slack || tau < -slack || tau > tau_max + slack {
        return Err(Error::OutOfDomain { s, tau, s_max, tau_max });
    }
    Ok(g_unchecked(cf, s, tau, w1, w2, v1))
}

fn g_unchecked(cf: &CanonicalForm, s: f64, tau: f64, w1: &Vec2, w2: &Vec2, v1: &Vec2) -> f64 {
    let c = cf.matrix();
    let moved = cf.canonical_exp(s) * (w1 - w2) + w2;
    let base = cf.canonical_exp(tau) * v1;
    (moved - base).dot(&theta(&(c * base)))
}

/// `(s_max, τ_max)` of the domain of `g`, after checking its preconditions.
pub fn g_domain(cf: &CanonicalForm, w1: &Vec2, w2: &Vec2, v1: &Vec2) -> Result<(f64, f64)> {
    let len = v1.norm();
    if len == 0.0 {
        return Err(Error::ZeroVector);
    }
    let along = w2.dot(v1) / len;
    let off = (w2 - v1 * (along / len)).norm();
    if off > 1e-9 * (1.0 + len) || along < -1e-12 * len || along > len * (1.0 + 1e-12) {
        return Err(Error::PreconditionViolated("w2 must lie on the segment [0, v1]".into()));
    }
    let sigma = angle_between(v1, &(w1 - w2))?;
    Ok(((PI - sigma) / cf.mu, PI / cf.mu))
}

/// Minimum of `g` over an `n × n` grid of its domain (endpoints included).
pub fn g_grid_minimum(cf: &CanonicalForm, w1: &Vec2, w2: &Vec2, v1: &Vec2, n: usize) -> Result<f64> {
    let (s_max, tau_max) = g_domain(cf, w1, w2, v1)?;
    let steps = n.max(2) - 1;
    let mut best = f64::INFINITY;
    for i in 0..=steps {
        let s = s_max * i as f64 / steps as f64;
        for j in 0..=steps {
            let tau = tau_max * j as f64 / steps as f64;
            best = best.min(g_unchecked(cf, s, tau, w1, w2, v1));
        }
    }
    Ok(best)
}

/// Outcome of checking that `φ_A(s, w₁, w₂)` stays in a spiral region.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvarianceReport {
    /// Angle between `v₁ − v₂` and `w₁ − w₂` (canonical frame).
    pub sigma: f64,
    pub s_max: f64,
    pub worst_margin: f64,
    pub worst_s: f64,
    /// `φ_A((π − σ)/μ, w₁, w₂)`.
    pub endpoint: Vec2,
    /// Coordinate of the endpoint along `v₁ − v₂` from `v₂` (canonical frame).
    pub endpoint_coordinate: f64,
    pub endpoint_line_residual: f64,
    /// Coordinates of `φ_A(π/μ, v₁, v₂)` and `v₁` on the same axis.
    pub segment: (f64, f64),
    pub endpoint_on_segment: bool,
}

/// Samples `φ_A(s, w₁, w₂)` for `s ∈ [0, (π − σ)/μ]` and reports the worst
/// membership margin in `region`.
pub fn verify_invariance(region: &SpiralRegion, w1: &Vec2, w2: &Vec2, s_samples: usize) -> Result<InvarianceReport> {
    let cf = &region.canonical;
    if !(cf.lambda < 0.0) {
        return Err(Error::PreconditionViolated("invariance requires λ < 0".into()));
    }
    if s_samples < 2 {
        return Err(Error::InvalidParameter("need at least two s samples".into()));
    }
    let scale = region.scale();
    let tol = region.default_tolerance();
    let d = region.offset;
    let unit = d / scale;
    let w2c = region.local(w2);
    let along = w2c.dot(&unit);
    if (w2c - unit * along).norm() > 1e-9 * scale || along < -tol || along > scale + tol {
        return Err(Error::PreconditionViolated("w2 must lie on the segment [v1, v2]".into()));
    }
    let w1c = region.local(w1);
    let arm = w1c - w2c;
    if arm.norm() < 1e-12 * scale {
        return Err(Error::PreconditionViolated("w1 coincides with w2".into()));
    }
    let inside = region.margin(w1);
    if inside < -tol {
        return Err(Error::PreconditionViolated(format!(
            "w1 lies outside the region (margin {inside:e})"
        )));
    }

    let sigma = angle_between(&d, &arm)?;
    let s_max = (PI - sigma) / cf.mu;
    let mut worst_margin = f64::INFINITY;
    let mut worst_s = 0.0;
    for k in 0..s_samples {
        let s = s_max * k as f64 / (s_samples - 1) as f64;
        let m = region.margin(&cf.spiral(s, w1, w2));
        if m < worst_margin {
            worst_margin = m;
            worst_s = s;
        }
    }

    let endpoint = cf.spiral(s_max, w1, w2);
    let ec = region.local(&endpoint);
    let endpoint_coordinate = ec.dot(&unit);
    let endpoint_line_residual = (ec - unit * endpoint_coordinate).norm();
    let segment = (-cf.half_turn_factor() * scale, scale);
    let endpoint_on_segment = endpoint_line_residual <= 1e-9 * (1.0 + scale)
        && endpoint_coordinate >= segment.0 - tol
        && endpoint_coordinate <= segment.1 + tol;

    Ok(InvarianceReport {
        sigma,
        s_max,
        worst_margin,
        worst_s,
        endpoint,
        endpoint_coordinate,
        endpoint_line_residual,
        segment,
        endpoint_on_segment,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionOptions {
    pub tau_grid: usize,
    pub samples_per_arc: usize,
}

impl Default for RegionOptions {
    fn default() -> Self {
        Self {
            tau_grid: DEFAULT_TAU_GRID,
            samples_per_arc: DEFAULT_SAMPLES_PER_ARC,
        }
    }
}

/// The closed region `𝒞` bounded by the periodic orbit.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionC {
    pub p_plus: Vec2,
    pub p_minus: Vec2,
    /// `𝒞_A(P⁺, v(u⁻))` and `𝒞_A(P⁻, v(u⁺))` of the contracting system.
    pub halves: [SpiralRegion; 2],
    pub orbit: BoundaryOrbit,
    /// Closed polyline sampling the orbit; first point equals last.
    pub boundary: Vec<Vec2>,
    boundary_canonical: Vec<Vec2>,
    /// Canonical form of the contracting system (defines the metric).
    pub canonical: CanonicalForm,
    pub v_lower: Vec2,
    pub v_upper: Vec2,
    /// Direction `−A⁻¹η` of the equilibrium line.
    pub direction: Vec2,
}

pub fn build_region_c(sys: &LinearControlSystem) -> Result<RegionC> {
    build_region_c_with(sys, RegionOptions::default())
}

pub fn build_region_c_with(sys: &LinearControlSystem, options: RegionOptions) -> Result<RegionC> {
    let orbit = periodic_orbit(sys, options.samples_per_arc)?;
    let (work, _) = sys.contracting();
    let cf = *work.canonical();
    let v_lower = work.equilibrium(work.lower());
    let v_upper = work.equilibrium(work.upper());
    let halves = [
        SpiralRegion::new(cf, orbit.p_plus, v_lower, options.tau_grid)?,
        SpiralRegion::new(cf, orbit.p_minus, v_upper, options.tau_grid)?,
    ];
    let boundary = orbit.closed_polyline();
    let boundary_canonical = boundary.iter().map(|p| cf.to_canonical(p)).collect();
    Ok(RegionC {
        p_plus: orbit.p_plus,
        p_minus: orbit.p_minus,
        halves,
        boundary,
        boundary_canonical,
        canonical: cf,
        v_lower,
        v_upper,
        direction: work.equilibrium_direction(),
        orbit,
    })
}

impl RegionC {
    /// Canonical length of the chord `[P⁻, P⁺]`.
    pub fn scale(&self) -> f64 {
        self.canonical.norm(&(self.p_plus - self.p_minus))
    }

    pub fn default_tolerance(&self) -> f64 {
        BOUNDARY_BAND * self.scale()
    }

    /// Signed distance to the boundary orbit: exact inside, a lower bound on
    /// the distance outside.
    pub fn margin(&self, v: &Vec2) -> f64 {
        self.halves[0].tangent_margin(v).0.min(self.halves[1].tangent_margin(v).0)
    }

    pub fn contains_with(&self, v: &Vec2, tol: f64) -> MembershipVerdict {
        MembershipVerdict::from_margin(self.margin(v), tol)
    }

    pub fn contains(&self, v: &Vec2) -> MembershipVerdict {
        self.contains_with(v, self.default_tolerance())
    }

    /// Literal union of the two half-region verdicts. Points on the shared
    /// chord come out as `Boundary` here even when interior to `𝒞`.
    pub fn contains_union(&self, v: &Vec2, tol: f64) -> MembershipVerdict {
        let a = self.halves[0].margin(v);
        let b = self.halves[1].margin(v);
        MembershipVerdict::from_margin(a.max(b), tol)
    }

    /// Distance to `𝒞` in the canonical frame: zero unless exterior,
    /// otherwise the distance to the sampled boundary polyline.
    pub fn distance(&self, v: &Vec2) -> f64 {
        if !self.contains(v).is_exterior() {
            return 0.0;
        }
        self.distance_to_boundary(v)
    }

    /// Canonical distance to the sampled boundary polyline.
    pub fn distance_to_boundary(&self, v: &Vec2) -> f64 {
        let z = self.canonical.to_canonical(v);
        self.boundary_canonical
            .windows(2)
            .map(|w| point_segment_distance(&z, &w[0], &w[1]))
            .fold(f64::INFINITY, f64::min)
    }

    /// Upper bound on the gap between the polyline and the true orbit.
    pub fn resolution(&self) -> f64 {
        self.orbit.resolution
    }

    /// Axis-aligned bounding box `(min, max)` of the sampled boundary.
    pub fn bounding_box(&self) -> (Vec2, Vec2) {
        let mut lo = Vec2::repeat(f64::INFINITY);
        let mut hi = Vec2::repeat(f64::NEG_INFINITY);
        for p in &self.boundary {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        (lo, hi)
    }

    /// Signed coordinate along `−A⁻¹η`.
    pub fn line_coordinate(&self, v: &Vec2) -> Result<f64> {
        line_coordinate(v, &self.direction)
    }
}

/// Membership of `v` in `𝒞` with boundary band `tol`.
pub fn contains_c(region: &RegionC, v: &Vec2, tol: f64) -> MembershipVerdict {
    region.contains_with(v, tol)
}

pub fn distance_to_c(region: &RegionC, v: &Vec2) -> f64 {
    region.distance(v)
}
