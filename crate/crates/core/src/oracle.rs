//! Brute-force cross-checks: grid reachability, Hausdorff distance and the
//! distance-contraction inequalities.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{build_region_c, RegionC};
use crate::planar::Vec2;
use crate::system::{Direction, LinearControlSystem};

pub const DEFAULT_REFINEMENT: usize = 4;

/// Point of a cell from which the next flow steps start.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CellAnchor {
    /// The landed state closest to the cell centre (the source itself for
    /// the source cell). Every anchor is an exactly reachable state.
    #[default]
    Landing,
    /// The geometric cell centre. Snapping drifts outward over many steps.
    Centre,
}

/// Discretization of the plane used by [`brute_reach`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSpec {
    pub lower: Vec2,
    pub upper: Vec2,
    pub dx: f64,
    pub dt: f64,
    pub controls: Vec<f64>,
    pub horizon: f64,
    pub anchor: CellAnchor,
    /// With landing anchors, one anchor is kept per sub-cell of side
    /// `dx / refinement`.
    pub refinement: usize,
}

impl GridSpec {
    /// Grid over `[lower, upper]` with controls `{u⁻, (u⁻+u⁺)/2, u⁺}`.
    pub fn new(sys: &LinearControlSystem, lower: Vec2, upper: Vec2, dx: f64, dt: f64, horizon: f64) -> Result<Self> {
        let range = sys.range();
        let spec = Self {
            lower,
            upper,
            dx,
            dt,
            controls: vec![range.lower, range.midpoint(), range.upper],
            horizon,
            anchor: CellAnchor::default(),
            refinement: DEFAULT_REFINEMENT,
        };
        spec.validate(sys)?;
        Ok(spec)
    }

    /// Bounds default to the bounding box of the periodic orbit, inflated
    /// three times about its centre.
    pub fn around_orbit(sys: &LinearControlSystem, dx: f64, dt: f64, horizon: f64) -> Result<Self> {
        let region = build_region_c(sys)?;
        let (lo, hi) = region.bounding_box();
        let centre = (lo + hi) * 0.5;
        let half = (hi - lo) * 1.5;
        Self::new(sys, centre - half, centre + half, dx, dt, horizon)
    }

    /// Replaces the control samples; each must lie in `Ω`.
    pub fn with_controls(mut self, sys: &LinearControlSystem, controls: Vec<f64>) -> Result<Self> {
        self.controls = controls;
        self.validate(sys)?;
        Ok(self)
    }

    pub fn with_anchor(mut self, anchor: CellAnchor) -> Self {
        self.anchor = anchor;
        self
    }

    pub fn with_refinement(mut self, refinement: usize) -> Self {
        self.refinement = refinement;
        self
    }

    pub fn validate(&self, sys: &LinearControlSystem) -> Result<()> {
        let finite = [self.lower.x, self.lower.y, self.upper.x, self.upper.y, self.dx, self.dt, self.horizon];
        if finite.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("grid spec"));
        }
        if !(self.dx > 0.0) || !(self.dt > 0.0) {
            return Err(Error::InvalidParameter("dx and dt must be positive".into()));
        }
        if self.horizon < self.dt {
            return Err(Error::InvalidParameter("horizon must be at least dt".into()));
        }
        if !(self.lower.x < self.upper.x && self.lower.y < self.upper.y) {
            return Err(Error::InvalidParameter("grid bounds are empty".into()));
        }
        if self.refinement == 0 {
            return Err(Error::InvalidParameter("refinement must be at least 1".into()));
        }
        if self.controls.is_empty() {
            return Err(Error::InvalidParameter("at least one control sample is required".into()));
        }
        for &u in &self.controls {
            if !sys.admits(u) {
                return Err(Error::InvalidControl { u, lower: sys.lower(), upper: sys.upper() });
            }
        }
        Ok(())
    }

    pub fn shape(&self) -> (usize, usize) {
        let size = self.upper - self.lower;
        ((size.x / self.dx).ceil() as usize, (size.y / self.dx).ceil() as usize)
    }

    pub fn cell_of(&self, v: &Vec2) -> Option<(usize, usize)> {
        let (nx, ny) = self.shape();
        let rel = (v - self.lower) / self.dx;
        if !(rel.x >= 0.0 && rel.y >= 0.0) {
            return None;
        }
        let (i, j) = (rel.x.floor() as usize, rel.y.floor() as usize);
        (i < nx && j < ny).then_some((i, j))
    }

    pub fn center(&self, i: usize, j: usize) -> Vec2 {
        self.lower + Vec2::new(i as f64 + 0.5, j as f64 + 0.5) * self.dx
    }
}

/// Cells reached from `source` within the horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct ReachSet {
    pub spec: GridSpec,
    pub direction: Direction,
    pub source: Vec2,
    pub source_cell: (usize, usize),
    occupied: Vec<bool>,
    nx: usize,
    /// Flow steps that left the grid bounds.
    pub spill: usize,
    /// Layers expanded before the horizon or a fixpoint stopped the search.
    pub layers: usize,
    pub reached_fixpoint: bool,
}

impl ReachSet {
    pub fn is_occupied(&self, i: usize, j: usize) -> bool {
        i < self.nx && self.occupied.get(j * self.nx + i).copied().unwrap_or(false)
    }

    /// Whether the cell containing `v` is occupied.
    pub fn contains_point(&self, v: &Vec2) -> bool {
        self.spec.cell_of(v).is_some_and(|(i, j)| self.is_occupied(i, j))
    }

    pub fn count(&self) -> usize {
        self.occupied.iter().filter(|&&b| b).count()
    }

    /// Centres of occupied cells in row-major order (`y` outer, `x` inner).
    pub fn centers(&self) -> Vec<Vec2> {
        self.occupied
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(k, _)| self.spec.center(k % self.nx, k / self.nx))
            .collect()
    }
}

/// Layered breadth-first closure under the exact flow.
///
/// States are deduplicated on a lattice of side `dx` (centre anchors) or
/// `dx / refinement` (landing anchors). Each layer applies one step of
/// length `dt` under every control sample to the anchors first reached in the
/// previous layer. The search stops after `horizon / dt` layers or when a
/// layer adds nothing. A lattice site's layer is its shortest step count and
/// its anchor is chosen from all landings of that layer, so occupancy does
/// not depend on processing order. A cell is occupied when any of its sites is.
pub fn brute_reach(sys: &LinearControlSystem, v0: &Vec2, spec: &GridSpec, direction: Direction) -> Result<ReachSet> {
    spec.validate(sys)?;
    let source_cell = spec.cell_of(v0).ok_or(Error::OutOfBounds)?;
    let (nx, ny) = spec.shape();
    let k = match spec.anchor {
        CellAnchor::Centre => 1,
        CellAnchor::Landing => spec.refinement,
    };
    let fine = spec.dx / k as f64;
    let (fx, fy) = (nx * k, ny * k);
    let site_of = |q: &Vec2| -> Option<(usize, usize)> {
        let rel = (q - spec.lower) / fine;
        if !(rel.x >= 0.0 && rel.y >= 0.0) {
            return None;
        }
        let (a, b) = (rel.x.floor() as usize, rel.y.floor() as usize);
        (a < fx && b < fy).then_some((a, b))
    };
    let site_centre = |a: usize, b: usize| spec.lower + Vec2::new(a as f64 + 0.5, b as f64 + 0.5) * fine;

    let mut visited = vec![false; fx * fy];
    let source_site = site_of(v0).unwrap_or((source_cell.0 * k, source_cell.1 * k));
    visited[source_site.1 * fx + source_site.0] = true;
    let source_anchor = match spec.anchor {
        CellAnchor::Landing => *v0,
        CellAnchor::Centre => spec.center(source_cell.0, source_cell.1),
    };
    let step = direction.sign() * spec.dt;
    let max_layers = (spec.horizon / spec.dt + 1e-9).floor() as usize;

    let mut frontier = vec![source_anchor];
    let mut spill = 0;
    let mut layers = 0;
    while layers < max_layers && !frontier.is_empty() {
        // Site -> (squared offset from the site centre, anchor).
        let mut landed: BTreeMap<usize, (f64, Vec2)> = BTreeMap::new();
        for p in &frontier {
            for &u in &spec.controls {
                let q = sys.flow(step, p, u);
                let Some((a, b)) = site_of(&q) else {
                    spill += 1;
                    continue;
                };
                let key = b * fx + a;
                if visited[key] {
                    continue;
                }
                let centre = site_centre(a, b);
                let (anchor, offset) = match spec.anchor {
                    CellAnchor::Centre => (centre, 0.0),
                    CellAnchor::Landing => (q, (q - centre).norm_squared()),
                };
                match landed.get(&key) {
                    Some(&(best, prev)) if (best, prev.x, prev.y) <= (offset, anchor.x, anchor.y) => {}
                    _ => {
                        landed.insert(key, (offset, anchor));
                    }
                }
            }
        }
        for &key in landed.keys() {
            visited[key] = true;
        }
        frontier = landed.into_values().map(|(_, p)| p).collect();
        layers += 1;
    }

    let mut occupied = vec![false; nx * ny];
    occupied[source_cell.1 * nx + source_cell.0] = true;
    for (key, _) in visited.iter().enumerate().filter(|(_, &v)| v) {
        let (a, b) = (key % fx, key / fx);
        occupied[(b / k) * nx + a / k] = true;
    }
    Ok(ReachSet {
        spec: spec.clone(),
        direction,
        source: *v0,
        source_cell,
        occupied,
        nx,
        spill,
        layers,
        reached_fixpoint: frontier.is_empty(),
    })
}

/// Largest distance from a point of `from` to the set `to`.
pub fn directed_hausdorff(from: &[Vec2], to: &[Vec2]) -> Result<f64> {
    if from.is_empty() || to.is_empty() {
        return Err(Error::EmptySet);
    }
    Ok(from
        .iter()
        .map(|p| to.iter().map(|q| (p - q).norm_squared()).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
        .sqrt())
}

/// Symmetric Hausdorff distance between two finite point sets.
pub fn hausdorff(a: &[Vec2], b: &[Vec2]) -> Result<f64> {
    Ok(directed_hausdorff(a, b)?.max(directed_hausdorff(b, a)?))
}

/// One evaluated sample of the distance inequalities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistanceSample {
    pub v: Vec2,
    pub u: f64,
    pub s: f64,
    pub distance_before: f64,
    pub distance_after: f64,
    /// Signed excess over the inequality; positive means it failed.
    pub excess: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceReport {
    pub contracting_samples: usize,
    pub expanding_samples: usize,
    /// Samples whose excess is positive at all.
    pub raw_violations: usize,
    /// Samples whose excess exceeds the tolerance.
    pub hard_violations: usize,
    pub worst_contracting: Option<DistanceSample>,
    pub worst_expanding: Option<DistanceSample>,
    pub resolution: f64,
}

impl DistanceReport {
    pub fn passed(&self) -> bool {
        self.hard_violations == 0
    }
}

/// Checks `d(φ(s,v,u)) ≤ e^{sλ} d(v)` when `sλ < 0` and `≥` when `sλ > 0`,
/// with `d` the distance to `𝒞`, on `samples` random exterior points per sign.
///
/// Tolerance per sample is `10⁻⁶ + (1 + e^{sλ})·resolution`, covering the
/// polyline's sag on both sides of the inequality.
pub fn check_distance_contraction(sys: &LinearControlSystem, samples: usize, seed: u64) -> Result<DistanceReport> {
    let region = build_region_c(sys)?;
    check_distance_contraction_with(sys, &region, samples, seed)
}

pub fn check_distance_contraction_with(
    sys: &LinearControlSystem,
    region: &RegionC,
    samples: usize,
    seed: u64,
) -> Result<DistanceReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = region.bounding_box();
    let centre = (lo + hi) * 0.5;
    let half = (hi - lo) * 1.5;
    let lambda = sys.lambda();
    let period = 2.0 * sys.half_period();
    let s_cap = period.min(3.0 / lambda.abs());
    let resolution = region.resolution();

    let mut report = DistanceReport {
        contracting_samples: 0,
        expanding_samples: 0,
        raw_violations: 0,
        hard_violations: 0,
        worst_contracting: None,
        worst_expanding: None,
        resolution,
    };
    for sign in [-1.0, 1.0] {
        let mut done = 0;
        while done < samples {
            let v = centre + Vec2::new(rng.gen_range(-1.0..1.0) * half.x, rng.gen_range(-1.0..1.0) * half.y);
            if !region.contains(&v).is_exterior() {
                continue;
            }
            let u = rng.gen_range(sys.lower()..=sys.upper());
            // sλ has sign `sign`.
            let s = sign * lambda.signum() * rng.gen_range(0.0..=1.0) * s_cap;
            let factor = (s * lambda).exp();
            let before = region.distance(&v);
            let after = region.distance(&sys.flow(s, &v, u));
            let excess = if sign < 0.0 { after - factor * before } else { factor * before - after };
            let tolerance = 1e-6 + (1.0 + factor) * resolution;
            let sample = DistanceSample {
                v,
                u,
                s,
                distance_before: before,
                distance_after: after,
                excess,
                tolerance,
            };
            if excess > 0.0 {
                report.raw_violations += 1;
            }
            if excess > tolerance {
                report.hard_violations += 1;
            }
            let worst = if sign < 0.0 {
                report.contracting_samples += 1;
                &mut report.worst_contracting
            } else {
                report.expanding_samples += 1;
                &mut report.worst_expanding
            };
            if worst.is_none_or(|w| excess > w.excess) {
                *worst = Some(sample);
            }
            done += 1;
        }
    }
    Ok(report)
}
