//! The control system `v̇ = Av + uη`, `u ∈ [u⁻, u⁺]`, and its exact
//! solutions for piecewise-constant controls.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::planar::{canonicalize, CanonicalForm, Mat2, Vec2, SPECTRUM_TOL};

/// Relative slack when testing whether a control value lies in the range.
const CONTROL_SLACK: f64 = 1e-12;

/// Samples per half-period used for dense trajectory output by default.
pub const DEFAULT_SAMPLES_PER_HALF_PERIOD: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlRange {
    pub lower: f64,
    pub upper: f64,
}

impl ControlRange {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !lower.is_finite() || !upper.is_finite() {
            return Err(Error::NonFinite("control range"));
        }
        if !(lower < upper) {
            return Err(Error::InvalidRange { lower, upper });
        }
        Ok(Self { lower, upper })
    }

    pub fn contains(&self, u: f64) -> bool {
        let slack = CONTROL_SLACK * (1.0 + self.lower.abs().max(self.upper.abs()));
        u >= self.lower - slack && u <= self.upper + slack
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Linear control system on the plane with complex drift spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearControlSystem {
    drift: Mat2,
    control: Vec2,
    range: ControlRange,
    canonical: CanonicalForm,
    /// `A⁻¹η`.
    inv_drift_control: Vec2,
}

impl LinearControlSystem {
    pub fn new(drift: Mat2, control: Vec2, lower: f64, upper: f64) -> Result<Self> {
        if control.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("control vector"));
        }
        if control.norm() == 0.0 {
            return Err(Error::ZeroControlVector);
        }
        let range = ControlRange::new(lower, upper)?;
        let canonical = canonicalize(&drift, SPECTRUM_TOL)?;
        // σ_A < 0 forces det A > 0.
        let inv = drift.try_inverse().ok_or(Error::NotComplexSpectrum {
            discriminant: crate::planar::discriminant(&drift),
        })?;
        Ok(Self {
            drift,
            control,
            range,
            canonical,
            inv_drift_control: inv * control,
        })
    }

    pub fn drift(&self) -> &Mat2 {
        &self.drift
    }

    pub fn control(&self) -> &Vec2 {
        &self.control
    }

    pub fn range(&self) -> ControlRange {
        self.range
    }

    pub fn lower(&self) -> f64 {
        self.range.lower
    }

    pub fn upper(&self) -> f64 {
        self.range.upper
    }

    pub fn canonical(&self) -> &CanonicalForm {
        &self.canonical
    }

    pub fn inv_drift_control(&self) -> &Vec2 {
        &self.inv_drift_control
    }

    pub fn trace(&self) -> f64 {
        self.drift.trace()
    }

    pub fn lambda(&self) -> f64 {
        self.canonical.lambda
    }

    pub fn mu(&self) -> f64 {
        self.canonical.mu
    }

    pub fn half_period(&self) -> f64 {
        self.canonical.half_period()
    }

    pub fn admits(&self, u: f64) -> bool {
        self.range.contains(u)
    }

    /// Same drift and control vector, different control range.
    pub fn with_range(&self, lower: f64, upper: f64) -> Result<Self> {
        let range = ControlRange::new(lower, upper)?;
        Ok(Self {
            range,
            ..self.clone()
        })
    }

    /// `v̇ = −Av − uη`: same equilibria and orbits, time runs backwards.
    pub fn time_reversed(&self) -> Self {
        Self::new(-self.drift, -self.control, self.range.lower, self.range.upper)
            .expect("negating the drift keeps the spectrum complex")
    }

    /// The system itself when `tr A < 0`, otherwise its time reversal.
    /// The flag reports whether time was reversed.
    pub fn contracting(&self) -> (Self, bool) {
        if self.lambda() < 0.0 {
            (self.clone(), false)
        } else {
            (self.time_reversed(), true)
        }
    }

    /// Equilibrium `v(u) = −u A⁻¹η`. Any real `u` is accepted; use
    /// [`admits`](Self::admits) to flag values outside the range.
    pub fn equilibrium(&self, u: f64) -> Vec2 {
        -u * self.inv_drift_control
    }

    /// Direction `−A⁻¹η = v(1)` of the line of equilibria; equilibrium
    /// coordinates increase with `u` along it.
    pub fn equilibrium_direction(&self) -> Vec2 {
        -self.inv_drift_control
    }

    /// Signed coordinate along `−A⁻¹η` (Euclidean length units).
    pub fn line_coordinate(&self, v: &Vec2) -> Result<f64> {
        crate::planar::line_coordinate(v, &self.equilibrium_direction())
    }

    /// `φ(s, v, u) = e^{sA}(v − v(u)) + v(u)` for constant `u`.
    pub fn flow(&self, s: f64, v: &Vec2, u: f64) -> Vec2 {
        let eq = self.equilibrium(u);
        self.canonical.exp(s) * (v - eq) + eq
    }

    /// Velocity `Av + uη`.
    pub fn velocity(&self, v: &Vec2, u: f64) -> Vec2 {
        self.drift * v + self.control * u
    }
}

/// `φ_A(τ, v₁, v₂) = e^{τA}(v₁ − v₂) + v₂`.
pub fn spiral(a: &Mat2, tau: f64, v1: &Vec2, v2: &Vec2) -> Result<Vec2> {
    if v1 == v2 {
        return Err(Error::DegenerateSpiral);
    }
    let cf = canonicalize(a, SPECTRUM_TOL)?;
    Ok(cf.spiral(tau, v1, v2))
}

/// One constant-control piece of a schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub u: f64,
    pub dt: f64,
}

/// Piecewise-constant control: an ordered list of `(u, dt)` pieces.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ControlSchedule {
    segments: Vec<Segment>,
}

impl ControlSchedule {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_segments(segments: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let mut schedule = Self::new();
        for (u, dt) in segments {
            schedule.push(u, dt)?;
        }
        Ok(schedule)
    }

    pub fn push(&mut self, u: f64, dt: f64) -> Result<()> {
        if !u.is_finite() {
            return Err(Error::NonFinite("control value"));
        }
        if !(dt.is_finite() && dt >= 0.0) {
            return Err(Error::InvalidDuration(dt));
        }
        self.segments.push(Segment { u, dt });
        Ok(())
    }

    pub fn extend(&mut self, other: &ControlSchedule) {
        self.segments.extend_from_slice(&other.segments);
    }

    pub fn concat(&self, other: &ControlSchedule) -> ControlSchedule {
        let mut out = self.clone();
        out.extend(other);
        out
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.dt).sum()
    }

    /// Checks every control value against the system's range.
    pub fn validate(&self, sys: &LinearControlSystem) -> Result<()> {
        for seg in &self.segments {
            if !sys.admits(seg.u) {
                return Err(Error::InvalidControl {
                    u: seg.u,
                    lower: sys.lower(),
                    upper: sys.upper(),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    #[default]
    Forward,
    Backward,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Forward => 1.0,
            Direction::Backward => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sampling {
    /// Only the exact segment endpoints.
    EndpointsOnly,
    /// Additional samples at most this far apart in time.
    Step(f64),
    /// `n` samples per half-period `π/μ`.
    PerHalfPeriod(usize),
}

impl Default for Sampling {
    fn default() -> Self {
        Sampling::PerHalfPeriod(DEFAULT_SAMPLES_PER_HALF_PERIOD)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SimulateOptions {
    pub direction: Direction,
    pub sampling: Sampling,
}

impl SimulateOptions {
    pub fn endpoints_only() -> Self {
        Self {
            sampling: Sampling::EndpointsOnly,
            ..Self::default()
        }
    }

    pub fn backward(mut self) -> Self {
        self.direction = Direction::Backward;
        self
    }
}

/// Sampled solution of a piecewise-constant control.
///
/// `times` holds elapsed time, strictly increasing. For backward runs the
/// state at elapsed time `t` is the solution at time `−t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec2>,
    /// Control in force on the interval ending at each sample (the first
    /// sample repeats the first control, or is `None` for an empty schedule).
    pub controls: Vec<Option<f64>>,
    /// Indices into `states` of exact segment endpoints, starting with 0.
    pub breakpoints: Vec<usize>,
    pub schedule: ControlSchedule,
    pub direction: Direction,
}

impl Trajectory {
    pub fn start(&self) -> Vec2 {
        self.states[0]
    }

    pub fn endpoint(&self) -> Vec2 {
        *self.states.last().expect("trajectory has at least its start point")
    }

    pub fn duration(&self) -> f64 {
        *self.times.last().expect("trajectory has at least its start point")
    }
}

/// Concatenates exact constant-control flows along `schedule`.
pub fn simulate(
    sys: &LinearControlSystem,
    v0: &Vec2,
    schedule: &ControlSchedule,
    options: SimulateOptions,
) -> Result<Trajectory> {
    schedule.validate(sys)?;
    let sign = options.direction.sign();
    let step = match options.sampling {
        Sampling::EndpointsOnly => f64::INFINITY,
        Sampling::Step(h) if h > 0.0 => h,
        Sampling::Step(h) => {
            return Err(Error::InvalidParameter(format!("sampling step {h} must be positive")))
        }
        Sampling::PerHalfPeriod(0) => {
            return Err(Error::InvalidParameter("samples per half-period must be positive".into()))
        }
        Sampling::PerHalfPeriod(n) => sys.half_period() / n as f64,
    };

    let first_control = schedule.segments().first().map(|s| s.u);
    let mut traj = Trajectory {
        times: vec![0.0],
        states: vec![*v0],
        controls: vec![first_control],
        breakpoints: vec![0],
        schedule: schedule.clone(),
        direction: options.direction,
    };
    let mut t = 0.0;
    let mut state = *v0;
    for seg in schedule.segments() {
        if seg.dt == 0.0 {
            continue;
        }
        let pieces = if step.is_finite() {
            ((seg.dt / step).ceil() as usize).max(1)
        } else {
            1
        };
        for k in 1..pieces {
            let tk = seg.dt * k as f64 / pieces as f64;
            traj.times.push(t + tk);
            traj.states.push(sys.flow(sign * tk, &state, seg.u));
            traj.controls.push(Some(seg.u));
        }
        state = sys.flow(sign * seg.dt, &state, seg.u);
        t += seg.dt;
        traj.times.push(t);
        traj.states.push(state);
        traj.controls.push(Some(seg.u));
        traj.breakpoints.push(traj.states.len() - 1);
    }
    Ok(traj)
}

/// Endpoint of the forward solution, without dense samples.
pub fn endpoint(sys: &LinearControlSystem, v0: &Vec2, schedule: &ControlSchedule) -> Result<Vec2> {
    Ok(simulate(sys, v0, schedule, SimulateOptions::endpoints_only())?.endpoint())
}
