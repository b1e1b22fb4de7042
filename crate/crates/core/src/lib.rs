//! Control sets of planar linear control systems `v̇ = Av + uη`, `u ∈ [u⁻, u⁺]`,
//! whose drift `A` has a complex eigenvalue pair `λ ± iμ`.
//!
//! * [`planar`]: canonical forms and exact matrix exponentials.
//! * [`system`]: the control system, equilibria, flows and schedule simulation.
//! * [`controlset`]: fixed points `P±`, the periodic orbit and classification.
//! * [`geometry`]: spiral regions, the region `𝒞` and membership margins.
//! * [`planner`]: steering schedules for trace-zero and nonzero-trace systems.
//! * [`oracle`]: grid reachability, Hausdorff distance and distance checks.

// NaN must fail range checks, so `!(x > 0.0)` is intended.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod controlset;
pub mod error;
pub mod geometry;
pub mod oracle;
pub mod planar;
pub mod planner;
pub mod system;

pub use controlset::{
    classify, control_sets, fixed_points, periodic_orbit, BoundaryOrbit, Classification, ControlSetDescriptor,
};
pub use error::{Error, Result};
pub use geometry::{build_region_c, Membership, MembershipVerdict, RegionC, SpiralRegion};
pub use planar::{canonicalize, CanonicalForm, Mat2, Vec2};
pub use planner::{hop_plan_trace_zero, loop_plan_trace_zero, reach_plan, spiral_intersection, PlanResult};
pub use system::{simulate, ControlSchedule, LinearControlSystem, Segment, SimulateOptions, Trajectory};
