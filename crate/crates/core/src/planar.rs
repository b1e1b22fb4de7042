//! Plane primitives: rotations, the rotation-scaling normal form of a 2×2
//! matrix with complex spectrum, and its closed-form exponential.
//!
//! A matrix `A` with eigenvalues `λ ± iμ` (μ > 0) is similar to
//!
//! ```text
//!     C = [ λ  -μ ]
//!         [ μ   λ ]
//! ```
//!
//! through a real change of basis `Q`, and `e^{tA} = Q e^{tλ} R_{tμ} Q⁻¹`.
//! `Q` is orthogonal exactly when `A` is normal; in general it is only
//! area-preserving (`|det Q| = 1`). Metric statements about spirals and
//! circles hold in the canonical frame `z = Q⁻¹ v`, which is why the frame
//! maps are exposed on [`CanonicalForm`].

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{Matrix2, Vector2};

use crate::error::{Error, Result};

pub type Vec2 = Vector2<f64>;
pub type Mat2 = Matrix2<f64>;

/// Relative band for the complex-spectrum test, scaled by ‖A‖².
pub const SPECTRUM_TOL: f64 = 1e-12;

/// `(tr A)² − 4 det A`; negative iff `A` has a complex eigenvalue pair.
pub fn discriminant(a: &Mat2) -> f64 {
    let tr = a.trace();
    tr * tr - 4.0 * a.determinant()
}

/// Counter-clockwise rotation by `tau` radians (clockwise for `tau < 0`).
pub fn rotation(tau: f64) -> Mat2 {
    let (s, c) = tau.sin_cos();
    Mat2::new(c, -s, s, c)
}

/// Quarter turn counter-clockwise.
pub fn theta(v: &Vec2) -> Vec2 {
    Vec2::new(-v.y, v.x)
}

/// Angle between two nonzero vectors, in `[0, π]`.
pub fn angle_between(a: &Vec2, b: &Vec2) -> Result<f64> {
    let na = a.norm();
    let nb = b.norm();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroVector);
    }
    // atan2 of cross and dot is better conditioned than acos near 0 and π.
    let cross = a.x * b.y - a.y * b.x;
    Ok(cross.abs().atan2(a.dot(b)).clamp(0.0, PI))
}

/// Counter-clockwise angle from `from` to `to`, in `[0, 2π)`.
pub fn ccw_angle(from: &Vec2, to: &Vec2) -> f64 {
    let cross = from.x * to.y - from.y * to.x;
    let a = cross.atan2(from.dot(to));
    if a < 0.0 {
        a + 2.0 * PI
    } else {
        a
    }
}

/// Signed coordinate of `v` along the line `ℝ·direction`, measured in units of
/// length along the unit vector `direction / |direction|`.
/// Fails with `OffLine` when `v` is not on that line.
pub fn line_coordinate(v: &Vec2, direction: &Vec2) -> Result<f64> {
    let n = direction.norm();
    if n == 0.0 {
        return Err(Error::ZeroVector);
    }
    let unit = direction / n;
    let c = v.dot(&unit);
    let residual = (v - unit * c).norm();
    if residual > 1e-9 * (1.0 + v.norm()) {
        return Err(Error::OffLine { residual });
    }
    Ok(c)
}

/// Rotation-scaling normal form `Q⁻¹ A Q = [[λ, −μ], [μ, λ]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CanonicalForm {
    pub lambda: f64,
    pub mu: f64,
    /// Columns are the canonical basis vectors, expressed in the original frame.
    pub basis: Mat2,
    pub basis_inv: Mat2,
    /// Whether the orientation had to be reversed (`det Q < 0`) to make `μ > 0`.
    pub flipped: bool,
}

/// Computes the rotation-scaling normal form of `a`.
///
/// `tol` is relative to `‖A‖_F²`: matrices with `σ_A ≥ −tol·‖A‖²` are rejected.
pub fn canonicalize(a: &Mat2, tol: f64) -> Result<CanonicalForm> {
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("drift matrix"));
    }
    let sigma = discriminant(a);
    let scale = a.norm_squared();
    if !(sigma < -tol * scale) || scale == 0.0 {
        return Err(Error::NotComplexSpectrum {
            discriminant: sigma,
        });
    }
    let lambda = 0.5 * a.trace();
    let mu = 0.5 * (-sigma).sqrt();

    // With p = e₁ and q = (A − λ)p / μ, Cayley–Hamilton gives (A − λ)² = −μ²,
    // so Ap = λp + μq and Aq = −μp + λq.
    let q = Vec2::new((a[(0, 0)] - lambda) / mu, a[(1, 0)] / mu);
    let det = q.y;
    let s = 1.0 / det.abs().sqrt();
    let basis = Mat2::new(s, q.x * s, 0.0, q.y * s);
    // Exact inverse of the upper-triangular basis.
    let basis_inv = Mat2::new(1.0 / s, -q.x / (q.y * s), 0.0, 1.0 / (q.y * s));

    Ok(CanonicalForm {
        lambda,
        mu,
        basis,
        basis_inv,
        flipped: det < 0.0,
    })
}

impl CanonicalForm {
    /// Normal form built directly from `λ` and `μ` (basis = identity).
    pub fn from_eigenvalues(lambda: f64, mu: f64) -> Result<Self> {
        if !(mu > 0.0) || !lambda.is_finite() || !mu.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "canonical form needs finite λ and μ > 0 (got λ={lambda}, μ={mu})"
            )));
        }
        Ok(Self {
            lambda,
            mu,
            basis: Mat2::identity(),
            basis_inv: Mat2::identity(),
            flipped: false,
        })
    }

    /// `[[λ, −μ], [μ, λ]]`.
    pub fn matrix(&self) -> Mat2 {
        Mat2::new(self.lambda, -self.mu, self.mu, self.lambda)
    }

    /// `Q C Q⁻¹`, which equals the original drift.
    pub fn reconstruct(&self) -> Mat2 {
        self.basis * self.matrix() * self.basis_inv
    }

    pub fn half_period(&self) -> f64 {
        PI / self.mu
    }

    /// `e^{πλ/μ}`: radial factor of one half-turn.
    pub fn half_turn_factor(&self) -> f64 {
        (PI * self.lambda / self.mu).exp()
    }

    pub fn to_canonical(&self, v: &Vec2) -> Vec2 {
        self.basis_inv * v
    }

    pub fn from_canonical(&self, z: &Vec2) -> Vec2 {
        self.basis * z
    }

    /// Length of `v` measured in the canonical frame.
    pub fn norm(&self, v: &Vec2) -> f64 {
        self.to_canonical(v).norm()
    }

    /// `e^{tC} = e^{tλ} R_{tμ}`, the exponential in canonical coordinates.
    pub fn canonical_exp(&self, t: f64) -> Mat2 {
        rotation(t * self.mu) * (t * self.lambda).exp()
    }

    /// `e^{tA} = Q e^{tλ} R_{tμ} Q⁻¹`.
    pub fn exp(&self, t: f64) -> Mat2 {
        self.basis * self.canonical_exp(t) * self.basis_inv
    }

    /// `e^{τA}(v₁ − v₂) + v₂`.
    pub fn spiral(&self, tau: f64, v1: &Vec2, v2: &Vec2) -> Vec2 {
        self.exp(tau) * (v1 - v2) + v2
    }
}

/// Closed-form `e^{tA}` for `A` with complex spectrum.
pub fn matrix_exp(a: &Mat2, t: f64) -> Result<Mat2> {
    Ok(canonicalize(a, SPECTRUM_TOL)?.exp(t))
}

/// Quarter-turn rotation matrix `θ = R_{π/2}`.
pub fn theta_matrix() -> Mat2 {
    rotation(FRAC_PI_2)
}
