#![allow(dead_code)]

use lcs2d::planar::{Mat2, Vec2};
use lcs2d::LinearControlSystem;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn s0() -> LinearControlSystem {
    LinearControlSystem::new(Mat2::new(-1.0, -1.0, 1.0, -1.0), Vec2::new(1.0, 0.0), -1.0, 1.0).unwrap()
}

pub fn t0() -> LinearControlSystem {
    LinearControlSystem::new(Mat2::new(0.0, -1.0, 1.0, 0.0), Vec2::new(1.0, 0.0), -1.0, 1.0).unwrap()
}

/// Change of basis with entries in [−1.5, 1.5] and |det| ≥ 0.3.
pub fn random_basis(rng: &mut ChaCha8Rng) -> Mat2 {
    loop {
        let q = Mat2::from_fn(|_, _| rng.gen_range(-1.5..1.5));
        if q.determinant().abs() >= 0.3 {
            return q;
        }
    }
}

/// `Q·[[λ, −μ], [μ, λ]]·Q⁻¹` for the given `λ` and a random `μ`, `Q`.
pub fn random_drift(rng: &mut ChaCha8Rng, lambda: f64) -> Mat2 {
    let mu = rng.gen_range(0.3..2.0);
    let q = random_basis(rng);
    q * Mat2::new(lambda, -mu, mu, lambda) * q.try_inverse().unwrap()
}

pub fn random_control(rng: &mut ChaCha8Rng) -> Vec2 {
    loop {
        let eta = Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        if eta.norm() > 0.2 {
            return eta;
        }
    }
}

pub fn random_range(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let lo = rng.gen_range(-2.0..0.5);
    (lo, lo + rng.gen_range(0.2..2.5))
}

/// Random system with `λ/μ`-ratio kept moderate; `sign` picks the trace sign
/// (zero gives a trace-zero system).
pub fn random_system(rng: &mut ChaCha8Rng, sign: f64) -> LinearControlSystem {
    let lambda = sign * rng.gen_range(0.05..0.8);
    let a = random_drift(rng, lambda);
    let (lo, hi) = random_range(rng);
    LinearControlSystem::new(a, random_control(rng), lo, hi).unwrap()
}

pub fn random_trace_zero_system(rng: &mut ChaCha8Rng) -> LinearControlSystem {
    let mu = rng.gen_range(0.3..2.0);
    let q = random_basis(rng);
    // Exact zero trace: Q⁻¹ conjugation keeps it only up to rounding.
    let mut a = q * Mat2::new(0.0, -mu, mu, 0.0) * q.try_inverse().unwrap();
    let t = 0.5 * a.trace();
    a[(0, 0)] -= t;
    a[(1, 1)] -= t;
    let (lo, hi) = random_range(rng);
    LinearControlSystem::new(a, random_control(rng), lo, hi).unwrap()
}
