//! Acceptance run: one line per criterion, nonzero exit if any fails.

mod common;

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use astro_float::{BigFloat, Consts, RoundingMode};
use lcs2d::controlset::{
    classify, control_sets, fixed_points, p_iterates, sweep_family, Classification, ControlSetDescriptor,
};
use lcs2d::geometry::{build_region_c, g_grid_minimum, verify_invariance, Membership, RegionC, SpiralRegion};
use lcs2d::oracle::{brute_reach, check_distance_contraction, hausdorff, GridSpec};
use lcs2d::planar::{canonicalize, CanonicalForm, Mat2, Vec2, SPECTRUM_TOL};
use lcs2d::planner::{hop_arcs, hop_plan_trace_zero, reach_plan};
use lcs2d::system::Direction;
use lcs2d::LinearControlSystem;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn within(elapsed: Duration, limit_s: f64) -> bool {
    elapsed.as_secs_f64() < limit_s
}

fn sample_inside(rng: &mut ChaCha8Rng, region: &RegionC, strict: bool) -> Vec2 {
    let (lo, hi) = region.bounding_box();
    loop {
        let v = Vec2::new(rng.gen_range(lo.x..hi.x), rng.gen_range(lo.y..hi.y));
        let m = region.contains(&v).membership;
        if m == Membership::Interior || (!strict && m == Membership::Boundary) {
            return v;
        }
    }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    let mut tested = 0;
    while tested < 1000 {
        let a = Mat2::from_fn(|_, _| rng.gen_range(-3.0..3.0));
        let Ok(cf) = canonicalize(&a, SPECTRUM_TOL) else { continue };
        worst = worst.max((cf.reconstruct() - a).amax());
        tested += 1;
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= 1e-9 && within(elapsed, 1.0),
        format!("{tested} matrices, max entry error {worst:.2e}, {:.3} s", elapsed.as_secs_f64()),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for k in 0..500 {
        let sign = if k % 2 == 0 { -1.0 } else { 1.0 };
        let sys = random_system(&mut rng, sign);
        let (p_plus, p_minus) = fixed_points(&sys).unwrap();
        let half = sys.half_period();
        // With tr A > 0 the orbit runs the other way: u⁻ carries P⁻ to P⁺.
        let (a, b) = if sys.trace() < 0.0 { (p_plus, p_minus) } else { (p_minus, p_plus) };
        let e1 = (sys.flow(half, &a, sys.lower()) - b).norm();
        let e2 = (sys.flow(half, &b, sys.upper()) - a).norm();
        worst = worst.max(e1).max(e2);
    }
    let elapsed = start.elapsed();
    outcome(
        worst < 1e-9 && within(elapsed, 1.0),
        format!("500 systems, max closure gap {worst:.2e}, {:.3} s", elapsed.as_secs_f64()),
    )
}

/// Replays the S₀ iterates in 256-bit arithmetic, where the contraction
/// bound can be checked with relative slack 10⁻⁶ down to n = 10.
fn criterion_3() -> Outcome {
    const P: usize = 256;
    let rm = RoundingMode::ToEven;
    let mut cc = Consts::new().unwrap();
    let big = |x: f64| BigFloat::from_f64(x, P);
    let sys = s0();
    let a = sys.drift();
    let eta = sys.control();

    let tr = big(a[(0, 0)]).add(&big(a[(1, 1)]), P, rm);
    let det = big(a[(0, 0)]).mul(&big(a[(1, 1)]), P, rm).sub(&big(a[(0, 1)]).mul(&big(a[(1, 0)]), P, rm), P, rm);
    let lambda = tr.div(&big(2.0), P, rm);
    let mu = det.sub(&lambda.mul(&lambda, P, rm), P, rm).sqrt(P, rm);
    let pi = cc.pi(P, rm);
    let t_half = pi.div(&mu, P, rm);
    // e^{tA} = e^{λt}[cos(μt)·I + sin(μt)/μ·(A − λI)] at t = π/μ.
    let scale = lambda.mul(&t_half, P, rm).exp(P, rm, &mut cc);
    let c = pi.cos(P, rm, &mut cc).mul(&scale, P, rm);
    let s = pi.sin(P, rm, &mut cc).mul(&scale, P, rm).div(&mu, P, rm);
    let m = [
        [
            c.add(&s.mul(&big(a[(0, 0)]).sub(&lambda, P, rm), P, rm), P, rm),
            s.mul(&big(a[(0, 1)]), P, rm),
        ],
        [
            s.mul(&big(a[(1, 0)]), P, rm),
            c.add(&s.mul(&big(a[(1, 1)]).sub(&lambda, P, rm), P, rm), P, rm),
        ],
    ];
    // A⁻¹η by Cramer's rule.
    let w = [
        big(a[(1, 1)]).mul(&big(eta.x), P, rm).sub(&big(a[(0, 1)]).mul(&big(eta.y), P, rm), P, rm).div(&det, P, rm),
        big(a[(0, 0)]).mul(&big(eta.y), P, rm).sub(&big(a[(1, 0)]).mul(&big(eta.x), P, rm), P, rm).div(&det, P, rm),
    ];
    let equilibrium = |u: f64| [w[0].mul(&big(-u), P, rm), w[1].mul(&big(-u), P, rm)];
    let half_turn = |p: &[BigFloat; 2], u: f64| {
        let e = equilibrium(u);
        let d = [p[0].sub(&e[0], P, rm), p[1].sub(&e[1], P, rm)];
        [
            m[0][0].mul(&d[0], P, rm).add(&m[0][1].mul(&d[1], P, rm), P, rm).add(&e[0], P, rm),
            m[1][0].mul(&d[0], P, rm).add(&m[1][1].mul(&d[1], P, rm), P, rm).add(&e[1], P, rm),
        ]
    };
    let dist = |p: &[BigFloat; 2], q: &[BigFloat; 2]| {
        let dx = p[0].sub(&q[0], P, rm);
        let dy = p[1].sub(&q[1], P, rm);
        dx.mul(&dx, P, rm).add(&dy.mul(&dy, P, rm), P, rm).sqrt(P, rm)
    };
    let (lo, hi) = (sys.lower(), sys.upper());
    let e_half = scale.clone();
    let one = big(1.0);
    let coef = big(-hi).add(&e_half.mul(&big(lo), P, rm), P, rm).div(&one.sub(&e_half, P, rm), P, rm);
    let p_plus = [coef.mul(&w[0], P, rm), coef.mul(&w[1], P, rm)];

    let p0 = equilibrium(hi);
    let d0 = dist(&p0, &p_plus);
    let per_pair = e_half.mul(&e_half, P, rm);
    let slack = big(1.0 + 1e-6);
    let mut p = p0.clone();
    let mut bound = d0.clone();
    let mut ok = true;
    let mut worst_ratio: f64 = 0.0;
    for _n in 1..=10 {
        p = half_turn(&half_turn(&p, lo), hi);
        bound = bound.mul(&per_pair, P, rm);
        let d = dist(&p, &p_plus);
        ok &= d <= bound.mul(&slack, P, rm);
        let ratio: f64 = format!("{}", d.div(&bound, P, rm)).parse().unwrap_or(f64::NAN);
        worst_ratio = worst_ratio.max(ratio);
    }

    // Library values: f64 iterates track the exact ones, and the closed-form
    // P⁺ agrees with the converged iterates.
    let lib = p_iterates(&sys, 40).unwrap();
    let (lib_plus, _) = fixed_points(&sys).unwrap();
    let hp_plus = Vec2::new(
        format!("{}", p_plus[0]).parse().unwrap(),
        format!("{}", p_plus[1]).parse().unwrap(),
    );
    let closed_gap = (lib[40] - lib_plus).norm();
    let hp_gap = (hp_plus - lib_plus).norm();
    ok &= closed_gap <= 1e-12 && hp_gap <= 1e-12;
    outcome(
        ok,
        format!(
            "max |P2n−P⁺|/bound {worst_ratio:.9} over n ≤ 10 (256-bit), closed form vs iterates {closed_gap:.1e}, vs 256-bit {hp_gap:.1e}"
        ),
    )
}

fn random_canonical(rng: &mut ChaCha8Rng) -> CanonicalForm {
    CanonicalForm::from_eigenvalues(-rng.gen_range(0.05..0.8), rng.gen_range(0.3..2.0)).unwrap()
}

fn random_vector(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Vec2 {
    let r = rng.gen_range(lo..hi);
    let a = rng.gen_range(0.0..2.0 * PI);
    Vec2::new(r * a.cos(), r * a.sin())
}

/// Random point of `region`, distinct from `avoid`.
fn sample_in_spiral_region(rng: &mut ChaCha8Rng, region: &SpiralRegion, avoid: &Vec2) -> Vec2 {
    let cf = region.canonical;
    let radius = region.scale();
    loop {
        let z = random_vector(rng, 0.0, radius);
        let v = region.v2 + cf.from_canonical(&z);
        if region.margin(&v) > 0.0 && cf.norm(&(v - avoid)) > 1e-6 * radius {
            return v;
        }
    }
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut g_min = f64::INFINITY;
    for _ in 0..200 {
        let cf = random_canonical(&mut rng);
        let v1 = random_vector(&mut rng, 0.3, 2.0);
        let region = SpiralRegion::new(cf, v1, Vec2::zeros(), 512).unwrap();
        let w2 = v1 * rng.gen_range(0.0..1.0);
        let w1 = sample_in_spiral_region(&mut rng, &region, &w2);
        g_min = g_min.min(g_grid_minimum(&cf, &w1, &w2, &v1, 64).unwrap());
    }
    let mut worst = f64::INFINITY;
    let mut off_segment = 0;
    for _ in 0..1000 {
        let lambda = -rng.gen_range(0.05..0.8);
        let cf = canonicalize(&random_drift(&mut rng, lambda), SPECTRUM_TOL).unwrap();
        let v2 = random_vector(&mut rng, 0.0, 2.0);
        let v1 = v2 + random_vector(&mut rng, 0.3, 2.0);
        let region = SpiralRegion::new(cf, v1, v2, 512).unwrap();
        let w2 = v2 + (v1 - v2) * rng.gen_range(0.0..1.0);
        let w1 = sample_in_spiral_region(&mut rng, &region, &w2);
        let rep = verify_invariance(&region, &w1, &w2, 128).unwrap();
        worst = worst.min(rep.worst_margin);
        off_segment += usize::from(!rep.endpoint_on_segment);
    }
    let elapsed = start.elapsed();
    outcome(
        g_min >= -1e-9 && worst >= -1e-6 && off_segment == 0 && within(elapsed, 30.0),
        format!(
            "min g {g_min:.3e} over 200 grids, worst invariance margin {worst:.2e} over 1000 cases, {off_segment} endpoints off the chord, {:.2} s",
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = f64::INFINITY;
    let mut bad = 0;
    for _ in 0..50 {
        let sys = random_system(&mut rng, -1.0);
        let region = build_region_c(&sys).unwrap();
        let tol = region.default_tolerance();
        for _ in 0..2000 {
            let v = sample_inside(&mut rng, &region, false);
            let u = rng.gen_range(sys.lower()..=sys.upper());
            let s = rng.gen_range(0.0..=3.0 * sys.half_period());
            let verdict = region.contains_with(&sys.flow(s, &v, u), tol);
            worst = worst.min(verdict.margin);
            bad += usize::from(verdict.is_exterior() && verdict.margin < -1e-6);
        }
    }
    let elapsed = start.elapsed();
    outcome(
        bad == 0,
        format!(
            "100000 samples over 50 systems, {bad} exterior, worst margin {worst:.2e}, {:.2} s",
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut systems = vec![("S0", s0()), ("reversed S0", s0().time_reversed())];
    for k in 0..4 {
        let sign = if k % 2 == 0 { -1.0 } else { 1.0 };
        systems.push(("random", random_system(&mut rng, sign)));
    }
    let mut ok = true;
    let mut parts = Vec::new();
    for (k, (name, sys)) in systems.iter().enumerate() {
        let rep = check_distance_contraction(sys, 1000, 600 + k as u64).unwrap();
        ok &= rep.passed() && rep.contracting_samples == 1000 && rep.expanding_samples == 1000;
        let worst = rep
            .worst_contracting
            .map(|s| s.excess)
            .into_iter()
            .chain(rep.worst_expanding.map(|s| s.excess))
            .fold(f64::NEG_INFINITY, f64::max);
        parts.push(format!("{name}: {} hard, worst excess {worst:.1e}", rep.hard_violations));
    }
    outcome(ok, format!("1000 samples per sign of sλ; {}", parts.join("; ")))
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_err: f64 = 0.0;
    let mut over_bound = 0;
    let mut over_euclid = 0;
    for _ in 0..100 {
        let sys = random_trace_zero_system(&mut rng);
        let gap = (sys.equilibrium(sys.upper()) - sys.equilibrium(sys.lower())).norm();
        let v = random_vector(&mut rng, 0.0, 50.0 * gap);
        let u0 = rng.gen_range(sys.lower()..=sys.upper());
        let plan = hop_plan_trace_zero(&sys, &v, u0).unwrap();
        worst_err = worst_err.max(plan.endpoint_error);
        // Hop count bound in the canonical frame, where the arcs are circles.
        let cf = sys.canonical();
        let delta = cf.norm(&(sys.equilibrium(sys.upper()) - sys.equilibrium(sys.lower())));
        let r = cf.norm(&(v - sys.equilibrium(sys.lower())));
        let bound = (r / delta).ceil() as usize + 1;
        over_bound += usize::from(plan.hops > bound || hop_arcs(&sys, &v, u0).unwrap().len() != plan.hops);
        let euclid = ((v - sys.equilibrium(sys.lower())).norm() / gap).ceil() as usize + 1;
        over_euclid += usize::from(plan.hops > euclid);
    }
    let example = hop_plan_trace_zero(&t0(), &Vec2::new(0.0, 5.0), 0.0).unwrap();
    let got: Vec<(f64, f64)> = example.schedule.segments().iter().map(|s| (s.u, s.dt)).collect();
    let expected = [(1.0, PI), (-1.0, PI), (0.5, PI)];
    let exact = got.len() == 3
        && got
            .iter()
            .zip(expected)
            .all(|(g, e)| g.0 == e.0 && (g.1 - e.1).abs() <= 4.0 * f64::EPSILON * PI);
    outcome(
        worst_err < 1e-9 && over_bound == 0 && exact,
        format!(
            "100 systems, max endpoint error {worst_err:.2e}, {over_bound} over the hop bound ({over_euclid} over its Euclidean form), T0 schedule {got:?}"
        ),
    )
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let sys = s0();
    let region = build_region_c(&sys).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst_plan: f64 = 0.0;
    for _ in 0..20 {
        let target = sample_inside(&mut rng, &region, true);
        let plan = reach_plan(&sys, &target, 1e-4).unwrap();
        worst_plan = worst_plan.max(plan.endpoint_error);
    }

    let dx = 0.02;
    let spec = GridSpec::around_orbit(&sys, dx, 0.05, 30.0).unwrap();
    let reach = brute_reach(&sys, &Vec2::zeros(), &spec, Direction::Forward).unwrap();
    let (nx, ny) = spec.shape();
    let (mut net, mut covered) = (0usize, 0usize);
    for j in 0..ny {
        for i in 0..nx {
            if region.margin(&spec.center(i, j)) > 2.0 * dx {
                net += 1;
                covered += usize::from(reach.is_occupied(i, j));
            }
        }
    }
    let coverage = covered as f64 / net as f64;
    let escape = reach.centers().iter().map(|c| region.distance(c)).fold(0.0, f64::max);
    let elapsed = start.elapsed();
    outcome(
        worst_plan < 1e-4 && coverage >= 0.99 && escape <= 2.0 * dx && within(elapsed, 60.0),
        format!(
            "20 targets, max plan error {worst_plan:.2e}; grid coverage {:.2}% of {net} eroded cells, max exit {escape:.4} (limit {:.2}), {:.2} s",
            100.0 * coverage,
            2.0 * dx,
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_9() -> Outcome {
    let labels = |sys: &LinearControlSystem| -> Vec<&'static str> {
        control_sets(sys, 256).unwrap().iter().map(ControlSetDescriptor::label).collect()
    };
    let forward = s0();
    let reversed = s0().time_reversed();
    let zero = t0();
    let ok = classify(&forward) == Classification::ClosedControlSet
        && labels(&forward) == ["closed_region"]
        && classify(&reversed) == Classification::OpenControlSetWithBoundaryOrbit
        && labels(&reversed) == ["open_region", "periodic_orbit"]
        && classify(&zero) == Classification::ControllableTraceZero
        && labels(&zero) == ["whole_plane"];
    outcome(
        ok,
        format!(
            "S0 {:?}, reversed S0 {:?}, trace zero {:?}",
            labels(&forward),
            labels(&reversed),
            labels(&zero)
        ),
    )
}

fn criterion_10() -> Outcome {
    let start = Instant::now();
    let sys = s0();
    let grid: Vec<(f64, f64)> = [-1.0, -0.7, -0.3]
        .iter()
        .flat_map(|&a| [0.2, 0.6, 1.0, 1.5].map(move |r| (a, r)))
        .collect();
    let family = sweep_family(sys.drift(), sys.control(), 0.0, &grid, 256).unwrap();
    // Affine check against the plane through three grid points.
    let (p00, p10, p01) = (&family[0], &family[4], &family[1]);
    let d_alpha = (p10.p_plus - p00.p_plus) / (p10.alpha - p00.alpha);
    let d_rho = (p01.p_plus - p00.p_plus) / (p01.rho - p00.rho);
    let m_alpha = (p10.p_minus - p00.p_minus) / (p10.alpha - p00.alpha);
    let m_rho = (p01.p_minus - p00.p_minus) / (p01.rho - p00.rho);
    let mut affine_err: f64 = 0.0;
    for pt in &family {
        let da = pt.alpha - p00.alpha;
        let dr = pt.rho - p00.rho;
        affine_err = affine_err.max((p00.p_plus + d_alpha * da + d_rho * dr - pt.p_plus).norm());
        affine_err = affine_err.max((p00.p_minus + m_alpha * da + m_rho * dr - pt.p_minus).norm());
    }

    let base = sweep_family(sys.drift(), sys.control(), 0.0, &[(-1.0, 1.0)], 256).unwrap();
    let mut distances = Vec::new();
    for delta in [1e-1, 1e-2, 1e-3] {
        let other = sweep_family(sys.drift(), sys.control(), 0.0, &[(-1.0, 1.0 + delta)], 256).unwrap();
        distances.push(hausdorff(&base[0].boundary, &other[0].boundary).unwrap());
    }
    let decreasing = distances.windows(2).all(|w| w[1] < w[0]);
    let elapsed = start.elapsed();
    outcome(
        affine_err <= 1e-12 && decreasing && distances[2] < 1e-2 && within(elapsed, 10.0),
        format!(
            "affine residual {affine_err:.1e} over {} points, Hausdorff for δ = 1e-1, 1e-2, 1e-3: {:.3e}, {:.3e}, {:.3e}, {:.2} s",
            family.len(),
            distances[0],
            distances[1],
            distances[2],
            elapsed.as_secs_f64()
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("canonical form round-trip", criterion_1),
        ("periodic orbit closure", criterion_2),
        ("half-turn iterate convergence", criterion_3),
        ("spiral region invariance", criterion_4),
        ("positive invariance of the region", criterion_5),
        ("distance contraction", criterion_6),
        ("trace-zero hop planner", criterion_7),
        ("interior reachability", criterion_8),
        ("control set classification", criterion_9),
        ("range sweep continuity", criterion_10),
    ];
    let mut failures = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let result = run();
        let status = if result.passed { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {status}  {name}: {}", k + 1, result.detail);
        failures += usize::from(!result.passed);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
