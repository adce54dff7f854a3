mod support;

use kummer::geodesics::*;
use kummer::metric::*;
use kummer::potentials::*;
use kummer::GeomError;
use proptest::prelude::*;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::{loglog_slope, random_point};

fn random_velocity(rng: &mut ChaCha8Rng) -> [f64; 4] {
    std::array::from_fn(|_| rng.random_range(-1.0..1.0))
}

fn random_eh_state(rng: &mut ChaCha8Rng) -> (RadialPotentialSpec, GeodesicState) {
    let a: f64 = rng.random_range(0.2..2.0);
    let spec = RadialPotentialSpec::eguchi_hanson(a).unwrap();
    let z = random_point(rng, a, 3.0 * a);
    let st = GeodesicState::new(z, random_velocity(rng)).normalized(&spec).unwrap();
    (spec, st)
}

fn max_diff(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

/// Removes the `Re⟨z,ż⟩_{C²}` component, so the launch is stationary for `d`.
fn tangential(st: &GeodesicState) -> GeodesicState {
    let z = st.point;
    let zd = st.zdot();
    let u = z[0].norm_sqr() + z[1].norm_sqr();
    let k = (z[0].conj() * zd[0] + z[1].conj() * zd[1]).re / u;
    GeodesicState::new(z, to_real(&[zd[0] - z[0] * k, zd[1] - z[1] * k]))
}

/// `s(θ)√d = ∫₀^θ tu/(a²+t⁴u²)^{1/4} dt`, by Simpson's rule after `t² = (a/u) sinh y`,
/// which turns the integrand into the smooth `(√a/2) cosh^{1/2} y`.
fn simpson_s_of_theta(a: f64, u: f64, theta: f64) -> f64 {
    let n = 4000;
    let top = (u * theta * theta / a).asinh();
    let h = top / n as f64;
    let f = |y: f64| 0.5 * a.sqrt() * y.cosh().sqrt();
    let mut s = f(0.0) + f(top);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
    }
    s * h / 3.0
}

#[test]
fn euclidean_lines_are_exact() {
    let flat = RadialPotentialSpec::euclidean();
    let st = GeodesicState::new([c(1.0, 0.5), c(-0.3, 2.0)], [0.3, -0.2, 0.7, 0.1]);
    let path = integrate_geodesic(&flat, &st, 5.0, 0.1).unwrap();
    let end = to_real(&path.last().point);
    let x0 = to_real(&st.point);
    for i in 0..4 {
        assert!((end[i] - x0[i] - 5.0 * st.velocity[i]).abs() < 1e-13);
        assert!((path.last().velocity[i] - st.velocity[i]).abs() < 1e-15);
    }
    assert!(path.energy_drift() < 1e-15);
}

#[test]
fn energy_drift_is_bounded() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..20 {
        let (spec, st) = random_eh_state(&mut rng);
        let t = 2.0;
        let path = integrate_geodesic(&spec, &st, t, 0.01).unwrap();
        assert!(path.energy_drift() <= 1e-9 * t, "drift {:e}", path.energy_drift());
    }
    let glued = RadialPotentialSpec::glued(0.2, SCALING_DELTA).unwrap();
    let st = GeodesicState::new([c(1.1, 0.2), c(0.3, -0.4)], [0.1, 0.4, -0.5, 0.2]).normalized(&glued).unwrap();
    let path = integrate_geodesic(&glued, &st, 2.0, 0.01).unwrap();
    assert!(path.energy_drift() <= 2e-9, "neck drift {:e}", path.energy_drift());
}

#[test]
fn time_reversal_returns_to_start() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..10 {
        let (spec, st) = random_eh_state(&mut rng);
        let fwd = integrate_geodesic(&spec, &st, 1.5, 0.01).unwrap();
        let end = fwd.last();
        let rev = GeodesicState::new(end.point, end.velocity.map(|v| -v));
        let back = integrate_geodesic(&spec, &rev, 1.5, 0.01).unwrap();
        let b = back.last();
        assert!(max_diff(&to_real(&b.point), &to_real(&st.point)) < 1e-8);
        assert!(max_diff(&b.velocity.map(|v| -v), &st.velocity) < 1e-8);
        let neg = integrate_geodesic(&spec, &end.clone(), -1.5, 0.01).unwrap();
        assert!(max_diff(&to_real(&neg.last().point), &to_real(&st.point)) < 1e-8);
    }
}

#[test]
fn orbifold_floor_and_step_errors() {
    let flat = RadialPotentialSpec::euclidean();
    let inward = GeodesicState::new([c(0.1, 0.0), c(0.0, 0.0)], [-1.0, 0.0, 0.0, 0.0]);
    assert!(matches!(integrate_geodesic(&flat, &inward, 0.2, 1e-3), Err(GeomError::Proximity(_))));
    let start = GeodesicState::new([c(1e-4, 0.0), c(0.0, 0.0)], [1.0, 0.0, 0.0, 0.0]);
    assert!(matches!(integrate_geodesic(&flat, &start, 1.0, 0.1), Err(GeomError::Proximity(_))));
    let eh = RadialPotentialSpec::eguchi_hanson(1.0).unwrap();
    let st = GeodesicState::new([c(0.2, 0.1), c(0.1, -0.1)], [0.0, 1.0, 1.0, 0.0]).normalized(&eh).unwrap();
    assert!(matches!(integrate_geodesic(&eh, &st, 2.0, 0.5), Err(GeomError::Accuracy(_))));
    assert!(matches!(integrate_geodesic(&eh, &st, 2.0, 0.0), Err(GeomError::Parameter(_))));
}

#[test]
fn radial_ray_is_unit_speed_in_distance() {
    // along a unit-speed radial geodesic, √d grows exactly like arclength
    for a in [0.1, 1.0, 2.0] {
        let eh = RadialPotentialSpec::eguchi_hanson(a).unwrap();
        let dir = [c(0.6, 0.0), c(0.0, 0.8)];
        let z0 = [dir[0] * 0.5, dir[1] * 0.5];
        let st = GeodesicState::new(z0, to_real(&dir)).normalized(&eh).unwrap();
        let path = integrate_geodesic(&eh, &st, 2.0, 0.002).unwrap();
        let prof = divisor_distance_profile(a, &path).unwrap();
        let r0 = prof[0].d.sqrt();
        for (s, state) in prof.iter().zip(&path.states) {
            assert!((s.d.sqrt() - r0 - s.t).abs() < 1e-9, "a {a} t {}", s.t);
            let z = state.point;
            let cross = (z[0] * dir[1] - z[1] * dir[0]).norm();
            assert!(cross < 1e-12, "left the ray: {cross:e}");
        }
        assert!(prof.windows(2).all(|w| w[1].d > w[0].d && w[1].d_dot > 0.0));
    }
}

#[test]
fn theta_first_integral_holds() {
    for (a, u) in [(1.0, 1.0), (0.1, 2.0), (3.0, 0.5), (0.01, 4.0), (1e-4, 1.0), (0.5, 0.05)] {
        let p = radial_theta_first_integral(a, u, 2000).unwrap();
        assert!(p.max_residual < 1e-8, "a {a} u {u}: {:e}", p.max_residual);
        assert!((p.theta.last().unwrap() - 1.0).abs() < 1e-15);
        assert!(p.w_at_zero.abs() < 1e-10, "θ(0)² = {:e}", p.w_at_zero);
        let sd = simpson_s_of_theta(a, u, 1.0);
        assert!((p.sqrt_d - sd).abs() < 1e-10 * sd, "√d {} vs {}", p.sqrt_d, sd);
        for i in (0..p.s.len()).step_by(97) {
            let s_oracle = simpson_s_of_theta(a, u, p.theta[i]) / sd;
            assert!((p.s[i] - s_oracle).abs() < 1e-8, "a {a} u {u} s {} vs {}", p.s[i], s_oracle);
        }
    }
}

#[test]
fn theta_euclidean_limit_is_linear() {
    let p = radial_theta_first_integral(0.0, 2.5, 50).unwrap();
    assert!((p.sqrt_d - 2.5f64.sqrt()).abs() < 1e-15);
    for (s, th) in p.s.iter().zip(&p.theta) {
        assert!((s - th).abs() < 1e-14);
    }
    assert!(p.theta_s.iter().all(|t| (t - 1.0).abs() < 1e-13));
    assert!(matches!(radial_theta_first_integral(-1.0, 1.0, 10), Err(GeomError::Parameter(_))));
}

#[test]
fn equator_of_exceptional_sphere_is_unstable() {
    for a in [0.5, 1.0, 2.0] {
        let (chart, path) = ClosedGeodesic::zero_section_equator(a).unwrap();
        let orbit = integrate_geodesic(&chart, &path.start, path.period, 0.005).unwrap();
        assert!((orbit.length() - std::f64::consts::PI * a.sqrt()).abs() < 1e-12);
        let back = max_diff(&to_real(&orbit.last().point), &to_real(&path.start.point));
        assert!(back < 1e-6, "equator does not close: {back:e}");
        let r32 = second_variation_spectrum(&chart, &path, 32).unwrap();
        let r64 = second_variation_spectrum(&chart, &path, 64).unwrap();
        assert!(r64.min_eigenvalue < 0.0);
        // the sphere direction carries the Jacobi operator −d²/dt² − K with K = 4/a
        assert!((r64.min_eigenvalue + 4.0 / a).abs() < 1e-8, "min {}", r64.min_eigenvalue);
        assert!((r64.min_eigenvalue - r32.min_eigenvalue).abs() < 1e-4);
        assert!(r64.asymmetry < 1e-12 && r32.asymmetry < 1e-12);
        assert!(r64.nullity_estimate >= 1);
        let k = (24.0f64).sqrt() / a;
        assert!((r64.sup_riemann - k).abs() < 1e-9 * k, "sup {} vs {k}", r64.sup_riemann);
    }
}

#[test]
fn flat_closed_geodesic_is_stable() {
    let flat = RadialPotentialSpec::euclidean();
    let r = 8.0;
    for v in [[1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0, 1.0]] {
        let start = GeodesicState::new([c(2.0, 2.0), c(2.0, 2.0)], v);
        let shift = v.map(|x| x * r);
        let path = ClosedGeodesic { start, period: r, shift };
        let rep = second_variation_spectrum(&flat, &path, 16).unwrap();
        assert!(rep.min_eigenvalue >= -1e-8);
        assert!(rep.nullity_estimate >= 3);
        assert_eq!(rep.sup_riemann, 0.0);
        let first = (2.0 * std::f64::consts::PI / r).powi(2);
        assert!((rep.low_spectrum[4] - first).abs() < 1e-10);
    }
}

#[test]
fn open_path_is_rejected() {
    let flat = RadialPotentialSpec::euclidean();
    let start = GeodesicState::new([c(2.0, 2.0), c(2.0, 2.0)], [1.0, 0.0, 0.0, 0.0]);
    let path = ClosedGeodesic { start, period: 8.0, shift: [7.5, 0.0, 0.0, 0.0] };
    assert!(matches!(second_variation_spectrum(&flat, &path, 4), Err(GeomError::Precondition(_))));
}

#[test]
fn curved_equators_are_unstable() {
    let scan = equator_stability_scan(&[0.25, 0.5, 1.0, 4.0, 9.0], 8).unwrap();
    for (sup, min) in scan {
        assert!(sup > 0.1);
        assert!(min < 0.0, "sup {sup} min {min}");
    }
}

#[test]
fn christoffel_defect_basics() {
    let eh = RadialPotentialSpec::eguchi_hanson(0.7).unwrap();
    let flat = RadialPotentialSpec::euclidean();
    let z = [c(0.4, -0.3), c(0.5, 0.6)];
    let same = christoffel_defect(&eh, &eh, &z).unwrap();
    assert_eq!(same.norm, 0.0);
    let d = christoffel_defect(&flat, &eh, &z).unwrap();
    assert!(d.symmetry_defect() < 1e-14);
    let closed = eh_christoffel_closed_form(0.7, &z);
    for l in 0..2 {
        for m in 0..2 {
            for a in 0..2 {
                assert!((d.psi[l][m][a] - closed[l][m][a]).norm() < 1e-12);
            }
        }
    }
    // Euclidean norm of the EH Christoffel tensor
    let n2: f64 = closed.iter().flatten().flatten().map(|x| x.norm_sqr()).sum();
    assert!((d.norm - n2.sqrt()).abs() < 1e-12);
}

#[test]
fn christoffel_defect_scales_like_a_squared() {
    let z = [c(1.05f64.sqrt(), 0.0), c(0.0, 0.0)];
    let (norms, slope) = christoffel_defect_scaling(&DEFAULT_A_GRID, SCALING_DELTA, &z).unwrap();
    assert!((slope - 2.0).abs() < 0.1, "slope {slope}");
    assert!((loglog_slope(&DEFAULT_A_GRID, &norms) - slope).abs() < 1e-12);
}

#[test]
fn acceleration_identity_along_neck_geodesics() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let flat = RadialPotentialSpec::euclidean();
    for _ in 0..10 {
        let a = rng.random_range(0.02..0.2);
        let glued = RadialPotentialSpec::glued(a, SCALING_DELTA).unwrap();
        // the cutoff's high derivatives grow towards the neck edges, which the
        // difference stencil has to resolve
        let z = random_point(&mut rng, 1.1, 1.4);
        let st = GeodesicState::new(z, random_velocity(&mut rng)).normalized(&glued).unwrap();
        let path = integrate_geodesic(&glued, &st, 0.02, 2.5e-4).unwrap();
        let res = acceleration_identity_residual(&flat, &glued, &path).unwrap();
        assert!(res < 1e-9, "a {a}: residual {res:e}");
    }
}

#[test]
fn stationary_points_match_radial_velocity() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let h = 1e-3;
    for _ in 0..100 {
        let (spec, st) = random_eh_state(&mut rng);
        let a = spec.a;
        let tang = tangential(&st).normalized(&spec).unwrap();
        for (launch, stationary) in [(tang, true), (st, false)] {
            let path = integrate_geodesic(&spec, &launch, 2.0 * h, h).unwrap();
            let p = divisor_distance_profile(a, &path).unwrap();
            assert_eq!(p[0].d_dot.abs() < 1e-9, p[0].re_z_zdot.abs() < 1e-9);
            assert_eq!(p[0].d_dot.abs() < 1e-9, stationary);
            // chain-rule ḋ against a central difference of d at the midpoint
            let fd = (p[2].d - p[0].d) / (2.0 * h);
            assert!((fd - p[1].d_dot).abs() < 1e-6, "ḋ {} vs {fd}", p[1].d_dot);
        }
    }
}

#[test]
fn second_derivative_at_stationary_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    let h = 1e-3;
    for _ in 0..20 {
        let (spec, st) = random_eh_state(&mut rng);
        let a = spec.a;
        let st = tangential(&st).normalized(&spec).unwrap();
        let fwd = divisor_distance_profile(a, &integrate_geodesic(&spec, &st, 2.0 * h, h).unwrap()).unwrap();
        let bwd = divisor_distance_profile(a, &integrate_geodesic(&spec, &st, -2.0 * h, h).unwrap()).unwrap();
        let fd = (-fwd[2].d + 16.0 * fwd[1].d - 30.0 * fwd[0].d + 16.0 * bwd[1].d - bwd[2].d) / (12.0 * h * h);
        let s = fwd[0];
        assert!((s.d_ddot - fd).abs() < 1e-6 * (1.0 + fd.abs()), "d̈ {} vs fd {fd}", s.d_ddot);
        assert!((s.d_ddot_closed_form_corrected - s.d_ddot).abs() < 1e-10 * (1.0 + s.d_ddot.abs()));
    }
}

#[test]
fn stated_closed_form_holds_on_the_unit_sphere_only() {
    let eh = RadialPotentialSpec::eguchi_hanson(1.0).unwrap();
    let on = GeodesicState::new([c(0.6, 0.0), c(0.0, 0.8)], [0.0, 0.3, 0.4, 0.5]);
    let off = GeodesicState::new([c(0.6, 0.3), c(0.2, -0.7)], [0.3, 0.5, 0.5, 0.0]);
    let eval = |st: &GeodesicState| {
        let st = tangential(st).normalized(&eh).unwrap();
        divisor_distance_profile(1.0, &integrate_geodesic(&eh, &st, 1e-3, 1e-3).unwrap()).unwrap()[0]
    };
    let s = eval(&on);
    assert!((s.d_ddot_closed_form - s.d_ddot).abs() < 1e-12);
    let s = eval(&off);
    assert!((s.d_ddot_closed_form - s.d_ddot).abs() > 1e-2, "{} {}", s.d_ddot_closed_form, s.d_ddot);
    assert!((s.d_ddot_closed_form_corrected - s.d_ddot).abs() < 1e-12);
}

#[test]
fn tangential_launch_has_no_maximum() {
    for a in [0.01, 0.05, 0.1] {
        let eh = RadialPotentialSpec::eguchi_hanson(a).unwrap();
        for v in [[0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0]] {
            let st = GeodesicState::new([c(1.0, 0.0), c(0.0, 0.0)], v).normalized(&eh).unwrap();
            let path = integrate_geodesic(&eh, &st, 0.01, 0.01).unwrap();
            let s = divisor_distance_profile(a, &path).unwrap()[0];
            assert!(s.d_dot.abs() < 1e-15);
            assert!(s.d_ddot > 0.0, "a {a}: d̈ = {}", s.d_ddot);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, failure_persistence: None, ..ProptestConfig::default() })]
    #[test]
    fn reversal_is_an_involution(a in 0.2f64..2.0, x in -1.0f64..1.0, y in 1.0f64..1.5, v in prop::array::uniform4(-1.0f64..1.0)) {
        prop_assume!(v.iter().map(|t| t * t).sum::<f64>() > 0.01);
        let spec = RadialPotentialSpec::eguchi_hanson(a).unwrap();
        let st = GeodesicState::new([c(x * a.sqrt(), y * a.sqrt()), c(0.3, -0.2)], v).normalized(&spec).unwrap();
        let fwd = integrate_geodesic(&spec, &st, 0.5, 0.005).unwrap();
        let back = integrate_geodesic(&spec, fwd.last(), -0.5, 0.005).unwrap();
        prop_assert!(max_diff(&to_real(&back.last().point), &to_real(&st.point)) < 1e-8);
        prop_assert!(fwd.energy_drift() < 1e-9);
    }
}
