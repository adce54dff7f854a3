use kummer::metric::{c, metric_at};
use kummer::potentials::*;

// f64 evaluation of φ'' cancels terms of size (a/u)² times the result
fn conditioning(a: f64, u: f64) -> f64 {
    1.0 + (a / u).powi(2)
}

#[test]
fn eguchi_hanson_is_ricci_flat_radially() {
    for a in [0.1, 0.7, 1.0] {
        let spec = RadialPotentialSpec::eguchi_hanson(a).unwrap();
        for k in 0..=400 {
            let u = 1e-3 * (1e4f64).powf(k as f64 / 400.0);
            let dd = eguchi_hanson_series_dd(a, u, 2).unwrap();
            let det: f64 = (dd[1] * (dd[1] + dd[2] * (2.0 * u)) - 1.0).into();
            assert!(det.abs() < 1e-12, "a = {a}, u = {u}, double-double residual {det:e}");
            let j = eval_potential(&spec, u, 2).unwrap();
            let (d1, d2) = (j.coeffs()[1], 2.0 * j.coeffs()[2]);
            assert!((d1 * (d1 + u * d2) - 1.0).abs() < 8.0 * f64::EPSILON * conditioning(a, u), "u = {u}");
            assert!((u * d1 - (a * a + u * u).sqrt()).abs() < 1e-14 * (1.0 + u));
            assert!((f64::from(dd[1]) - d1).abs() < 4.0 * f64::EPSILON * d1);
        }
    }
}

#[test]
fn radial_determinant_matches_hermitian_determinant() {
    let specs = [
        RadialPotentialSpec::euclidean(),
        RadialPotentialSpec::eguchi_hanson(0.3).unwrap(),
        RadialPotentialSpec::glued(0.02, 0.1).unwrap(),
        RadialPotentialSpec::glued(0.1, 0.5).unwrap(),
    ];
    for spec in specs {
        for k in 0..=200 {
            let u = 1e-3 * (1e4f64).powf(k as f64 / 200.0);
            let j = eval_potential(&spec, u, 2).unwrap();
            let (d1, d2) = (j.coeffs()[1], 2.0 * j.coeffs()[2]);
            let z = [c(0.6 * u.sqrt(), 0.0), c(0.0, 0.8 * u.sqrt())];
            let g = metric_at(&spec, &z).unwrap();
            let tol = 1e-12f64.max(8.0 * f64::EPSILON * conditioning(spec.a, u));
            assert!((g.det() - d1 * (d1 + u * d2)).abs() < tol, "{spec:?} u = {u}");
        }
    }
}

#[test]
fn glued_potential_pieces() {
    let glued = RadialPotentialSpec::glued(0.05, 0.1).unwrap();
    let eh = RadialPotentialSpec::eguchi_hanson(0.05).unwrap();
    for u in [0.2, 0.7, 1.0] {
        assert_eq!(eval_potential(&glued, u, 4).unwrap(), eval_potential(&eh, u, 4).unwrap());
    }
    for u in [1.1, 1.3, 4.0] {
        assert_eq!(eval_potential(&glued, u, 4).unwrap(), eval_potential(&RadialPotentialSpec::euclidean(), u, 4).unwrap());
    }
}

#[test]
fn cutoff_is_monotone_and_flat_at_the_ends() {
    let mut prev = 1.0;
    for k in 0..=1000 {
        let u = 1.0 + 0.1 * k as f64 / 1000.0;
        let j = eval_cutoff(u, 0.1, 6).unwrap();
        assert!(j.value() <= prev + 1e-15);
        assert!(j.coeffs()[1] <= 1e-15);
        prev = j.value();
    }
    for u in [1.0, 1.1] {
        let j = eval_cutoff(u, 0.1, 6).unwrap();
        assert!(j.coeffs()[1..].iter().all(|&d| d == 0.0));
    }
    // derivatives decay to zero approaching the ends from inside
    let near = eval_cutoff(1.0 + 1e-3, 0.1, 6).unwrap();
    assert!(near.coeffs()[1..].iter().all(|d| d.abs() < 1e-10));
    let nearer = eval_cutoff(1.0 + 1e-4, 0.1, 6).unwrap();
    assert!(nearer.coeffs()[1..].iter().all(|d| d.abs() < 1e-150));
}

#[test]
fn measured_a_max_for_default_width() {
    let a_max = measure_a_max(0.1, 2001, 1e-6).unwrap();
    assert!((a_max - 0.04492).abs() < 2e-4, "a_max = {a_max}");
    assert!(plurisubharmonic_margin(&RadialPotentialSpec::glued(0.9 * a_max, 0.1).unwrap(), 2001).unwrap() > 0.0);
    assert!(plurisubharmonic_margin(&RadialPotentialSpec::glued(1.1 * a_max, 0.1).unwrap(), 2001).unwrap() < 0.0);
    // the scaling-study width covers the whole default grid
    let wide = measure_a_max(0.5, 2001, 1e-6).unwrap();
    assert!(DEFAULT_A_GRID.iter().all(|&a| a < wide), "a_max(0.5) = {wide}");
}

#[test]
fn neck_remainder_limits() {
    let vals: Vec<f64> = [1e-2, 1e-3, 1e-4].iter().map(|&a| neck_remainder(a, 0.1, 0.8, 2).unwrap().value()).collect();
    assert!((vals[0] - vals[1]).abs() < 1e-3 && (vals[1] - vals[2]).abs() < 1e-3, "{vals:?}");
    // a → 0 limit is −1/(2u) inside the inner zone
    assert!((vals[2] + 1.0 / 1.6).abs() < 1e-6);
    for a in [0.01, 0.02, 0.04] {
        let spec = RadialPotentialSpec::glued(a, 0.1).unwrap();
        for u in [0.5, 0.9, 1.03, 1.07, 1.5] {
            let xi = neck_remainder(a, 0.1, u, 2).unwrap();
            let phi = eval_potential(&spec, u, 0).unwrap().value();
            assert!((a * a * xi.value() + u - phi).abs() < 1e-14, "a = {a}, u = {u}");
            // the k-th derivative of χ scales like δ^{-k}
            for (k, v) in xi.coeffs().iter().enumerate() {
                assert!(v.abs() < 50.0 / 0.1f64.powi(k as i32), "a = {a}, u = {u}, k = {k}");
            }
        }
    }
}

#[test]
fn homothety_residuals() {
    let eh = RadialPotentialSpec::eguchi_hanson(0.3).unwrap();
    assert_eq!(homothety_transform(&RadialPotentialSpec::eguchi_hanson(1.0).unwrap(), 1.0, 0.5).unwrap(), 0.0);
    assert!(homothety_transform(&eh, 2.0, 0.5).unwrap() < 1e-12);
    let glued = RadialPotentialSpec::glued(0.3, 0.5).unwrap();
    for u in [0.5, 1.2, 1.4, 2.0] {
        let f = eval_potential(&glued, u, 0).unwrap().value();
        assert!(homothety_transform(&glued, 2.0, u).unwrap() < 1e-12 * (1.0 + 4.0 * f.abs()));
    }
    assert!(homothety_transform(&eh, -1.0, 0.5).is_err());
}
