mod support;

use kummer::metric::*;
use kummer::potentials::*;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::{koszul, loglog_slope, random_point};

fn point_at(u: f64, angle: f64) -> CPair {
    let r = u.sqrt();
    [c(r * angle.cos() * 0.6, r * angle.sin() * 0.6), c(-0.8 * r * angle.sin(), 0.8 * r * angle.cos())]
}

#[test]
fn eigenvalues_match_radial_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for a in [0.1, 0.5, 1.0] {
        let spec = RadialPotentialSpec::eguchi_hanson(a).unwrap();
        for _ in 0..50 {
            let z = random_point(&mut rng, 1e-2, 5.0);
            let u = z[0].norm_sqr() + z[1].norm_sqr();
            let s = (a * a + u * u).sqrt();
            let ev = metric_at(&spec, &z).unwrap().eigenvalues();
            assert!((ev[0] - u / s).abs() < 1e-11 * s / u);
            assert!((ev[1] - s / u).abs() < 1e-11 * s / u);
        }
    }
}

#[test]
fn jet_hessian_matches_closed_form_metric() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let specs = [
        RadialPotentialSpec::euclidean(),
        RadialPotentialSpec::eguchi_hanson(0.7).unwrap(),
        RadialPotentialSpec::glued(0.04, 0.1).unwrap(),
    ];
    for spec in specs {
        for _ in 0..50 {
            let z = random_point(&mut rng, 0.05, 2.0);
            let g = metric_at(&spec, &z).unwrap();
            let h = radial_metric_closed_form(&spec, &z).unwrap();
            assert!(g.is_hermitian(1e-14));
            for m in 0..2 {
                for n in 0..2 {
                    assert!((g.components[m][n] - h.components[m][n]).norm() < 1e-12 * (1.0 + h.components[m][n].norm()));
                }
            }
        }
    }
    let e = metric_at(&RadialPotentialSpec::euclidean(), &[c(0.3, -1.0), c(2.0, 0.1)]).unwrap();
    assert_eq!(e.components, [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]]);
}

#[test]
fn christoffel_matches_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let a = rng.random_range(0.05..1.5);
        let z = random_point(&mut rng, 0.05, 4.0);
        let spec = RadialPotentialSpec::eguchi_hanson(a).unwrap();
        let got = curvature_at(&spec, &z).unwrap().christoffel;
        let want = eh_christoffel_closed_form(a, &z);
        let scale = want.iter().flatten().flatten().map(|v| v.norm()).fold(1.0, f64::max);
        for l in 0..2 {
            for m in 0..2 {
                for al in 0..2 {
                    assert!((got[l][m][al] - got[l][al][m]).norm() < 1e-14 * scale);
                    assert!((got[l][m][al] - want[l][m][al]).norm() < 1e-11 * scale, "a = {a}, z = {z:?}");
                }
            }
        }
    }
}

#[test]
fn z_inner_product_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..100 {
        let a = rng.random_range(0.05..1.5);
        let z = random_point(&mut rng, 0.05, 4.0);
        let v = random_point(&mut rng, 0.5, 2.0);
        let u = z[0].norm_sqr() + z[1].norm_sqr();
        let g = metric_at(&RadialPotentialSpec::eguchi_hanson(a).unwrap(), &z).unwrap();
        let euc = v[0] * z[0].conj() + v[1] * z[1].conj();
        let lhs = g.inner(&z, &v);
        let rhs = euc * (u / (a * a + u * u).sqrt());
        assert!((lhs - rhs).norm() < 1e-12 * (1.0 + rhs.norm()));
    }
}

#[test]
fn eguchi_hanson_is_ricci_flat_with_known_kretschmann() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let a = rng.random_range(0.1..1.0);
        let z = random_point(&mut rng, 0.05, 5.0);
        let u = z[0].norm_sqr() + z[1].norm_sqr();
        let cb = curvature_at(&RadialPotentialSpec::eguchi_hanson(a).unwrap(), &z).unwrap();
        for row in cb.ricci {
            for r in row {
                assert!(r.norm() < 1e-10, "ricci {r} at a = {a}, u = {u}");
            }
        }
        let k = 24.0 * a.powi(4) / (a * a + u * u).powi(3);
        assert!((cb.kretschmann - k).abs() < 1e-10 * k);
    }
    let flat = curvature_at(&RadialPotentialSpec::euclidean(), &[c(0.5, 0.1), c(-0.2, 0.9)]).unwrap();
    assert!(flat.riemann.iter().flatten().flatten().flatten().all(|r| r.norm() == 0.0));
    assert_eq!(flat.kretschmann, 0.0);
}

#[test]
fn kahler_symmetries_in_the_neck() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let spec = RadialPotentialSpec::glued(0.04, 0.1).unwrap();
    for _ in 0..50 {
        let z = random_point(&mut rng, 1.01, 1.09);
        let r = curvature_at(&spec, &z).unwrap().riemann;
        let scale = r.iter().flatten().flatten().flatten().map(|v| v.norm()).fold(0.0, f64::max);
        assert!(scale > 1e-6, "{z:?} {scale}");
        for m in 0..2 {
            for n in 0..2 {
                for a in 0..2 {
                    for b in 0..2 {
                        assert!((r[m][n][a][b] - r[a][n][m][b]).norm() < 1e-11 * scale);
                        assert!((r[m][n][a][b] - r[m][b][a][n]).norm() < 1e-11 * scale);
                        assert!((r[m][n][a][b].conj() - r[n][m][b][a]).norm() < 1e-11 * scale);
                    }
                }
            }
        }
    }
}

#[test]
fn complex_tensors_agree_with_real_levi_civita() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let pots: Vec<Box<dyn KahlerPotential>> = vec![
        Box::new(RadialPotentialSpec::eguchi_hanson(0.6).unwrap()),
        Box::new(RadialPotentialSpec::glued(0.2, 0.5).unwrap()),
        Box::new(BundleChart::new(0.3).unwrap()),
    ];
    for pot in &pots {
        for _ in 0..10 {
            let z = match pot.chart() {
                ChartId::Bundle => [c(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)), c(rng.random_range(-0.7..0.7), rng.random_range(-0.7..0.7))],
                _ => random_point(&mut rng, 0.5, 1.6),
            };
            let geo = LocalGeometry::new(pot.as_ref(), &z, 4).unwrap();
            let (gamma, rm) = koszul(&geo.real_metric_jets());
            let gj = geo.real_christoffel_jets().unwrap();
            let rj = geo.real_riemann_jets().unwrap();
            let rscale = rm.iter().flatten().flatten().flatten().fold(1e-3, |m: f64, v| m.max(v.abs()));
            for cc in 0..4 {
                for a in 0..4 {
                    for b in 0..4 {
                        assert!((gj[cc][a][b].value() - gamma[cc][a][b]).abs() < 1e-11, "{:?}", pot.chart());
                        for d in 0..4 {
                            let got = rj[((a * 4 + b) * 4 + cc) * 4 + d].value();
                            assert!((got - rm[a][b][cc][d]).abs() < 1e-10 * rscale, "{:?} R{a}{b}{cc}{d}: {got} vs {}", pot.chart(), rm[a][b][cc][d]);
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn psi_vanishes_outside_the_neck_and_scales_like_a_squared() {
    let eh = RadialPotentialSpec::glued(0.04, 0.1).unwrap();
    for u in [0.3, 0.9, 1.2, 3.0] {
        let (psi, lap) = psi_at(&eh, &point_at(u, 0.4)).unwrap();
        assert!(psi.abs() < 1e-13 && lap.abs() < 1e-11, "u = {u}: {psi:e} {lap:e}");
    }
    let sup = |a: f64| {
        let spec = RadialPotentialSpec::glued(a, SCALING_DELTA).unwrap();
        (1..200)
            .map(|k| psi_at(&spec, &point_at(1.0 + SCALING_DELTA * k as f64 / 200.0, 1.1)).unwrap().0.abs())
            .fold(0.0, f64::max)
    };
    let sups: Vec<f64> = ASYMPTOTIC_A_GRID.iter().map(|&a| sup(a)).collect();
    let slope = loglog_slope(&ASYMPTOTIC_A_GRID, &sups);
    assert!((slope - 2.0).abs() < 0.05, "psi slope {slope}, sups {sups:?}");
    // on the coarse grid a = 0.2 sits near the plurisubharmonic limit and det g → 0 there
    let coarse: Vec<f64> = DEFAULT_A_GRID.iter().map(|&a| sup(a)).collect();
    let coarse_slope = loglog_slope(&DEFAULT_A_GRID, &coarse);
    assert!(coarse_slope > 2.0, "coarse psi slope {coarse_slope}");
}

fn sup_sqrt_kretschmann(a: f64) -> f64 {
    let spec = RadialPotentialSpec::glued(a, SCALING_DELTA).unwrap();
    (0..=100)
        .map(|k| curvature_at(&spec, &point_at(1.0 + SCALING_DELTA * k as f64 / 100.0, 0.3)).unwrap().kretschmann.sqrt())
        .fold(0.0, f64::max)
}

#[test]
fn neck_curvature_scales_like_a_squared() {
    let sups: Vec<f64> = ASYMPTOTIC_A_GRID.iter().map(|&a| sup_sqrt_kretschmann(a)).collect();
    let slope = loglog_slope(&ASYMPTOTIC_A_GRID, &sups);
    assert!((slope - 2.0).abs() < 0.1, "sqrt K slope {slope}, sups {sups:?}");
}

#[test]
fn bundle_chart_closed_form_and_pullback() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for a in [0.05, 0.3, 1.0] {
        for _ in 0..30 {
            let coords = [c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)), c(rng.random_range(-0.7..0.7), rng.random_range(-0.7..0.7))];
            let jet = bundle_chart_metric(a, &coords, false).unwrap();
            let closed = bundle_metric_closed_form(a, &coords);
            let pulled = bundle_pullback_metric(a, &coords, false).unwrap();
            for m in 0..2 {
                for n in 0..2 {
                    let s = 1.0 + closed.components[m][n].norm();
                    assert!((jet.components[m][n] - closed.components[m][n]).norm() < 1e-12 * s);
                    assert!((pulled.components[m][n] - closed.components[m][n]).norm() < 1e-10 * s);
                }
            }
            assert!((jet.det() - pulled.det()).abs() < 1e-10 * pulled.det());
        }
    }
}

#[test]
fn bundle_zero_section_is_a_round_sphere() {
    let g = bundle_chart_metric(0.1, &[c(0.0, 0.0), c(0.0, 0.0)], false).unwrap();
    assert!((g.components[0][0].re - 10.0).abs() < 1e-12 && (g.components[1][1].re - 0.1).abs() < 1e-14);
    for a in [0.05, 0.3] {
        for zeta in [c(0.0, 0.0), c(0.3, -0.4), c(0.0, 1.0)] {
            let ev = bundle_chart_metric(a, &[c(0.0, 0.0), zeta], false).unwrap().eigenvalues();
            let r = 1.0 + zeta.norm_sqr();
            let mut want = [r * r / a, a / (r * r)];
            want.sort_by(f64::total_cmp);
            assert!((ev[0] - want[0]).abs() < 1e-10 * want[0] && (ev[1] - want[1]).abs() < 1e-10 * want[1]);
        }
        // E is totally geodesic; its Riemannian curvature 4/a (hermitian holomorphic sectional 2/a)
        let chart = BundleChart::new(a).unwrap();
        let geo = LocalGeometry::new(&chart, &[c(0.0, 0.0), c(0.2, 0.1)], 4).unwrap();
        let (_, rm) = koszul(&geo.real_metric_jets());
        let gm = geo.metric().real_matrix();
        let sec = rm[2][3][3][2] / (gm[(2, 2)] * gm[(3, 3)] - gm[(2, 3)].powi(2));
        assert!((sec - 4.0 / a).abs() < 1e-9 * sec, "a = {a}: {sec}");
        let r = geo.riemann_values().unwrap();
        let g11 = geo.metric().components[1][1].re;
        assert!((r[1][1][1][1].re / (g11 * g11) - 2.0 / a).abs() < 1e-9 / a);
    }
}

#[test]
fn rescaled_bundle_eigenvalues_are_of_order_a() {
    let mut ratios = Vec::new();
    for a in [0.001, 0.01, 0.05, 0.1, 0.2] {
        let ev = bundle_chart_metric(a, &[c(1.0, 0.0), c(0.0, 0.0)], true).unwrap().eigenvalues();
        assert!(ev[0] > 0.1 * a && ev[1] < 10.0 * a, "a = {a}: {ev:?}");
        ratios.push(ev[1] / ev[0]);
        let pulled = bundle_pullback_metric(a, &[c(1.0, 0.0), c(0.0, 0.0)], true).unwrap().eigenvalues();
        assert!((pulled[0] - ev[0]).abs() < 1e-10 * a && (pulled[1] - ev[1]).abs() < 1e-10 * a);
    }
    assert!(ratios.windows(2).all(|w| (w[0] - w[1]).abs() < 1e-9), "{ratios:?}");
}

#[test]
fn kretschmann_profile_through_the_atlas() {
    for a in [0.1f64, 1.0] {
        for k in 0..200 {
            let u = 1e-4 * (5e4f64).powf(k as f64 / 199.0);
            let want = 24.0 * a.powi(4) / (a * a + u * u).powi(3);
            let got = eh_kretschmann(a, u).unwrap();
            assert!((got - want).abs() < 1e-10 * want, "a = {a}, u = {u}: {got} vs {want}");
        }
    }
    assert!(eh_kretschmann(1.0, 0.0).is_err());
}
