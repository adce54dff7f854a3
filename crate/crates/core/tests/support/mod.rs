//! Finite-difference oracles shared by the integration tests.
#![allow(dead_code)]

use kummer::metric::{from_real, CPair};
use rand::RngExt;
use rand_chacha::ChaCha8Rng;

/// k-th central difference of `f` along one axis, with one Richardson step.
pub fn central_diff(f: &dyn Fn(f64) -> f64, x: f64, k: usize, h: f64) -> f64 {
    let raw = |h: f64| -> f64 {
        let mut s = 0.0;
        let mut binom = 1.0;
        for j in 0..=k {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            s += sign * binom * f(x + (k as f64 / 2.0 - j as f64) * h);
            binom *= (k - j) as f64 / (j + 1) as f64;
        }
        s / h.powi(k as i32)
    };
    let (d1, d2) = (raw(h), raw(h / 2.0));
    (4.0 * d2 - d1) / 3.0
}

/// Mixed partial `∂^alpha f` by nesting one-dimensional differences.
pub fn mixed_partial(f: &dyn Fn(&[f64]) -> f64, x: &[f64], alpha: &[usize], h: f64) -> f64 {
    fn rec(f: &dyn Fn(&[f64]) -> f64, x: &mut Vec<f64>, alpha: &[usize], var: usize, h: f64) -> f64 {
        if var == alpha.len() {
            return f(x);
        }
        if alpha[var] == 0 {
            return rec(f, x, alpha, var + 1, h);
        }
        let base = x[var];
        let g = |t: f64| -> f64 {
            let mut y = x.clone();
            y[var] = t;
            rec(f, &mut y, alpha, var + 1, h)
        };
        central_diff(&g, base, alpha[var], h)
    }
    rec(f, &mut x.to_vec(), alpha, 0, h)
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// Error relative to `max(|b|, floor)`.
pub fn scaled_err(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / b.abs().max(floor)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn unit(e: usize) -> [usize; 4] {
    let mut a = [0; 4];
    a[e] += 1;
    a
}

fn unit2(e: usize, f: usize) -> [usize; 4] {
    let mut a = unit(e);
    a[f] += 1;
    a
}

/// Levi-Civita connection and curvature of a real metric from its jets (Koszul formula).
///
/// `g` holds jets `G_ab` of order ≥ 2. Returns `Γ^c_{ab}` as `[c][a][b]` and
/// `Rm_abcd = ⟨R(e_a,e_b)e_c, e_d⟩` with `R(X,Y) = ∇_X∇_Y − ∇_Y∇_X`.
pub fn koszul(g: &[Vec<kummer::jets::Jet>]) -> ([[[f64; 4]; 4]; 4], [[[[f64; 4]; 4]; 4]; 4]) {
    use nalgebra::Matrix4;
    let gv = Matrix4::from_fn(|a, b| g[a][b].value());
    let gi = gv.try_inverse().expect("metric invertible");
    let dg = |e: usize, a: usize, b: usize| g[a][b].partial(&unit(e));
    let ddg = |e: usize, f: usize, a: usize, b: usize| g[a][b].partial(&unit2(e, f));
    let k = |a: usize, b: usize, d: usize| dg(a, b, d) + dg(b, a, d) - dg(d, a, b);
    let dk = |e: usize, a: usize, b: usize, d: usize| ddg(e, a, b, d) + ddg(e, b, a, d) - ddg(e, d, a, b);
    let mut gamma = [[[0.0; 4]; 4]; 4];
    let mut dgamma = [[[[0.0; 4]; 4]; 4]; 4];
    for e in 0..4 {
        let dge = Matrix4::from_fn(|a, b| dg(e, a, b));
        let dgi = -(gi * dge * gi);
        for cc in 0..4 {
            for a in 0..4 {
                for b in 0..4 {
                    let mut s = 0.0;
                    for d in 0..4 {
                        s += 0.5 * dgi[(cc, d)] * k(a, b, d) + 0.5 * gi[(cc, d)] * dk(e, a, b, d);
                    }
                    dgamma[e][cc][a][b] = s;
                }
            }
        }
    }
    for cc in 0..4 {
        for a in 0..4 {
            for b in 0..4 {
                gamma[cc][a][b] = (0..4).map(|d| 0.5 * gi[(cc, d)] * k(a, b, d)).sum();
            }
        }
    }
    let mut rm = [[[[0.0; 4]; 4]; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            for cc in 0..4 {
                for e in 0..4 {
                    let mut r = dgamma[a][e][b][cc] - dgamma[b][e][a][cc];
                    for f in 0..4 {
                        r += gamma[f][b][cc] * gamma[e][a][f] - gamma[f][a][cc] * gamma[e][b][f];
                    }
                    for d in 0..4 {
                        rm[a][b][cc][d] += gv[(e, d)] * r;
                    }
                }
            }
        }
    }
    (gamma, rm)
}

/// A point with `|z|² ∈ [u_lo, u_hi)` in a uniformly random direction.
pub fn random_point(rng: &mut ChaCha8Rng, u_lo: f64, u_hi: f64) -> CPair {
    let mut x = [0.0; 4];
    for v in &mut x {
        *v = rng.random_range(-1.0..1.0);
    }
    let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let r = rng.random_range(u_lo..u_hi).sqrt();
    from_real(&x.map(|v| v * r / n))
}
