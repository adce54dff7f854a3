//! Radially symmetric complex Monge-Ampère equation `Φ'·(uΦ')' = F(u)`.
//!
//! With `h = uΦ'` the equation becomes `(h²)' = 2uF`, so `h` is a quadrature and `Φ`
//! a second one. The neck experiment solves for the correction `φ` that makes a glued
//! potential have constant determinant on an annulus.

use std::cell::Cell;
use std::num::NonZeroUsize;
use std::sync::{Arc, OnceLock};

use gauss_quad::GaussLegendre;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{GeomError, Result};
use crate::fit::loglog_slope;
use crate::potentials::{eval_potential, plurisubharmonic_margin, RadialPotentialSpec};

pub type RadialFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

pub const DEFAULT_NODES: usize = 601;
pub const DEFAULT_QUAD_TOL: f64 = 1e-14;
/// Annulus of the neck experiment.
pub const NECK_RANGE: (f64, f64) = (0.5, 2.0);
pub const CHECK_POINTS: usize = 32;

const GL_NODES: usize = 20;
const MAX_DEPTH: usize = 40;

fn gl() -> &'static GaussLegendre {
    static GL: OnceLock<GaussLegendre> = OnceLock::new();
    GL.get_or_init(|| GaussLegendre::new(NonZeroUsize::new(GL_NODES).expect("nonzero")))
}

/// Adaptive Gauss-Legendre: bisects until one panel and its two halves agree to `tol`.
pub fn integrate_adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, whole: f64, tol: f64, depth: usize) -> f64 {
        let m = 0.5 * (a + b);
        let (l, r) = (gl().integrate(a, m, f), gl().integrate(m, b, f));
        if depth >= MAX_DEPTH || (l + r - whole).abs() <= tol * (1.0 + (l + r).abs()) {
            return l + r;
        }
        rec(f, a, m, l, 0.5 * tol, depth + 1) + rec(f, m, b, r, 0.5 * tol, depth + 1)
    }
    if a == b {
        return 0.0;
    }
    rec(f, a, b, gl().integrate(a, b, f), tol, 0)
}

/// Integrates a fallible integrand, returning the first error it raised.
fn integrate_checked(f: &dyn Fn(f64) -> Result<f64>, a: f64, b: f64, tol: f64) -> Result<f64> {
    let err: Cell<Option<GeomError>> = Cell::new(None);
    let v = integrate_adaptive(
        &|s| match f(s) {
            Ok(v) => v,
            Err(e) => {
                let prev = err.take();
                err.set(prev.or(Some(e)));
                0.0
            }
        },
        a,
        b,
        tol,
    );
    match err.into_inner() {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

fn check_rhs(f: &RadialFn, u: f64) -> Result<f64> {
    let v = f(u);
    if v >= 0.0 {
        Ok(v)
    } else {
        Err(GeomError::Parameter(format!("right-hand side is not Kähler: F({u}) = {v}")))
    }
}

#[derive(Clone)]
pub struct RadialMASolution {
    pub grid: Vec<f64>,
    /// `h = uΦ'` at the grid nodes.
    pub h: Vec<f64>,
    /// `Φ` at the nodes, normalised by `Φ(u₁) = 0`; `−∞` at `u₀ = 0` when `h₀ > 0`.
    pub phi: Vec<f64>,
    pub f: RadialFn,
    pub h0: f64,
    pub tol: f64,
}

impl std::fmt::Debug for RadialMASolution {
    fn fmt(&self, fm: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fm.debug_struct("RadialMASolution")
            .field("range", &(self.grid[0], self.grid[self.grid.len() - 1]))
            .field("nodes", &self.grid.len())
            .field("h0", &self.h0)
            .finish()
    }
}

pub fn solve_radial_ma(f: RadialFn, h0: f64, range: (f64, f64)) -> Result<RadialMASolution> {
    let n = DEFAULT_NODES;
    let grid = (0..n).map(|i| range.0 + (range.1 - range.0) * i as f64 / (n - 1) as f64).collect();
    solve_radial_ma_on(f, h0, grid, DEFAULT_QUAD_TOL)
}

/// Solves on an increasing grid with nonnegative nodes.
pub fn solve_radial_ma_on(f: RadialFn, h0: f64, grid: Vec<f64>, tol: f64) -> Result<RadialMASolution> {
    if grid.len() < 2 || grid.windows(2).any(|w| !(w[1] > w[0])) || !(grid[0] >= 0.0) {
        return Err(GeomError::Parameter("grid must be increasing and nonnegative with two or more nodes".into()));
    }
    if !(h0 >= 0.0) {
        return Err(GeomError::Parameter(format!("h0 must be nonnegative, got {h0}")));
    }
    for &u in &grid {
        check_rhs(&f, u)?;
    }
    let mut h2 = vec![h0 * h0];
    for w in grid.windows(2) {
        let inc = integrate_checked(&|s| Ok(2.0 * s * check_rhs(&f, s)?), w[0], w[1], tol)?;
        h2.push(h2[h2.len() - 1] + inc);
    }
    let h: Vec<f64> = h2.iter().map(|v| v.sqrt()).collect();
    let mut sol = RadialMASolution { grid, h, phi: Vec::new(), f, h0, tol };
    let n = sol.grid.len();
    let mut phi = vec![0.0; n];
    for i in (0..n - 1).rev() {
        let (a, b) = (sol.grid[i], sol.grid[i + 1]);
        phi[i] = if a == 0.0 && h0 > 0.0 {
            f64::NEG_INFINITY
        } else {
            phi[i + 1] - integrate_checked(&|s| Ok(sol.h_from(i, s)? / s), a, b, tol)?
        };
    }
    sol.phi = phi;
    Ok(sol)
}

impl RadialMASolution {
    pub fn range(&self) -> (f64, f64) {
        (self.grid[0], self.grid[self.grid.len() - 1])
    }

    fn h_from(&self, i: usize, u: f64) -> Result<f64> {
        let inc = integrate_checked(&|s| Ok(2.0 * s * check_rhs(&self.f, s)?), self.grid[i], u, self.tol)?;
        Ok((self.h[i] * self.h[i] + inc).sqrt())
    }

    fn node_below(&self, u: f64) -> usize {
        self.grid.partition_point(|g| *g <= u).saturating_sub(1).min(self.grid.len() - 2)
    }

    /// `h(u)` anywhere in the range.
    pub fn h_at(&self, u: f64) -> Result<f64> {
        let (lo, hi) = self.range();
        if !(u >= lo && u <= hi) {
            return Err(GeomError::OutOfRegion(format!("u = {u} outside [{lo}, {hi}]")));
        }
        self.h_from(self.node_below(u), u)
    }

    /// `Φ'(u) = h/u`.
    pub fn phi_prime_at(&self, u: f64) -> Result<f64> {
        Ok(self.h_at(u)? / u)
    }

    /// `(uΦ')'` by a Richardson-extrapolated five-point difference of `h`.
    pub fn h_prime_fd(&self, u: f64) -> Result<f64> {
        let (lo, hi) = self.range();
        let step = (1e-3 * (hi - lo)).min(0.24 * (u - lo)).min(0.24 * (hi - u));
        if !(step > 0.0) {
            return Err(GeomError::OutOfRegion(format!("u = {u} is on the boundary")));
        }
        let d = |k: f64| -> Result<f64> {
            let e = step * k;
            Ok((self.h_at(u - 2.0 * e)? - 8.0 * self.h_at(u - e)? + 8.0 * self.h_at(u + e)? - self.h_at(u + 2.0 * e)?)
                / (12.0 * e))
        };
        let (d1, d2) = (d(1.0)?, d(0.5)?);
        Ok((16.0 * d2 - d1) / 15.0)
    }

    /// `Φ'·(uΦ')' − F` with `(uΦ')'` from differences of `h`, not from the equation.
    pub fn residual_at(&self, u: f64) -> Result<f64> {
        Ok(self.phi_prime_at(u)? * self.h_prime_fd(u)? - (self.f)(u))
    }

    /// Chebyshev points of the first kind mapped into the range.
    pub fn check_points(&self, n: usize) -> Vec<f64> {
        let (lo, hi) = self.range();
        (0..n)
            .map(|k| {
                let x = (std::f64::consts::PI * (2 * k + 1) as f64 / (2 * n) as f64).cos();
                0.5 * (lo + hi) + 0.5 * (hi - lo) * x
            })
            .collect()
    }

    pub fn max_residual(&self, n: usize) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for u in self.check_points(n) {
            worst = worst.max(self.residual_at(u)?.abs());
        }
        Ok(worst)
    }
}

/// `(λ₁+λ₂)/2 − √(λ₁λ₂)` for the eigenvalue ratios `λ = g̃/g` of two radial metrics
/// with eigenvalues `(Φ', (uΦ')')`.
pub fn lower_bound_slack(g: [f64; 2], g_tilde: [f64; 2]) -> Result<f64> {
    let l = [g_tilde[0] / g[0], g_tilde[1] / g[1]];
    if !(g[0] > 0.0 && g[1] > 0.0 && l[0] > 0.0 && l[1] > 0.0) {
        return Err(GeomError::DegenerateMetric(format!("eigenvalues {g:?}, {g_tilde:?}")));
    }
    Ok(0.5 * (l[0] + l[1]) - (l[0] * l[1]).sqrt())
}

#[derive(Debug, Clone, Serialize)]
pub struct NeckSample {
    pub u: f64,
    pub phi: f64,
    pub lap_phi: f64,
    /// `(Φ_a', (uΦ_a')')`.
    pub background: [f64; 2],
    /// `(Φ̃', (uΦ̃')')`.
    pub total: [f64; 2],
    /// `2(e^ψ − 1) − 2Δφ − (Δφ)² + |∇²φ|²_g` with `e^ψ = A/det g`.
    pub norm_ma: f64,
    pub lower_bound_slack: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct NeckCorrection {
    pub a: f64,
    pub delta: f64,
    pub range: (f64, f64),
    /// `1 − a²/(u₁² − u₀²)`: volume matching on the annulus.
    pub a_model: f64,
    /// `h̃(u₀)` chosen so that `φ(u₁) = 0`.
    pub h_tilde0: f64,
    pub sup_phi: f64,
    pub sup_lap_phi: f64,
    pub min_lap_phi: f64,
    pub max_norm_ma: f64,
    /// `max |Φ̃'(uΦ̃')' − A|` at Chebyshev points.
    pub max_ma_residual: f64,
    pub samples: Vec<NeckSample>,
    #[serde(skip)]
    pub total: Option<RadialMASolution>,
}

fn neck_grid(range: (f64, f64), delta: f64, n: usize) -> Vec<f64> {
    let mut g: Vec<f64> = (0..n).map(|i| range.0 + (range.1 - range.0) * i as f64 / (n - 1) as f64).collect();
    g.extend([1.0, 1.0 + delta].iter().filter(|x| **x > range.0 && **x < range.1));
    g.sort_by(f64::total_cmp);
    g.dedup_by(|x, y| (*x - *y).abs() < 1e-12);
    g
}

/// Background data `(h_a, Φ_a', (uΦ_a')')` at `u`.
fn background(spec: &RadialPotentialSpec, u: f64) -> Result<(f64, f64, f64)> {
    let j = eval_potential(spec, u, 2)?;
    let c = j.coeffs();
    let (d1, d2) = (c[1], 2.0 * c[2]);
    Ok((u * d1, d1, d1 + u * d2))
}

pub fn neck_correction_experiment(a: f64, delta: f64) -> Result<NeckCorrection> {
    neck_correction_with(a, delta, DEFAULT_NODES, DEFAULT_QUAD_TOL)
}

pub fn neck_correction_with(a: f64, delta: f64, nodes: usize, tol: f64) -> Result<NeckCorrection> {
    let (u0, u1) = NECK_RANGE;
    let spec = if a == 0.0 {
        RadialPotentialSpec { delta, ..RadialPotentialSpec::euclidean() }
    } else {
        RadialPotentialSpec::glued(a, delta)?
    };
    spec.validate()?;
    if a > 0.0 && plurisubharmonic_margin(&spec, 2001)? <= 0.0 {
        return Err(GeomError::Parameter(format!("a = {a} is outside the plurisubharmonic range for delta = {delta}")));
    }
    let a_model = 1.0 - a * a / (u1 * u1 - u0 * u0);
    let h_a = |s: f64| -> Result<f64> { Ok(background(&spec, s)?.0) };
    let h_tilde = |x: f64, s: f64| (x * x + a_model * (s * s - u0 * u0)).sqrt();

    // Newton on G(x) = ∫ (h̃_x − h_a)/s, which is increasing in x
    let mut x = h_a(u0)?;
    for _ in 0..50 {
        let g = integrate_checked(&|s| Ok((h_tilde(x, s) - h_a(s)?) / s), u0, u1, tol)?;
        let dg = integrate_adaptive(&|s| x / (h_tilde(x, s) * s), u0, u1, tol);
        let step = g / dg;
        x -= step;
        if step.abs() <= 1e-16 * x {
            break;
        }
    }
    let h_tilde0 = x;

    let grid = neck_grid(NECK_RANGE, delta, nodes);
    let total = solve_radial_ma_on(Arc::new(move |_| a_model), h_tilde0, grid.clone(), tol)?;

    let mut phi = vec![0.0; grid.len()];
    for i in 1..grid.len() {
        phi[i] = phi[i - 1]
            + integrate_checked(&|s| Ok((h_tilde(h_tilde0, s) - h_a(s)?) / s), grid[i - 1], grid[i], tol)?;
    }
    let mut samples = Vec::with_capacity(grid.len());
    for (i, &u) in grid.iter().enumerate() {
        let (ha, p1, hp) = background(&spec, u)?;
        let ht = total.h[i];
        let ht_prime = u * a_model / ht;
        let mu = [(ht - ha) / u / p1, (ht_prime - hp) / hp];
        let lap = mu[0] + mu[1];
        let e_psi = a_model / (p1 * hp);
        samples.push(NeckSample {
            u,
            phi: phi[i],
            lap_phi: lap,
            background: [p1, hp],
            total: [ht / u, ht_prime],
            norm_ma: 2.0 * (e_psi - 1.0) - 2.0 * lap - lap * lap + mu[0] * mu[0] + mu[1] * mu[1],
            lower_bound_slack: lower_bound_slack([p1, hp], [ht / u, ht_prime])?,
        });
    }
    let max_ma_residual = {
        let mut w: f64 = 0.0;
        for u in total.check_points(CHECK_POINTS) {
            w = w.max((total.phi_prime_at(u)? * total.h_prime_fd(u)? - a_model).abs());
        }
        w
    };
    let fold = |f: &dyn Fn(&NeckSample) -> f64, init: f64, pick: fn(f64, f64) -> f64| {
        samples.iter().map(f).fold(init, pick)
    };
    Ok(NeckCorrection {
        a,
        delta,
        range: NECK_RANGE,
        a_model,
        h_tilde0,
        sup_phi: fold(&|s| s.phi.abs(), 0.0, f64::max),
        sup_lap_phi: fold(&|s| s.lap_phi.abs(), 0.0, f64::max),
        min_lap_phi: fold(&|s| s.lap_phi, f64::INFINITY, f64::min),
        max_norm_ma: fold(&|s| s.norm_ma.abs(), 0.0, f64::max),
        max_ma_residual,
        samples,
        total: Some(total),
    })
}

/// Minimum of `Tr_g(g̃)/2 − √(det g̃/det g)` over the experiment's nodes.
pub fn lower_bound_check(result: &NeckCorrection) -> f64 {
    result.samples.iter().map(|s| s.lower_bound_slack).fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, Serialize)]
pub struct NeckCorrectionScan {
    pub delta: f64,
    pub rows: Vec<NeckCorrection>,
    pub slope_sup_phi: f64,
    pub slope_sup_lap_phi: f64,
}

pub fn neck_correction_scan(a_grid: &[f64], delta: f64) -> Result<NeckCorrectionScan> {
    let rows: Vec<NeckCorrection> =
        a_grid.par_iter().map(|&a| neck_correction_experiment(a, delta)).collect::<Result<_>>()?;
    let a: Vec<f64> = rows.iter().map(|r| r.a).collect();
    let slope_sup_phi = loglog_slope(&a, &rows.iter().map(|r| r.sup_phi).collect::<Vec<_>>());
    let slope_sup_lap_phi = loglog_slope(&a, &rows.iter().map(|r| r.sup_lap_phi).collect::<Vec<_>>());
    Ok(NeckCorrectionScan { delta, rows, slope_sup_phi, slope_sup_lap_phi })
}
