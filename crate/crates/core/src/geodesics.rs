//! Geodesic flow, radial first integrals, second-variation spectra and
//! Christoffel-defect diagnostics.
//!
//! States live in one chart's real frame `(x1, y1, x2, y2)`; the acceleration
//! comes from the complex Christoffels, `z̈^λ = −Γ^λ_{μα} ż^μ ż^α`.

use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{GeomError, Result};
use crate::fit::loglog_slope;
use crate::metric::{c, from_real, to_real, BundleChart, CPair, HermitianMetric, KahlerPotential, LocalGeometry, C64};
use crate::potentials::RadialPotentialSpec;

/// Orbifold-chart floor on `u`; below it a bundle chart must be used.
pub const U_MIN: f64 = 1e-6;
/// Largest embedded (4th vs 5th order) error accepted per step, relative to `1 + |y|∞`.
pub const STEP_TOL: f64 = 1e-9;
/// Eigenvalues of the second variation below this count towards the nullity.
pub const NULLITY_TOL: f64 = 1e-6;
/// A closed path must return to its start (up to its period shift) within this.
pub const CLOSURE_TOL: f64 = 1e-8;

const DP_A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const DP_B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const DP_B4: [f64; 7] =
    [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];

/// One Dormand-Prince step of an autonomous system; returns the 5th-order
/// update and the max-norm of the embedded error estimate.
fn dp54_step<const N: usize, F>(f: &mut F, y: &[f64; N], h: f64) -> Result<([f64; N], f64)>
where
    F: FnMut(&[f64; N]) -> Result<[f64; N]>,
{
    let mut k = [[0.0; N]; 7];
    for s in 0..7 {
        let mut ys = *y;
        for (j, kj) in k.iter().enumerate().take(s) {
            for i in 0..N {
                ys[i] += h * DP_A[s][j] * kj[i];
            }
        }
        k[s] = f(&ys)?;
    }
    let mut out = *y;
    let mut err: f64 = 0.0;
    for i in 0..N {
        let (mut d5, mut d4) = (0.0, 0.0);
        for s in 0..7 {
            d5 += DP_B5[s] * k[s][i];
            d4 += DP_B4[s] * k[s][i];
        }
        out[i] += h * d5;
        err = err.max((h * (d5 - d4)).abs());
    }
    Ok((out, err))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeodesicState {
    pub point: CPair,
    /// Real velocity in the chart frame `(x1, y1, x2, y2)`.
    pub velocity: [f64; 4],
}

impl GeodesicState {
    pub fn new(point: CPair, velocity: [f64; 4]) -> Self {
        Self { point, velocity }
    }

    pub fn zdot(&self) -> CPair {
        from_real(&self.velocity)
    }

    /// `|γ̇|²` for the Riemannian metric `Re⟨,⟩_g`.
    pub fn energy(&self, pot: &dyn KahlerPotential) -> Result<f64> {
        Ok(LocalGeometry::new(pot, &self.point, 2)?.metric().norm_sqr(&self.zdot()))
    }

    /// Same point, velocity rescaled to unit speed.
    pub fn normalized(&self, pot: &dyn KahlerPotential) -> Result<Self> {
        let e = self.energy(pot)?;
        if !(e > 0.0) {
            return Err(GeomError::Normalization(format!("velocity has energy {e}")));
        }
        let s = e.sqrt().recip();
        Ok(Self { point: self.point, velocity: self.velocity.map(|v| v * s) })
    }

    fn pack(&self) -> [f64; 8] {
        let x = to_real(&self.point);
        [x[0], x[1], x[2], x[3], self.velocity[0], self.velocity[1], self.velocity[2], self.velocity[3]]
    }

    fn unpack(y: &[f64; 8]) -> Self {
        Self { point: from_real(&y[..4]), velocity: [y[4], y[5], y[6], y[7]] }
    }
}

fn check_floor(pot: &dyn KahlerPotential, z: &CPair) -> Result<()> {
    match pot.orbifold_distance_sqr(z) {
        Some(u) if u < U_MIN => Err(GeomError::Proximity(u)),
        _ => Ok(()),
    }
}

/// `Σ Γ^λ_{μα} v^μ w^α`.
pub fn contract_christoffel(gamma: &[[[C64; 2]; 2]; 2], v: &CPair, w: &CPair) -> CPair {
    std::array::from_fn(|l| {
        let mut s = c(0.0, 0.0);
        for m in 0..2 {
            for a in 0..2 {
                s += gamma[l][m][a] * v[m] * w[a];
            }
        }
        s
    })
}

/// Complex acceleration `z̈ = −Γ(ż, ż)` of the geodesic through `state`.
pub fn acceleration(pot: &dyn KahlerPotential, state: &GeodesicState) -> Result<CPair> {
    check_floor(pot, &state.point)?;
    let gamma = LocalGeometry::new(pot, &state.point, 3)?.christoffel()?;
    let zd = state.zdot();
    Ok(contract_christoffel(&gamma, &zd, &zd).map(|x| -x))
}

#[derive(Debug, Clone, Serialize)]
pub struct GeodesicPath {
    pub times: Vec<f64>,
    pub states: Vec<GeodesicState>,
    pub energies: Vec<f64>,
    /// Largest embedded error estimate seen over all steps.
    pub max_step_error: f64,
}

impl GeodesicPath {
    pub fn last(&self) -> &GeodesicState {
        self.states.last().expect("a path has at least its initial state")
    }

    /// `max |E(t) − E(0)| / E(0)`.
    pub fn energy_drift(&self) -> f64 {
        let e0 = self.energies[0];
        self.energies.iter().map(|e| (e - e0).abs()).fold(0.0, f64::max) / e0.abs().max(f64::MIN_POSITIVE)
    }

    pub fn duration(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0) - self.times[0]
    }

    pub fn length(&self) -> f64 {
        self.energies[0].sqrt() * self.duration().abs()
    }
}

/// Integrates the geodesic equation from `state0` over time `t_final` (which may be
/// negative) with `ceil(|t_final|/h)` equal Dormand-Prince steps.
pub fn integrate_geodesic(
    pot: &dyn KahlerPotential,
    state0: &GeodesicState,
    t_final: f64,
    h: f64,
) -> Result<GeodesicPath> {
    if !(h > 0.0) || !t_final.is_finite() {
        return Err(GeomError::Parameter(format!("step {h}, time {t_final}")));
    }
    check_floor(pot, &state0.point)?;
    let n = ((t_final.abs() / h).ceil() as usize).max(1);
    let step = t_final / n as f64;
    let mut rhs = |y: &[f64; 8]| -> Result<[f64; 8]> {
        let s = GeodesicState::unpack(y);
        let acc = acceleration(pot, &s)?;
        Ok([y[4], y[5], y[6], y[7], acc[0].re, acc[0].im, acc[1].re, acc[1].im])
    };
    let mut y = state0.pack();
    let mut path = GeodesicPath {
        times: vec![0.0],
        states: vec![*state0],
        energies: vec![state0.energy(pot)?],
        max_step_error: 0.0,
    };
    for i in 1..=n {
        let (next, err) = dp54_step(&mut rhs, &y, step)?;
        let scale = 1.0 + next.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if err > STEP_TOL * scale {
            return Err(GeomError::Accuracy(format!(
                "embedded error {err:e} at t = {:.6}; step {h} is too large",
                i as f64 * step
            )));
        }
        path.max_step_error = path.max_step_error.max(err);
        y = next;
        let s = GeodesicState::unpack(&y);
        path.times.push(i as f64 * step);
        path.energies.push(s.energy(pot)?);
        path.states.push(s);
    }
    Ok(path)
}

/// Radial distance from the zero section, `√d(u) = ∫₀^{√u} t/(a²+t⁴)^{1/4} dt`.
///
/// The integrand has branch points at `|t| = √a`, so the quadrature uses
/// geometrically graded Gauss-Legendre panels starting at `√a/4`.
pub fn radial_sqrt_distance(a: f64, u: f64) -> Result<f64> {
    if !(a >= 0.0) || !(u > 0.0) {
        return Err(GeomError::Parameter(format!("a = {a}, u = {u}")));
    }
    let top = u.sqrt();
    if a == 0.0 {
        return Ok(top);
    }
    let gl = GaussLegendre::new(NonZeroUsize::new(24).expect("nonzero"));
    let f = |t: f64| t / (a * a + t.powi(4)).powf(0.25);
    let mut lo = 0.0;
    let mut hi = (0.25 * a.sqrt()).min(top);
    let mut sum = 0.0;
    loop {
        sum += gl.integrate(lo, hi, f);
        if hi >= top {
            break;
        }
        lo = hi;
        hi = (2.0 * hi).min(top);
    }
    Ok(sum)
}

/// Distance² to the zero section as a function of `u`, with its first two derivatives.
pub fn radial_distance_sqr_jet(a: f64, u: f64) -> Result<[f64; 3]> {
    let sd = radial_sqrt_distance(a, u)?;
    let q = a * a + u * u;
    let d1 = sd / q.powf(0.25);
    let d2 = 0.5 / q.sqrt() - 0.5 * sd * u / q.powf(1.25);
    Ok([sd * sd, d1, d2])
}

#[derive(Debug, Clone, Serialize)]
pub struct ThetaProfile {
    pub a: f64,
    pub u: f64,
    pub sqrt_d: f64,
    /// Grid on `(0, 1]`, increasing.
    pub s: Vec<f64>,
    pub theta: Vec<f64>,
    pub theta_s: Vec<f64>,
    /// `θ(0)²` from the integration; zero for the exact solution.
    pub w_at_zero: f64,
    /// Largest relative residual of the first integral over the grid.
    pub max_residual: f64,
}

/// Integrates the radial profile `θ(s)` backward from `θ(1) = 1` and checks the
/// first integral `∂_sθ = √d (a²+θ⁴u²)^{1/4}/(θu)`.
///
/// The ODE is integrated for `w = θ²`, which satisfies
/// `w'' = u² w w'² / (2(a²+u²w²))` and stays smooth at `s = 0` where `θ ∼ √s`.
pub fn radial_theta_first_integral(a: f64, u: f64, n_steps: usize) -> Result<ThetaProfile> {
    if n_steps == 0 || !(a >= 0.0) {
        return Err(GeomError::Parameter(format!("n_steps = {n_steps}, a = {a}")));
    }
    let sqrt_d = radial_sqrt_distance(a, u)?;
    let a2 = a * a;
    let u2 = u * u;
    let slope = |w: f64| 2.0 * sqrt_d * (a2 + u2 * w * w).powf(0.25) / u;
    // at a = 0 the w-form is singular at w = 0 while θ'' = 0 is regular, so integrate
    // θ there and report w = θ², w' = 2θθ'
    let mut rhs = |y: &[f64; 2]| -> Result<[f64; 2]> {
        let (w, p) = (y[0], y[1]);
        if a == 0.0 {
            return Ok([p, 0.0]);
        }
        Ok([p, u2 * w * p * p / (2.0 * (a2 + u2 * w * w))])
    };
    let to_w = |y: [f64; 2]| if a == 0.0 { [y[0] * y[0], 2.0 * y[0] * y[1]] } else { y };
    let h = -1.0 / n_steps as f64;
    let mut y = if a == 0.0 { [1.0, 0.5 * slope(1.0)] } else { [1.0, slope(1.0)] };
    let mut rev = vec![(1.0, to_w(y))];
    for i in 1..=n_steps {
        let (next, err) = dp54_step(&mut rhs, &y, h)?;
        if err > STEP_TOL * (1.0 + next[1].abs()) {
            return Err(GeomError::Accuracy(format!("theta integration error {err:e}; use more steps")));
        }
        y = next;
        rev.push((1.0 + i as f64 * h, to_w(y)));
    }
    let w_at_zero = to_w(y)[0];
    rev.pop();
    rev.reverse();
    let mut out = ThetaProfile {
        a,
        u,
        sqrt_d,
        s: Vec::with_capacity(n_steps),
        theta: Vec::with_capacity(n_steps),
        theta_s: Vec::with_capacity(n_steps),
        w_at_zero,
        max_residual: 0.0,
    };
    for (s, [w, p]) in rev {
        let th = w.sqrt();
        out.s.push(s);
        out.theta.push(th);
        out.theta_s.push(p / (2.0 * th));
        let r = (p - slope(w)).abs() / slope(w);
        out.max_residual = out.max_residual.max(r);
    }
    Ok(out)
}

/// A closed geodesic given by its initial state and period; `shift` is the
/// translation (a lattice vector, or zero) relating the end point to the start.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClosedGeodesic {
    pub start: GeodesicState,
    pub period: f64,
    pub shift: [f64; 4],
}

impl ClosedGeodesic {
    /// Equator `|ζ| = 1` of the zero section, unit speed, in the bundle chart of Eguchi-Hanson(a).
    /// `E` is the round sphere `a·g_FS`, so the period is `π√a`.
    pub fn zero_section_equator(a: f64) -> Result<(BundleChart, Self)> {
        let chart = BundleChart::new(a)?;
        let start = GeodesicState::new([c(0.0, 0.0), c(1.0, 0.0)], [0.0, 0.0, 0.0, 2.0 / a.sqrt()]);
        let period = std::f64::consts::PI * a.sqrt();
        Ok((chart, Self { start: start.normalized(&chart)?, period, shift: [0.0; 4] }))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub n_modes: usize,
    pub length: f64,
    pub min_eigenvalue: f64,
    pub nullity_estimate: usize,
    /// `sup √|Rm|²` along the path.
    pub sup_riemann: f64,
    /// Lowest eigenvalues, ascending (at most 16).
    pub low_spectrum: Vec<f64>,
    /// `max |Q − Qᵀ| / max |Q|` of the assembled form.
    pub asymmetry: f64,
    pub closure_defect: f64,
}

struct NodeData {
    g: [[f64; 4]; 4],
    /// `cv[c][b] = Γ^c_{ab} γ̇^a`.
    cv: [[f64; 4]; 4],
    /// `s[c][d] = Rm(γ̇, e_c, e_d, γ̇)`.
    s: [[f64; 4]; 4],
    kretschmann: f64,
}

fn node_data(pot: &dyn KahlerPotential, st: &GeodesicState) -> Result<NodeData> {
    let lg = LocalGeometry::new(pot, &st.point, 4)?;
    let gj = lg.real_metric_jets();
    let gam = lg.real_christoffel_jets()?;
    let rm: Vec<f64> = lg.real_riemann_jets()?.iter().map(|j| j.value()).collect();
    let v = st.velocity;
    let mut out = NodeData { g: [[0.0; 4]; 4], cv: [[0.0; 4]; 4], s: [[0.0; 4]; 4], kretschmann: 0.0 };
    for i in 0..4 {
        for j in 0..4 {
            out.g[i][j] = gj[i][j].value();
            out.cv[i][j] = (0..4).map(|a| gam[i][a][j].value() * v[a]).sum();
            let mut s = 0.0;
            for a in 0..4 {
                for b in 0..4 {
                    s += v[a] * v[b] * rm[((a * 4 + i) * 4 + j) * 4 + b];
                }
            }
            out.s[i][j] = s;
        }
    }
    out.kretschmann = lg.curvature()?.kretschmann;
    Ok(out)
}

/// Second variation of energy along a closed geodesic,
/// `Q(ξ,ξ) = ∫ |∇_γ̇ ξ|² − Rm(γ̇, ξ, ξ, γ̇) dt`, in the Fourier basis
/// `{1, cos kωt, sin kωt : k ≤ n_modes} ⊗ {e_a}`.
///
/// The eigenproblem is taken against the `L²` Gram matrix of the basis, so the
/// spectrum is that of the Jacobi operator.
pub fn second_variation_spectrum(
    pot: &dyn KahlerPotential,
    path: &ClosedGeodesic,
    n_modes: usize,
) -> Result<StabilityReport> {
    let t = path.period;
    if !(t > 0.0) {
        return Err(GeomError::Parameter(format!("period {t}")));
    }
    let m = 8 * n_modes + 64;
    let sub = ((t / (m as f64 * 0.01)).ceil() as usize).max(1);
    let traj = integrate_geodesic(pot, &path.start, t, t / (m * sub) as f64)?;
    let end = traj.last();
    let x0 = to_real(&path.start.point);
    let x1 = to_real(&end.point);
    let mut closure: f64 = 0.0;
    for i in 0..4 {
        closure = closure.max((x1[i] - path.shift[i] - x0[i]).abs());
        closure = closure.max((end.velocity[i] - path.start.velocity[i]).abs());
    }
    if closure > CLOSURE_TOL {
        return Err(GeomError::Precondition(format!("path does not close: defect {closure:e}")));
    }
    let nodes: Vec<NodeData> =
        (0..m).into_par_iter().map(|k| node_data(pot, &traj.states[k * sub])).collect::<Result<_>>()?;

    let nb = 2 * n_modes + 1;
    let w = t / m as f64;
    let omega = 2.0 * std::f64::consts::PI / t;
    let mut phi = DMatrix::<f64>::zeros(m, nb);
    let mut dphi = DMatrix::<f64>::zeros(m, nb);
    for k in 0..m {
        let tk = k as f64 * w;
        phi[(k, 0)] = t.sqrt().recip();
        let amp = (2.0 / t).sqrt();
        for j in 1..=n_modes {
            let om = j as f64 * omega;
            let (s, co) = (om * tk).sin_cos();
            phi[(k, 2 * j - 1)] = amp * co;
            phi[(k, 2 * j)] = amp * s;
            dphi[(k, 2 * j - 1)] = -amp * om * s;
            dphi[(k, 2 * j)] = amp * om * co;
        }
    }
    let n = 4 * nb;
    let mut q = DMatrix::<f64>::zeros(n, n);
    let mut gram = DMatrix::<f64>::zeros(n, n);
    let weighted = |f: &dyn Fn(&NodeData) -> f64, left: &DMatrix<f64>, right: &DMatrix<f64>| {
        let mut r = right.clone();
        for k in 0..m {
            let s = w * f(&nodes[k]);
            r.row_mut(k).scale_mut(s);
        }
        left.transpose() * r
    };
    for cc in 0..4 {
        for d in 0..4 {
            // G(∇ξ, ∇η) with ∇(f e_c) = f' e_c + f C e_c, and the curvature term
            let g_cd = |nd: &NodeData| nd.g[cc][d];
            let gc = |nd: &NodeData| (0..4).map(|e| nd.g[cc][e] * nd.cv[e][d]).sum::<f64>();
            let ctg = |nd: &NodeData| (0..4).map(|e| nd.cv[e][cc] * nd.g[e][d]).sum::<f64>();
            let zero = |nd: &NodeData| {
                let mut s = -nd.s[cc][d];
                for e in 0..4 {
                    for f in 0..4 {
                        s += nd.cv[e][cc] * nd.g[e][f] * nd.cv[f][d];
                    }
                }
                s
            };
            let block = weighted(&g_cd, &dphi, &dphi)
                + weighted(&gc, &dphi, &phi)
                + weighted(&ctg, &phi, &dphi)
                + weighted(&zero, &phi, &phi);
            let mass = weighted(&g_cd, &phi, &phi);
            for i in 0..nb {
                for j in 0..nb {
                    q[(i * 4 + cc, j * 4 + d)] = block[(i, j)];
                    gram[(i * 4 + cc, j * 4 + d)] = mass[(i, j)];
                }
            }
        }
    }
    let scale = q.amax().max(f64::MIN_POSITIVE);
    let asymmetry = (&q - q.transpose()).amax() / scale;
    let qs = (&q + q.transpose()) * 0.5;
    let gs = (&gram + gram.transpose()) * 0.5;
    let chol = Cholesky::new(gs).ok_or_else(|| GeomError::DegenerateMetric("Gram matrix not positive".into()))?;
    let l = chol.l();
    let y = l
        .solve_lower_triangular(&qs)
        .ok_or_else(|| GeomError::DegenerateMetric("singular Gram factor".into()))?;
    let c_mat = l
        .solve_lower_triangular(&y.transpose())
        .ok_or_else(|| GeomError::DegenerateMetric("singular Gram factor".into()))?;
    let c_mat = (&c_mat + c_mat.transpose()) * 0.5;
    let mut ev: Vec<f64> = SymmetricEigen::new(c_mat).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    let sup_riemann = nodes.iter().map(|nd| nd.kretschmann.max(0.0).sqrt()).fold(0.0, f64::max);
    Ok(StabilityReport {
        n_modes,
        length: traj.length(),
        min_eigenvalue: ev[0],
        nullity_estimate: ev.iter().filter(|l| l.abs() < NULLITY_TOL).count(),
        sup_riemann,
        low_spectrum: ev.iter().take(16).copied().collect(),
        asymmetry,
        closure_defect: closure,
    })
}

/// `(sup_riemann, min_eigenvalue)` for the zero-section equator of each Eguchi-Hanson(a).
pub fn equator_stability_scan(a_values: &[f64], n_modes: usize) -> Result<Vec<(f64, f64)>> {
    a_values
        .par_iter()
        .map(|&a| {
            let (chart, path) = ClosedGeodesic::zero_section_equator(a)?;
            let r = second_variation_spectrum(&chart, &path, n_modes)?;
            Ok((r.sup_riemann, r.min_eigenvalue))
        })
        .collect()
}

/// `Ψ = Γ_B − Γ_A` at one point, measured with the metric of A.
#[derive(Debug, Clone, Serialize)]
pub struct ChristoffelDefect {
    /// `psi[λ][μ][α] = Ψ^λ_{μα}`.
    pub psi: [[[C64; 2]; 2]; 2],
    /// `|Ψ|_{g_A}`.
    pub norm: f64,
    pub metric_a: HermitianMetric,
}

impl ChristoffelDefect {
    /// `Ψ(v, v)`.
    pub fn apply(&self, v: &CPair) -> CPair {
        contract_christoffel(&self.psi, v, v)
    }

    /// `max |Ψ^λ_{μα} − Ψ^λ_{αμ}|`.
    pub fn symmetry_defect(&self) -> f64 {
        let p = &self.psi;
        (0..2).map(|l| (p[l][0][1] - p[l][1][0]).norm()).fold(0.0, f64::max)
    }

    pub fn vector_norm(&self, v: &CPair) -> f64 {
        self.metric_a.norm_sqr(v).max(0.0).sqrt()
    }
}

pub fn christoffel_defect(
    pot_a: &dyn KahlerPotential,
    pot_b: &dyn KahlerPotential,
    z: &CPair,
) -> Result<ChristoffelDefect> {
    let la = LocalGeometry::new(pot_a, z, 3)?;
    let lb = LocalGeometry::new(pot_b, z, 3)?;
    let ga = la.christoffel()?;
    let gb = lb.christoffel()?;
    let psi: [[[C64; 2]; 2]; 2] =
        std::array::from_fn(|l| std::array::from_fn(|m| std::array::from_fn(|a| gb[l][m][a] - ga[l][m][a])));
    let metric_a = la.metric();
    let g = metric_a.components;
    let gi = la.inverse_values();
    let mut n2 = c(0.0, 0.0);
    for l in 0..2 {
        for lp in 0..2 {
            for m in 0..2 {
                for mp in 0..2 {
                    for a in 0..2 {
                        for ap in 0..2 {
                            n2 += g[l][lp] * gi[mp][m] * gi[ap][a] * psi[l][m][a] * psi[lp][mp][ap].conj();
                        }
                    }
                }
            }
        }
    }
    Ok(ChristoffelDefect { psi, norm: n2.re.max(0.0).sqrt(), metric_a })
}

/// `|Ψ|` between the Euclidean metric and `Glued(a, delta)` at `z`, over a grid
/// of `a`, with the log-log slope.
pub fn christoffel_defect_scaling(a_grid: &[f64], delta: f64, z: &CPair) -> Result<(Vec<f64>, f64)> {
    let flat = RadialPotentialSpec::euclidean();
    let norms = a_grid
        .iter()
        .map(|&a| Ok(christoffel_defect(&flat, &RadialPotentialSpec::glued(a, delta)?, z)?.norm))
        .collect::<Result<Vec<f64>>>()?;
    let slope = loglog_slope(a_grid, &norms);
    Ok((norms, slope))
}

/// Along a geodesic of B sampled at equal steps, compares `|D^A_t γ̇|_A` against
/// `|Ψ(γ̇, γ̇)|_A`. Here `z̈` is a five-point difference of the recorded velocities
/// with one Richardson level, so it does not use `Γ_B`. Returns the largest
/// absolute mismatch.
pub fn acceleration_identity_residual(
    pot_a: &dyn KahlerPotential,
    pot_b: &dyn KahlerPotential,
    path: &GeodesicPath,
) -> Result<f64> {
    let n = path.states.len();
    if n < 9 {
        return Err(GeomError::Precondition("need at least nine samples".into()));
    }
    let h = path.times[1] - path.times[0];
    let v = |j: usize| path.states[j].zdot();
    let stencil = |i: usize, k: usize, k_idx: usize| {
        let hk = h * k as f64;
        (v(i - 2 * k)[k_idx] - v(i - k)[k_idx] * 8.0 + v(i + k)[k_idx] * 8.0 - v(i + 2 * k)[k_idx]) / (12.0 * hk)
    };
    let mut worst: f64 = 0.0;
    for i in 4..n - 4 {
        let st = &path.states[i];
        let zd = st.zdot();
        let zdd: CPair = std::array::from_fn(|k| (stencil(i, 1, k) * 16.0 - stencil(i, 2, k)) / 15.0);
        let defect = christoffel_defect(pot_a, pot_b, &st.point)?;
        let ga = LocalGeometry::new(pot_a, &st.point, 3)?.christoffel()?;
        let gz = contract_christoffel(&ga, &zd, &zd);
        let cov = [zdd[0] + gz[0], zdd[1] + gz[1]];
        let lhs = defect.vector_norm(&cov);
        let rhs = defect.vector_norm(&defect.apply(&zd));
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistanceSample {
    pub t: f64,
    pub u: f64,
    /// Distance² to the zero section.
    pub d: f64,
    pub d_dot: f64,
    pub d_ddot: f64,
    /// `Re⟨z, ż⟩_{C²}`.
    pub re_z_zdot: f64,
    /// `2 ∂_sθ(1) (u²/(a²+u²) |ż|²_g + 2a²/√(a²+u²) |⟨z,ż⟩_g|²)`, the stationary-point
    /// expression as usually stated. It equals `d̈` at stationary points only when `u = 1`.
    pub d_ddot_closed_form: f64,
    /// The same expression with the last coefficient `2a²/(u²√(a²+u²))`, which equals
    /// `d̈` at every stationary point.
    pub d_ddot_closed_form_corrected: f64,
}

/// Distance² to the zero section along a geodesic of Eguchi-Hanson(a) in the orbifold chart.
pub fn divisor_distance_profile(a: f64, path: &GeodesicPath) -> Result<Vec<DistanceSample>> {
    let spec = RadialPotentialSpec::eguchi_hanson(a)?;
    path.times
        .iter()
        .zip(&path.states)
        .map(|(&t, st)| {
            let z = st.point;
            let zd = st.zdot();
            let u = z[0].norm_sqr() + z[1].norm_sqr();
            if u < U_MIN {
                return Err(GeomError::Proximity(u));
            }
            let zz = z[0].conj() * zd[0] + z[1].conj() * zd[1];
            let zdd = acceleration(&spec, st)?;
            let z_acc = z[0].conj() * zdd[0] + z[1].conj() * zdd[1];
            let u_dot = 2.0 * zz.re;
            let u_ddot = 2.0 * (zd[0].norm_sqr() + zd[1].norm_sqr()) + 2.0 * z_acc.re;
            let [d, d1, d2] = radial_distance_sqr_jet(a, u)?;
            let metric = LocalGeometry::new(&spec, &z, 2)?.metric();
            let q = a * a + u * u;
            let theta_s = d.sqrt() * q.powf(0.25) / u;
            let zg = metric.inner(&z, &zd);
            let base = u * u / q * metric.norm_sqr(&zd);
            let cross = 2.0 * a * a / q.sqrt() * zg.norm_sqr();
            Ok(DistanceSample {
                t,
                u,
                d,
                d_dot: d1 * u_dot,
                d_ddot: d2 * u_dot * u_dot + d1 * u_ddot,
                re_z_zdot: zz.re,
                d_ddot_closed_form: 2.0 * theta_s * (base + cross),
                d_ddot_closed_form_corrected: 2.0 * theta_s * (base + cross / (u * u)),
            })
        })
        .collect()
}
