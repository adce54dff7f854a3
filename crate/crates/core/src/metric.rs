//! Kähler geometry from a potential jet.
//!
//! Conventions, fixed once and pinned by tests:
//!
//! * `g[μ][ν] = g_{μν̄} = ∂_μ∂_ν̄ Φ`, hermitian product `⟨U,V⟩_g = Σ g_{μν̄} V^μ conj(U^ν)`.
//! * The Riemannian metric is `Re⟨·,·⟩_g` on real vectors, identified with their
//!   `(1,0)` components `ξ^μ = X^{x_μ} + i X^{y_μ}`. Real frame order is `(x1, y1, x2, y2)`.
//! * `Γ^λ_{μα} = ∂_α g_{μν̄} g^{ν̄λ}` and
//!   `R_{μν̄αβ̄} = −∂_α∂_β̄ g_{μν̄} + g^{σ̄ρ} ∂_α g_{μσ̄} ∂_β̄ g_{ρν̄}`.
//! * Real curvature `R(X,Y) = ∇_X∇_Y − ∇_Y∇_X − ∇_{[X,Y]}`, `Rm(X,Y,Z,W) = ⟨R(X,Y)Z, W⟩`.

use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{GeomError, Result};
use crate::jets::{CJet, Jet};
use crate::potentials::{PotentialKind, RadialPotentialSpec};

pub type C64 = Complex64;
pub type CPair = [C64; 2];

const PD_TOL: f64 = 1e-13;
/// Slack on the `|ζ| ≤ 1` patch condition. Runge-Kutta stages along the equator
/// of `E` land slightly outside the unit circle.
pub const PATCH_SLACK: f64 = 1e-3;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Real coordinates `(x1, y1, x2, y2)` of a complex pair.
pub fn to_real(z: &CPair) -> [f64; 4] {
    [z[0].re, z[0].im, z[1].re, z[1].im]
}

pub fn from_real(x: &[f64]) -> CPair {
    [c(x[0], x[1]), c(x[2], x[3])]
}

/// `(slot, coefficient)` of the real frame vector `e_a` in complex components.
pub fn frame_slot(a: usize) -> (usize, C64) {
    (a / 2, if a % 2 == 0 { c(1.0, 0.0) } else { c(0.0, 1.0) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ChartId {
    Orbifold,
    Bundle,
    RescaledBundle,
    Flat,
    Neck(usize),
    NeckBundle(usize),
}

/// Anything that supplies a real potential jet in `(x1, y1, x2, y2)` around a point.
pub trait KahlerPotential: Sync {
    fn potential_jet(&self, z: &CPair, order: usize) -> Result<Jet>;

    fn chart(&self) -> ChartId {
        ChartId::Orbifold
    }

    /// Whether `det g` is locally constant at `z` (a hyperkähler Darboux chart).
    fn constant_determinant_at(&self, _z: &CPair) -> bool {
        false
    }

    /// `u` measured from the nearest orbifold point, if the chart has one.
    fn orbifold_distance_sqr(&self, _z: &CPair) -> Option<f64> {
        None
    }
}

/// `|z|²` as a jet in the real coordinates of `z`.
pub fn u_jet(z: &CPair, order: usize) -> Result<Jet> {
    let v = Jet::variables(&to_real(z), order)?;
    Ok(v.iter().fold(Jet::zeros(4, order)?, |acc, x| &acc + &(x * x)))
}

impl KahlerPotential for RadialPotentialSpec {
    fn potential_jet(&self, z: &CPair, order: usize) -> Result<Jet> {
        let u = u_jet(z, order)?;
        if !(u.value() > 0.0) {
            return Err(GeomError::OrbifoldPoint(u.value()));
        }
        self.compose(&u)
    }

    fn constant_determinant_at(&self, z: &CPair) -> bool {
        let u = z[0].norm_sqr() + z[1].norm_sqr();
        match self.kind {
            // the closed bounds are not enough: derivatives of χ must vanish on a neighbourhood
            PotentialKind::Glued => {
                u < self.cutoff_scale || u > self.cutoff_scale * (1.0 + self.delta)
            }
            _ => true,
        }
    }

    fn orbifold_distance_sqr(&self, z: &CPair) -> Option<f64> {
        Some(z[0].norm_sqr() + z[1].norm_sqr())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HermitianMetric {
    /// `components[μ][ν] = g_{μν̄}`.
    pub components: [[C64; 2]; 2],
    pub chart: ChartId,
}

impl HermitianMetric {
    pub fn matrix(&self) -> Matrix2<C64> {
        let g = &self.components;
        Matrix2::new(g[0][0], g[0][1], g[1][0], g[1][1])
    }

    pub fn det(&self) -> f64 {
        let g = &self.components;
        (g[0][0] * g[1][1] - g[0][1] * g[1][0]).re
    }

    /// Ascending eigenvalues of the hermitian matrix.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let g = &self.components;
        let tr = g[0][0].re + g[1][1].re;
        let d = self.det();
        let disc = ((g[0][0].re - g[1][1].re).powi(2) + 4.0 * g[0][1].norm_sqr()).sqrt();
        let hi = 0.5 * (tr + disc);
        [if hi != 0.0 { d / hi } else { 0.5 * (tr - disc) }, hi]
    }

    pub fn inner(&self, u: &CPair, v: &CPair) -> C64 {
        let g = &self.components;
        let mut s = c(0.0, 0.0);
        for m in 0..2 {
            for n in 0..2 {
                s += g[m][n] * v[m] * u[n].conj();
            }
        }
        s
    }

    pub fn norm_sqr(&self, v: &CPair) -> f64 {
        self.inner(v, v).re
    }

    /// Real 4×4 Gram matrix in the frame `(x1, y1, x2, y2)`.
    pub fn real_matrix(&self) -> Matrix4<f64> {
        Matrix4::from_fn(|a, b| {
            let (m, ca) = frame_slot(a);
            let (n, cb) = frame_slot(b);
            (self.components[m][n] * ca * cb.conj()).re
        })
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let g = &self.components;
        (g[0][1] - g[1][0].conj()).norm() <= tol && g[0][0].im.abs() <= tol && g[1][1].im.abs() <= tol
    }
}

type CMat = [[CJet; 2]; 2];

fn try_mat<T>(mut f: impl FnMut(usize, usize) -> Result<T>) -> Result<[[T; 2]; 2]> {
    Ok([[f(0, 0)?, f(0, 1)?], [f(1, 0)?, f(1, 1)?]])
}

fn trunc_mat(m: &CMat, order: usize) -> CMat {
    [[m[0][0].truncate(order), m[0][1].truncate(order)], [m[1][0].truncate(order), m[1][1].truncate(order)]]
}

/// Metric, Christoffel and curvature data as jets around one point.
///
/// With a potential jet of order `n`, the metric is known to order `n−2`,
/// Christoffels to `n−3` and the Riemann tensor to `n−4`.
#[derive(Debug, Clone)]
pub struct LocalGeometry {
    pub z: CPair,
    pub order: usize,
    pub chart: ChartId,
    pub g: CMat,
    pub ginv: CMat,
    /// `dg[α][μ][ν] = ∂_α g_{μν̄}`.
    pub dg: Option<[CMat; 2]>,
    /// `gamma[λ][μ][α] = Γ^λ_{μα}`.
    pub gamma: Option<[CMat; 2]>,
    /// `riemann[μ][ν][α][β] = R_{μν̄αβ̄}`.
    pub riemann: Option<[[CMat; 2]; 2]>,
}

impl LocalGeometry {
    pub fn new(pot: &dyn KahlerPotential, z: &CPair, order: usize) -> Result<Self> {
        if order < 2 {
            return Err(crate::jets::JetError::Capability { have: order, need: 2 }.into());
        }
        let p = CJet::from_real(pot.potential_jet(z, order)?);
        let g: CMat = try_mat(|m, n| Ok(p.dz(m)?.dzbar(n)?))?;
        let det = &(&g[0][0] * &g[1][1]) - &(&g[0][1] * &g[1][0]);
        check_positive(&g, det.value().re)?;
        let inv_det = det.re.recip()?;
        let idet = CJet::from_real(inv_det);
        let ginv: CMat = [
            [&g[1][1] * &idet, -&(&g[0][1] * &idet)],
            [-&(&g[1][0] * &idet), &g[0][0] * &idet],
        ];
        let mut out = Self { z: *z, order, chart: pot.chart(), g, ginv, dg: None, gamma: None, riemann: None };
        if order >= 3 {
            let dg = [
                try_mat(|m, n| Ok(out.g[m][n].dz(0)?))?,
                try_mat(|m, n| Ok(out.g[m][n].dz(1)?))?,
            ];
            let gi = trunc_mat(&out.ginv, order - 3);
            let gamma_comp = |l: usize, m: usize, a: usize| -> Result<CJet> {
                Ok(&(&dg[a][m][0] * &gi[0][l]) + &(&dg[a][m][1] * &gi[1][l]))
            };
            let gamma = [
                try_mat(|m, a| gamma_comp(0, m, a))?,
                try_mat(|m, a| gamma_comp(1, m, a))?,
            ];
            if order >= 4 {
                let o = order - 4;
                let gi4 = trunc_mat(&out.ginv, o);
                let dgb: [CMat; 2] = [
                    try_mat(|s, n| Ok(out.g[s][n].dzbar(0)?.truncate(o)))?,
                    try_mat(|s, n| Ok(out.g[s][n].dzbar(1)?.truncate(o)))?,
                ];
                let dgt = [trunc_mat(&dg[0], o), trunc_mat(&dg[1], o)];
                let comp = |m: usize, n: usize, a: usize, b: usize| -> Result<CJet> {
                    let mut r = -&dg[a][m][n].dzbar(b)?;
                    for s in 0..2 {
                        for rr in 0..2 {
                            r = &r + &(&gi4[s][rr] * &(&dgt[a][m][s] * &dgb[b][rr][n]));
                        }
                    }
                    Ok(r)
                };
                out.riemann = Some([
                    [try_mat(|a, b| comp(0, 0, a, b))?, try_mat(|a, b| comp(0, 1, a, b))?],
                    [try_mat(|a, b| comp(1, 0, a, b))?, try_mat(|a, b| comp(1, 1, a, b))?],
                ]);
            }
            out.dg = Some(dg);
            out.gamma = Some(gamma);
        }
        Ok(out)
    }

    pub fn metric(&self) -> HermitianMetric {
        let g = &self.g;
        HermitianMetric {
            components: [[g[0][0].value(), g[0][1].value()], [g[1][0].value(), g[1][1].value()]],
            chart: self.chart,
        }
    }

    pub fn inverse_values(&self) -> [[C64; 2]; 2] {
        let gi = &self.ginv;
        [[gi[0][0].value(), gi[0][1].value()], [gi[1][0].value(), gi[1][1].value()]]
    }

    fn need<'a, T>(&self, x: &'a Option<T>, need: usize) -> Result<&'a T> {
        x.as_ref().ok_or_else(|| crate::jets::JetError::Capability { have: self.order, need }.into())
    }

    /// `Γ^λ_{μα}` at the point.
    pub fn christoffel(&self) -> Result<[[[C64; 2]; 2]; 2]> {
        let gm = self.need(&self.gamma, 3)?;
        Ok(std::array::from_fn(|l| std::array::from_fn(|m| std::array::from_fn(|a| gm[l][m][a].value()))))
    }

    /// `R_{μν̄αβ̄}` at the point.
    pub fn riemann_values(&self) -> Result<[[[[C64; 2]; 2]; 2]; 2]> {
        let r = self.need(&self.riemann, 4)?;
        Ok(std::array::from_fn(|m| {
            std::array::from_fn(|n| std::array::from_fn(|a| std::array::from_fn(|b| r[m][n][a][b].value())))
        }))
    }

    pub fn curvature(&self) -> Result<CurvatureBundle> {
        let christoffel = self.christoffel()?;
        let riemann = self.riemann_values()?;
        let gi = self.inverse_values();
        let mut ricci = [[c(0.0, 0.0); 2]; 2];
        for m in 0..2 {
            for n in 0..2 {
                for a in 0..2 {
                    for b in 0..2 {
                        ricci[m][n] += gi[b][a] * riemann[m][n][a][b];
                    }
                }
            }
        }
        let mut scalar = c(0.0, 0.0);
        for m in 0..2 {
            for n in 0..2 {
                scalar += gi[n][m] * ricci[m][n];
            }
        }
        let kretschmann = hermitian_norm_sqr(&self.metric(), &riemann);
        Ok(CurvatureBundle { christoffel, riemann, ricci, scalar: scalar.re, kretschmann })
    }

    /// Metric as real Gram-matrix jets `G_ab` (order `n−2`).
    pub fn real_metric_jets(&self) -> Vec<Vec<Jet>> {
        (0..4)
            .map(|a| {
                (0..4)
                    .map(|b| {
                        let (m, ca) = frame_slot(a);
                        let (n, cb) = frame_slot(b);
                        self.g[m][n].scale(ca * cb.conj()).re
                    })
                    .collect()
            })
            .collect()
    }

    /// Real Christoffel jets `Γ^c_{ab}` with `∇_{e_a} e_b = Γ^c_{ab} e_c`, as `[c][a][b]`.
    pub fn real_christoffel_jets(&self) -> Result<Vec<Vec<Vec<Jet>>>> {
        let gm = self.need(&self.gamma, 3)?;
        let mut out = vec![vec![Vec::with_capacity(4); 4]; 4];
        for a in 0..4 {
            for b in 0..4 {
                let (al, ca) = frame_slot(a);
                let (mu, cb) = frame_slot(b);
                for l in 0..2 {
                    let v = gm[l][mu][al].scale(ca * cb);
                    out[2 * l][a].push(v.re);
                    out[2 * l + 1][a].push(v.im);
                }
            }
        }
        Ok(out)
    }

    /// Real Riemann jets `Rm_{abcd} = Rm(e_a, e_b, e_c, e_d)`, flattened as `((a*4+b)*4+c)*4+d`.
    pub fn real_riemann_jets(&self) -> Result<Vec<Jet>> {
        let r = self.need(&self.riemann, 4)?;
        let mut out = Vec::with_capacity(256);
        for a in 0..4 {
            for b in 0..4 {
                for cc in 0..4 {
                    for d in 0..4 {
                        let (sa, ka) = frame_slot(a);
                        let (sb, kb) = frame_slot(b);
                        let (sc, kc) = frame_slot(cc);
                        let (sd, kd) = frame_slot(d);
                        let t1 = r[sc][sd][sa][sb].scale(ka * kb.conj() * kc * kd.conj());
                        let t2 = r[sc][sd][sb][sa].scale(kb * ka.conj() * kc * kd.conj());
                        out.push(&t1.re - &t2.re);
                    }
                }
            }
        }
        Ok(out)
    }
}

fn check_positive(g: &CMat, det: f64) -> Result<()> {
    let a = g[0][0].value().re;
    let d = g[1][1].value().re;
    let tr = a + d;
    let disc = ((a - d).powi(2) + 4.0 * g[0][1].value().norm_sqr()).sqrt();
    let hi = 0.5 * (tr + disc);
    let lo = if hi > 0.0 { det / hi } else { 0.5 * (tr - disc) };
    if !(lo > PD_TOL) || !lo.is_finite() || !hi.is_finite() {
        return Err(GeomError::DegenerateMetric(format!("eigenvalues ({lo:e}, {hi:e})")));
    }
    Ok(())
}

/// `Σ |R(e_a, ē_b, e_c, ē_d)|²` over a `g`-unitary frame.
pub fn hermitian_norm_sqr(metric: &HermitianMetric, r: &[[[[C64; 2]; 2]; 2]; 2]) -> f64 {
    let e = unitary_frame(metric);
    let mut total = 0.0;
    for a in 0..2 {
        for b in 0..2 {
            for cc in 0..2 {
                for d in 0..2 {
                    let mut s = c(0.0, 0.0);
                    for m in 0..2 {
                        for n in 0..2 {
                            for al in 0..2 {
                                for be in 0..2 {
                                    s += r[m][n][al][be] * e[a][m] * e[b][n].conj() * e[cc][al] * e[d][be].conj();
                                }
                            }
                        }
                    }
                    total += s.norm_sqr();
                }
            }
        }
    }
    total
}

/// Two vectors, orthonormal for `⟨·,·⟩_g` (Gram-Schmidt on the coordinate basis).
pub fn unitary_frame(metric: &HermitianMetric) -> [CPair; 2] {
    let e0 = [c(1.0, 0.0), c(0.0, 0.0)];
    let n0 = metric.norm_sqr(&e0).sqrt();
    let e0 = [e0[0] / n0, e0[1] / n0];
    let e1 = [c(0.0, 0.0), c(1.0, 0.0)];
    let p = metric.inner(&e0, &e1);
    let e1 = [e1[0] - p * e0[0], e1[1] - p * e0[1]];
    let n1 = metric.norm_sqr(&e1).sqrt();
    [e0, [e1[0] / n1, e1[1] / n1]]
}

#[derive(Debug, Clone, Serialize)]
pub struct CurvatureBundle {
    /// `christoffel[λ][μ][α] = Γ^λ_{μα}`.
    pub christoffel: [[[C64; 2]; 2]; 2],
    /// `riemann[μ][ν][α][β] = R_{μν̄αβ̄}`.
    pub riemann: [[[[C64; 2]; 2]; 2]; 2],
    /// `ricci[μ][ν] = g^{β̄α} R_{μν̄αβ̄}`.
    pub ricci: [[C64; 2]; 2],
    pub scalar: f64,
    /// Hermitian `|R|²`; equals `24a⁴/(a²+u²)³` on Eguchi-Hanson.
    pub kretschmann: f64,
}

fn nonzero(z: &CPair) -> Result<()> {
    let u = z[0].norm_sqr() + z[1].norm_sqr();
    if u == 0.0 {
        return Err(GeomError::OrbifoldPoint(0.0));
    }
    Ok(())
}

pub fn metric_at(spec: &RadialPotentialSpec, z: &CPair) -> Result<HermitianMetric> {
    nonzero(z)?;
    Ok(LocalGeometry::new(spec, z, 2)?.metric())
}

/// `g_{μν̄} = φ'δ_{μν} + φ'' z̄_μ z_ν` from the one-variable potential jet.
pub fn radial_metric_closed_form(spec: &RadialPotentialSpec, z: &CPair) -> Result<HermitianMetric> {
    nonzero(z)?;
    let u = z[0].norm_sqr() + z[1].norm_sqr();
    let j = crate::potentials::eval_potential(spec, u, 2)?;
    let (d1, d2) = (j.coeffs()[1], 2.0 * j.coeffs()[2]);
    let comp = |m: usize, n: usize| {
        let delta = if m == n { d1 } else { 0.0 };
        c(delta, 0.0) + z[m].conj() * z[n] * d2
    };
    Ok(HermitianMetric { components: [[comp(0, 0), comp(0, 1)], [comp(1, 0), comp(1, 1)]], chart: ChartId::Orbifold })
}

pub fn curvature_at(spec: &RadialPotentialSpec, z: &CPair) -> Result<CurvatureBundle> {
    nonzero(z)?;
    LocalGeometry::new(spec, z, 4)?.curvature()
}

/// Kretschmann scalar of Eguchi-Hanson(a) at radius `u`. Below `u = a` it is evaluated in
/// the bundle chart at `(u/2, 0)`; the orbifold chart loses about `(a/u)⁴` digits there.
pub fn eh_kretschmann(a: f64, u: f64) -> Result<f64> {
    if !(u > 0.0) {
        return Err(GeomError::OrbifoldPoint(u));
    }
    if u < a {
        let chart = BundleChart::new(a)?;
        LocalGeometry::new(&chart, &[c(0.5 * u, 0.0), c(0.0, 0.0)], 4)?.curvature().map(|b| b.kretschmann)
    } else {
        let r = u.sqrt();
        curvature_at(&RadialPotentialSpec::eguchi_hanson(a)?, &[c(0.6 * r, 0.0), c(0.0, 0.8 * r)]).map(|b| b.kretschmann)
    }
}

/// Eguchi-Hanson closed form `Γ^λ_{μα} = −a²/(u(a²+u²))·(z̄_μ δ^λ_α + z̄_α δ^λ_μ − 3 z̄_α z̄_μ z^λ/u)`.
pub fn eh_christoffel_closed_form(a: f64, z: &CPair) -> [[[C64; 2]; 2]; 2] {
    let u = z[0].norm_sqr() + z[1].norm_sqr();
    let pre = -a * a / (u * (a * a + u * u));
    std::array::from_fn(|l| {
        std::array::from_fn(|m| {
            std::array::from_fn(|al| {
                let mut s = -3.0 * z[al].conj() * z[m].conj() * z[l] / u;
                if l == al {
                    s += z[m].conj();
                }
                if l == m {
                    s += z[al].conj();
                }
                s * pre
            })
        })
    })
}

/// `ψ = −ln det g` and `Δψ = g^{ν̄μ}∂_μ∂_ν̄ψ`.
pub fn psi_at(spec: &RadialPotentialSpec, z: &CPair) -> Result<(f64, f64)> {
    nonzero(z)?;
    psi_general(spec, z)
}

pub fn psi_general(pot: &dyn KahlerPotential, z: &CPair) -> Result<(f64, f64)> {
    let geo = LocalGeometry::new(pot, z, 4)?;
    let g = &geo.g;
    let det = &(&g[0][0] * &g[1][1]) - &(&g[0][1] * &g[1][0]);
    let psi = CJet::from_real(det.re.ln()?.scale(-1.0));
    let gi = geo.inverse_values();
    let mut lap = c(0.0, 0.0);
    for m in 0..2 {
        for n in 0..2 {
            lap += gi[n][m] * psi.dz(m)?.dzbar(n)?.value();
        }
    }
    Ok((psi.re.value(), lap.re))
}

/// Eguchi-Hanson in the blow-up chart `(z, ζ) ↦ √2(√z, ζ√z)`, or its rescaled form in `(z/a, ζ)`.
///
/// The potential differs from the pullback of `f_a` by the pluriharmonic `a·ln|z|`:
/// `Φ = F(u²) + a·ln(1+|ζ|²)` with `F(s) = √(a²+s) − a·ln(a + √(a²+s))` and
/// `u² = 4|z|²(1+|ζ|²)²`, which is smooth across the zero section.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BundleChart {
    pub a: f64,
    pub rescaled: bool,
}

impl BundleChart {
    pub fn new(a: f64) -> Result<Self> {
        RadialPotentialSpec::eguchi_hanson(a)?;
        Ok(Self { a, rescaled: false })
    }

    pub fn rescaled(a: f64) -> Result<Self> {
        RadialPotentialSpec::eguchi_hanson(a)?;
        Ok(Self { a, rescaled: true })
    }

    /// The orbifold-chart point `√2(√z, ζ√z)` (principal branch).
    pub fn to_orbifold(&self, coords: &CPair) -> CPair {
        let z = if self.rescaled { coords[0] * self.a } else { coords[0] };
        let r = (z * 2.0).sqrt();
        [r, coords[1] * r]
    }

    /// Holomorphic Jacobian `∂(z1,z2)/∂(coords)` as `jac[μ][k]`.
    pub fn jacobian(&self, coords: &CPair) -> [[C64; 2]; 2] {
        let s = if self.rescaled { self.a } else { 1.0 };
        let z = coords[0] * s;
        let r = (z * 2.0).sqrt();
        [[s / r, c(0.0, 0.0)], [coords[1] * s / r, r]]
    }
}

impl KahlerPotential for BundleChart {
    fn potential_jet(&self, z: &CPair, order: usize) -> Result<Jet> {
        let zeta = z[1].norm();
        if zeta > 1.0 + PATCH_SLACK {
            return Err(GeomError::WrongPatch(zeta));
        }
        let v = Jet::variables(&to_real(z), order)?;
        let fibre = &(&v[0] * &v[0]) + &(&v[1] * &v[1]);
        let base = (&(&v[2] * &v[2]) + &(&v[3] * &v[3])).add_scalar(1.0);
        let a = if self.rescaled { 1.0 } else { self.a };
        let s = (&fibre * &(&base * &base)).scale(4.0);
        let root = s.add_scalar(a * a).sqrt()?;
        let f = &root - &root.add_scalar(a).ln()?.scale(a);
        let phi = &f + &base.ln()?.scale(a);
        Ok(if self.rescaled { phi.scale(self.a) } else { phi })
    }

    fn chart(&self) -> ChartId {
        if self.rescaled {
            ChartId::RescaledBundle
        } else {
            ChartId::Bundle
        }
    }

    fn constant_determinant_at(&self, _z: &CPair) -> bool {
        true
    }
}

pub fn bundle_chart_metric(a: f64, coords: &CPair, rescaled: bool) -> Result<HermitianMetric> {
    let chart = if rescaled { BundleChart::rescaled(a)? } else { BundleChart::new(a)? };
    Ok(LocalGeometry::new(&chart, coords, 2)?.metric())
}

/// The line element
/// `(1/√(a²+u²))[(1+|ζ|²)²|dz|² + (a²+(1+|ζ|²)u²)/(1+|ζ|²)²|dζ|² + 4(1+|ζ|²)Re(z̄ζ dz dζ̄)]`
/// read as `Σ g_{μν̄} dz^μ dz̄^ν`, so the mixed coefficient is `g_{zζ̄} = 2(1+|ζ|²) z̄ζ/√(a²+u²)`.
pub fn bundle_metric_closed_form(a: f64, coords: &CPair) -> HermitianMetric {
    let (z, zeta) = (coords[0], coords[1]);
    let r = 1.0 + zeta.norm_sqr();
    let u = 2.0 * z.norm() * r;
    let pre = 1.0 / (a * a + u * u).sqrt();
    let mixed = z.conj() * zeta * (2.0 * r * pre);
    HermitianMetric {
        components: [
            [c(r * r * pre, 0.0), mixed],
            [mixed.conj(), c((a * a + r * u * u) / (r * r) * pre, 0.0)],
        ],
        chart: ChartId::Bundle,
    }
}

/// Pullback of the orbifold-chart Eguchi-Hanson metric through the blow-up map.
pub fn bundle_pullback_metric(a: f64, coords: &CPair, rescaled: bool) -> Result<HermitianMetric> {
    let chart = if rescaled { BundleChart::rescaled(a)? } else { BundleChart::new(a)? };
    let w = chart.to_orbifold(coords);
    let g = metric_at(&RadialPotentialSpec::eguchi_hanson(a)?, &w)?;
    let jac = chart.jacobian(coords);
    let mut out = [[c(0.0, 0.0); 2]; 2];
    for k in 0..2 {
        for l in 0..2 {
            for m in 0..2 {
                for n in 0..2 {
                    out[k][l] += jac[m][k] * jac[n][l].conj() * g.components[m][n];
                }
            }
        }
    }
    Ok(HermitianMetric { components: out, chart: chart.chart() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn eh_metric_at_unit_point() {
        let g = metric_at(&RadialPotentialSpec::eguchi_hanson(1.0).unwrap(), &[c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert_relative_eq!(g.components[0][0].re, 0.5f64.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(g.components[1][1].re, 2f64.sqrt(), max_relative = 1e-14);
        assert!(g.components[0][1].norm() < 1e-15);
        assert_relative_eq!(g.det(), 1.0, max_relative = 1e-14);
    }

    #[test]
    fn christoffel_example() {
        let cb = curvature_at(&RadialPotentialSpec::eguchi_hanson(1.0).unwrap(), &[c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert_relative_eq!(cb.christoffel[0][0][0].re, 0.5, max_relative = 1e-13);
        assert_relative_eq!(cb.kretschmann, 3.0, max_relative = 1e-12);
    }

    #[test]
    fn orbifold_point_errors() {
        let spec = RadialPotentialSpec::eguchi_hanson(1.0).unwrap();
        assert_eq!(metric_at(&spec, &[c(0.0, 0.0); 2]), Err(GeomError::OrbifoldPoint(0.0)));
    }

    #[test]
    fn wrong_patch() {
        assert!(matches!(bundle_chart_metric(0.1, &[c(0.0, 0.0), c(1.5, 0.0)], false), Err(GeomError::WrongPatch(_))));
    }
}
