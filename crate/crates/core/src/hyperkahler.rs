//! Quaternionic structure and curvature invariants on hyperkähler charts.
//!
//! On a chart with `det g = A` constant, `I` is multiplication by `i` and
//! `J` is `(JX)^ν = Σ_μ conj(ξ^μ c_μ^ν)` with `c_1 = (−g_{12̄}, g_{11̄})/√A`,
//! `c_2 = (−g_{22̄}, g_{21̄})/√A`; `K = IJ`.
//!
//! For a unit vector `V` the six numbers `σ_XY(V) = Rm(V, XV, YV, V)`,
//! `X, Y ∈ {I, J, K}`, determine `Rm(W, IW, IW, W)` for every `W` in the
//! quaternionic line of `V`.

use nalgebra::{Matrix2, Matrix4, Vector4};
use serde::Serialize;

use crate::error::{GeomError, Result};
use crate::jets::{CJet, Jet};
use crate::metric::{c, to_real, from_real, CPair, KahlerPotential, LocalGeometry, C64};
use crate::potentials::{RadialPotentialSpec, RadialTestFunction};

/// Tolerance for `|V|_G = 1`.
pub const UNIT_TOL: f64 = 1e-10;

type Rm = [f64; 256];

#[inline]
fn ix(a: usize, b: usize, c: usize, d: usize) -> usize {
    ((a * 4 + b) * 4 + c) * 4 + d
}

fn tmul(a: &Jet, b: &Jet) -> Jet {
    let o = a.order().min(b.order());
    &a.truncate(o) * &b.truncate(o)
}

fn tadd(a: &Jet, b: &Jet) -> Jet {
    let o = a.order().min(b.order());
    &a.truncate(o) + &b.truncate(o)
}

fn dval(f: &Jet, a: usize) -> f64 {
    let mut alpha = [0usize; 4];
    alpha[a] = 1;
    f.partial(&alpha)
}

/// The complex structure `I` in the real frame `(x1, y1, x2, y2)`.
pub fn complex_structure_i() -> Matrix4<f64> {
    let mut m = Matrix4::zeros();
    for s in 0..2 {
        m[(2 * s, 2 * s + 1)] = -1.0;
        m[(2 * s + 1, 2 * s)] = 1.0;
    }
    m
}

/// `J^a_b` as jets, built from the metric jets of `geo` (order `n−2`).
fn j_jets(geo: &LocalGeometry) -> Result<Vec<Vec<Jet>>> {
    let g = &geo.g;
    let det = &(&g[0][0] * &g[1][1]) - &(&g[0][1] * &g[1][0]);
    let inv = CJet::from_real(det.re.powf(-0.5)?);
    let coef: [[CJet; 2]; 2] = [[-&(&g[0][1] * &inv), &g[0][0] * &inv], [-&(&g[1][1] * &inv), &g[1][0] * &inv]];
    let zero = Jet::zeros(4, geo.order - 2)?;
    let mut out = vec![vec![zero; 4]; 4];
    for (mu, row) in coef.iter().enumerate() {
        for (nu, cm) in row.iter().enumerate() {
            out[2 * nu][2 * mu] = cm.re.clone();
            out[2 * nu][2 * mu + 1] = -&cm.im;
            out[2 * nu + 1][2 * mu] = -&cm.im;
            out[2 * nu + 1][2 * mu + 1] = -&cm.re;
        }
    }
    Ok(out)
}

fn values4(m: &[Vec<Jet>]) -> Matrix4<f64> {
    Matrix4::from_fn(|a, b| m[a][b].value())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuaternionicFrame {
    pub i: Matrix4<f64>,
    pub j: Matrix4<f64>,
    pub k: Matrix4<f64>,
}

impl QuaternionicFrame {
    /// Largest entry of the quaternion relation defects `I² = J² = K² = −1`, `IJ = K = −JI`, `JK = I`, `KI = J`.
    pub fn relation_defect(&self) -> f64 {
        let id = Matrix4::identity();
        let (i, j, k) = (&self.i, &self.j, &self.k);
        [
            i * i + id,
            j * j + id,
            k * k + id,
            i * j - k,
            j * i + k,
            j * k - i,
            k * i - j,
        ]
        .iter()
        .map(|m| m.amax())
        .fold(0.0, f64::max)
    }

    /// Largest entry of `XᵀGX − G` over `X ∈ {I, J, K}`.
    pub fn compatibility_defect(&self, g: &Matrix4<f64>) -> f64 {
        [self.i, self.j, self.k].iter().map(|x| (x.transpose() * g * x - g).amax()).fold(0.0, f64::max)
    }
}

fn require_hyperkahler(pot: &dyn KahlerPotential, z: &CPair) -> Result<()> {
    if !pot.constant_determinant_at(z) {
        let u = z[0].norm_sqr() + z[1].norm_sqr();
        return Err(GeomError::NotHyperkahler(format!("u = {u}")));
    }
    Ok(())
}

pub fn quaternionic_frame(pot: &dyn KahlerPotential, z: &CPair) -> Result<QuaternionicFrame> {
    require_hyperkahler(pot, z)?;
    let geo = LocalGeometry::new(pot, z, 2)?;
    Ok(frame_from(&geo)?.0)
}

fn frame_from(geo: &LocalGeometry) -> Result<(QuaternionicFrame, Vec<Vec<Jet>>)> {
    let jj = j_jets(geo)?;
    let i = complex_structure_i();
    let j = values4(&jj);
    Ok((QuaternionicFrame { i, j, k: i * j }, jj))
}

/// Frobenius norm of `∇_X J` from a central difference of `J` along `X`
/// (one Richardson step from `h`), plus the Christoffel correction.
pub fn nabla_j_norm(pot: &dyn KahlerPotential, z: &CPair, x: &[f64; 4], h: f64) -> Result<f64> {
    require_hyperkahler(pot, z)?;
    let base = to_real(z);
    let j_at = |t: f64| -> Result<Matrix4<f64>> {
        let p: Vec<f64> = base.iter().zip(x).map(|(b, d)| b + t * d).collect();
        let geo = LocalGeometry::new(pot, &from_real(&p), 2)?;
        Ok(values4(&j_jets(&geo)?))
    };
    let diff = |h: f64| -> Result<Matrix4<f64>> { Ok((j_at(h)? - j_at(-h)?) / (2.0 * h)) };
    let dj = (diff(0.5 * h)? * 4.0 - diff(h)?) / 3.0;
    let geo = LocalGeometry::new(pot, z, 3)?;
    let gam = geo.real_christoffel_jets()?;
    let j = values4(&j_jets(&geo)?);
    let gx = Matrix4::from_fn(|cc, b| (0..4).map(|a| gam[cc][a][b].value() * x[a]).sum::<f64>());
    Ok((dj + gx * j - j * gx).norm())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SigmaInvariants {
    pub ii: f64,
    pub jj: f64,
    pub kk: f64,
    pub ij: f64,
    pub ik: f64,
    pub jk: f64,
}

impl SigmaInvariants {
    pub fn trace(&self) -> f64 {
        self.ii + self.jj + self.kk
    }

    pub fn scale(&self) -> f64 {
        [self.ii, self.jj, self.kk, self.ij, self.ik, self.jk].iter().map(|x| x.abs()).fold(0.0, f64::max)
    }
}

/// Metric, quaternionic frame and Riemann tensor at one point of a hyperkähler chart.
#[derive(Debug, Clone)]
pub struct CurvaturePoint {
    pub z: CPair,
    pub metric: Matrix4<f64>,
    pub frame: QuaternionicFrame,
    rm: Rm,
}

impl CurvaturePoint {
    pub fn new(pot: &dyn KahlerPotential, z: &CPair) -> Result<Self> {
        require_hyperkahler(pot, z)?;
        let geo = LocalGeometry::new(pot, z, 4)?;
        let (frame, _) = frame_from(&geo)?;
        let metric = values4(&geo.real_metric_jets());
        let jets = geo.real_riemann_jets()?;
        let mut rm = [0.0; 256];
        for (r, j) in rm.iter_mut().zip(&jets) {
            *r = j.value();
        }
        Ok(Self { z: *z, metric, frame, rm })
    }

    pub fn norm_sqr(&self, v: &Vector4<f64>) -> f64 {
        v.dot(&(self.metric * v))
    }

    /// `Rm(x, y, z, w) = ⟨R(x,y)z, w⟩`.
    pub fn rm(&self, x: &Vector4<f64>, y: &Vector4<f64>, z: &Vector4<f64>, w: &Vector4<f64>) -> f64 {
        rm_contract(&self.rm, x, y, z, w)
    }

    /// `Rm(W, IW, IW, W)`, unnormalised.
    pub fn holomorphic_form(&self, w: &Vector4<f64>) -> f64 {
        let iw = self.frame.i * w;
        self.rm(w, &iw, &iw, w)
    }

    pub fn sigma(&self, v: &Vector4<f64>) -> Result<SigmaInvariants> {
        let n = self.norm_sqr(v);
        if (n - 1.0).abs() > UNIT_TOL {
            return Err(GeomError::Normalization(format!("|V|² = {n}")));
        }
        let f = &self.frame;
        let (iv, jv, kv) = (f.i * v, f.j * v, f.k * v);
        let s = |x: &Vector4<f64>, y: &Vector4<f64>| self.rm(v, x, y, v);
        let out = SigmaInvariants {
            ii: s(&iv, &iv),
            jj: s(&jv, &jv),
            kk: s(&kv, &kv),
            ij: s(&iv, &jv),
            ik: s(&iv, &kv),
            jk: s(&jv, &kv),
        };
        let asym = (s(&jv, &iv) - out.ij).abs().max((s(&kv, &iv) - out.ik).abs()).max((s(&kv, &jv) - out.jk).abs());
        if asym > 1e-9 * (1.0 + out.scale()) {
            return Err(GeomError::Accuracy(format!("σ not symmetric: {asym:e}")));
        }
        Ok(out)
    }

    /// `αV + βIV + μJV + νKV`.
    pub fn combine(&self, v: &Vector4<f64>, coeffs: &[f64; 4]) -> Vector4<f64> {
        let f = &self.frame;
        v * coeffs[0] + f.i * v * coeffs[1] + f.j * v * coeffs[2] + f.k * v * coeffs[3]
    }
}

fn rm_contract(rm: &Rm, x: &Vector4<f64>, y: &Vector4<f64>, z: &Vector4<f64>, w: &Vector4<f64>) -> f64 {
    let mut s = 0.0;
    for a in 0..4 {
        for b in 0..4 {
            let xy = x[a] * y[b];
            if xy == 0.0 {
                continue;
            }
            for cc in 0..4 {
                for d in 0..4 {
                    s += rm[ix(a, b, cc, d)] * xy * z[cc] * w[d];
                }
            }
        }
    }
    s
}

pub fn sigma_invariants(pot: &dyn KahlerPotential, z: &CPair, v: &[f64; 4]) -> Result<SigmaInvariants> {
    CurvaturePoint::new(pot, z)?.sigma(&Vector4::from_column_slice(v))
}

/// `Rm(W, IW, IW, W)` for `W = αV + βIV + μJV + νKV` from the σ-invariants of `V`.
pub fn sectional_reconstruction(s: &SigmaInvariants, coeffs: &[f64; 4]) -> f64 {
    let [al, be, mu, nu] = *coeffs;
    let p = al * al + be * be - mu * mu - nu * nu;
    let q = be * mu - al * nu;
    let r = al * mu + be * nu;
    p * p * s.ii
        + 4.0 * q * q * s.jj
        + 4.0 * r * r * s.kk
        + 4.0 * q * p * s.ij
        + 4.0 * r * p * s.ik
        + 8.0 * r * q * s.jk
}

/// Unit coefficients `α+iβ = cos(θ/2)e^{i(ψ+φ)/2}`, `μ+iν = sin(θ/2)e^{i(ψ−φ)/2}`.
pub fn angle_coefficients(theta: f64, phi: f64, psi: f64) -> [f64; 4] {
    let (ch, sh) = ((0.5 * theta).cos(), (0.5 * theta).sin());
    let (a1, a2) = (0.5 * (psi + phi), 0.5 * (psi - phi));
    [ch * a1.cos(), ch * a1.sin(), sh * a2.cos(), sh * a2.sin()]
}

/// The same form on the unit sphere of the quaternionic line, in angles; independent of `ψ`.
pub fn sectional_from_angles(s: &SigmaInvariants, theta: f64, phi: f64) -> f64 {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    ct * ct * s.ii
        + st * st * sp * sp * s.jj
        + st * st * cp * cp * s.kk
        + (2.0 * theta).sin() * sp * s.ij
        + (2.0 * theta).sin() * cp * s.ik
        + st * st * (2.0 * phi).sin() * s.jk
}

/// Gauss curvature of the surface `{z₂ = 0}` from its induced metric `λ(|dx|² + |dy|²)`,
/// `K = −Δ ln λ / (2λ)` with `λ = (uφ')'`.
pub fn fixed_set_gauss_curvature(spec: &RadialPotentialSpec, z1: C64) -> Result<f64> {
    let u0 = z1.norm_sqr();
    let s = spec.series(u0, 4)?;
    let lam: Vec<f64> = (0..3)
        .map(|k| {
            let d1 = (k + 1) as f64 * s[k + 1];
            let d2 = ((k + 1) * (k + 2)) as f64 * s[k + 2];
            let prev = if k > 0 { (k * (k + 1)) as f64 * s[k + 1] } else { 0.0 };
            d1 + u0 * d2 + prev
        })
        .collect();
    let xy = Jet::variables(&[z1.re, z1.im], 2)?;
    let u = &(&xy[0] * &xy[0]) + &(&xy[1] * &xy[1]);
    let l = u.compose(&lam);
    let ln = l.ln()?;
    let lap = ln.partial(&[2, 0]) + ln.partial(&[0, 2]);
    Ok(-lap / (2.0 * l.value()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FixedSetReport {
    pub k: u32,
    pub sigma: SigmaInvariants,
    /// `max(|σ_IJ|, |σ_IK|, |σ_JK|)` for `k > 2`, `max(|σ_IJ|, |σ_IK|)` for `k = 2`.
    pub off_diagonal: f64,
    /// `|σ_JJ − σ_KK|`, constrained only for `k > 2`.
    pub jj_minus_kk: f64,
    /// `|σ_II + 2σ_JJ|`, constrained only for `k > 2`.
    pub ii_plus_2jj: f64,
    pub gauss_curvature: f64,
    /// Largest entry of `dfᵀ G df − G` for `f(z₁,z₂) = (z₁, e^{2πi/k}z₂)`.
    pub isometry_defect: f64,
}

impl FixedSetReport {
    pub fn passes(&self, tol: f64) -> bool {
        let s = tol * (1.0 + self.sigma.scale());
        let constrained = if self.k > 2 { self.jj_minus_kk.max(self.ii_plus_2jj) } else { 0.0 };
        self.off_diagonal <= s && constrained <= s && self.isometry_defect <= s
    }
}

/// σ-invariants of a unit `V` tangent to the fixed set `{z₂ = 0}` of the order-`k`
/// isometry of Eguchi-Hanson; `angle` rotates `V` within that tangent plane.
pub fn fixed_set_constraint_check(a: f64, k: u32, z1: C64, angle: f64) -> Result<FixedSetReport> {
    if k < 2 {
        return Err(GeomError::Parameter(format!("isometry order k = {k} < 2")));
    }
    let spec = RadialPotentialSpec::eguchi_hanson(a)?;
    let z = [z1, c(0.0, 0.0)];
    let pt = CurvaturePoint::new(&spec, &z)?;
    let dir = Vector4::new(angle.cos(), angle.sin(), 0.0, 0.0);
    let v = dir / pt.norm_sqr(&dir).sqrt();
    let sigma = pt.sigma(&v)?;
    let off_diagonal = if k > 2 {
        sigma.ij.abs().max(sigma.ik.abs()).max(sigma.jk.abs())
    } else {
        sigma.ij.abs().max(sigma.ik.abs())
    };
    let rot = 2.0 * std::f64::consts::PI / k as f64;
    let mut df = Matrix4::identity();
    let r = Matrix2::new(rot.cos(), -rot.sin(), rot.sin(), rot.cos());
    df.fixed_view_mut::<2, 2>(2, 2).copy_from(&r);
    Ok(FixedSetReport {
        k,
        sigma,
        off_diagonal,
        jj_minus_kk: (sigma.jj - sigma.kk).abs(),
        ii_plus_2jj: (sigma.ii + 2.0 * sigma.jj).abs(),
        gauss_curvature: fixed_set_gauss_curvature(&spec, z1)?,
        isometry_defect: (df.transpose() * pt.metric * df - pt.metric).amax(),
    })
}

/// Real metric, connection, curvature and `J` as jets around one point.
struct RealJets {
    metric: Vec<Vec<Jet>>,
    gamma: Vec<Vec<Vec<Jet>>>,
    rm: Vec<Jet>,
    j: Vec<Vec<Jet>>,
}

impl RealJets {
    fn new(pot: &dyn KahlerPotential, z: &CPair, order: usize) -> Result<Self> {
        let geo = LocalGeometry::new(pot, z, order)?;
        Ok(Self {
            metric: geo.real_metric_jets(),
            gamma: geo.real_christoffel_jets()?,
            rm: geo.real_riemann_jets()?,
            j: j_jets(&geo)?,
        })
    }

    /// `(∇Rm)_{e;abcd}` as jets, indexed `e*256 + abcd`.
    fn nabla_rm(&self) -> Vec<Jet> {
        let mut out = Vec::with_capacity(1024);
        for e in 0..4 {
            for a in 0..4 {
                for b in 0..4 {
                    for cc in 0..4 {
                        for d in 0..4 {
                            let mut t = self.rm[ix(a, b, cc, d)].diff(e).expect("order checked by caller");
                            for f in 0..4 {
                                let terms = [
                                    (&self.gamma[f][e][a], &self.rm[ix(f, b, cc, d)]),
                                    (&self.gamma[f][e][b], &self.rm[ix(a, f, cc, d)]),
                                    (&self.gamma[f][e][cc], &self.rm[ix(a, b, f, d)]),
                                    (&self.gamma[f][e][d], &self.rm[ix(a, b, cc, f)]),
                                ];
                                for (g, r) in terms {
                                    t = &t - &tmul(g, r).truncate(t.order());
                                }
                            }
                            out.push(t);
                        }
                    }
                }
            }
        }
        out
    }

    fn gamma_values(&self) -> [[[f64; 4]; 4]; 4] {
        std::array::from_fn(|cc| std::array::from_fn(|a| std::array::from_fn(|b| self.gamma[cc][a][b].value())))
    }

    fn apply(&self, m: &[Vec<Jet>], v: &[Jet]) -> Vec<Jet> {
        (0..4).map(|r| (1..4).fold(tmul(&m[r][0], &v[0]), |acc, s| tadd(&acc, &tmul(&m[r][s], &v[s])))).collect()
    }
}

fn apply_const(m: &Matrix4<f64>, v: &[Jet]) -> Vec<Jet> {
    (0..4).map(|r| (1..4).fold(v[0].scale(m[(r, 0)]), |acc, s| &acc + &v[s].scale(m[(r, s)]))).collect()
}

fn field_value(v: &[Jet]) -> Vector4<f64> {
    Vector4::from_fn(|a, _| v[a].value())
}

/// `(∇_X Y)^c = X^a ∂_a Y^c + Γ^c_{ab} X^a Y^b` at the expansion point.
fn covariant(gam: &[[[f64; 4]; 4]; 4], x: &[Jet], y: &[Jet]) -> Vector4<f64> {
    Vector4::from_fn(|cc, _| {
        let mut s = 0.0;
        for a in 0..4 {
            let xa = x[a].value();
            s += xa * dval(&y[cc], a);
            for b in 0..4 {
                s += gam[cc][a][b] * xa * y[b].value();
            }
        }
        s
    })
}

fn bracket(x: &[Jet], y: &[Jet]) -> Vector4<f64> {
    Vector4::from_fn(|cc, _| (0..4).map(|a| x[a].value() * dval(&y[cc], a) - y[a].value() * dval(&x[cc], a)).sum())
}

fn contract5(t: &[f64], e: &Vector4<f64>, x: &Vector4<f64>, y: &Vector4<f64>, z: &Vector4<f64>, w: &Vector4<f64>) -> f64 {
    (0..4)
        .map(|k| {
            let mut rm = [0.0; 256];
            rm.copy_from_slice(&t[k * 256..(k + 1) * 256]);
            e[k] * rm_contract(&rm, x, y, z, w)
        })
        .sum()
}

/// `(∇∇Rm)_{f;e;abcd}` at the point from `∂_f(∇Rm)` and the connection.
fn second_covariant(d_nabla: &[Vec<f64>; 4], nabla: &[f64], gam: &[[[f64; 4]; 4]; 4]) -> Vec<f64> {
    let n = |e: usize, a: usize, b: usize, cc: usize, d: usize| nabla[e * 256 + ix(a, b, cc, d)];
    let mut out = vec![0.0; 4096];
    for f in 0..4 {
        for e in 0..4 {
            for a in 0..4 {
                for b in 0..4 {
                    for cc in 0..4 {
                        for d in 0..4 {
                            let mut t = d_nabla[f][e * 256 + ix(a, b, cc, d)];
                            for g in 0..4 {
                                t -= gam[g][f][e] * n(g, a, b, cc, d)
                                    + gam[g][f][a] * n(e, g, b, cc, d)
                                    + gam[g][f][b] * n(e, a, g, cc, d)
                                    + gam[g][f][cc] * n(e, a, b, g, d)
                                    + gam[g][f][d] * n(e, a, b, cc, g);
                            }
                            out[(f * 4 + e) * 256 + ix(a, b, cc, d)] = t;
                        }
                    }
                }
            }
        }
    }
    out
}

fn hessian_term(nn: &[f64], x: &Vector4<f64>, y: &Vector4<f64>, args: [&Vector4<f64>; 4]) -> f64 {
    let mut s = 0.0;
    for f in 0..4 {
        for e in 0..4 {
            let w = x[f] * y[e];
            if w != 0.0 {
                s += w * rm_slice(&nn[(f * 4 + e) * 256..(f * 4 + e + 1) * 256], args);
            }
        }
    }
    s
}

fn rm_slice(t: &[f64], args: [&Vector4<f64>; 4]) -> f64 {
    let mut rm = [0.0; 256];
    rm.copy_from_slice(t);
    rm_contract(&rm, args[0], args[1], args[2], args[3])
}

/// Both readings of `ΔR(V,IV,IV,V)` with `Δ = ∇²_V + ∇²_{IV} + ∇²_{JV} + ∇²_{KV}`,
/// against the closed forms in the σ-invariants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LaplacianReport {
    pub sigma: SigmaInvariants,
    /// `Σ_E (∇_E(∇_E R))(V,IV,IV,V)`: covariant derivatives composed along the fields.
    pub composition: f64,
    /// `Σ_E ∇²R(E,E; V,IV,IV,V)`: the rough Laplacian.
    pub rough: f64,
    /// `composition` with the second derivative taken by covariant finite differences.
    pub composition_fd: f64,
    pub rough_fd: f64,
    /// Four `∇_{[·,·]}R` terms minus `4(σ_II² + 2σ_JJσ_KK + σ_IJ² + σ_IK² − 2σ_JK²)`.
    pub general_form: f64,
    /// `(α+β)∇_Vσ_II − α∇_{IV}σ_II − 6σ_II²`, only on `{z₂ = 0}`.
    pub fixed_set_form: Option<f64>,
    /// `β∇_Vσ_II − α∇_{IV}σ_II − 6σ_II²`, only on `{z₂ = 0}`. This is the form the
    /// composition Laplacian matches; the two differ by `α∇_Vσ_II`.
    pub fixed_set_form_measured: Option<f64>,
    /// `α = ⟨IV, ∇_V V⟩`.
    pub alpha: f64,
    /// `β = ⟨IV, ∇_{IV} V⟩`.
    pub beta: f64,
    pub grad_v_sigma_ii: f64,
    pub grad_iv_sigma_ii: f64,
}

/// Evaluates the Laplacian of `R(V,IV,IV,V)` for the field `V = ∂_{x1}/|∂_{x1}|`,
/// from order-6 jets and, independently, from finite differences of `∇Rm` with step `h`.
pub fn laplacian_riemann_identity(pot: &dyn KahlerPotential, z: &CPair, h: f64) -> Result<LaplacianReport> {
    require_hyperkahler(pot, z)?;
    let rj = RealJets::new(pot, z, 6)?;
    let gam = rj.gamma_values();
    let gmat = values4(&rj.metric);
    let ione = complex_structure_i();

    // V = ∂_{x1} / √G_00 and its quaternionic images, as order-4 jets
    let norm = rj.metric[0][0].powf(-0.5)?;
    let zero = Jet::zeros(4, norm.order())?;
    let v: Vec<Jet> = vec![norm.clone(), zero.clone(), zero.clone(), zero];
    let iv = apply_const(&ione, &v);
    let jv = rj.apply(&rj.j, &v);
    let kv = apply_const(&ione, &jv);
    let fields = [&v, &iv, &jv, &kv];
    let (v0, iv0, jv0, kv0) = (field_value(&v), field_value(&iv), field_value(&jv), field_value(&kv));
    let args = [&v0, &iv0, &iv0, &v0];

    let nabla = rj.nabla_rm();
    let nabla0: Vec<f64> = nabla.iter().map(Jet::value).collect();
    let d_nabla: [Vec<f64>; 4] = std::array::from_fn(|f| nabla.iter().map(|t| dval(t, f)).collect());
    let nn = second_covariant(&d_nabla, &nabla0, &gam);
    let nabla_r = |e: &Vector4<f64>, x: [&Vector4<f64>; 4]| contract5(&nabla0, e, x[0], x[1], x[2], x[3]);

    // the same second derivative from ∇Rm at displaced points
    let base = to_real(z);
    let nabla_at = |f: usize, t: f64| -> Result<Vec<f64>> {
        let mut p = base;
        p[f] += t;
        let r = RealJets::new(pot, &from_real(&p), 5)?;
        Ok(r.nabla_rm().iter().map(Jet::value).collect())
    };
    let mut d_fd: [Vec<f64>; 4] = Default::default();
    for (f, out) in d_fd.iter_mut().enumerate() {
        let (p1, m1, p2, m2) = (nabla_at(f, h)?, nabla_at(f, -h)?, nabla_at(f, 0.5 * h)?, nabla_at(f, -0.5 * h)?);
        *out = (0..1024)
            .map(|i| {
                let coarse = (p1[i] - m1[i]) / (2.0 * h);
                let fine = (p2[i] - m2[i]) / h;
                (4.0 * fine - coarse) / 3.0
            })
            .collect();
    }
    let nn_fd = second_covariant(&d_fd, &nabla0, &gam);

    let mut rough = 0.0;
    let mut rough_fd = 0.0;
    let mut drift = 0.0;
    for e in fields {
        let e0 = field_value(e);
        rough += hessian_term(&nn, &e0, &e0, args);
        rough_fd += hessian_term(&nn_fd, &e0, &e0, args);
        drift += nabla_r(&covariant(&gam, e, e), args);
    }

    let pt = CurvaturePoint::new(pot, z)?;
    let sigma = pt.sigma(&v0)?;
    let s = &sigma;
    let general_form = nabla_r(&bracket(&jv, &iv), [&v0, &jv0, &iv0, &v0])
        + nabla_r(&bracket(&jv, &v), [&v0, &kv0, &iv0, &v0])
        + nabla_r(&bracket(&v, &kv), [&v0, &jv0, &iv0, &v0])
        + nabla_r(&bracket(&kv, &iv), [&v0, &kv0, &iv0, &v0])
        - 4.0 * (s.ii * s.ii + 2.0 * s.jj * s.kk + s.ij * s.ij + s.ik * s.ik - 2.0 * s.jk * s.jk);

    // σ_II as a scalar field along V
    let rm_field = |x: &[Jet], y: &[Jet], zz: &[Jet], w: &[Jet]| -> Jet {
        let mut acc = Jet::zeros(4, rj.rm[0].order()).expect("valid shape");
        for a in 0..4 {
            for b in 0..4 {
                let xy = tmul(&x[a], &y[b]);
                for cc in 0..4 {
                    let xyz = tmul(&xy, &zz[cc]);
                    for d in 0..4 {
                        acc = tadd(&acc, &tmul(&rj.rm[ix(a, b, cc, d)], &tmul(&xyz, &w[d])));
                    }
                }
            }
        }
        acc
    };
    let sig_ii = rm_field(&v, &iv, &iv, &v);
    let grad = |x: &Vector4<f64>| (0..4).map(|a| x[a] * dval(&sig_ii, a)).sum::<f64>();
    let (grad_v, grad_iv) = (grad(&v0), grad(&iv0));
    let alpha = iv0.dot(&(gmat * covariant(&gam, &v, &v)));
    let beta = iv0.dot(&(gmat * covariant(&gam, &iv, &v)));
    let on_fixed_set = z[1].norm() == 0.0;
    let fixed_set_form = on_fixed_set.then(|| (alpha + beta) * grad_v - alpha * grad_iv - 6.0 * s.ii * s.ii);
    let fixed_set_form_measured = on_fixed_set.then(|| beta * grad_v - alpha * grad_iv - 6.0 * s.ii * s.ii);

    Ok(LaplacianReport {
        sigma,
        composition: rough + drift,
        rough,
        composition_fd: rough_fd + drift,
        rough_fd,
        general_form,
        fixed_set_form,
        fixed_set_form_measured,
        alpha,
        beta,
        grad_v_sigma_ii: grad_v,
        grad_iv_sigma_ii: grad_iv,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct YauSlack {
    pub c: f64,
    /// `e^{Cφ}Δ̃(e^{−Cφ}Tr)` minus `−|∂Tr|²_g̃/Tr + Δ̃(Δφ) − C·Tr·Δ̃φ`.
    pub gradient_bound: f64,
    /// `e^{Cφ}Δ̃(e^{−Cφ}Tr)` minus `Δψ − 4R_{11̄22̄} − 2C·Tr + (C + R_{11̄22̄})Tr²/det`.
    pub final_bound: f64,
}

/// Residuals of the pointwise identities behind the `C²` estimate for
/// `g̃ = g + i∂∂̄φ`, `det g̃ = e^ψ det g`, with `Tr = Tr_g g̃` and `det = det g̃/det g`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct YauResiduals {
    /// `2(e^ψ − 1) − 2Δφ − (Δφ)² + |∇²φ|²_g`.
    pub norm_ma: f64,
    /// `Δ̃(Δφ)` minus the curvature and third-derivative expansion.
    pub phi_der: f64,
    /// The same in a unitary frame diagonalising `∂∂̄φ`.
    pub phi_der_frame: f64,
    /// `Δ̃φ − (2 − Tr/det)`.
    pub corrected_laplacian: f64,
    pub trace: f64,
    pub det_ratio: f64,
    /// `R_{11̄22̄}` in the diagonalising frame.
    pub r1122: f64,
    pub slack: Vec<YauSlack>,
}

type CMat = [[CJet; 2]; 2];

fn cmat_values(m: &CMat) -> [[C64; 2]; 2] {
    std::array::from_fn(|a| std::array::from_fn(|b| m[a][b].value()))
}

fn inv2(m: &[[C64; 2]; 2]) -> [[C64; 2]; 2] {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    [[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]]
}

/// `Σ h[ν][μ] ∂_μ∂_ν̄ f` at the point.
fn laplace_with(h: &[[C64; 2]; 2], f: &CJet) -> Result<f64> {
    let mut s = c(0.0, 0.0);
    for m in 0..2 {
        for n in 0..2 {
            s += h[n][m] * f.dz(m)?.dzbar(n)?.value();
        }
    }
    Ok(s.re)
}

pub fn yau_identity_residuals(
    pot: &dyn KahlerPotential,
    phi: &RadialTestFunction,
    z: &CPair,
    cs: &[f64],
) -> Result<YauResiduals> {
    let geo = LocalGeometry::new(pot, z, 4)?;
    let curv = geo.curvature()?;
    let gi = geo.inverse_values();
    let gam = geo.christoffel()?;
    let u = crate::metric::u_jet(z, 4)?;
    let pj = CJet::from_real(phi.compose(&u));
    let hess: CMat = [
        [pj.dz(0)?.dzbar(0)?, pj.dz(0)?.dzbar(1)?],
        [pj.dz(1)?.dzbar(0)?, pj.dz(1)?.dzbar(1)?],
    ];
    let g = &geo.g;
    let gt: CMat = std::array::from_fn(|a| std::array::from_fn(|b| &g[a][b] + &hess[a][b]));
    let det = |m: &CMat| (&(&m[0][0] * &m[1][1]) - &(&m[0][1] * &m[1][0])).re;
    let (det_g, det_gt) = (det(g), det(&gt));
    let ratio = det_gt.value() / det_g.value();
    if !(ratio > 0.0) || !(gt[0][0].value().re > 0.0) {
        return Err(GeomError::DegenerateMetric(format!("g + ∂∂̄φ not positive (det ratio {ratio:e})")));
    }
    let psi = CJet::from_real(&det_gt.ln()? - &det_g.ln()?);
    let gti = inv2(&cmat_values(&gt));
    let h = cmat_values(&hess);

    let ginv_j = &geo.ginv;
    let mut lap_phi = CJet::zeros(4, 2)?;
    for m in 0..2 {
        for n in 0..2 {
            lap_phi = &lap_phi + &(&ginv_j[n][m] * &hess[m][n]);
        }
    }
    let lap_phi = CJet::from_real(lap_phi.re);
    let dphi = lap_phi.re.value();
    let trace = 2.0 + dphi;
    let mut hsq = c(0.0, 0.0);
    for a in 0..2 {
        for b in 0..2 {
            for cc in 0..2 {
                for d in 0..2 {
                    hsq += gi[a][cc] * h[cc][b] * gi[b][d] * h[d][a];
                }
            }
        }
    }
    let norm_ma = 2.0 * (ratio - 1.0) - 2.0 * dphi - dphi * dphi + hsq.re;

    let lhs = laplace_with(&gti, &lap_phi)?;
    let lap_psi = laplace_with(&gi, &psi)?;
    let r = &curv.riemann;
    let mut t1 = c(0.0, 0.0);
    for m in 0..2 {
        for n in 0..2 {
            let mut inner = curv.ricci[m][n];
            for rr in 0..2 {
                for s in 0..2 {
                    for a in 0..2 {
                        for b in 0..2 {
                            inner += r[m][n][rr][s] * gi[b][rr] * gi[s][a] * h[a][b];
                        }
                    }
                }
            }
            t1 += gti[n][m] * inner;
        }
    }
    // φ_{αρν̄} = ∇_α φ_{ρν̄} and φ_{β̄μσ̄} = ∇_β̄ φ_{μσ̄}
    let mut d3 = [[[c(0.0, 0.0); 2]; 2]; 2];
    let mut d3b = [[[c(0.0, 0.0); 2]; 2]; 2];
    for a in 0..2 {
        for rr in 0..2 {
            for n in 0..2 {
                let mut t = hess[rr][n].dz(a)?.value();
                let mut tb = hess[rr][n].dzbar(a)?.value();
                for l in 0..2 {
                    t -= gam[l][rr][a] * h[l][n];
                    tb -= gam[l][n][a].conj() * h[rr][l];
                }
                d3[a][rr][n] = t;
                d3b[a][rr][n] = tb;
            }
        }
    }
    let mut t2 = c(0.0, 0.0);
    for n in 0..2 {
        for m in 0..2 {
            for s in 0..2 {
                for rr in 0..2 {
                    for b in 0..2 {
                        for a in 0..2 {
                            t2 += gti[n][m] * gti[s][rr] * gi[b][a] * d3[a][rr][n] * d3b[b][m][s];
                        }
                    }
                }
            }
        }
    }
    let phi_der = lhs - (lap_psi - curv.scalar + t1.re + t2.re);

    // unitary frame e_k with φ diagonal: e_k = Σ_i conj(U_ik) f_i
    let f = crate::metric::unitary_frame(&geo.metric());
    let form = |x: &CPair, y: &CPair| -> C64 {
        let mut s = c(0.0, 0.0);
        for m in 0..2 {
            for n in 0..2 {
                s += h[m][n] * x[m] * y[n].conj();
            }
        }
        s
    };
    let b = Matrix2::from_fn(|i, j| form(&f[i], &f[j]));
    let eig = b.symmetric_eigen();
    let lam = [eig.eigenvalues[0], eig.eigenvalues[1]];
    let e: [CPair; 2] = std::array::from_fn(|k| {
        std::array::from_fn(|m| eig.eigenvectors[(0, k)].conj() * f[0][m] + eig.eigenvectors[(1, k)].conj() * f[1][m])
    });
    let frame4 = |i: usize, j: usize, k: usize, l: usize| -> C64 {
        let mut s = c(0.0, 0.0);
        for m in 0..2 {
            for n in 0..2 {
                for a in 0..2 {
                    for bb in 0..2 {
                        s += r[m][n][a][bb] * e[i][m] * e[j][n].conj() * e[k][a] * e[l][bb].conj();
                    }
                }
            }
        }
        s
    };
    let r1122 = frame4(0, 0, 1, 1).re;
    let det_f = (1.0 + lam[0]) * (1.0 + lam[1]);
    let tr_f = 2.0 + lam[0] + lam[1];
    let mut third = 0.0;
    for a in 0..2 {
        for m in 0..2 {
            for n in 0..2 {
                let mut t = c(0.0, 0.0);
                for x in 0..2 {
                    for y in 0..2 {
                        for w in 0..2 {
                            t += d3[x][y][w] * e[a][x] * e[m][y] * e[n][w].conj();
                        }
                    }
                }
                third += t.norm_sqr() / ((1.0 + lam[m]) * (1.0 + lam[n]));
            }
        }
    }
    let phi_der_frame = lhs - (lap_psi + r1122 * (tr_f * tr_f / det_f - 4.0) + third);

    let lap_tilde_phi: f64 = (0..2).map(|k| lam[k] / (1.0 + lam[k])).sum();
    let direct = {
        let mut s = c(0.0, 0.0);
        for m in 0..2 {
            for n in 0..2 {
                s += gti[n][m] * h[m][n];
            }
        }
        s.re
    };
    let corrected_laplacian = direct - (2.0 - trace / ratio);

    let tr_jet = lap_phi.re.add_scalar(2.0);
    let mut grad_tr = 0.0;
    for m in 0..2 {
        for n in 0..2 {
            let dt = CJet::from_real(tr_jet.clone());
            grad_tr += (gti[n][m] * dt.dz(m)?.value() * dt.dzbar(n)?.value()).re;
        }
    }
    let phi_j = phi.compose(&u.truncate(2));
    let mut slack = Vec::with_capacity(cs.len());
    for &cc in cs {
        let weight = phi_j.scale(-cc).exp();
        let lhs_c = laplace_with(&gti, &CJet::from_real(&weight * &tr_jet))? / weight.value();
        let gradient_rhs = -grad_tr / trace + lhs - cc * trace * lap_tilde_phi;
        let final_rhs =
            lap_psi - 4.0 * r1122 - 2.0 * cc * trace + (cc + r1122) * trace * trace / ratio;
        slack.push(YauSlack { c: cc, gradient_bound: lhs_c - gradient_rhs, final_bound: lhs_c - final_rhs });
    }

    Ok(YauResiduals {
        norm_ma,
        phi_der,
        phi_der_frame,
        corrected_laplacian,
        trace,
        det_ratio: ratio,
        r1122,
        slack,
    })
}
