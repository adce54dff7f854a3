//! The Kummer surface `T⁴/±1` with its 16 glued Eguchi-Hanson necks.
//!
//! Points are handled in covering coordinates on `C²`. The patchwork potential at `z`
//! is the neck potential of the nearest half-lattice point `q`, evaluated at `z − q`.
//! Away from all necks this is `|z − q|²`, and potentials centred at different `q`
//! differ by pluriharmonic terms, so the metric does not depend on which `q` is used.

use std::collections::{HashMap, HashSet};
use std::num::NonZeroUsize;
use std::path::Path;

use gauss_quad::GaussLegendre;
use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::geodesics::{integrate_geodesic, second_variation_spectrum, ClosedGeodesic, GeodesicState, U_MIN};
use crate::jets::Jet;
use crate::metric::{c, to_real, u_jet, CPair, ChartId, HermitianMetric, KahlerPotential, LocalGeometry, C64};
use crate::potentials::{eval_potential, plurisubharmonic_margin, RadialPotentialSpec, DEFAULT_DELTA};

pub const DEFAULT_LATTICE_SCALE: f64 = 8.0;
pub const NECKS: usize = 16;
/// Inside the plurisubharmonic range at the default δ.
pub const DEFAULT_NECK_A: f64 = 0.04;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KummerSurface {
    pub lattice_scale: f64,
    pub a: [f64; NECKS],
    pub delta: f64,
    /// Gluing starts at `u = cutoff_scale`; 1 unless the surface was rescaled.
    pub cutoff_scale: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SurfaceConfig {
    lattice_scale: f64,
    a: Vec<f64>,
    delta: f64,
}

impl KummerSurface {
    pub fn new(lattice_scale: f64, a: [f64; NECKS], delta: f64) -> Result<Self> {
        let s = Self { lattice_scale, a, delta, cutoff_scale: 1.0 };
        s.validate()?;
        Ok(s)
    }

    pub fn uniform(lattice_scale: f64, a: f64, delta: f64) -> Result<Self> {
        Self::new(lattice_scale, [a; NECKS], delta)
    }

    /// Parses `{"lattice_scale": R, "a": [16 reals], "delta": δ}`.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let cfg: SurfaceConfig =
            serde_json::from_str(text).map_err(|e| GeomError::Config(format!("surface config: {e}")))?;
        let a: [f64; NECKS] = cfg.a.as_slice().try_into().map_err(|_| {
            GeomError::Config(format!("surface config: \"a\" must list {NECKS} values, got {}", cfg.a.len()))
        })?;
        Self::new(cfg.lattice_scale, a, cfg.delta).map_err(|e| GeomError::Config(format!("surface config: {e}")))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| GeomError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({ "lattice_scale": self.lattice_scale, "a": self.a.to_vec(), "delta": self.delta })
            .to_string()
    }

    pub fn validate(&self) -> Result<()> {
        let r = self.lattice_scale;
        if !(r > 0.0 && r.is_finite()) {
            return Err(GeomError::Parameter(format!("lattice_scale must be positive, got {r}")));
        }
        if !(self.delta > 0.0 && self.delta <= 0.5) {
            return Err(GeomError::Parameter(format!("delta must lie in (0, 1/2], got {}", self.delta)));
        }
        if let Some(bad) = self.a.iter().find(|a| !(**a >= 0.0 && a.is_finite())) {
            return Err(GeomError::Parameter(format!("a_i must be non-negative, got {bad}")));
        }
        let need = 4.0 * (1.0 + 2.0 * self.delta) * self.cutoff_scale.sqrt();
        if r < need {
            return Err(GeomError::Parameter(format!(
                "charts overlap: lattice_scale {r} < 4(1+2δ)√s = {need}"
            )));
        }
        Ok(())
    }

    /// `|a|² = Σ a_i²`.
    pub fn a_norm_sqr(&self) -> f64 {
        self.a.iter().map(|a| a * a).sum()
    }

    /// `r_a = max a_i / min a_i`.
    pub fn a_ratio(&self) -> f64 {
        let max = self.a.iter().copied().fold(0.0, f64::max);
        let min = self.a.iter().copied().fold(f64::INFINITY, f64::min);
        max / min
    }

    /// Neck potential of singular point `i`.
    pub fn neck_spec(&self, i: usize) -> Result<RadialPotentialSpec> {
        let base = if self.a[i] == 0.0 {
            RadialPotentialSpec::euclidean()
        } else {
            RadialPotentialSpec::glued(self.a[i], self.delta)?
        };
        let mut spec = base.with_cutoff_scale(self.cutoff_scale)?;
        spec.delta = self.delta;
        Ok(spec)
    }

    /// The half-lattice point `q_i` in `[0, R)²`, with `i = ε₁ + 2ε₂ + 4ε₃ + 8ε₄`
    /// and `q = (R/2)(ε₁ + iε₂, ε₃ + iε₄)`.
    pub fn half_lattice_point(&self, i: usize) -> CPair {
        let h = 0.5 * self.lattice_scale;
        let e = |k: usize| ((i >> k) & 1) as f64 * h;
        [c(e(0), e(1)), c(e(2), e(3))]
    }

    /// Nearest half-lattice point in covering coordinates, with its index.
    pub fn nearest_half_lattice(&self, z: &CPair) -> (usize, CPair) {
        let h = 0.5 * self.lattice_scale;
        let x = to_real(z);
        let k: [i64; 4] = x.map(|v| (v / h).round() as i64);
        let idx = (0..4).map(|j| (k[j].rem_euclid(2) as usize) << j).sum();
        (idx, [c(k[0] as f64 * h, k[1] as f64 * h), c(k[2] as f64 * h, k[3] as f64 * h)])
    }

    /// Patchwork potential value `φ_{a_i}(|z − q_i|²)`.
    pub fn potential_value(&self, z: &CPair) -> Result<f64> {
        let (i, q) = self.nearest_half_lattice(z);
        let u = (z[0] - q[0]).norm_sqr() + (z[1] - q[1]).norm_sqr();
        Ok(eval_potential(&self.neck_spec(i)?, u, 0)?.value())
    }

    pub fn metric_at(&self, z: &CPair) -> Result<HermitianMetric> {
        Ok(LocalGeometry::new(self, z, 2)?.metric())
    }

    /// The surface seen under `z ↦ αz`: lattice `αR`, parameters `α²a_i`, cutoff scale `α²`.
    pub fn scaled(&self, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(GeomError::Parameter(format!("alpha must be positive, got {alpha}")));
        }
        let s = Self {
            lattice_scale: alpha * self.lattice_scale,
            a: self.a.map(|a| alpha * alpha * a),
            delta: self.delta,
            cutoff_scale: alpha * alpha * self.cutoff_scale,
        };
        s.validate()?;
        Ok(s)
    }
}

impl Default for KummerSurface {
    fn default() -> Self {
        Self { lattice_scale: DEFAULT_LATTICE_SCALE, a: [DEFAULT_NECK_A; NECKS], delta: DEFAULT_DELTA, cutoff_scale: 1.0 }
    }
}

impl KahlerPotential for KummerSurface {
    fn potential_jet(&self, z: &CPair, order: usize) -> Result<Jet> {
        let (i, q) = self.nearest_half_lattice(z);
        let w = [z[0] - q[0], z[1] - q[1]];
        let u = u_jet(&w, order)?;
        if !(u.value() > 0.0) {
            return Err(GeomError::OrbifoldPoint(u.value()));
        }
        self.neck_spec(i)?.compose(&u)
    }

    fn chart(&self) -> ChartId {
        ChartId::Flat
    }

    fn constant_determinant_at(&self, z: &CPair) -> bool {
        let (i, q) = self.nearest_half_lattice(z);
        match self.neck_spec(i) {
            Ok(spec) => spec.constant_determinant_at(&[z[0] - q[0], z[1] - q[1]]),
            Err(_) => false,
        }
    }

    fn orbifold_distance_sqr(&self, z: &CPair) -> Option<f64> {
        let (_, q) = self.nearest_half_lattice(z);
        Some((z[0] - q[0]).norm_sqr() + (z[1] - q[1]).norm_sqr())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum KummerChart {
    Flat,
    Eh(usize),
    /// Bundle chart of neck `i`; `swapped` when the fibre coordinate is `w₁/w₂`.
    Bundle { neck: usize, swapped: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChartPoint {
    pub chart: KummerChart,
    pub coords: CPair,
    /// Covering-space representative the coordinates were read from.
    pub representative: CPair,
}

/// Picks `z` or `−z`, whichever has lexicographically non-negative first nonzero real coordinate.
fn sign_canonical(z: CPair) -> CPair {
    let x = to_real(&z);
    match x.iter().find(|v| **v != 0.0) {
        Some(v) if *v < 0.0 => [-z[0], -z[1]],
        _ => z,
    }
}

/// Reduces each real coordinate into `[−R/2, R/2]` and applies the ±1 normalisation.
pub fn fundamental_representative(surface: &KummerSurface, z: &CPair) -> CPair {
    let r = surface.lattice_scale;
    let red = |v: f64| v - r * (v / r).round();
    let reduce = |z: CPair| -> CPair { [c(red(z[0].re), red(z[0].im)), c(red(z[1].re), red(z[1].im))] };
    reduce(sign_canonical(reduce(*z)))
}

pub fn locate(surface: &KummerSurface, z: &CPair) -> Result<ChartPoint> {
    let rep = fundamental_representative(surface, z);
    let (i, q) = surface.nearest_half_lattice(&rep);
    let w = [rep[0] - q[0], rep[1] - q[1]];
    let u = w[0].norm_sqr() + w[1].norm_sqr();
    let bound = (1.0 + 2.0 * surface.delta) * surface.cutoff_scale;
    if u >= bound {
        return Ok(ChartPoint { chart: KummerChart::Flat, coords: rep, representative: rep });
    }
    if u == 0.0 {
        return Err(GeomError::OrbifoldPoint(0.0));
    }
    let w = sign_canonical(w);
    if u < U_MIN {
        let swapped = w[1].norm() > w[0].norm();
        let (p, s) = if swapped { (w[1], w[0]) } else { (w[0], w[1]) };
        let coords = [p * p * 0.5, s / p];
        return Ok(ChartPoint { chart: KummerChart::Bundle { neck: i, swapped }, coords, representative: rep });
    }
    Ok(ChartPoint { chart: KummerChart::Eh(i), coords: w, representative: rep })
}

#[derive(Debug, Clone, Serialize)]
pub struct NeckVolume {
    pub a: f64,
    /// `Vol_Euc(N_i)` of the half annulus `s < u < s(1+δ)` modulo ±1.
    pub vol_euc: f64,
    pub vol_g: f64,
    /// `Vol_Euc(N_i) − Vol_g(N_i)` by quadrature of `1 − det g`.
    pub deficit: f64,
    /// The same deficit from the boundary values `(π²/4)[(uφ')²]`.
    pub deficit_boundary: f64,
    /// `π²a²/4`.
    pub deficit_closed_form: f64,
    pub u_phi_prime_inner: f64,
    pub u_phi_prime_outer: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VolumeReport {
    pub necks: Vec<NeckVolume>,
    pub vol_euc_torus: f64,
    /// `A = 1 + 2(Vol_g(N) − Vol_Euc(N))/Vol_Euc(T)` from the quadrature.
    pub a_constant: f64,
    /// `1 − |a|²π²/(2 Vol_Euc(T))`.
    pub a_closed_form: f64,
}

const VOLUME_PANELS: usize = 16;
const VOLUME_NODES: usize = 32;

fn neck_volume(spec: &RadialPotentialSpec, gl: &GaussLegendre) -> Result<NeckVolume> {
    let pi2 = std::f64::consts::PI.powi(2);
    let s = spec.cutoff_scale;
    let (lo, hi) = (s, s * (1.0 + spec.delta));
    let vol_euc = 0.25 * pi2 * (hi * hi - lo * lo);
    let width = (hi - lo) / VOLUME_PANELS as f64;
    let mut deficit = 0.0;
    for p in 0..VOLUME_PANELS {
        let (a, b) = (lo + p as f64 * width, lo + (p + 1) as f64 * width);
        let mut err = None;
        let val = gl.integrate(a, b, |u| {
            match LocalGeometry::new(spec, &[c(u.sqrt(), 0.0), c(0.0, 0.0)], 2) {
                Ok(lg) => (1.0 - lg.metric().det()) * u,
                Err(e) => {
                    err = Some(e);
                    0.0
                }
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
        deficit += 0.5 * pi2 * val;
    }
    let h = |u: f64| -> Result<f64> { Ok(u * eval_potential(spec, u, 1)?.coeffs()[1]) };
    let (h_in, h_out) = (h(lo)?, h(hi)?);
    let deficit_boundary = 0.25 * pi2 * ((hi * hi - h_out * h_out) - (lo * lo - h_in * h_in));
    Ok(NeckVolume {
        a: spec.a,
        vol_euc,
        vol_g: vol_euc - deficit,
        deficit,
        deficit_boundary,
        deficit_closed_form: 0.25 * pi2 * spec.a * spec.a,
        u_phi_prime_inner: h_in,
        u_phi_prime_outer: h_out,
    })
}

pub fn volumes_and_a(surface: &KummerSurface) -> Result<VolumeReport> {
    surface.validate()?;
    let gl = GaussLegendre::new(NonZeroUsize::new(VOLUME_NODES).expect("nonzero"));
    let mut cache: HashMap<u64, NeckVolume> = HashMap::new();
    let mut necks = Vec::with_capacity(NECKS);
    for i in 0..NECKS {
        let key = surface.a[i].to_bits();
        if let Some(v) = cache.get(&key) {
            necks.push(v.clone());
            continue;
        }
        let spec = surface.neck_spec(i)?;
        if spec.a > 0.0 && plurisubharmonic_margin(&spec, 401)? <= 0.0 {
            return Err(GeomError::Parameter(format!(
                "a_{i} = {} is outside the plurisubharmonic range for delta = {}",
                spec.a, spec.delta
            )));
        }
        let v = neck_volume(&spec, &gl)?;
        cache.insert(key, v.clone());
        necks.push(v);
    }
    let vol_euc_torus = surface.lattice_scale.powi(4);
    let total_deficit: f64 = necks.iter().map(|n| n.deficit).sum();
    let a_constant = 1.0 - 2.0 * total_deficit / vol_euc_torus;
    let a_closed_form = 1.0 - surface.a_norm_sqr() * std::f64::consts::PI.powi(2) / (2.0 * vol_euc_torus);
    if !(a_constant > 0.0) {
        return Err(GeomError::Parameter(format!("A = {a_constant} is not positive; |a| is too large")));
    }
    Ok(VolumeReport { necks, vol_euc_torus, a_constant, a_closed_form })
}

/// Gaussian integer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GaussInt {
    pub re: i64,
    pub im: i64,
}

impl GaussInt {
    pub const ZERO: Self = Self { re: 0, im: 0 };
    pub const ONE: Self = Self { re: 1, im: 0 };
    pub const I: Self = Self { re: 0, im: 1 };

    pub fn new(re: i64, im: i64) -> Self {
        Self { re, im }
    }

    pub fn mul(self, o: Self) -> Self {
        Self { re: self.re * o.re - self.im * o.im, im: self.re * o.im + self.im * o.re }
    }

    pub fn add(self, o: Self) -> Self {
        Self { re: self.re + o.re, im: self.im + o.im }
    }

    pub fn neg(self) -> Self {
        Self { re: -self.re, im: -self.im }
    }

    pub fn conj(self) -> Self {
        Self { re: self.re, im: -self.im }
    }

    pub fn mod2(self) -> Self {
        Self { re: self.re.rem_euclid(2), im: self.im.rem_euclid(2) }
    }

    pub fn to_c64(self) -> C64 {
        c(self.re as f64, self.im as f64)
    }
}

/// `z ↦ B·z + (R/2)·b`, composed first with `z ↦ z̄` when `conj` is set.
/// `b` is taken modulo 2, i.e. modulo the lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct IsometryElement {
    pub b_matrix: [[GaussInt; 2]; 2],
    pub b: [GaussInt; 2],
    pub conj: bool,
}

impl IsometryElement {
    pub fn identity() -> Self {
        Self {
            b_matrix: [[GaussInt::ONE, GaussInt::ZERO], [GaussInt::ZERO, GaussInt::ONE]],
            b: [GaussInt::ZERO; 2],
            conj: false,
        }
    }

    /// `f(z, w) = (z, iw + R/2)`.
    pub fn special_f() -> Self {
        Self {
            b_matrix: [[GaussInt::ONE, GaussInt::ZERO], [GaussInt::ZERO, GaussInt::I]],
            b: [GaussInt::ZERO, GaussInt::ONE],
            conj: false,
        }
    }

    /// Representative of the class `(B, b, ε) ∼ (−B, −b, ε)`: the first nonzero entry of `B`
    /// is `1` or `i`, and `b` is reduced mod 2.
    pub fn normalized(mut self) -> Self {
        self.b = self.b.map(GaussInt::mod2);
        let first = self.b_matrix.iter().flatten().find(|g| **g != GaussInt::ZERO).copied();
        if let Some(f) = first {
            if f.re < 0 || f.im < 0 {
                self.b_matrix = self.b_matrix.map(|r| r.map(GaussInt::neg));
                self.b = self.b.map(|g| g.neg().mod2());
            }
        }
        self
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Self {
        let cj = |g: GaussInt| if self.conj { g.conj() } else { g };
        let m2 = other.b_matrix.map(|r| r.map(cj));
        let b2 = other.b.map(cj);
        let mut m = [[GaussInt::ZERO; 2]; 2];
        let mut b = self.b;
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    m[i][j] = m[i][j].add(self.b_matrix[i][k].mul(m2[k][j]));
                }
                b[i] = b[i].add(self.b_matrix[i][j].mul(b2[j]));
            }
        }
        Self { b_matrix: m, b, conj: self.conj ^ other.conj }.normalized()
    }

    pub fn apply(&self, surface: &KummerSurface, z: &CPair) -> CPair {
        let h = 0.5 * surface.lattice_scale;
        let z = if self.conj { [z[0].conj(), z[1].conj()] } else { *z };
        std::array::from_fn(|i| {
            self.b_matrix[i][0].to_c64() * z[0] + self.b_matrix[i][1].to_c64() * z[1] + self.b[i].to_c64() * h
        })
    }

    /// Smallest `n ≥ 1` with `selfⁿ = id`.
    pub fn order(&self) -> usize {
        let id = Self::identity();
        let me = self.normalized();
        let mut p = me;
        for n in 1..=64 {
            if p == id {
                return n;
            }
            p = me.compose(&p);
        }
        usize::MAX
    }

    /// Whether `B` is unitary with Gaussian-unit entries in diagonal or antidiagonal position.
    pub fn is_admissible(&self) -> bool {
        let unit = |g: GaussInt| g.re.abs() + g.im.abs() == 1 && g.re * g.im == 0;
        let m = &self.b_matrix;
        let diag = unit(m[0][0]) && unit(m[1][1]) && m[0][1] == GaussInt::ZERO && m[1][0] == GaussInt::ZERO;
        let anti = unit(m[0][1]) && unit(m[1][0]) && m[0][0] == GaussInt::ZERO && m[1][1] == GaussInt::ZERO;
        diag || anti
    }

    /// Index permutation induced on the 16 half-lattice points.
    pub fn half_lattice_permutation(&self, surface: &KummerSurface) -> [usize; NECKS] {
        std::array::from_fn(|i| surface.nearest_half_lattice(&self.apply(surface, &surface.half_lattice_point(i))).0)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IsometryGroup {
    pub elements: Vec<IsometryElement>,
    pub raw_count: usize,
    pub closed: bool,
    pub max_order: usize,
    pub orders: Vec<usize>,
}

fn units() -> [GaussInt; 4] {
    [GaussInt::ONE, GaussInt::I, GaussInt::ONE.neg(), GaussInt::I.neg()]
}

/// Enumerates the affine isometries of the patchwork metric induced from
/// `U(2) ∩ GL(2, Z[i])` and half-lattice translations, with and without conjugation.
pub fn isometry_group(surface: &KummerSurface) -> Result<IsometryGroup> {
    if surface.a.iter().any(|a| *a != surface.a[0]) {
        return Err(GeomError::Precondition("isometry group needs all a_i equal".into()));
    }
    let mut mats = Vec::with_capacity(32);
    for al in units() {
        for be in units() {
            mats.push([[al, GaussInt::ZERO], [GaussInt::ZERO, be]]);
            mats.push([[GaussInt::ZERO, al], [be, GaussInt::ZERO]]);
        }
    }
    let mut raw_count = 0;
    let mut seen = HashSet::new();
    let mut elements = Vec::new();
    for m in &mats {
        for t in 0..16usize {
            let b = [GaussInt::new((t & 1) as i64, ((t >> 1) & 1) as i64), GaussInt::new(((t >> 2) & 1) as i64, ((t >> 3) & 1) as i64)];
            for conj in [false, true] {
                raw_count += 1;
                let e = IsometryElement { b_matrix: *m, b, conj }.normalized();
                if seen.insert(e) {
                    elements.push(e);
                }
            }
        }
    }
    let closed = elements.iter().all(|x| elements.iter().all(|y| seen.contains(&x.compose(y))));
    let orders: Vec<usize> = elements.iter().map(|e| e.order()).collect();
    let max_order = orders.iter().copied().max().unwrap_or(0);
    Ok(IsometryGroup { elements, raw_count, closed, max_order, orders })
}

/// `max |Φ(F(z)) − Φ(z)|` over the given points.
pub fn potential_preservation_defect(surface: &KummerSurface, f: &IsometryElement, points: &[CPair]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for z in points {
        let d = surface.potential_value(&f.apply(surface, z))? - surface.potential_value(z)?;
        worst = worst.max(d.abs());
    }
    Ok(worst)
}

/// Componentwise `max |α²·g_α(αz) − α²·g(z)|`: the pullback of the rescaled surface's metric
/// under `z ↦ αz` against `α²` times the original.
pub fn homothety_check(surface: &KummerSurface, alpha: f64, points: &[CPair]) -> Result<f64> {
    let scaled = surface.scaled(alpha)?;
    let a2 = alpha * alpha;
    let mut worst: f64 = 0.0;
    for z in points {
        let g = surface.metric_at(z)?.components;
        let gs = scaled.metric_at(&[z[0] * alpha, z[1] * alpha])?.components;
        for i in 0..2 {
            for j in 0..2 {
                worst = worst.max((a2 * gs[i][j] - a2 * g[i][j]).norm());
            }
        }
    }
    Ok(worst)
}

/// `max |g_F − g_E|` between the flat chart (identity) and the neck chart of point `i`
/// at points of the overlap annulus `s(1+δ) < u < s(1+2δ)`.
pub fn chart_consistency(surface: &KummerSurface, points: &[CPair]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for z in points {
        let (i, q) = surface.nearest_half_lattice(z);
        let w = [z[0] - q[0], z[1] - q[1]];
        let u = w[0].norm_sqr() + w[1].norm_sqr();
        let s = surface.cutoff_scale;
        if u <= s * (1.0 + surface.delta) || u >= s * (1.0 + 2.0 * surface.delta) {
            return Err(GeomError::Precondition(format!("u = {u} is not in the overlap annulus")));
        }
        let neck = LocalGeometry::new(&surface.neck_spec(i)?, &w, 2)?.metric().components;
        for (a, row) in neck.iter().enumerate() {
            for (b, v) in row.iter().enumerate() {
                let flat = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((v - flat).norm());
            }
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Serialize)]
pub struct SpecialTorusReport {
    /// `min_M |z − q|²` over half-lattice points, exact value `R²/8`.
    pub min_u: f64,
    pub chart_bound: f64,
    pub in_flat_region: bool,
    /// `max |f(p) − p|` for sample points `p ∈ M`.
    pub f_fixed_defect: f64,
    pub f_order: usize,
    /// Largest normal displacement of tangent geodesics over length 10.
    pub max_normal_drift: f64,
    pub min_eigenvalue: f64,
    pub nullity_estimate: usize,
}

/// Checks on `M = {w = R(1+i)/4}` for a surface with equal `a_i`.
pub fn special_torus_checks(surface: &KummerSurface, directions: &[f64]) -> Result<SpecialTorusReport> {
    if surface.a.iter().any(|a| *a != surface.a[0]) {
        return Err(GeomError::Precondition("special torus checks need all a_i equal".into()));
    }
    let r = surface.lattice_scale;
    let w0 = c(0.25 * r, 0.25 * r);
    let chart_bound = (1.0 + 2.0 * surface.delta) * surface.cutoff_scale;
    let n = 24;
    let mut min_u = f64::INFINITY;
    let mut f_fixed: f64 = 0.0;
    let f = IsometryElement::special_f();
    for i in 0..n {
        for j in 0..n {
            let p = [c(r * i as f64 / n as f64, r * j as f64 / n as f64), w0];
            min_u = min_u.min(surface.orbifold_distance_sqr(&p).unwrap_or(f64::INFINITY));
            let fp = f.apply(surface, &p);
            f_fixed = f_fixed.max((fp[0] - p[0]).norm()).max((fp[1] - p[1]).norm());
        }
    }
    if min_u <= chart_bound {
        return Err(GeomError::Parameter(format!("M meets a neck chart: min u = {min_u} <= {chart_bound}")));
    }
    let mut drift: f64 = 0.0;
    for (k, th) in directions.iter().enumerate() {
        let z0 = c(0.1 * r + 0.37 * k as f64, 0.3 * r);
        let st = GeodesicState::new([z0, w0], [th.cos(), th.sin(), 0.0, 0.0]).normalized(surface)?;
        let path = integrate_geodesic(surface, &st, 10.0, 0.05)?;
        for s in &path.states {
            drift = drift.max((s.point[1] - w0).norm()).max(s.velocity[2].hypot(s.velocity[3]));
        }
    }
    let start = GeodesicState::new([c(0.1 * r, 0.3 * r), w0], [1.0, 0.0, 0.0, 0.0]);
    let closed = ClosedGeodesic { start, period: r, shift: [r, 0.0, 0.0, 0.0] };
    let spec = second_variation_spectrum(surface, &closed, 8)?;
    Ok(SpecialTorusReport {
        min_u,
        chart_bound,
        in_flat_region: min_u >= (1.0 + surface.delta) * surface.cutoff_scale,
        f_fixed_defect: f_fixed,
        f_order: f.order(),
        max_normal_drift: drift,
        min_eigenvalue: spec.min_eigenvalue,
        nullity_estimate: spec.nullity_estimate,
    })
}

/// Real coordinates of `z`, for callers that work in the real frame.
pub fn real_coords(z: &CPair) -> [f64; 4] {
    to_real(z)
}
