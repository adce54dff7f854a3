//! Radial Kähler potentials as functions of `u = |z|²`.
//!
//! * Euclidean: `f(u) = u`.
//! * Eguchi-Hanson: `f_a(u) = √(a² + u²) − a·arsinh(a/u)`, Ricci-flat with
//!   `φ'(uφ')' = 1`.
//! * Glued: `Φ_a = u + χ(u)(f_a − u)`, which is Eguchi-Hanson for `u ≤ s`,
//!   Euclidean for `u ≥ s(1+δ)`, with `s` the cutoff scale (1 unless the
//!   surface has been rescaled).

use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use crate::error::{GeomError, Result};
use crate::jets::{series, Jet};

pub const DEFAULT_DELTA: f64 = 0.1;
pub const DEFAULT_A_GRID: [f64; 4] = [0.02, 0.05, 0.1, 0.2];
/// Neck width for sweeps over [`DEFAULT_A_GRID`]: at δ = 0.1 the gluing stops being
/// plurisubharmonic near a = 0.045, at δ = 0.5 near a = 0.22.
pub const SCALING_DELTA: f64 = 0.5;
/// Grid well inside the plurisubharmonic range at [`SCALING_DELTA`], where quantities that
/// vanish like a² show their leading power.
pub const ASYMPTOTIC_A_GRID: [f64; 4] = [0.005, 0.01, 0.02, 0.04];

/// Smallest `u` accepted by [`neck_remainder`].
pub const NECK_REMAINDER_U_FLOOR: f64 = 0.25;

// Beyond this distance from the ends of (0,1) the bump is 0 or 1 to below 1e-300.
const CUTOFF_CLAMP: f64 = 1.0 / 700.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PotentialKind {
    Euclidean,
    EguchiHanson,
    Glued,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialPotentialSpec {
    pub kind: PotentialKind,
    pub a: f64,
    pub delta: f64,
    /// Gluing starts at `u = cutoff_scale`; equals α² after `z ↦ αz`.
    pub cutoff_scale: f64,
}

impl RadialPotentialSpec {
    pub fn euclidean() -> Self {
        Self { kind: PotentialKind::Euclidean, a: 0.0, delta: DEFAULT_DELTA, cutoff_scale: 1.0 }
    }

    pub fn eguchi_hanson(a: f64) -> Result<Self> {
        let s = Self { kind: PotentialKind::EguchiHanson, a, delta: DEFAULT_DELTA, cutoff_scale: 1.0 };
        s.validate()?;
        Ok(s)
    }

    pub fn glued(a: f64, delta: f64) -> Result<Self> {
        let s = Self { kind: PotentialKind::Glued, a, delta, cutoff_scale: 1.0 };
        s.validate()?;
        Ok(s)
    }

    pub fn with_cutoff_scale(mut self, scale: f64) -> Result<Self> {
        self.cutoff_scale = scale;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind != PotentialKind::Euclidean && !(self.a > 0.0 && self.a.is_finite()) {
            return Err(GeomError::Parameter(format!("a must be positive, got {}", self.a)));
        }
        if !(self.delta > 0.0 && self.delta <= 0.5) {
            return Err(GeomError::Parameter(format!("delta must lie in (0, 1/2], got {}", self.delta)));
        }
        if !(self.cutoff_scale > 0.0 && self.cutoff_scale.is_finite()) {
            return Err(GeomError::Parameter(format!("cutoff scale must be positive, got {}", self.cutoff_scale)));
        }
        Ok(())
    }

    /// Whether the metric is Ricci-flat with `det g = 1` around `u`.
    pub fn is_flat_determinant_at(&self, u: f64) -> bool {
        match self.kind {
            PotentialKind::Euclidean | PotentialKind::EguchiHanson => true,
            PotentialKind::Glued => u <= self.cutoff_scale || u >= self.cutoff_scale * (1.0 + self.delta),
        }
    }

    /// Taylor coefficients of the potential in `u`.
    pub fn series(&self, u: f64, order: usize) -> Result<Vec<f64>> {
        Ok(eval_potential(self, u, order)?.coeffs().to_vec())
    }

    /// The potential composed with a multivariate jet of `u`.
    pub fn compose(&self, u: &Jet) -> Result<Jet> {
        Ok(u.compose(&self.series(u.value(), u.order())?))
    }
}

/// One-variable Eguchi-Hanson jet, integrated from `f_a' = √(a²+u²)/u`. Differentiating
/// `√(a²+u²)` and `a·arsinh(a/u)` separately cancels like `(a/u)^k` at order `k`.
fn eh_jet(a: f64, u: &Jet) -> Result<Jet> {
    let x = u.value();
    let value = (a * a + x * x).sqrt() - a * series::arsinh_value(a / x);
    let n = u.order();
    if n == 0 {
        return Ok(Jet::constant(1, 0, value)?);
    }
    let v = u.truncate(n - 1);
    let d = (&v * &v).add_scalar(a * a).sqrt()?.try_div(&v)?;
    let mut coeffs = vec![value];
    coeffs.extend(d.coeffs().iter().enumerate().map(|(k, c)| c / (k + 1) as f64));
    Ok(Jet::from_coeffs(1, n, coeffs)?)
}

/// The potential and its `u`-derivatives as a one-variable jet at `u`.
pub fn eval_potential(spec: &RadialPotentialSpec, u: f64, order: usize) -> Result<Jet> {
    spec.validate()?;
    if !(u > 0.0) {
        return Err(GeomError::OrbifoldPoint(u));
    }
    let x = Jet::variable(1, order, 0, u)?;
    match spec.kind {
        PotentialKind::Euclidean => Ok(x),
        PotentialKind::EguchiHanson => eh_jet(spec.a, &x),
        PotentialKind::Glued => {
            let s = spec.cutoff_scale;
            if u >= s * (1.0 + spec.delta) {
                return Ok(x);
            }
            let f = eh_jet(spec.a, &x)?;
            if u <= s {
                return Ok(f);
            }
            let chi = Jet::from_coeffs(1, order, cutoff_series(u, spec.delta, s, order)?)?;
            Ok(&x + &(&chi * &(&f - &x)))
        }
    }
}

/// Cutoff `χ(u) = σ((s(1+δ) − u)/(sδ))` with the smooth step
/// `σ(t) = e^{−1/t} / (e^{−1/t} + e^{−1/(1−t)})`.
pub fn cutoff_series(u: f64, delta: f64, scale: f64, order: usize) -> Result<Vec<f64>> {
    let t0 = (scale * (1.0 + delta) - u) / (scale * delta);
    let mut out = vec![0.0; order + 1];
    if t0 <= CUTOFF_CLAMP {
        return Ok(out);
    }
    if t0 >= 1.0 - CUTOFF_CLAMP {
        out[0] = 1.0;
        return Ok(out);
    }
    let t = Jet::variable(1, order, 0, u)?.scale(-1.0 / (scale * delta)).add_scalar(scale * (1.0 + delta) / (scale * delta));
    let one_minus_t = t.scale(-1.0).add_scalar(1.0);
    // σ = logistic(w) with w = 1/(1−t) − 1/t, evaluated on the side that cannot overflow
    let w = &one_minus_t.recip()? - &t.recip()?;
    let sigma = if w.value() < 0.0 {
        let e = w.exp();
        e.try_div(&e.add_scalar(1.0))?
    } else {
        w.scale(-1.0).exp().add_scalar(1.0).recip()?
    };
    out.copy_from_slice(sigma.coeffs());
    Ok(out)
}

/// Cutoff jet at unit scale.
pub fn eval_cutoff(u: f64, delta: f64, order: usize) -> Result<Jet> {
    Ok(Jet::from_coeffs(1, order, cutoff_series(u, delta, 1.0, order)?)?)
}

/// `ξ_a(u) = (Φ_a(u) − u)/a²`, written so that the `a → 0` limit is free of cancellation:
/// `ξ_a = χ(u)·(1/(√(a²+u²) + u) − arsinh(a/u)/a)`.
pub fn neck_remainder(a: f64, delta: f64, u: f64, order: usize) -> Result<Jet> {
    RadialPotentialSpec::glued(a, delta)?;
    if u < NECK_REMAINDER_U_FLOOR {
        return Err(GeomError::OutOfRegion(format!(
            "neck remainder needs u >= {NECK_REMAINDER_U_FLOOR}, got {u}"
        )));
    }
    let x = Jet::variable(1, order, 0, u)?;
    let chi = Jet::from_coeffs(1, order, cutoff_series(u, delta, 1.0, order)?)?;
    if chi.coeffs().iter().all(|&c| c == 0.0) {
        return Ok(chi);
    }
    let s = (&x * &x).add_scalar(a * a).sqrt()?;
    let first = (&s + &x).recip()?;
    let second = x.recip()?.scale(a).arsinh().scale(1.0 / a);
    Ok(&chi * &(&first - &second))
}

/// `|f_{α²a}(α²u) − α²f(u)|` for the potential of `spec` and its α-rescaled
/// counterpart (parameter α²a, cutoff `χ(u/α²)`).
pub fn homothety_transform(spec: &RadialPotentialSpec, alpha: f64, u: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(GeomError::Parameter(format!("alpha must be positive, got {alpha}")));
    }
    let scaled = scale_spec(spec, alpha)?;
    let lhs = eval_potential(&scaled, alpha * alpha * u, 0)?.value();
    let rhs = alpha * alpha * eval_potential(spec, u, 0)?.value();
    Ok((lhs - rhs).abs())
}

/// The spec describing the pushforward of `spec` under `z ↦ αz`.
pub fn scale_spec(spec: &RadialPotentialSpec, alpha: f64) -> Result<RadialPotentialSpec> {
    let mut s = *spec;
    s.a = spec.a * alpha * alpha;
    s.cutoff_scale = spec.cutoff_scale * alpha * alpha;
    s.validate()?;
    Ok(s)
}

/// Minimum over `[s, s(1+δ)]` of `min(φ', (uφ')')` on a grid of `n` points.
pub fn plurisubharmonic_margin(spec: &RadialPotentialSpec, n: usize) -> Result<f64> {
    let s = spec.cutoff_scale;
    let mut margin = f64::INFINITY;
    for k in 0..n {
        let u = s * (1.0 + spec.delta * k as f64 / (n - 1) as f64);
        let j = eval_potential(spec, u, 2)?;
        let d1 = j.coeffs()[1];
        let d2 = 2.0 * j.coeffs()[2];
        margin = margin.min(d1).min(d1 + u * d2);
    }
    Ok(margin)
}

/// Largest `a` (to `tol`) for which the glued potential is plurisubharmonic across the neck.
pub fn measure_a_max(delta: f64, n: usize, tol: f64) -> Result<f64> {
    let ok = |a: f64| -> Result<bool> { Ok(plurisubharmonic_margin(&RadialPotentialSpec::glued(a, delta)?, n)? > 0.0) };
    let mut lo = 1e-3;
    if !ok(lo)? {
        return Err(GeomError::Parameter(format!("no plurisubharmonic gluing for delta = {delta}")));
    }
    let mut hi = lo;
    while ok(hi)? {
        lo = hi;
        hi *= 2.0;
        if hi > 1e3 {
            return Ok(f64::INFINITY);
        }
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if ok(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Eguchi-Hanson Taylor coefficients in double-double arithmetic.
///
/// `φ''` loses about `(a/u)²` ulps to cancellation in `f64`; this path keeps the
/// Ricci-flat identity checkable at `1e-12` down to `u = 1e-3`.
pub fn eguchi_hanson_series_dd(a: f64, u: f64, order: usize) -> Result<Vec<TwoFloat>> {
    RadialPotentialSpec::eguchi_hanson(a)?;
    if !(u > 0.0) {
        return Err(GeomError::OrbifoldPoint(u));
    }
    let zero = TwoFloat::from(0.0);
    let mut x = vec![zero; order + 1];
    x[0] = TwoFloat::from(u);
    if order > 0 {
        x[1] = TwoFloat::from(1.0);
    }
    let aa = TwoFloat::from(a);
    let mut s2 = dd_mul(&x, &x);
    s2[0] += aa * aa;
    let root = dd_sqrt(&s2);
    // arsinh(a/u) through y' = w'/√(1+w²)
    let w: Vec<TwoFloat> = dd_recip(&x).into_iter().map(|c| c * aa).collect();
    let mut w2 = dd_mul(&w, &w);
    w2[0] += TwoFloat::from(1.0);
    let q = dd_recip(&dd_sqrt(&w2));
    let mut ash = vec![zero; order + 1];
    ash[0] = w[0].asinh();
    for k in 1..=order {
        let mut acc = zero;
        for j in 1..=k {
            acc += w[j] * q[k - j] * j as f64;
        }
        ash[k] = acc / k as f64;
    }
    Ok(root.iter().zip(&ash).map(|(&r, &s)| r - aa * s).collect())
}

fn dd_mul(x: &[TwoFloat], y: &[TwoFloat]) -> Vec<TwoFloat> {
    (0..x.len())
        .map(|k| (0..=k).fold(TwoFloat::from(0.0), |acc, j| acc + x[j] * y[k - j]))
        .collect()
}

fn dd_recip(x: &[TwoFloat]) -> Vec<TwoFloat> {
    let mut r = vec![TwoFloat::from(0.0); x.len()];
    r[0] = dd_recip_value(x[0]);
    for k in 1..x.len() {
        let acc = (1..=k).fold(TwoFloat::from(0.0), |acc, j| acc + x[j] * r[k - j]);
        r[k] = -acc * r[0];
    }
    r
}

// twofloat's `1/x` forms its residual without FMA and is only f64-accurate;
// two Newton steps on the f64 seed restore full double-double precision.
fn dd_recip_value(x: TwoFloat) -> TwoFloat {
    let mut r = TwoFloat::from(1.0 / x.hi());
    for _ in 0..2 {
        r += r * (-(x * r) + 1.0);
    }
    r
}

fn dd_sqrt(x: &[TwoFloat]) -> Vec<TwoFloat> {
    let mut s = vec![TwoFloat::from(0.0); x.len()];
    s[0] = x[0].sqrt();
    for k in 1..x.len() {
        let acc = (1..k).fold(TwoFloat::from(0.0), |acc, j| acc + s[j] * s[k - j]);
        s[k] = (x[k] - acc) * dd_recip_value(s[0] * 2.0);
    }
    s
}

/// A smooth radial perturbation `φ(u) = A·sin(ωu + θ) + q·u²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialTestFunction {
    pub amplitude: f64,
    pub frequency: f64,
    pub phase: f64,
    pub quadratic: f64,
}

impl RadialTestFunction {
    /// Taylor coefficients of `φ` in `u`.
    pub fn series(&self, u: f64, order: usize) -> Vec<f64> {
        let mut out = series::sin(self.frequency * u + self.phase, order);
        let mut w = 1.0;
        for c in out.iter_mut() {
            *c *= self.amplitude * w;
            w *= self.frequency;
        }
        let quad = [u * u, 2.0 * u, 1.0];
        for (c, q) in out.iter_mut().zip(quad) {
            *c += self.quadratic * q;
        }
        out
    }

    pub fn compose(&self, u: &Jet) -> Jet {
        u.compose(&self.series(u.value(), u.order()))
    }
}

/// Value of the compensated `arsinh`, shared with the jet layer.
pub fn arsinh(x: f64) -> f64 {
    series::arsinh_value(x)
}
