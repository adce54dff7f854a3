//! Truncated multivariate Taylor arithmetic.
//!
//! A [`Jet`] stores the Taylor coefficients `c_α = ∂^α f / α!` of a scalar
//! field at a point, for every multi-index with `|α| ≤ order`, in graded
//! lexicographic order. Up to four real variables and order six.
//!
//! [`CJet`] pairs two real jets into a complex-valued field so that the
//! Wirtinger derivatives `∂_z = (∂_x − i∂_y)/2` and `∂_z̄ = (∂_x + i∂_y)/2`
//! can be taken on any chart built from real variables `(x1, y1, x2, y2)`.

use std::ops::{Add, Mul, Neg, Sub};
use std::sync::OnceLock;

use num_complex::Complex64;
use thiserror::Error;

pub const MAX_VARS: usize = 4;
pub const MAX_ORDER: usize = 6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum JetError {
    #[error("jet shape mismatch: {0}x{1} vs {2}x{3} (vars x order)")]
    Mismatch(usize, usize, usize, usize),
    #[error("singular jet: division by a jet with zero constant term")]
    Singular,
    #[error("domain error: {func} undefined at {value}")]
    Domain { func: &'static str, value: f64 },
    #[error("unsupported jet shape: {nvars} variables at order {order}")]
    Shape { nvars: usize, order: usize },
    #[error("capability error: jet order {have} cannot supply derivative of order {need}")]
    Capability { have: usize, need: usize },
}

type Mono = [u8; MAX_VARS];

struct Layout {
    monos: Vec<Mono>,
    mul: Vec<(u16, u16, u16)>,
    // (source index, target index in the order-1 layout, factor)
    deriv: [Vec<(u16, u16, f64)>; MAX_VARS],
}

fn monomials(nvars: usize, order: usize) -> Vec<Mono> {
    fn fill(var: usize, nvars: usize, left: usize, cur: &mut Mono, out: &mut Vec<Mono>) {
        if var == nvars - 1 {
            cur[var] = left as u8;
            out.push(*cur);
            cur[var] = 0;
            return;
        }
        for e in (0..=left).rev() {
            cur[var] = e as u8;
            fill(var + 1, nvars, left - e, cur, out);
        }
        cur[var] = 0;
    }
    let mut out = Vec::new();
    for d in 0..=order {
        let mut cur = [0u8; MAX_VARS];
        fill(0, nvars, d, &mut cur, &mut out);
    }
    out
}

fn degree(m: &Mono) -> usize {
    m.iter().map(|&e| e as usize).sum()
}

fn index_of(monos: &[Mono], m: &Mono) -> usize {
    monos.iter().position(|x| x == m).expect("monomial in layout")
}

fn build_layout(nvars: usize, order: usize) -> Layout {
    let monos = monomials(nvars, order);
    let mut mul = Vec::new();
    for (i, a) in monos.iter().enumerate() {
        for (j, b) in monos.iter().enumerate() {
            if degree(a) + degree(b) > order {
                continue;
            }
            let mut s = [0u8; MAX_VARS];
            for v in 0..MAX_VARS {
                s[v] = a[v] + b[v];
            }
            mul.push((i as u16, j as u16, index_of(&monos, &s) as u16));
        }
    }
    let mut deriv: [Vec<(u16, u16, f64)>; MAX_VARS] = Default::default();
    if order > 0 {
        let lower = monomials(nvars, order - 1);
        for v in 0..nvars {
            for (src, m) in monos.iter().enumerate() {
                if m[v] == 0 {
                    continue;
                }
                let mut t = *m;
                t[v] -= 1;
                deriv[v].push((src as u16, index_of(&lower, &t) as u16, m[v] as f64));
            }
        }
    }
    Layout { monos, mul, deriv }
}

fn layout(nvars: usize, order: usize) -> &'static Layout {
    static TABLE: OnceLock<Vec<Layout>> = OnceLock::new();
    let table = TABLE.get_or_init(|| {
        let mut t = Vec::new();
        for n in 1..=MAX_VARS {
            for o in 0..=MAX_ORDER {
                t.push(build_layout(n, o));
            }
        }
        t
    });
    &table[(nvars - 1) * (MAX_ORDER + 1) + order]
}

/// Number of multi-indices of total degree ≤ `order` in `nvars` variables.
pub fn coeff_count(nvars: usize, order: usize) -> usize {
    let mut num = 1usize;
    let mut den = 1usize;
    for k in 1..=nvars {
        num *= order + k;
        den *= k;
    }
    num / den
}

#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    nvars: usize,
    order: usize,
    coeffs: Vec<f64>,
}

fn check_shape(nvars: usize, order: usize) -> Result<(), JetError> {
    if nvars == 0 || nvars > MAX_VARS || order > MAX_ORDER {
        return Err(JetError::Shape { nvars, order });
    }
    Ok(())
}

impl Jet {
    pub fn zeros(nvars: usize, order: usize) -> Result<Self, JetError> {
        check_shape(nvars, order)?;
        Ok(Self { nvars, order, coeffs: vec![0.0; coeff_count(nvars, order)] })
    }

    pub fn constant(nvars: usize, order: usize, c: f64) -> Result<Self, JetError> {
        let mut j = Self::zeros(nvars, order)?;
        j.coeffs[0] = c;
        Ok(j)
    }

    /// The coordinate function `x_var` expanded around `value`.
    pub fn variable(nvars: usize, order: usize, var: usize, value: f64) -> Result<Self, JetError> {
        if var >= nvars {
            return Err(JetError::Shape { nvars, order });
        }
        let mut j = Self::constant(nvars, order, value)?;
        if order > 0 {
            j.coeffs[1 + var] = 1.0;
        }
        Ok(j)
    }

    /// All coordinate functions around `point`.
    pub fn variables(point: &[f64], order: usize) -> Result<Vec<Self>, JetError> {
        (0..point.len())
            .map(|v| Self::variable(point.len(), order, v, point[v]))
            .collect()
    }

    pub fn from_coeffs(nvars: usize, order: usize, coeffs: Vec<f64>) -> Result<Self, JetError> {
        check_shape(nvars, order)?;
        if coeffs.len() != coeff_count(nvars, order) {
            return Err(JetError::Shape { nvars, order });
        }
        Ok(Self { nvars, order, coeffs })
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// Multi-indices in storage order.
    pub fn multi_indices(&self) -> Vec<Vec<usize>> {
        layout(self.nvars, self.order)
            .monos
            .iter()
            .map(|m| m[..self.nvars].iter().map(|&e| e as usize).collect())
            .collect()
    }

    /// Taylor coefficient for the multi-index `alpha` (zero beyond the order).
    pub fn coeff(&self, alpha: &[usize]) -> f64 {
        if alpha.len() != self.nvars || alpha.iter().sum::<usize>() > self.order {
            return 0.0;
        }
        let mut m = [0u8; MAX_VARS];
        for (v, &e) in alpha.iter().enumerate() {
            m[v] = e as u8;
        }
        let l = layout(self.nvars, self.order);
        self.coeffs[index_of(&l.monos, &m)]
    }

    /// The partial derivative `∂^alpha f` at the expansion point.
    pub fn partial(&self, alpha: &[usize]) -> f64 {
        let fact: f64 = alpha.iter().map(|&e| (1..=e).product::<usize>() as f64).product();
        self.coeff(alpha) * fact
    }

    /// First partial derivative as a jet of one lower order.
    pub fn diff(&self, var: usize) -> Result<Jet, JetError> {
        if self.order == 0 {
            return Err(JetError::Capability { have: 0, need: 1 });
        }
        if var >= self.nvars {
            return Err(JetError::Shape { nvars: self.nvars, order: self.order });
        }
        let mut out = Jet::zeros(self.nvars, self.order - 1)?;
        for &(src, dst, f) in &layout(self.nvars, self.order).deriv[var] {
            out.coeffs[dst as usize] += f * self.coeffs[src as usize];
        }
        Ok(out)
    }

    /// Drop all terms above `order`.
    pub fn truncate(&self, order: usize) -> Jet {
        if order >= self.order {
            return self.clone();
        }
        let n = coeff_count(self.nvars, order);
        Jet { nvars: self.nvars, order, coeffs: self.coeffs[..n].to_vec() }
    }

    /// Evaluate the Taylor polynomial at displacement `dx`.
    pub fn eval(&self, dx: &[f64]) -> f64 {
        let l = layout(self.nvars, self.order);
        l.monos
            .iter()
            .zip(&self.coeffs)
            .map(|(m, c)| {
                let mut t = *c;
                for v in 0..self.nvars {
                    t *= dx[v].powi(m[v] as i32);
                }
                t
            })
            .sum()
    }

    fn same_shape(&self, other: &Jet) -> Result<(), JetError> {
        if self.nvars != other.nvars || self.order != other.order {
            return Err(JetError::Mismatch(self.nvars, self.order, other.nvars, other.order));
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Jet) -> Result<Jet, JetError> {
        self.same_shape(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        Ok(Jet { nvars: self.nvars, order: self.order, coeffs })
    }

    pub fn try_sub(&self, other: &Jet) -> Result<Jet, JetError> {
        self.same_shape(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect();
        Ok(Jet { nvars: self.nvars, order: self.order, coeffs })
    }

    pub fn try_mul(&self, other: &Jet) -> Result<Jet, JetError> {
        self.same_shape(other)?;
        let mut coeffs = vec![0.0; self.coeffs.len()];
        for &(i, j, k) in &layout(self.nvars, self.order).mul {
            coeffs[k as usize] += self.coeffs[i as usize] * other.coeffs[j as usize];
        }
        Ok(Jet { nvars: self.nvars, order: self.order, coeffs })
    }

    pub fn try_div(&self, other: &Jet) -> Result<Jet, JetError> {
        self.same_shape(other)?;
        self.try_mul(&other.recip()?)
    }

    pub fn scale(&self, s: f64) -> Jet {
        Jet { nvars: self.nvars, order: self.order, coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    pub fn add_scalar(&self, s: f64) -> Jet {
        let mut out = self.clone();
        out.coeffs[0] += s;
        out
    }

    /// `f ∘ self`, where `series[k]` is the k-th Taylor coefficient of `f` at `self.value()`.
    pub fn compose(&self, series: &[f64]) -> Jet {
        let mut h = self.clone();
        h.coeffs[0] = 0.0;
        let mut out = Jet { nvars: self.nvars, order: self.order, coeffs: vec![0.0; self.coeffs.len()] };
        out.coeffs[0] = series[0];
        let mut power = h.clone();
        for c in series.iter().take(self.order + 1).skip(1) {
            for (o, p) in out.coeffs.iter_mut().zip(&power.coeffs) {
                *o += c * p;
            }
            power = &power * &h;
        }
        out
    }

    pub fn recip(&self) -> Result<Jet, JetError> {
        let x = self.value();
        if x == 0.0 {
            return Err(JetError::Singular);
        }
        Ok(self.compose(&series::recip(x, self.order)))
    }

    pub fn sqrt(&self) -> Result<Jet, JetError> {
        let x = self.value();
        if !(x > 0.0) {
            return Err(JetError::Domain { func: "sqrt", value: x });
        }
        Ok(self.compose(&series::powf(x, 0.5, self.order)))
    }

    pub fn powf(&self, p: f64) -> Result<Jet, JetError> {
        let x = self.value();
        if !(x > 0.0) {
            return Err(JetError::Domain { func: "powf", value: x });
        }
        Ok(self.compose(&series::powf(x, p, self.order)))
    }

    pub fn ln(&self) -> Result<Jet, JetError> {
        let x = self.value();
        if !(x > 0.0) {
            return Err(JetError::Domain { func: "ln", value: x });
        }
        Ok(self.compose(&series::ln(x, self.order)))
    }

    pub fn exp(&self) -> Jet {
        self.compose(&series::exp(self.value(), self.order))
    }

    pub fn arsinh(&self) -> Jet {
        self.compose(&series::arsinh(self.value(), self.order))
    }

    pub fn sin(&self) -> Jet {
        self.compose(&series::sin(self.value(), self.order))
    }

    pub fn cos(&self) -> Jet {
        self.compose(&series::cos(self.value(), self.order))
    }
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        self.try_add(rhs).expect("jet shapes agree")
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        self.try_sub(rhs).expect("jet shapes agree")
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        self.try_mul(rhs).expect("jet shapes agree")
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

/// Univariate Taylor coefficients of elementary functions at a point.
pub mod series {
    pub fn recip(x: f64, n: usize) -> Vec<f64> {
        (0..=n)
            .map(|k| {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                sign / x.powi(k as i32 + 1)
            })
            .collect()
    }

    pub fn powf(x: f64, p: f64, n: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(n + 1);
        let mut binom = 1.0;
        for k in 0..=n {
            out.push(binom * x.powf(p - k as f64));
            binom *= (p - k as f64) / (k as f64 + 1.0);
        }
        out
    }

    pub fn ln(x: f64, n: usize) -> Vec<f64> {
        let mut out = vec![x.ln()];
        for k in 1..=n {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            out.push(sign / (k as f64 * x.powi(k as i32)));
        }
        out
    }

    pub fn exp(x: f64, n: usize) -> Vec<f64> {
        let e = x.exp();
        let mut out = Vec::with_capacity(n + 1);
        let mut f = 1.0;
        for k in 0..=n {
            if k > 0 {
                f *= k as f64;
            }
            out.push(e / f);
        }
        out
    }

    pub fn sin(x: f64, n: usize) -> Vec<f64> {
        let (s, c) = x.sin_cos();
        let cyc = [s, c, -s, -c];
        let mut f = 1.0;
        (0..=n)
            .map(|k| {
                if k > 0 {
                    f *= k as f64;
                }
                cyc[k % 4] / f
            })
            .collect()
    }

    pub fn cos(x: f64, n: usize) -> Vec<f64> {
        let (s, c) = x.sin_cos();
        let cyc = [c, -s, -c, s];
        let mut f = 1.0;
        (0..=n)
            .map(|k| {
                if k > 0 {
                    f *= k as f64;
                }
                cyc[k % 4] / f
            })
            .collect()
    }

    /// `arsinh(x)` without cancellation for small `|x|`.
    pub fn arsinh_value(x: f64) -> f64 {
        let ax = x.abs();
        let r = if ax < 0.5 {
            (ax + ax * ax / (1.0 + (1.0 + ax * ax).sqrt())).ln_1p()
        } else {
            (ax + (1.0 + ax * ax).sqrt()).ln()
        };
        r.copysign(x)
    }

    /// Integrates the series of `(1 + (x+t)²)^{-1/2}` term by term.
    pub fn arsinh(x: f64, n: usize) -> Vec<f64> {
        let mut out = vec![arsinh_value(x)];
        if n == 0 {
            return out;
        }
        // q(t) = 1 + x² + 2xt + t², then q^{-1/2} by composing the power series
        let q0 = 1.0 + x * x;
        let p = powf(q0, -0.5, n - 1);
        let h = [0.0, 2.0 * x, 1.0];
        let mut deriv = vec![0.0; n];
        let mut power = vec![0.0; n];
        power[0] = 1.0;
        for (k, pk) in p.iter().enumerate() {
            if k > 0 {
                let mut next = vec![0.0; n];
                for (i, a) in power.iter().enumerate() {
                    for (j, b) in h.iter().enumerate() {
                        if i + j < n {
                            next[i + j] += a * b;
                        }
                    }
                }
                power = next;
            }
            for (d, w) in deriv.iter_mut().zip(&power) {
                *d += pk * w;
            }
        }
        for (k, d) in deriv.iter().enumerate() {
            out.push(d / (k as f64 + 1.0));
        }
        out
    }
}

/// A complex-valued field as a pair of real jets.
#[derive(Debug, Clone, PartialEq)]
pub struct CJet {
    pub re: Jet,
    pub im: Jet,
}

impl CJet {
    pub fn from_real(re: Jet) -> Self {
        let im = Jet::zeros(re.nvars, re.order).expect("shape already valid");
        Self { re, im }
    }

    pub fn constant(nvars: usize, order: usize, c: Complex64) -> Result<Self, JetError> {
        Ok(Self { re: Jet::constant(nvars, order, c.re)?, im: Jet::constant(nvars, order, c.im)? })
    }

    pub fn zeros(nvars: usize, order: usize) -> Result<Self, JetError> {
        Ok(Self { re: Jet::zeros(nvars, order)?, im: Jet::zeros(nvars, order)? })
    }

    pub fn order(&self) -> usize {
        self.re.order
    }

    pub fn nvars(&self) -> usize {
        self.re.nvars
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }

    pub fn conj(&self) -> Self {
        Self { re: self.re.clone(), im: -&self.im }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            re: &self.re.scale(c.re) - &self.im.scale(c.im),
            im: &self.re.scale(c.im) + &self.im.scale(c.re),
        }
    }

    pub fn truncate(&self, order: usize) -> Self {
        Self { re: self.re.truncate(order), im: self.im.truncate(order) }
    }

    /// `∂/∂z_k` with `z_k = x_{2k} + i x_{2k+1}`.
    pub fn dz(&self, k: usize) -> Result<Self, JetError> {
        let (px, py) = (self.re.diff(2 * k)?, self.re.diff(2 * k + 1)?);
        let (qx, qy) = (self.im.diff(2 * k)?, self.im.diff(2 * k + 1)?);
        Ok(Self { re: (&px + &qy).scale(0.5), im: (&qx - &py).scale(0.5) })
    }

    /// `∂/∂z̄_k`.
    pub fn dzbar(&self, k: usize) -> Result<Self, JetError> {
        let (px, py) = (self.re.diff(2 * k)?, self.re.diff(2 * k + 1)?);
        let (qx, qy) = (self.im.diff(2 * k)?, self.im.diff(2 * k + 1)?);
        Ok(Self { re: (&px - &qy).scale(0.5), im: (&qx + &py).scale(0.5) })
    }

    pub fn try_div(&self, other: &CJet) -> Result<CJet, JetError> {
        let den = &(&other.re * &other.re) + &(&other.im * &other.im);
        let inv = den.recip()?;
        let num = self * &other.conj();
        Ok(CJet { re: &num.re * &inv, im: &num.im * &inv })
    }
}

impl Add for &CJet {
    type Output = CJet;
    fn add(self, rhs: &CJet) -> CJet {
        CJet { re: &self.re + &rhs.re, im: &self.im + &rhs.im }
    }
}

impl Sub for &CJet {
    type Output = CJet;
    fn sub(self, rhs: &CJet) -> CJet {
        CJet { re: &self.re - &rhs.re, im: &self.im - &rhs.im }
    }
}

impl Mul for &CJet {
    type Output = CJet;
    fn mul(self, rhs: &CJet) -> CJet {
        CJet {
            re: &(&self.re * &rhs.re) - &(&self.im * &rhs.im),
            im: &(&self.re * &rhs.im) + &(&self.im * &rhs.re),
        }
    }
}

impl Neg for &CJet {
    type Output = CJet;
    fn neg(self) -> CJet {
        CJet { re: -&self.re, im: -&self.im }
    }
}
