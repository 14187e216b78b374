//! Smooth compactly supported test functions on the open half-line.
//!
//! A [`BumpTestFunction`] is `p(t)·exp(−1/(1−s²))` with `s = (t−center)/radius`,
//! vanishing for `|s| ≥ 1`. Derivatives of any order are evaluated with
//! truncated Taylor-series arithmetic, so they are accurate to rounding
//! error rather than to a finite-difference step.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quad::{self, QuadratureConfig, QuadratureFailure};

/// Default highest derivative order that may be requested.
pub const DEFAULT_MAX_ORDER: usize = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TestFnError {
    #[error("OrderTooHigh: derivative order {k} exceeds the configured maximum {max}")]
    OrderTooHigh { k: usize, max: usize },
    #[error("QuadratureFailure: {0}")]
    QuadratureFailure(#[from] QuadratureFailure),
    #[error("NotNormalized: reference test function integrates to {integral}, expected 1")]
    NotNormalized { integral: f64 },
    #[error("InvalidSupport: center {center} and radius {radius} must satisfy radius > 0 and center - radius >= 0")]
    InvalidSupport { center: f64, radius: f64 },
    #[error("ZeroIntegral: cannot normalize a test function with vanishing integral")]
    ZeroIntegral,
    #[error("NotCompactlySupported: primitive does not vanish beyond the supports (residual {residual})")]
    NotCompactlySupported { residual: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BumpTestFunction {
    center: f64,
    radius: f64,
    /// Polynomial factor, lowest degree first.
    poly: Vec<f64>,
    #[serde(default = "default_max_order")]
    max_order: usize,
}

fn default_max_order() -> usize {
    DEFAULT_MAX_ORDER
}

impl Default for BumpTestFunction {
    /// `bump(center = 1, radius = 0.5, p = 1)`.
    fn default() -> Self {
        Self {
            center: 1.0,
            radius: 0.5,
            poly: vec![1.0],
            max_order: DEFAULT_MAX_ORDER,
        }
    }
}

impl BumpTestFunction {
    pub fn new(center: f64, radius: f64, poly: Vec<f64>) -> Result<Self, TestFnError> {
        if !(radius > 0.0 && center.is_finite() && radius.is_finite() && center - radius >= 0.0) {
            return Err(TestFnError::InvalidSupport { center, radius });
        }
        let poly = if poly.is_empty() { vec![0.0] } else { poly };
        Ok(Self {
            center,
            radius,
            poly,
            max_order: DEFAULT_MAX_ORDER,
        })
    }

    pub fn with_max_order(mut self, max_order: usize) -> Self {
        self.max_order = max_order;
        self
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn poly(&self) -> &[f64] {
        &self.poly
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    /// Closed support `[center − radius, center + radius]`.
    pub fn support(&self) -> (f64, f64) {
        (self.center - self.radius, self.center + self.radius)
    }

    pub fn is_zero(&self) -> bool {
        self.poly.iter().all(|&c| c == 0.0)
    }

    /// Same bump with the polynomial factor multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            poly: self.poly.iter().map(|c| c * factor).collect(),
            ..self.clone()
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.taylor(t, 0)[0]
    }

    /// `φ^{(k)}(t)`.
    pub fn eval_deriv(&self, k: usize, t: f64) -> Result<f64, TestFnError> {
        self.check_order(k)?;
        let series = self.taylor(t, k);
        Ok(series[k] * factorial(k))
    }

    /// `[φ(t), φ'(t), …, φ^{(k)}(t)]`.
    pub fn derivatives(&self, k: usize, t: f64) -> Result<Vec<f64>, TestFnError> {
        self.check_order(k)?;
        let series = self.taylor(t, k);
        Ok(series
            .iter()
            .enumerate()
            .map(|(j, c)| c * factorial(j))
            .collect())
    }

    pub(crate) fn check_order(&self, k: usize) -> Result<(), TestFnError> {
        if k > self.max_order {
            Err(TestFnError::OrderTooHigh {
                k,
                max: self.max_order,
            })
        } else {
            Ok(())
        }
    }

    /// Taylor coefficients of φ around `t` up to order `k`.
    fn taylor(&self, t: f64, k: usize) -> Vec<f64> {
        let mut out = vec![0.0; k + 1];
        let s0 = (t - self.center) / self.radius;
        if !(s0.abs() < 1.0) {
            return out;
        }
        let w0 = 1.0 - s0 * s0;
        let g0 = -1.0 / w0;
        // exp underflows: every coefficient is a multiple of exp(g0).
        if g0 < -740.0 {
            return out;
        }
        // w(h) = 1 − (s0 + h/r)²
        let r = self.radius;
        let mut w = vec![0.0; k + 1];
        w[0] = w0;
        if k >= 1 {
            w[1] = -2.0 * s0 / r;
        }
        if k >= 2 {
            w[2] = -1.0 / (r * r);
        }
        // g = −1/w
        let mut inv = vec![0.0; k + 1];
        inv[0] = 1.0 / w0;
        for n in 1..=k {
            let mut acc = 0.0;
            for j in 1..=n.min(2) {
                acc += w[j] * inv[n - j];
            }
            inv[n] = -acc / w0;
        }
        let g: Vec<f64> = inv.iter().map(|v| -v).collect();
        // e = exp(g)
        let mut e = vec![0.0; k + 1];
        e[0] = g0.exp();
        for n in 1..=k {
            let mut acc = 0.0;
            for j in 1..=n {
                acc += j as f64 * g[j] * e[n - j];
            }
            e[n] = acc / n as f64;
        }
        // p(t + h) coefficients
        let p = shifted_poly(&self.poly, t, k);
        for n in 0..=k {
            let mut acc = 0.0;
            for j in 0..=n {
                acc += p[j] * e[n - j];
            }
            out[n] = acc;
        }
        out
    }

    /// `∫ φ(t) dt`.
    pub fn integral(&self, cfg: &QuadratureConfig) -> Result<f64, TestFnError> {
        let (a, b) = self.support();
        Ok(quad::integrate(|t| self.eval(t), a, b, cfg)?)
    }

    /// Copy rescaled so that `∫ φ = 1`.
    pub fn normalized(&self, cfg: &QuadratureConfig) -> Result<Self, TestFnError> {
        let integral = self.integral(cfg)?;
        if integral == 0.0 || !integral.is_finite() {
            return Err(TestFnError::ZeroIntegral);
        }
        Ok(self.scaled(1.0 / integral))
    }

    /// `‖φ^{(k)}‖²`.
    pub fn norm_sq(&self, k: usize, cfg: &QuadratureConfig) -> Result<f64, TestFnError> {
        l2_inner((self, k), (self, k), cfg)
    }

    pub fn check_normalized(&self, cfg: &QuadratureConfig) -> Result<(), TestFnError> {
        let integral = self.integral(cfg)?;
        if (integral - 1.0).abs() > 10.0 * cfg.tolerance() {
            return Err(TestFnError::NotNormalized { integral });
        }
        Ok(())
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).fold(1.0, |acc, v| acc * v as f64)
}

/// Coefficients of `h ↦ p(t + h)` up to degree `k`.
fn shifted_poly(poly: &[f64], t: f64, k: usize) -> Vec<f64> {
    let mut out = vec![0.0; k + 1];
    // Repeated synthetic division gives Taylor coefficients at t.
    let mut coeffs: Vec<f64> = poly.to_vec();
    for slot in out.iter_mut() {
        if coeffs.is_empty() {
            break;
        }
        let deg = coeffs.len() - 1;
        let mut quotient = vec![0.0; deg];
        let mut acc = 0.0;
        for i in (0..=deg).rev() {
            acc = acc * t + coeffs[i];
            if i > 0 {
                quotient[i - 1] = acc;
            }
        }
        *slot = acc;
        coeffs = quotient;
    }
    out
}

/// `∫ φ^{(k)}(t) ψ^{(j)}(t) dt`.
pub fn l2_inner(
    f: (&BumpTestFunction, usize),
    g: (&BumpTestFunction, usize),
    cfg: &QuadratureConfig,
) -> Result<f64, TestFnError> {
    let (phi, k) = f;
    let (psi, j) = g;
    phi.check_order(k)?;
    psi.check_order(j)?;
    let (a1, b1) = phi.support();
    let (a2, b2) = psi.support();
    let (a, b) = (a1.max(a2), b1.min(b2));
    if !(b > a) {
        return Ok(0.0);
    }
    let value = quad::integrate(
        |t| {
            let x = phi.taylor(t, k)[k] * factorial(k);
            let y = psi.taylor(t, j)[j] * factorial(j);
            x * y
        },
        a,
        b,
        cfg,
    )?;
    Ok(value)
}

/// Result of splitting `φ = λ·φ₀ + ψ'`.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub lambda: f64,
    pub psi: Primitive,
}

/// `ψ(t) = ∫₀ᵗ (φ − λ φ₀)(s) ds`, evaluated from cumulative panel sums.
#[derive(Debug, Clone)]
pub struct Primitive {
    phi: BumpTestFunction,
    phi0: BumpTestFunction,
    lambda: f64,
    breaks: Vec<f64>,
    cumulative: Vec<f64>,
    cfg: QuadratureConfig,
}

impl Primitive {
    fn integrand(&self, s: f64) -> f64 {
        self.phi.eval(s) - self.lambda * self.phi0.eval(s)
    }

    pub fn eval(&self, t: f64) -> Result<f64, TestFnError> {
        let first = self.breaks[0];
        let last = *self.breaks.last().expect("non-empty breaks");
        if t <= first {
            return Ok(0.0);
        }
        if t >= last {
            return Ok(*self.cumulative.last().expect("non-empty"));
        }
        let idx = match self
            .breaks
            .binary_search_by(|b| b.partial_cmp(&t).expect("finite"))
        {
            Ok(i) => return Ok(self.cumulative[i]),
            Err(i) => i - 1,
        };
        let partial = quad::integrate(|s| self.integrand(s), self.breaks[idx], t, &self.cfg)?;
        Ok(self.cumulative[idx] + partial)
    }

    /// Extent outside of which ψ is identically zero.
    pub fn support(&self) -> (f64, f64) {
        (self.breaks[0], *self.breaks.last().expect("non-empty"))
    }
}

/// Split `φ` into a multiple of the normalized `φ₀` plus a derivative.
pub fn decompose(
    phi: &BumpTestFunction,
    phi0: &BumpTestFunction,
    cfg: &QuadratureConfig,
) -> Result<Decomposition, TestFnError> {
    phi0.check_normalized(cfg)?;
    let lambda = phi.integral(cfg)?;
    let (a1, b1) = phi.support();
    let (a2, b2) = phi0.support();
    let (a, b) = (a1.min(a2), b1.max(b2));
    const PANELS: usize = 64;
    let breaks: Vec<f64> = (0..=PANELS)
        .map(|i| a + (b - a) * i as f64 / PANELS as f64)
        .collect();
    let mut prim = Primitive {
        phi: phi.clone(),
        phi0: phi0.clone(),
        lambda,
        breaks,
        cumulative: vec![0.0; PANELS + 1],
        cfg: *cfg,
    };
    let mut total = 0.0;
    let mut mass = 0.0;
    for i in 0..PANELS {
        let (lo, hi) = (prim.breaks[i], prim.breaks[i + 1]);
        total += quad::integrate(|s| prim.integrand(s), lo, hi, cfg)?;
        mass += quad::integrate(|s| prim.integrand(s).abs(), lo, hi, cfg)?;
        prim.cumulative[i + 1] = total;
    }
    if total.abs() > 100.0 * cfg.tolerance() * mass.max(1.0) {
        return Err(TestFnError::NotCompactlySupported { residual: total });
    }
    Ok(Decomposition { lambda, psi: prim })
}
