//! Adaptive composite Gauss–Legendre quadrature.
//!
//! A panel is accepted once the single-panel estimate and the sum over its
//! two halves agree to `max(abs_tol, rel_tol·|refined|)`; otherwise both
//! halves are bisected again, up to `max_depth` levels. The absolute
//! tolerance shrinks by `1/√2` per level.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_depth: usize,
    /// Gauss–Legendre nodes per panel.
    pub base_rule: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_depth: 30,
            base_rule: 16,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err("quadrature tolerances must be positive".into());
        }
        if self.max_depth < 1 {
            return Err("max_depth must be at least 1".into());
        }
        if self.base_rule == 0 || self.base_rule % 2 != 0 {
            return Err("base_rule must be a positive even integer".into());
        }
        Ok(())
    }

    /// Combined tolerance scale, used for "equal within quadrature tolerance" checks.
    pub fn tolerance(&self) -> f64 {
        self.abs_tol.max(self.rel_tol)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("adaptive quadrature did not converge on [{a}, {b}] at depth {depth}")]
pub struct QuadratureFailure {
    pub a: f64,
    pub b: f64,
    pub depth: usize,
}

/// Nodes and weights on [-1, 1].
#[derive(Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            // Chebyshev initial guess, then Newton on P_n.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Cached rule with `n` nodes.
    pub fn cached(n: usize) -> &'static GaussLegendre {
        static RULES: OnceLock<Mutex<HashMap<usize, &'static GaussLegendre>>> = OnceLock::new();
        let map = RULES.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = map.lock().expect("rule cache poisoned");
        guard
            .entry(n)
            .or_insert_with(|| Box::leak(Box::new(GaussLegendre::new(n))))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Scalar adaptive integral of `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    cfg: &QuadratureConfig,
) -> Result<f64, QuadratureFailure> {
    let out = integrate_vec(|t, out: &mut [f64]| out[0] = f(t), 1, a, b, cfg)?;
    Ok(out[0])
}

/// Vector-valued adaptive integral; the acceptance test uses the max-norm
/// over components.
pub fn integrate_vec<F: FnMut(f64, &mut [f64])>(
    mut f: F,
    dim: usize,
    a: f64,
    b: f64,
    cfg: &QuadratureConfig,
) -> Result<Vec<f64>, QuadratureFailure> {
    let mut out = vec![0.0; dim];
    if !(b > a) || dim == 0 {
        return Ok(out);
    }
    let rule = GaussLegendre::cached(cfg.base_rule);
    let mut scratch = vec![0.0; dim];
    let (whole, whole_abs) = panel(rule, &mut f, a, b, &mut scratch);
    let mut stack = vec![(a, b, whole, whole_abs, 0usize, cfg.abs_tol)];
    // Depth-first, left before right, so the summation order is fixed.
    while let Some((lo, hi, est, _est_abs, depth, abs_tol)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        let (left, left_abs) = panel(rule, &mut f, lo, mid, &mut scratch);
        let (right, right_abs) = panel(rule, &mut f, mid, hi, &mut scratch);
        let mut err = 0.0f64;
        let mut scale = 0.0f64;
        let mut noise = 0.0f64;
        for k in 0..dim {
            let refined = left[k] + right[k];
            err = err.max((refined - est[k]).abs());
            scale = scale.max(refined.abs());
            noise = noise.max(left_abs[k] + right_abs[k]);
        }
        let tol = abs_tol.max(cfg.rel_tol * scale).max(64.0 * f64::EPSILON * noise);
        if err <= tol {
            for k in 0..dim {
                out[k] += left[k] + right[k];
            }
            continue;
        }
        if depth + 1 >= cfg.max_depth {
            return Err(QuadratureFailure {
                a: lo,
                b: hi,
                depth: depth + 1,
            });
        }
        stack.push((mid, hi, right, right_abs, depth + 1, std::f64::consts::FRAC_1_SQRT_2 * abs_tol));
        stack.push((lo, mid, left, left_abs, depth + 1, std::f64::consts::FRAC_1_SQRT_2 * abs_tol));
    }
    Ok(out)
}

fn panel<F: FnMut(f64, &mut [f64])>(
    rule: &GaussLegendre,
    f: &mut F,
    a: f64,
    b: f64,
    scratch: &mut [f64],
) -> (Vec<f64>, Vec<f64>) {
    let dim = scratch.len();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = vec![0.0; dim];
    let mut acc_abs = vec![0.0; dim];
    for (x, w) in rule.nodes.iter().zip(&rule.weights) {
        f(mid + half * x, scratch);
        for k in 0..dim {
            acc[k] += w * scratch[k];
            acc_abs[k] += w * scratch[k].abs();
        }
    }
    for k in 0..dim {
        acc[k] *= half;
        acc_abs[k] *= half;
    }
    (acc, acc_abs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_integrates_polynomials_exactly() {
        let gl = GaussLegendre::new(16);
        let s: f64 = gl.weights.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
        // degree 31 is exact for 16 nodes
        let v = gl.integrate(|x| x.powi(30), -1.0, 1.0);
        assert!((v - 2.0 / 31.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_handles_smooth_and_kinked() {
        let cfg = QuadratureConfig::default();
        let v = integrate(f64::sin, 0.0, std::f64::consts::PI, &cfg).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
        let k = integrate(|x: f64| (x - 0.3).abs(), 0.0, 1.0, &cfg).unwrap();
        assert!((k - (0.045 + 0.245)).abs() < 1e-11);
    }

    #[test]
    fn failure_reported_at_depth_limit() {
        let cfg = QuadratureConfig {
            max_depth: 2,
            ..Default::default()
        };
        let r = integrate(|x: f64| if x < 0.123456 { 0.0 } else { 1.0 }, 0.0, 1.0, &cfg);
        assert!(r.is_err());
    }

    #[test]
    fn empty_interval_is_zero() {
        let cfg = QuadratureConfig::default();
        assert_eq!(integrate(|_| 1.0, 1.0, 1.0, &cfg).unwrap(), 0.0);
    }
}
