//! Deterministic forcing terms: sums of polynomial pieces on intervals.

use serde::{Deserialize, Serialize};

use crate::quad::{self, QuadratureConfig, QuadratureFailure};

/// `p(t)` on `[start, end)`, zero elsewhere. `end = None` means `+∞`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyPiece {
    pub start: f64,
    #[serde(default)]
    pub end: Option<f64>,
    /// Lowest degree first.
    pub coeffs: Vec<f64>,
}

impl PolyPiece {
    fn end(&self) -> f64 {
        self.end.unwrap_or(f64::INFINITY)
    }

    fn eval(&self, t: f64) -> f64 {
        if t < self.start || t >= self.end() {
            return 0.0;
        }
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }
}

/// A sum of polynomial pieces (pieces may overlap).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PiecewisePoly {
    pub pieces: Vec<PolyPiece>,
}

impl PiecewisePoly {
    pub fn zero() -> Self {
        Self::default()
    }

    /// Polynomial on the whole half-line.
    pub fn polynomial(coeffs: Vec<f64>) -> Self {
        Self {
            pieces: vec![PolyPiece {
                start: 0.0,
                end: None,
                coeffs,
            }],
        }
    }

    pub fn constant(value: f64) -> Self {
        if value == 0.0 {
            Self::zero()
        } else {
            Self::polynomial(vec![value])
        }
    }

    pub fn is_zero(&self) -> bool {
        self.pieces
            .iter()
            .all(|p| p.coeffs.iter().all(|&c| c == 0.0))
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.pieces.iter().map(|p| p.eval(t)).sum()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        if factor == 0.0 {
            return Self::zero();
        }
        Self {
            pieces: self
                .pieces
                .iter()
                .map(|p| PolyPiece {
                    coeffs: p.coeffs.iter().map(|c| c * factor).collect(),
                    ..p.clone()
                })
                .collect(),
        }
    }

    pub fn add_assign(&mut self, other: &PiecewisePoly) {
        self.pieces.extend(other.pieces.iter().cloned());
    }

    /// `∫_a^b p(t) g(t) dt`, integrating piece by piece.
    pub fn pair_with<G: Fn(f64) -> f64>(
        &self,
        g: G,
        a: f64,
        b: f64,
        cfg: &QuadratureConfig,
    ) -> Result<f64, QuadratureFailure> {
        let mut total = 0.0;
        for piece in &self.pieces {
            let lo = piece.start.max(a);
            let hi = piece.end().min(b);
            if hi > lo && piece.coeffs.iter().any(|&c| c != 0.0) {
                total += quad::integrate(|t| piece.eval(t) * g(t), lo, hi, cfg)?;
            }
        }
        Ok(total)
    }

    /// Vector-valued variant of [`pair_with`](Self::pair_with).
    pub fn pair_with_vec<G: FnMut(f64, &mut [f64])>(
        &self,
        mut g: G,
        dim: usize,
        a: f64,
        b: f64,
        cfg: &QuadratureConfig,
    ) -> Result<Vec<f64>, QuadratureFailure> {
        let mut total = vec![0.0; dim];
        for piece in &self.pieces {
            let lo = piece.start.max(a);
            let hi = piece.end().min(b);
            if hi > lo && piece.coeffs.iter().any(|&c| c != 0.0) {
                let part = quad::integrate_vec(
                    |t, out: &mut [f64]| {
                        g(t, out);
                        let w = piece.eval(t);
                        out.iter_mut().for_each(|v| *v *= w);
                    },
                    dim,
                    lo,
                    hi,
                    cfg,
                )?;
                total.iter_mut().zip(part).for_each(|(t, p)| *t += p);
            }
        }
        Ok(total)
    }
}

/// `(M f)_i = Σ_j M_ij f_j` for a vector of forcing components.
pub fn combine(matrix: &nalgebra::DMatrix<f64>, f: &[PiecewisePoly]) -> Vec<PiecewisePoly> {
    (0..matrix.nrows())
        .map(|i| {
            let mut acc = PiecewisePoly::zero();
            for (j, fj) in f.iter().enumerate() {
                let w = matrix[(i, j)];
                if w != 0.0 && !fj.is_zero() {
                    acc.add_assign(&fj.scaled(w));
                }
            }
            acc
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pieces_evaluate_and_sum() {
        let mut f = PiecewisePoly::polynomial(vec![1.0, 2.0]);
        f.add_assign(&PiecewisePoly {
            pieces: vec![PolyPiece {
                start: 1.0,
                end: Some(2.0),
                coeffs: vec![10.0],
            }],
        });
        assert_eq!(f.eval(0.5), 2.0);
        assert_eq!(f.eval(1.5), 14.0);
        assert_eq!(f.eval(2.0), 5.0);
    }

    #[test]
    fn pairing_clips_to_window() {
        let cfg = QuadratureConfig::default();
        let f = PiecewisePoly::constant(3.0);
        let v = f.pair_with(|_| 1.0, 1.0, 2.5, &cfg).unwrap();
        assert!((v - 4.5).abs() < 1e-12);
    }

    #[test]
    fn combine_is_linear() {
        let m = nalgebra::DMatrix::from_row_slice(1, 2, &[2.0, -1.0]);
        let f = vec![PiecewisePoly::constant(1.0), PiecewisePoly::polynomial(vec![0.0, 1.0])];
        let g = combine(&m, &f);
        assert!((g[0].eval(3.0) - (2.0 - 3.0)).abs() < 1e-15);
    }
}
