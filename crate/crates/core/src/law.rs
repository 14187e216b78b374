//! Exact Gaussian law of `⟨x, φ⟩` for a regular SDAE, and the
//! absolute-continuity classification of that law.
//!
//! In Kronecker coordinates `y = Q⁻¹x = (u, v)` the differential part solves
//! `u̇ + Ju = b + Sξ` and each nilpotent block solves `N v̇ + v = c + Rξ`.
//! Both are linear functionals of the same white noise:
//!
//! * `⟨u, φ⟩ = λ·u0 + ∫ M(t)(b(t) dt + S dW(t))`, with a kernel `M` that
//!   vanishes outside the supports of `φ` and `φ₀`;
//! * `⟨v, φ⟩ = mean + H·Z`, where `Z` stacks `⟨ξ, φ^{(j)}⟩` for
//!   `j < index` and `H` holds shifted rows of `R`.
//!
//! The joint covariance follows from the Itô isometry.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::forcing::{self, PiecewisePoly};
use crate::linalg;
use crate::pencil::{self, KcfDecomposition, MatrixPencil, PencilError, ToleranceConfig};
use crate::quad::{self, QuadratureConfig, QuadratureFailure};
use crate::testfn::{BumpTestFunction, TestFnError};
use crate::Config;

/// Relative threshold below which a row of `PΛ` counts as zero.
const ZERO_ROW_TOL: f64 = 1e-10;
/// Degeneracy threshold relative to the largest variance.
const VARIANCE_TOL: f64 = 1e-10;
const KERNEL_PANELS: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LawError {
    #[error(transparent)]
    Pencil(#[from] PencilError),
    #[error(transparent)]
    TestFunction(#[from] TestFnError),
    #[error("SingularNormalization: ∫ exp(-Jt) φ₀(t) dt is not invertible")]
    SingularNormalization,
    #[error("SingularD: lower-right block is singular")]
    SingularD,
    #[error("ZeroTestFunction: the test function vanishes identically")]
    ZeroTestFunction,
    #[error("DimensionMismatch: {0}")]
    DimensionMismatch(String),
    #[error("KernelTail: kernel does not vanish beyond the supports (residual {residual:.3e})")]
    KernelTail { residual: f64 },
}

impl From<QuadratureFailure> for LawError {
    fn from(e: QuadratureFailure) -> Self {
        LawError::TestFunction(TestFnError::QuadratureFailure(e))
    }
}

/// Mean and covariance of a Gaussian vector with rank metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianLaw {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    rank: usize,
    degenerate: Vec<usize>,
    variance_tol: f64,
}

impl GaussianLaw {
    /// Symmetrizes `cov`, clamps negative eigenvalues to zero and computes
    /// rank and degenerate components.
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>, rank_tol: f64) -> Result<Self, LawError> {
        let n = mean.len();
        if cov.shape() != (n, n) {
            return Err(LawError::DimensionMismatch(format!(
                "mean has length {n}, covariance is {:?}",
                cov.shape()
            )));
        }
        let mut cov = (&cov + cov.transpose()) * 0.5;
        if n > 0 {
            let eig = SymmetricEigen::new(cov.clone());
            if eig.eigenvalues.iter().any(|&e| e < 0.0) {
                let clamped = eig.eigenvalues.map(|e| e.max(0.0));
                cov = &eig.eigenvectors
                    * DMatrix::from_diagonal(&clamped)
                    * eig.eigenvectors.transpose();
                cov = (&cov + cov.transpose()) * 0.5;
            }
        }
        let max_var = cov.diagonal().iter().cloned().fold(0.0, f64::max);
        let variance_tol = VARIANCE_TOL * if max_var > 0.0 { max_var } else { 1.0 };
        let degenerate = (0..n).filter(|&i| cov[(i, i)] <= variance_tol).collect();
        let rank = linalg::rank(&cov, rank_tol);
        Ok(Self {
            mean,
            cov,
            rank,
            degenerate,
            variance_tol,
        })
    }

    pub fn point_mass(mean: DVector<f64>) -> Self {
        let n = mean.len();
        Self {
            mean,
            cov: DMatrix::zeros(n, n),
            rank: 0,
            degenerate: (0..n).collect(),
            variance_tol: VARIANCE_TOL,
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn degenerate_indices(&self) -> &[usize] {
        &self.degenerate
    }

    pub fn variance_tol(&self) -> f64 {
        self.variance_tol
    }

    /// Law of the sub-vector with the given components.
    pub fn marginal(&self, indices: &[usize], rank_tol: f64) -> Result<Self, LawError> {
        let mut sel = DMatrix::zeros(indices.len(), self.dim());
        for (row, &i) in indices.iter().enumerate() {
            if i >= self.dim() {
                return Err(LawError::DimensionMismatch(format!(
                    "component {i} out of range for a law of dimension {}",
                    self.dim()
                )));
            }
            sel[(row, i)] = 1.0;
        }
        self.linear_image(&sel, rank_tol)
    }

    /// Law of `T·X`.
    pub fn linear_image(&self, t: &DMatrix<f64>, rank_tol: f64) -> Result<Self, LawError> {
        if t.ncols() != self.dim() {
            return Err(LawError::DimensionMismatch(format!(
                "map has {} columns, law has dimension {}",
                t.ncols(),
                self.dim()
            )));
        }
        Self::new(t * &self.mean, t * &self.cov * t.transpose(), rank_tol)
    }
}

/// `A ẋ + B x = f + Λξ` with the functional initial condition
/// `⟨(Q⁻¹x)_i, φ₀⟩ = u0_i` on the differential coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct SdaeProblem {
    pub pencil: MatrixPencil,
    /// `n × m` noise matrix.
    pub lambda: DMatrix<f64>,
    /// One forcing component per equation; empty means zero.
    pub forcing: Vec<PiecewisePoly>,
    /// Length `d`; empty means zero.
    pub u0: Vec<f64>,
    /// Normalized reference test function.
    pub phi0: BumpTestFunction,
}

impl SdaeProblem {
    /// Zero forcing and initial condition, `φ₀` from [`default_reference`].
    pub fn new(pencil: MatrixPencil, lambda: DMatrix<f64>) -> Result<Self, LawError> {
        let phi0 = default_reference(&QuadratureConfig::default())?;
        let p = Self {
            pencil,
            lambda,
            forcing: Vec::new(),
            u0: Vec::new(),
            phi0,
        };
        p.check_dims()?;
        Ok(p)
    }

    pub fn with_forcing(mut self, forcing: Vec<PiecewisePoly>) -> Result<Self, LawError> {
        self.forcing = forcing;
        self.check_dims()?;
        Ok(self)
    }

    pub fn with_u0(mut self, u0: Vec<f64>) -> Self {
        self.u0 = u0;
        self
    }

    pub fn with_phi0(mut self, phi0: BumpTestFunction) -> Self {
        self.phi0 = phi0;
        self
    }

    pub fn n(&self) -> usize {
        self.pencil.n()
    }

    pub fn m(&self) -> usize {
        self.lambda.ncols()
    }

    fn check_dims(&self) -> Result<(), LawError> {
        let n = self.n();
        if self.lambda.nrows() != n {
            return Err(LawError::DimensionMismatch(format!(
                "Lambda has {} rows, pencil has dimension {n}",
                self.lambda.nrows()
            )));
        }
        if !self.forcing.is_empty() && self.forcing.len() != n {
            return Err(LawError::DimensionMismatch(format!(
                "forcing has {} components, pencil has dimension {n}",
                self.forcing.len()
            )));
        }
        Ok(())
    }

    /// Forcing as `n` components (zeros when unset).
    pub fn forcing_components(&self) -> Vec<PiecewisePoly> {
        if self.forcing.is_empty() {
            vec![PiecewisePoly::zero(); self.n()]
        } else {
            self.forcing.clone()
        }
    }

    /// Initial condition of length `d` (zeros when unset).
    pub fn initial_condition(&self, d: usize) -> Result<DVector<f64>, LawError> {
        match self.u0.len() {
            0 => Ok(DVector::zeros(d)),
            len if len == d => Ok(DVector::from_column_slice(&self.u0)),
            len => Err(LawError::DimensionMismatch(format!(
                "u0 has length {len}, differential dimension is {d}"
            ))),
        }
    }
}

/// Normalized `bump(0.75, 0.5, [1])`.
///
/// It is deliberately not proportional to the default test function: when
/// `φ = cφ₀` the initial condition pins `⟨u, φ⟩ = c·u0` and the differential
/// part carries no noise.
pub fn default_reference(cfg: &QuadratureConfig) -> Result<BumpTestFunction, LawError> {
    Ok(BumpTestFunction::new(0.75, 0.5, vec![1.0])?.normalized(cfg)?)
}

/// Smallest time beyond both supports plus one support width.
pub fn horizon(phi: &BumpTestFunction, phi0: &BumpTestFunction) -> f64 {
    let (_, b1) = phi.support();
    let (_, b2) = phi0.support();
    let width = (2.0 * phi.radius()).max(2.0 * phi0.radius());
    b1.max(b2) + width
}

/// `Φ(t) = exp(−Jt)·C` normalized by `∫ Φ φ₀ = I`.
#[derive(Debug, Clone, PartialEq)]
pub struct FundamentalMatrix {
    pub j: DMatrix<f64>,
    pub c: DMatrix<f64>,
}

impl FundamentalMatrix {
    pub fn eval(&self, t: f64) -> DMatrix<f64> {
        linalg::expm(&(&self.j * -t)) * &self.c
    }
}

/// `∫ exp(−Js) g(s) ds` over `[a, b]`, as a `d × d` matrix.
fn weighted_exp_integral(
    j: &DMatrix<f64>,
    g: &BumpTestFunction,
    a: f64,
    b: f64,
    cfg: &QuadratureConfig,
) -> Result<DMatrix<f64>, QuadratureFailure> {
    let d = j.nrows();
    let v = quad::integrate_vec(
        |s, out: &mut [f64]| {
            let w = g.eval(s);
            if w == 0.0 {
                out.iter_mut().for_each(|x| *x = 0.0);
            } else {
                let e = linalg::expm(&(j * -s));
                out.iter_mut().zip(e.iter()).for_each(|(o, x)| *o = w * x);
            }
        },
        d * d,
        a,
        b,
        cfg,
    )?;
    Ok(DMatrix::from_column_slice(d, d, &v))
}

pub fn fundamental_matrix(
    j: &DMatrix<f64>,
    phi0: &BumpTestFunction,
    cfg: &Config,
) -> Result<FundamentalMatrix, LawError> {
    if !j.is_square() {
        return Err(LawError::DimensionMismatch("J must be square".into()));
    }
    phi0.check_normalized(&cfg.quadrature)?;
    let (a, b) = phi0.support();
    let norm = weighted_exp_integral(j, phi0, a, b, &cfg.quadrature)?;
    let c = linalg::inverse_checked(&norm, 1.0 / cfg.tolerance.rank_tol)
        .ok_or(LawError::SingularNormalization)?;
    Ok(FundamentalMatrix { j: j.clone(), c })
}

/// Covariance of `(⟨ξ, φ⟩, ⟨ξ, φ̇⟩, …, ⟨ξ, φ^{(k−1)}⟩)` for `m` independent
/// white noises, ordered by derivative order first: index `j·m + ℓ`.
pub fn white_noise_deriv_cov(
    phi: &BumpTestFunction,
    k: usize,
    m: usize,
    cfg: &QuadratureConfig,
) -> Result<DMatrix<f64>, LawError> {
    if k == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    phi.check_order(k - 1)?;
    let norms = (0..k)
        .map(|o| phi.norm_sq(o, cfg))
        .collect::<Result<Vec<_>, _>>()?;
    let mut w = DMatrix::zeros(m * k, m * k);
    for i in 0..k {
        for j in 0..k {
            if (i + j) % 2 == 1 {
                continue;
            }
            let sign = if (i.abs_diff(j) / 2) % 2 == 0 { 1.0 } else { -1.0 };
            let value = sign * norms[(i + j) / 2];
            for l in 0..m {
                w[(i * m + l, j * m + l)] = value;
            }
        }
    }
    Ok(w)
}

/// Membership of `φ` in `ℰ(k)`: the order-`k` white-noise derivative
/// covariance is numerically nonsingular.
pub fn is_in_e(
    phi: &BumpTestFunction,
    k: usize,
    m: usize,
    cfg: &Config,
) -> Result<bool, LawError> {
    if phi.is_zero() {
        return Ok(false);
    }
    let w = white_noise_deriv_cov(phi, k, m, &cfg.quadrature)?;
    Ok(linalg::rank(&w, cfg.tolerance.rank_tol) == w.nrows())
}

/// Rows `ρ_{i+j}` placed at column block `j`: row `i` of the result is
/// `(ρ_i, ρ_{i+1}, …, ρ_{q−1}, 0, …)` in the order-major layout of
/// [`white_noise_deriv_cov`] with `orders` derivative blocks.
fn hankel(rho: &DMatrix<f64>, orders: usize) -> DMatrix<f64> {
    let (q, m) = rho.shape();
    let mut h = DMatrix::zeros(q, m * orders);
    for i in 0..q {
        for k in 0..orders {
            if i + k < q {
                for l in 0..m {
                    h[(i, k * m + l)] = rho[(i + k, l)];
                }
            }
        }
    }
    h
}

/// Law of `⟨v, φ⟩` for a single nilpotent block `N v̇ + v = c + Rξ`.
pub fn algebraic_block_law(
    rho: &DMatrix<f64>,
    c: &[PiecewisePoly],
    phi: &BumpTestFunction,
    cfg: &Config,
) -> Result<GaussianLaw, LawError> {
    let q = rho.nrows();
    if q == 0 {
        return Err(LawError::DimensionMismatch("block size must be at least 1".into()));
    }
    let c: Vec<PiecewisePoly> = if c.is_empty() {
        vec![PiecewisePoly::zero(); q]
    } else {
        c.to_vec()
    };
    let mean = pencil::solve_algebraic_deterministic(q, &c, phi, &cfg.quadrature)?;
    let w = white_noise_deriv_cov(phi, q, rho.ncols(), &cfg.quadrature)?;
    let h = hankel(rho, q);
    GaussianLaw::new(
        DVector::from_vec(mean),
        &h * w * h.transpose(),
        cfg.tolerance.rank_tol,
    )
}

/// The kernel `M(t) = (λF₀(t) − F(t))·exp(Jt)` with
/// `F(t) = ∫₀ᵗ exp(−Js)φ(s) ds` and `F₀` likewise for `φ₀`, where
/// `λ = F(∞)·F₀(∞)⁻¹`. It is zero before and after both supports.
#[derive(Debug, Clone)]
pub struct DifferentialKernel {
    j: DMatrix<f64>,
    lambda: DMatrix<f64>,
    phi: BumpTestFunction,
    phi0: BumpTestFunction,
    breaks: Vec<f64>,
    /// `(F, F₀)` at each break.
    cumulative: Vec<(DMatrix<f64>, DMatrix<f64>)>,
    cfg: QuadratureConfig,
}

impl DifferentialKernel {
    pub fn new(
        j: &DMatrix<f64>,
        phi: &BumpTestFunction,
        phi0: &BumpTestFunction,
        cfg: &Config,
    ) -> Result<Self, LawError> {
        let fundamental = fundamental_matrix(j, phi0, cfg)?;
        let (a1, b1) = phi.support();
        let (a2, b2) = phi0.support();
        let (lo, hi) = (a1.min(a2), b1.max(b2));
        let breaks: Vec<f64> = (0..=KERNEL_PANELS)
            .map(|i| lo + (hi - lo) * i as f64 / KERNEL_PANELS as f64)
            .collect();
        let d = j.nrows();
        let mut cumulative = Vec::with_capacity(breaks.len());
        let mut f = DMatrix::zeros(d, d);
        let mut f0 = DMatrix::zeros(d, d);
        cumulative.push((f.clone(), f0.clone()));
        for w in breaks.windows(2) {
            f += weighted_exp_integral(j, phi, w[0], w[1], &cfg.quadrature)?;
            f0 += weighted_exp_integral(j, phi0, w[0], w[1], &cfg.quadrature)?;
            cumulative.push((f.clone(), f0.clone()));
        }
        let lambda = &f * &fundamental.c;
        Ok(Self {
            j: j.clone(),
            lambda,
            phi: phi.clone(),
            phi0: phi0.clone(),
            breaks,
            cumulative,
            cfg: cfg.quadrature,
        })
    }

    /// `λ_ij = ∫ Φ_ij φ`.
    pub fn lambda(&self) -> &DMatrix<f64> {
        &self.lambda
    }

    /// Interval outside of which the kernel vanishes.
    pub fn support(&self) -> (f64, f64) {
        (self.breaks[0], *self.breaks.last().expect("non-empty"))
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    fn primitives(&self, t: f64) -> Result<(DMatrix<f64>, DMatrix<f64>), LawError> {
        let (lo, hi) = self.support();
        if t <= lo {
            return Ok(self.cumulative[0].clone());
        }
        if t >= hi {
            return Ok(self.cumulative.last().expect("non-empty").clone());
        }
        let idx = match self
            .breaks
            .binary_search_by(|b| b.partial_cmp(&t).expect("finite break"))
        {
            Ok(i) => return Ok(self.cumulative[i].clone()),
            Err(i) => i - 1,
        };
        let start = self.breaks[idx];
        let (f, f0) = &self.cumulative[idx];
        Ok((
            f + weighted_exp_integral(&self.j, &self.phi, start, t, &self.cfg)?,
            f0 + weighted_exp_integral(&self.j, &self.phi0, start, t, &self.cfg)?,
        ))
    }

    pub fn eval(&self, t: f64) -> Result<DMatrix<f64>, LawError> {
        let (f, f0) = self.primitives(t)?;
        Ok((&self.lambda * f0 - f) * linalg::expm(&(&self.j * t)))
    }

    /// `max |M|` at the right end of the support, zero up to rounding.
    pub fn tail_residual(&self) -> Result<f64, LawError> {
        let (_, hi) = self.support();
        Ok(linalg::max_abs(&self.eval(hi)?))
    }
}

/// Moments produced by integrating against the differential kernel.
struct DifferentialMoments {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    /// `X_o = ∫ M φ^{(o)} dt` for `o < orders`.
    deriv_pairings: Vec<DMatrix<f64>>,
}

fn differential_moments(
    kernel: &DifferentialKernel,
    s: &DMatrix<f64>,
    b: &[PiecewisePoly],
    u0: &DVector<f64>,
    orders: usize,
) -> Result<DifferentialMoments, LawError> {
    let d = s.nrows();
    let lambda = kernel.lambda();
    let scale = linalg::max_abs(lambda).max(1.0);
    let tail = kernel.tail_residual()?;
    if tail > 1e3 * kernel.cfg.tolerance() * scale {
        return Err(LawError::KernelTail { residual: tail });
    }
    if orders > 0 {
        kernel.phi.check_order(orders - 1)?;
    }
    let sst = s * s.transpose();
    let dim = d * d + orders * d * d + d;
    let (lo, hi) = kernel.support();
    let mut cuts: Vec<f64> = kernel.breaks().to_vec();
    for piece in b.iter().flat_map(|p| p.pieces.iter()) {
        for t in [Some(piece.start), piece.end].into_iter().flatten() {
            if t > lo && t < hi {
                cuts.push(t);
            }
        }
    }
    cuts.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
    cuts.dedup();

    let mut total = vec![0.0; dim];
    let mut failure = None;
    for w in cuts.windows(2) {
        let part = quad::integrate_vec(
            |t, out: &mut [f64]| {
                let m = match kernel.eval(t) {
                    Ok(m) => m,
                    Err(e) => {
                        failure.get_or_insert(e);
                        out.iter_mut().for_each(|x| *x = 0.0);
                        return;
                    }
                };
                let cov = &m * &sst * m.transpose();
                out[..d * d].copy_from_slice(cov.as_slice());
                let mut pos = d * d;
                for o in 0..orders {
                    let weight = kernel.phi.eval_deriv(o, t).unwrap_or(0.0);
                    for (slot, v) in out[pos..pos + d * d].iter_mut().zip(m.iter()) {
                        *slot = weight * v;
                    }
                    pos += d * d;
                }
                let bt = DVector::from_iterator(d, b.iter().map(|p| p.eval(t)));
                let mb = &m * bt;
                out[pos..].copy_from_slice(mb.as_slice());
            },
            dim,
            w[0],
            w[1],
            &kernel.cfg,
        )?;
        total.iter_mut().zip(part).for_each(|(t, p)| *t += p);
    }
    if let Some(e) = failure {
        return Err(e);
    }
    let cov = DMatrix::from_column_slice(d, d, &total[..d * d]);
    let deriv_pairings = (0..orders)
        .map(|o| {
            let start = d * d * (1 + o);
            DMatrix::from_column_slice(d, d, &total[start..start + d * d])
        })
        .collect();
    let mean = lambda * u0 + DVector::from_column_slice(&total[dim - d..]);
    Ok(DifferentialMoments {
        mean,
        cov,
        deriv_pairings,
    })
}

/// Law of `⟨u, φ⟩` for `u̇ + Ju = b + Sξ` with `⟨u, φ₀⟩ = u0`.
pub fn differential_law(
    j: &DMatrix<f64>,
    s: &DMatrix<f64>,
    b: &[PiecewisePoly],
    u0: &[f64],
    phi: &BumpTestFunction,
    phi0: &BumpTestFunction,
    cfg: &Config,
) -> Result<GaussianLaw, LawError> {
    let d = j.nrows();
    if s.nrows() != d || (!b.is_empty() && b.len() != d) || (!u0.is_empty() && u0.len() != d) {
        return Err(LawError::DimensionMismatch(format!(
            "J is {d}x{d}, S has {} rows, b has {} and u0 {} components",
            s.nrows(),
            b.len(),
            u0.len()
        )));
    }
    let b: Vec<PiecewisePoly> = if b.is_empty() {
        vec![PiecewisePoly::zero(); d]
    } else {
        b.to_vec()
    };
    let u0 = if u0.is_empty() {
        DVector::zeros(d)
    } else {
        DVector::from_column_slice(u0)
    };
    let kernel = DifferentialKernel::new(j, phi, phi0, cfg)?;
    let moments = differential_moments(&kernel, s, &b, &u0, 0)?;
    GaussianLaw::new(moments.mean, moments.cov, cfg.tolerance.rank_tol)
}

/// Laws of `⟨y, φ⟩` in Kronecker coordinates and of `⟨x, φ⟩ = Q⟨y, φ⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointLaw {
    pub y: GaussianLaw,
    pub x: GaussianLaw,
    pub d: usize,
}

/// Joint law for a given Kronecker reduction of the problem's pencil.
pub fn joint_law(
    problem: &SdaeProblem,
    kcf: &KcfDecomposition,
    phi: &BumpTestFunction,
    cfg: &Config,
) -> Result<JointLaw, LawError> {
    let n = problem.n();
    let m = problem.m();
    if kcf.n() != n {
        return Err(LawError::DimensionMismatch(format!(
            "reduction has dimension {}, problem has {n}",
            kcf.n()
        )));
    }
    let d = kcf.d;
    let q = kcf.q_dim();
    let orders = kcf.index;
    let noise = &kcf.p * &problem.lambda;
    let s = noise.rows(0, d).into_owned();
    let r = noise.rows(d, q).into_owned();
    let g = forcing::combine(&kcf.p, &problem.forcing_components());
    let (b, c) = g.split_at(d);
    let u0 = problem.initial_condition(d)?;

    let mut mean = DVector::zeros(n);
    let mut cov = DMatrix::zeros(n, n);

    // Algebraic part: v = mean + H·Z.
    let w = white_noise_deriv_cov(phi, orders, m, &cfg.quadrature)?;
    let mut h = DMatrix::zeros(q, m * orders);
    for (off, &size) in kcf.block_offsets().iter().zip(&kcf.block_sizes) {
        let rho = r.rows(*off, size).into_owned();
        h.view_mut((*off, 0), (size, m * orders))
            .copy_from(&hankel(&rho, orders));
        let block_mean = pencil::solve_algebraic_deterministic(
            size,
            &c[*off..off + size],
            phi,
            &cfg.quadrature,
        )?;
        for (i, v) in block_mean.into_iter().enumerate() {
            mean[d + off + i] = v;
        }
    }
    cov.view_mut((d, d), (q, q))
        .copy_from(&(&h * &w * h.transpose()));

    if d > 0 {
        let kernel = DifferentialKernel::new(&kcf.j, phi, &problem.phi0, cfg)?;
        let moments = differential_moments(&kernel, &s, b, &u0, orders)?;
        mean.rows_mut(0, d).copy_from(&moments.mean);
        cov.view_mut((0, 0), (d, d)).copy_from(&moments.cov);
        if q > 0 {
            // Cov(u, Z) = [X₀S | X₁S | …].
            let mut cross_z = DMatrix::zeros(d, m * orders);
            for (o, x) in moments.deriv_pairings.iter().enumerate() {
                cross_z.view_mut((0, o * m), (d, m)).copy_from(&(x * &s));
            }
            let cross = cross_z * h.transpose();
            cov.view_mut((0, d), (d, q)).copy_from(&cross);
            cov.view_mut((d, 0), (q, d)).copy_from(&cross.transpose());
        }
    }

    let y = GaussianLaw::new(mean, cov, cfg.tolerance.rank_tol)?;
    let x = y.linear_image(&kcf.q, cfg.tolerance.rank_tol)?;
    Ok(JointLaw { y, x, d })
}

/// Law of `⟨x, φ⟩`, reducing the pencil first.
pub fn full_law(
    problem: &SdaeProblem,
    phi: &BumpTestFunction,
    cfg: &Config,
) -> Result<GaussianLaw, LawError> {
    let kcf = pencil::compute_kcf(&problem.pencil, &cfg.tolerance)?;
    Ok(joint_law(problem, &kcf, phi, cfg)?.x)
}

/// `A − B·D⁻¹·C` for the split of `m` after the first `d` rows and columns,
/// with the relative residual of `det M = det D · det(A − BD⁻¹C)`.
pub fn schur_complement(
    m: &DMatrix<f64>,
    d: usize,
    tol: &ToleranceConfig,
) -> Result<(DMatrix<f64>, f64), LawError> {
    let n = m.nrows();
    if !m.is_square() || d > n {
        return Err(LawError::DimensionMismatch(format!(
            "split {d} of a {:?} matrix",
            m.shape()
        )));
    }
    let k = n - d;
    let a = m.view((0, 0), (d, d));
    let b = m.view((0, d), (d, k));
    let c = m.view((d, 0), (k, d));
    let dd = m.view((d, d), (k, k)).into_owned();
    let d_inv = linalg::inverse_checked(&dd, 1.0 / tol.rank_tol).ok_or(LawError::SingularD)?;
    let schur = a - b * d_inv * c;
    let det_m = linalg::determinant(m);
    let product = linalg::determinant(&dd) * linalg::determinant(&schur);
    let scale = det_m.abs().max(product.abs());
    let residual = if scale == 0.0 {
        0.0
    } else {
        (det_m - product).abs() / scale
    };
    Ok((schur, residual))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Theorem,
    NumericRank,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::Theorem => "theorem",
            Provenance::NumericRank => "numeric-rank",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbsContReport {
    pub absolutely_continuous: bool,
    pub test_function_in_e: bool,
    /// Per nilpotent block: the last row (1-based) of `R` that is nonzero.
    pub algebraic_ranks: Vec<usize>,
    /// Kronecker coordinates whose law is a point mass.
    pub degenerate_components: Vec<usize>,
    /// Rank of the covariance of `⟨y, φ⟩`.
    pub covariance_rank: usize,
    /// Rank after removing the degenerate components.
    pub nondegenerate_rank: usize,
    pub provenance: Provenance,
    pub notes: Vec<String>,
}

/// Searches a column split of `PΛ = [[S], [R]]` with an invertible `q × q`
/// block of `R` and a rank-`d` Schur complement for the remaining columns.
fn find_d_partition(noise: &DMatrix<f64>, d: usize, cutoff: f64) -> Option<Vec<usize>> {
    let (n, m) = noise.shape();
    let q = n - d;
    let r = noise.rows(d, q).into_owned();
    let all: Vec<usize> = (0..m).collect();
    let d_cols = linalg::pivoted_columns(&r, &all, q, cutoff)?;
    let rest: Vec<usize> = all.into_iter().filter(|c| !d_cols.contains(c)).collect();
    let pick = |mat: &DMatrix<f64>, rows: std::ops::Range<usize>, cols: &[usize]| {
        DMatrix::from_fn(rows.len(), cols.len(), |i, j| mat[(rows.start + i, cols[j])])
    };
    let dmat = pick(noise, d..n, &d_cols);
    let d_inv = linalg::inverse_checked(&dmat, 1.0 / ZERO_ROW_TOL)?;
    let schur = pick(noise, 0..d, &rest)
        - pick(noise, 0..d, &d_cols) * d_inv * pick(noise, d..n, &rest);
    let idx: Vec<usize> = (0..rest.len()).collect();
    let s_cols = linalg::pivoted_columns(&schur, &idx, d, cutoff)?;
    let mut order = d_cols;
    order.extend(s_cols.into_iter().map(|i| rest[i]));
    Some(order)
}

/// Decide whether the law of `⟨x, φ⟩` has a density on `ℝⁿ`.
pub fn abs_continuity(
    problem: &SdaeProblem,
    phi: &BumpTestFunction,
    cfg: &Config,
) -> Result<AbsContReport, LawError> {
    if phi.is_zero() {
        return Err(LawError::ZeroTestFunction);
    }
    let kcf = pencil::compute_kcf(&problem.pencil, &cfg.tolerance)?;
    abs_continuity_with(problem, &kcf, phi, cfg)
}

/// [`abs_continuity`] for a given Kronecker reduction.
pub fn abs_continuity_with(
    problem: &SdaeProblem,
    kcf: &KcfDecomposition,
    phi: &BumpTestFunction,
    cfg: &Config,
) -> Result<AbsContReport, LawError> {
    if phi.is_zero() {
        return Err(LawError::ZeroTestFunction);
    }
    let n = problem.n();
    let m = problem.m();
    let rank_tol = cfg.tolerance.rank_tol;
    let mut notes = Vec::new();

    let law = joint_law(problem, kcf, phi, cfg)?;
    let noise = &kcf.p * &problem.lambda;
    let row_cut = ZERO_ROW_TOL * linalg::max_abs(&noise);

    let mut algebraic_ranks = Vec::with_capacity(kcf.block_sizes.len());
    let mut degenerate: Vec<usize> = Vec::new();
    for (off, &size) in kcf.block_offsets().iter().zip(&kcf.block_sizes) {
        let last_nonzero = (0..size)
            .rev()
            .find(|&i| {
                noise
                    .row(kcf.d + off + i)
                    .iter()
                    .any(|v| v.abs() > row_cut)
            })
            .map_or(0, |i| i + 1);
        algebraic_ranks.push(last_nonzero);
        degenerate.extend((last_nonzero..size).map(|i| kcf.d + off + i));
    }
    for &i in law.y.degenerate_indices() {
        if !degenerate.contains(&i) {
            notes.push(format!("component y{} has numerically zero variance", i + 1));
            degenerate.push(i);
        }
    }
    degenerate.sort_unstable();

    let test_function_in_e = if kcf.index <= 4 {
        true
    } else {
        let member = is_in_e(phi, kcf.index, m, cfg)?;
        notes.push(format!(
            "membership in E({}) decided numerically: {member}",
            kcf.index
        ));
        member
    };

    let nondegenerate: Vec<usize> = (0..n).filter(|i| !degenerate.contains(i)).collect();
    let nondegenerate_rank = law.y.marginal(&nondegenerate, rank_tol)?.rank();
    let covariance_rank = law.y.rank();

    let lambda_rank = linalg::rank(&problem.lambda, rank_tol);
    let partition = if lambda_rank == n && test_function_in_e {
        let cutoff = rank_tol * linalg::spectral_norm(&noise);
        find_d_partition(&noise, kcf.d, cutoff)
    } else {
        None
    };
    let (absolutely_continuous, provenance) = match partition {
        Some(cols) => {
            notes.push(format!(
                "full-rank noise with invertible block on noise columns {:?}",
                cols.iter().take(n - kcf.d).map(|c| c + 1).collect::<Vec<_>>()
            ));
            (true, Provenance::Theorem)
        }
        None => {
            if lambda_rank < n {
                notes.push(format!("noise matrix has rank {lambda_rank} < {n}"));
            }
            (covariance_rank == n, Provenance::NumericRank)
        }
    };
    if absolutely_continuous && covariance_rank < n {
        notes.push(format!(
            "numerical covariance rank {covariance_rank} is below {n}"
        ));
    }
    Ok(AbsContReport {
        absolutely_continuous,
        test_function_in_e,
        algebraic_ranks,
        degenerate_components: degenerate,
        covariance_rank,
        nondegenerate_rank,
        provenance,
        notes,
    })
}
