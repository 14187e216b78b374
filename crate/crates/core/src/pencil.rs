//! Constant-coefficient matrix pencils `λ ↦ λA + B` and their Kronecker
//! canonical form.
//!
//! The reduction works in four stages:
//!
//! 1. pick a witness `λ₀` with `λ₀A + B` invertible and form
//!    `Ã = (λ₀A + B)⁻¹A`, so that `(λ₀A + B)⁻¹B = I − λ₀Ã`;
//! 2. split `ℝⁿ = im(Ãᵛ) ⊕ ker(Ãᵛ)` where `ν` is the length of the kernel
//!    staircase `ker Ã ⊂ ker Ã² ⊂ …`. Both subspaces are found one step at
//!    a time, so no power of `Ã` is ever formed;
//! 3. on the image `Ã` is invertible and yields `J`; on the kernel the
//!    operator `(I − λ₀Ñ)⁻¹Ñ` is nilpotent and its Jordan chains give the
//!    shift blocks;
//! 4. assemble `P` and `Q` from the two bases and the chains.
//!
//! `J` is returned as a general matrix similar to its Jordan form; only the
//! nilpotent part is put in exact shift-block form.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::forcing::PiecewisePoly;
use crate::linalg::{self, RankDecision};
use crate::quad::QuadratureConfig;
use crate::testfn::{BumpTestFunction, TestFnError};

/// Singular values within this factor of a cutoff are treated as undecidable.
const AMBIGUITY_MARGIN: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PencilError {
    #[error("NonFinite: matrix {matrix} has a non-finite entry at ({row}, {col})")]
    NonFinite {
        matrix: &'static str,
        row: usize,
        col: usize,
    },
    #[error("DimensionMismatch: {0}")]
    DimensionMismatch(String),
    #[error("NotRegular: det(λA + B) vanishes at every candidate λ")]
    NotRegular,
    #[error("IllConditioned: {step}")]
    IllConditioned { step: String },
    #[error(transparent)]
    TestFunction(#[from] TestFnError),
}

impl PencilError {
    fn ill(step: impl Into<String>) -> Self {
        PencilError::IllConditioned { step: step.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToleranceConfig {
    /// Singular-value cutoff relative to the largest singular value.
    pub rank_tol: f64,
    /// Max-norm residual allowed when validating a reduction.
    pub residual_tol: f64,
    /// Threshold on `|det(λA+B)| / Π‖rows‖` for a regularity witness.
    pub det_tol: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            rank_tol: 1e-10,
            residual_tol: 1e-8,
            det_tol: 1e-10,
        }
    }
}

impl ToleranceConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.rank_tol > 0.0 && self.rank_tol < 1.0) {
            return Err("rank_tol must lie in (0, 1)".into());
        }
        if !(self.residual_tol > 0.0 && self.det_tol > 0.0) {
            return Err("residual_tol and det_tol must be positive".into());
        }
        Ok(())
    }

    fn cond_bound(&self) -> f64 {
        1.0 / self.rank_tol
    }
}

/// The pair `(A, B)` of the equation `A ẋ + B x = f + Λξ`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixPencil {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
}

impl MatrixPencil {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>) -> Result<Self, PencilError> {
        if a.nrows() == 0 || !a.is_square() || a.shape() != b.shape() {
            return Err(PencilError::DimensionMismatch(format!(
                "A is {}x{}, B is {}x{}; both must be square n x n with n >= 1",
                a.nrows(),
                a.ncols(),
                b.nrows(),
                b.ncols()
            )));
        }
        for (name, m) in [("A", &a), ("B", &b)] {
            for r in 0..m.nrows() {
                for c in 0..m.ncols() {
                    if !m[(r, c)].is_finite() {
                        return Err(PencilError::NonFinite {
                            matrix: name,
                            row: r,
                            col: c,
                        });
                    }
                }
            }
        }
        Ok(Self { a, b })
    }

    pub fn from_rows(n: usize, a: &[f64], b: &[f64]) -> Result<Self, PencilError> {
        if a.len() != n * n || b.len() != n * n {
            return Err(PencilError::DimensionMismatch(format!(
                "expected {} entries per matrix",
                n * n
            )));
        }
        Self::new(
            DMatrix::from_row_slice(n, n, a),
            DMatrix::from_row_slice(n, n, b),
        )
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    /// `λA + B`.
    pub fn at(&self, lambda: f64) -> DMatrix<f64> {
        &self.a * lambda + &self.b
    }

    /// `(MA, MB)`.
    pub fn left_multiplied(&self, m: &DMatrix<f64>) -> Result<Self, PencilError> {
        Self::new(m * &self.a, m * &self.b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub regular: bool,
    pub witness_lambda: Option<f64>,
}

/// Candidate sequence `0, 1, −1, 2, −2, …` of length `n + 2`.
fn candidates(n: usize) -> impl Iterator<Item = f64> {
    (0..n + 2).map(|i| {
        let k = i.div_ceil(2) as f64;
        if i % 2 == 1 {
            k
        } else {
            0.0 - k
        }
    })
}

fn hadamard_ratio(m: &DMatrix<f64>) -> f64 {
    let scale: f64 = m.row_iter().map(|r| r.norm()).product();
    if scale == 0.0 {
        return 0.0;
    }
    linalg::determinant(m).abs() / scale
}

/// Decide regularity by scanning integer candidates for a witness.
pub fn is_regular(pencil: &MatrixPencil, cfg: &ToleranceConfig) -> RegularityReport {
    for lambda in candidates(pencil.n()) {
        if hadamard_ratio(&pencil.at(lambda)) > cfg.det_tol {
            return RegularityReport {
                regular: true,
                witness_lambda: Some(lambda),
            };
        }
    }
    RegularityReport {
        regular: false,
        witness_lambda: None,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KcfDecomposition {
    pub p: DMatrix<f64>,
    pub q: DMatrix<f64>,
    /// Differential dimension.
    pub d: usize,
    /// `d × d`, similar to the Jordan form of the differential part.
    pub j: DMatrix<f64>,
    /// Nilpotent block sizes, non-increasing.
    pub block_sizes: Vec<usize>,
    pub index: usize,
}

impl KcfDecomposition {
    pub fn n(&self) -> usize {
        self.p.nrows()
    }

    /// Algebraic dimension.
    pub fn q_dim(&self) -> usize {
        self.block_sizes.iter().sum()
    }

    /// Start of each nilpotent block inside the algebraic part.
    pub fn block_offsets(&self) -> Vec<usize> {
        self.block_sizes
            .iter()
            .scan(0, |acc, &s| {
                let start = *acc;
                *acc += s;
                Some(start)
            })
            .collect()
    }

    /// `N = blockdiag(N₁, …, N_r)` with ones on the superdiagonal of each block.
    pub fn nilpotent(&self) -> DMatrix<f64> {
        let q = self.q_dim();
        let mut n = DMatrix::zeros(q, q);
        for (off, &size) in self.block_offsets().iter().zip(&self.block_sizes) {
            for i in 0..size.saturating_sub(1) {
                n[(off + i, off + i + 1)] = 1.0;
            }
        }
        n
    }

    /// `blockdiag(I_d, N)`.
    pub fn canonical_a(&self) -> DMatrix<f64> {
        linalg::block_diag(&DMatrix::identity(self.d, self.d), &self.nilpotent())
    }

    /// `blockdiag(J, I_q)`.
    pub fn canonical_b(&self) -> DMatrix<f64> {
        let q = self.q_dim();
        linalg::block_diag(&self.j, &DMatrix::identity(q, q))
    }

    /// Builds a decomposition from given `P`, `Q`, `J` and block sizes
    /// (for instance a reduction worked out by hand).
    pub fn from_parts(
        p: DMatrix<f64>,
        q: DMatrix<f64>,
        j: DMatrix<f64>,
        block_sizes: Vec<usize>,
    ) -> Result<Self, PencilError> {
        let n = p.nrows();
        let d = j.nrows();
        let qd: usize = block_sizes.iter().sum();
        if !p.is_square() || q.shape() != p.shape() || !j.is_square() || d + qd != n {
            return Err(PencilError::DimensionMismatch(format!(
                "P {:?}, Q {:?}, J {:?}, blocks summing to {qd}",
                p.shape(),
                q.shape(),
                j.shape()
            )));
        }
        let mut block_sizes = block_sizes;
        if block_sizes.iter().any(|&s| s == 0) {
            return Err(PencilError::DimensionMismatch("zero-sized block".into()));
        }
        block_sizes.sort_unstable_by(|a, b| b.cmp(a));
        let index = block_sizes.first().copied().unwrap_or(0);
        Ok(Self {
            p,
            q,
            d,
            j,
            block_sizes,
            index,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub residual_a: f64,
    pub residual_b: f64,
    pub pass: bool,
}

pub fn validate_kcf(
    pencil: &MatrixPencil,
    kcf: &KcfDecomposition,
    cfg: &ToleranceConfig,
) -> Result<ValidationReport, PencilError> {
    let n = pencil.n();
    if kcf.p.shape() != (n, n) || kcf.q.shape() != (n, n) || kcf.d + kcf.q_dim() != n {
        return Err(PencilError::DimensionMismatch(format!(
            "pencil is {n}x{n}, P is {:?}, Q is {:?}, d + q = {}",
            kcf.p.shape(),
            kcf.q.shape(),
            kcf.d + kcf.q_dim()
        )));
    }
    let residual_a = linalg::max_abs(&(&kcf.p * pencil.a() * &kcf.q - kcf.canonical_a()));
    let residual_b = linalg::max_abs(&(&kcf.p * pencil.b() * &kcf.q - kcf.canonical_b()));
    Ok(ValidationReport {
        residual_a,
        residual_b,
        pass: residual_a <= cfg.residual_tol && residual_b <= cfg.residual_tol,
    })
}

fn checked(dec: RankDecision, cutoff: f64, step: &str) -> Result<RankDecision, PencilError> {
    if dec.is_ambiguous(cutoff, AMBIGUITY_MARGIN) {
        Err(PencilError::ill(format!(
            "{step}: singular value too close to the rank cutoff {cutoff:.3e}"
        )))
    } else {
        Ok(dec)
    }
}

/// Orthonormal bases of `ker(Op), ker(Op²), …` until the chain stops growing.
fn kernel_staircase(
    op: &DMatrix<f64>,
    cutoff: f64,
    step: &str,
) -> Result<Vec<DMatrix<f64>>, PencilError> {
    let n = op.nrows();
    let mut chain = vec![DMatrix::zeros(n, 0)];
    loop {
        let prev = chain.last().expect("non-empty");
        let projected = linalg::complement_projector(prev, n) * op;
        let (basis, dec) = linalg::null_space(&projected, cutoff);
        checked(dec, cutoff, step)?;
        if basis.ncols() <= prev.ncols() {
            break;
        }
        chain.push(basis);
        if chain.last().map(|b| b.ncols()) == Some(n) {
            break;
        }
    }
    Ok(chain)
}

/// Jordan chains of a nilpotent `q × q` operator, as the columns of `G`
/// with `G⁻¹·op·G` in shift-block form, blocks sorted by decreasing size.
fn nilpotent_chains(
    op: &DMatrix<f64>,
    cutoff: f64,
) -> Result<(DMatrix<f64>, Vec<usize>), PencilError> {
    let q = op.nrows();
    if q == 0 {
        return Ok((DMatrix::zeros(0, 0), vec![]));
    }
    let kernels = kernel_staircase(op, cutoff, "nilpotent staircase")?;
    let depth = kernels.len() - 1;
    if kernels[depth].ncols() != q {
        return Err(PencilError::ill(
            "nilpotent staircase: restricted operator is not nilpotent",
        ));
    }
    let dims: Vec<usize> = kernels.iter().map(|k| k.ncols()).collect();
    // Weyr characteristic: number of blocks of size ≥ k.
    let weyr = |k: usize| -> usize {
        if k == 0 || k > depth {
            0
        } else {
            dims[k] - dims[k - 1]
        }
    };
    // Each chain: (length, top vector).
    let mut chains: Vec<(usize, nalgebra::DVector<f64>)> = Vec::new();
    // Vectors of already started chains at the current level.
    let mut carried: Vec<nalgebra::DVector<f64>> = Vec::new();
    for level in (1..=depth).rev() {
        let new_tops = weyr(level) - weyr(level + 1);
        if new_tops > 0 {
            let mut span_cols: Vec<nalgebra::DVector<f64>> =
                kernels[level - 1].column_iter().map(|c| c.into_owned()).collect();
            span_cols.extend(carried.iter().cloned());
            let z = if span_cols.is_empty() {
                DMatrix::zeros(q, 0)
            } else {
                let m = DMatrix::from_columns(&span_cols);
                linalg::range_basis(&m, cutoff).0
            };
            let candidates = linalg::complement_projector(&z, q) * &kernels[level];
            let svd = linalg::svd_full(&candidates);
            if svd.sigma.len() < new_tops || svd.sigma[new_tops - 1] <= cutoff {
                return Err(PencilError::ill(
                    "nilpotent chains: could not extend the chain basis",
                ));
            }
            for i in 0..new_tops {
                let top = svd.u.column(i).into_owned();
                chains.push((level, top.clone()));
                carried.push(top);
            }
        }
        // Move every carried vector one level down the chain.
        carried = carried.iter().map(|v| op * v).collect();
    }
    let mut columns = Vec::with_capacity(q);
    let mut sizes = Vec::with_capacity(chains.len());
    for (len, top) in &chains {
        let mut vecs = vec![top.clone()];
        for _ in 1..*len {
            let next = op * vecs.last().expect("non-empty");
            vecs.push(next);
        }
        vecs.reverse();
        columns.extend(vecs);
        sizes.push(*len);
    }
    Ok((DMatrix::from_columns(&columns), sizes))
}

/// Kronecker canonical form of a regular pencil.
pub fn compute_kcf(
    pencil: &MatrixPencil,
    cfg: &ToleranceConfig,
) -> Result<KcfDecomposition, PencilError> {
    let n = pencil.n();
    if !is_regular(pencil, cfg).regular {
        return Err(PencilError::NotRegular);
    }
    // Any regular point works in exact arithmetic; take the best conditioned.
    let lambda0 = candidates(n)
        .map(|l| (l, linalg::condition_number(&pencil.at(l))))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(l, _)| l)
        .expect("at least one candidate");
    let bound = cfg.cond_bound();
    let e_inv = linalg::inverse_checked(&pencil.at(lambda0), bound)
        .ok_or_else(|| PencilError::ill("inverting λ₀A + B"))?;
    let a_tilde = &e_inv * pencil.a();
    let scale = linalg::spectral_norm(&a_tilde);

    if scale == 0.0 {
        // A = 0: purely algebraic with n blocks of size one.
        return finish(
            pencil,
            cfg,
            KcfDecomposition {
                p: e_inv,
                q: DMatrix::identity(n, n),
                d: 0,
                j: DMatrix::zeros(0, 0),
                block_sizes: vec![1; n],
                index: 1,
            },
        );
    }
    let cutoff = cfg.rank_tol * scale;

    let kernel_chain = kernel_staircase(&a_tilde, cutoff, "kernel staircase of (λ₀A+B)⁻¹A")?;
    let nu = kernel_chain.len() - 1;
    let kernel = kernel_chain.last().expect("non-empty").clone();
    let q = kernel.ncols();
    let d = n - q;

    // ker((Ãᵀ)^ν) is the orthogonal complement of im(Ã^ν).
    let at = a_tilde.transpose();
    let mut co_kernel = DMatrix::zeros(n, 0);
    for _ in 0..nu {
        let projected = linalg::complement_projector(&co_kernel, n) * &at;
        let (basis, dec) = linalg::null_space(&projected, cutoff);
        checked(dec, cutoff, "image staircase")?;
        co_kernel = basis;
    }
    if co_kernel.ncols() != q {
        return Err(PencilError::ill(
            "image and kernel staircases disagree on the algebraic dimension",
        ));
    }
    let image = linalg::orthogonal_complement(&co_kernel, n);

    let mut t = DMatrix::zeros(n, n);
    t.view_mut((0, 0), (n, d)).copy_from(&image);
    t.view_mut((0, d), (n, q)).copy_from(&kernel);
    let t_inv =
        linalg::inverse_checked(&t, bound).ok_or_else(|| PencilError::ill("spectral splitting basis"))?;
    let blocks = &t_inv * &a_tilde * &t;
    let coupling = linalg::max_abs(&blocks.view((0, d), (d, q)).into_owned())
        .max(linalg::max_abs(&blocks.view((d, 0), (q, d)).into_owned()));
    if coupling > cfg.rank_tol.sqrt() * scale {
        return Err(PencilError::ill(format!(
            "spectral splitting: invariant subspaces couple at {coupling:.3e}"
        )));
    }
    let a_diff = blocks.view((0, 0), (d, d)).into_owned();
    let n_tilde = blocks.view((d, d), (q, q)).into_owned();

    let a_diff_inv = linalg::inverse_checked(&a_diff, bound)
        .ok_or_else(|| PencilError::ill("differential block of (λ₀A+B)⁻¹A"))?;
    let j = &a_diff_inv - DMatrix::identity(d, d) * lambda0;

    let unipotent = DMatrix::identity(q, q) - &n_tilde * lambda0;
    let unipotent_inv = linalg::inverse_checked(&unipotent, bound)
        .ok_or_else(|| PencilError::ill("I − λ₀Ñ"))?;
    let shifted = &unipotent_inv * &n_tilde;
    let (g, block_sizes) = nilpotent_chains(&shifted, cutoff)?;
    let g_inv =
        linalg::inverse_checked(&g, bound).ok_or_else(|| PencilError::ill("Jordan chain basis"))?;

    let q_mat = &t * linalg::block_diag(&DMatrix::identity(d, d), &g);
    let left = linalg::block_diag(&a_diff_inv, &(&g_inv * &unipotent_inv));
    let p_mat = left * &t_inv * &e_inv;
    let index = block_sizes.first().copied().unwrap_or(0);
    finish(
        pencil,
        cfg,
        KcfDecomposition {
            p: p_mat,
            q: q_mat,
            d,
            j,
            block_sizes,
            index,
        },
    )
}

fn finish(
    pencil: &MatrixPencil,
    cfg: &ToleranceConfig,
    kcf: KcfDecomposition,
) -> Result<KcfDecomposition, PencilError> {
    let report = validate_kcf(pencil, &kcf, cfg)?;
    if !report.pass {
        return Err(PencilError::ill(format!(
            "validation residuals {:.3e} / {:.3e} exceed {:.1e}",
            report.residual_a, report.residual_b, cfg.residual_tol
        )));
    }
    Ok(kcf)
}

/// `⟨v_j, φ⟩ = Σ_{k=j}^{size} ⟨c_k, φ^{(k−j)}⟩` for one nilpotent block of
/// `N v̇ + v = c`, by backward substitution.
pub fn solve_algebraic_deterministic(
    block_size: usize,
    c: &[PiecewisePoly],
    phi: &BumpTestFunction,
    cfg: &QuadratureConfig,
) -> Result<Vec<f64>, PencilError> {
    if c.len() != block_size {
        return Err(PencilError::DimensionMismatch(format!(
            "block of size {block_size} needs {block_size} inputs, got {}",
            c.len()
        )));
    }
    if block_size > 0 {
        phi.check_order(block_size - 1)?;
    }
    let (a, b) = phi.support();
    // pairings[k][o] = ⟨c_k, φ^{(o)}⟩
    let mut pairings = vec![vec![0.0; block_size]; block_size];
    for (k, ck) in c.iter().enumerate() {
        for o in 0..=k {
            pairings[k][o] = ck
                .pair_with(|t| phi.eval_deriv(o, t).unwrap_or(0.0), a, b, cfg)
                .map_err(TestFnError::from)?;
        }
    }
    Ok((0..block_size)
        .map(|j| (j..block_size).map(|k| pairings[k][k - j]).sum())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ll_cutset() -> MatrixPencil {
        MatrixPencil::from_rows(
            4,
            &[
                0., 0., 0., 0., 0., 0., 0., 0., 0., 0., 1., 0., 0., 0., 0., 1.,
            ],
            &[
                1., -1., 1., 0., -1., 1., 0., 1., -1., 0., 0., 0., 0., -1., 0., 0.,
            ],
        )
        .unwrap()
    }

    #[test]
    fn candidate_order() {
        let c: Vec<f64> = candidates(3).collect();
        assert_eq!(c, vec![0.0, 1.0, -1.0, 2.0, -2.0]);
    }

    #[test]
    fn remark_pencil_is_singular() {
        let p = MatrixPencil::from_rows(2, &[0., 0., 1., 1.], &[1., 1., 0., 0.]).unwrap();
        let r = is_regular(&p, &ToleranceConfig::default());
        assert!(!r.regular);
        assert_eq!(r.witness_lambda, None);
        assert_eq!(
            compute_kcf(&p, &ToleranceConfig::default()),
            Err(PencilError::NotRegular)
        );
    }

    #[test]
    fn identity_pencil_witness() {
        let p = MatrixPencil::new(DMatrix::identity(2, 2), DMatrix::zeros(2, 2)).unwrap();
        let r = is_regular(&p, &ToleranceConfig::default());
        assert_eq!(r.witness_lambda, Some(1.0));
    }

    #[test]
    fn rejects_non_finite() {
        let mut a = DMatrix::identity(2, 2);
        a[(1, 0)] = f64::NAN;
        assert!(matches!(
            MatrixPencil::new(a, DMatrix::zeros(2, 2)),
            Err(PencilError::NonFinite { matrix: "A", row: 1, col: 0 })
        ));
    }

    #[test]
    fn ode_pencil() {
        let p = MatrixPencil::new(
            DMatrix::identity(2, 2),
            DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, 5.0])),
        )
        .unwrap();
        let k = compute_kcf(&p, &ToleranceConfig::default()).unwrap();
        assert_eq!((k.d, k.q_dim(), k.index), (2, 0, 0));
        assert!(k.block_sizes.is_empty());
        let mut ev: Vec<f64> = k.j.clone().eigenvalues().unwrap().iter().cloned().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((ev[0] - 3.0).abs() < 1e-10 && (ev[1] - 5.0).abs() < 1e-10);
    }

    #[test]
    fn purely_algebraic_pencil() {
        let p = MatrixPencil::new(DMatrix::zeros(2, 2), DMatrix::identity(2, 2)).unwrap();
        let k = compute_kcf(&p, &ToleranceConfig::default()).unwrap();
        assert_eq!((k.d, k.q_dim(), k.index), (0, 2, 1));
        assert_eq!(k.block_sizes, vec![1, 1]);
    }

    #[test]
    fn ll_cutset_structure() {
        let p = ll_cutset();
        let cfg = ToleranceConfig::default();
        let k = compute_kcf(&p, &cfg).unwrap();
        assert_eq!(k.d, 1);
        assert_eq!(k.block_sizes, vec![2, 1]);
        assert_eq!(k.index, 2);
        assert!((k.j[(0, 0)] - 0.5).abs() < 1e-10);
        let v = validate_kcf(&p, &k, &cfg).unwrap();
        assert!(v.pass, "{v:?}");
    }

    #[test]
    fn scaled_p_fails_validation() {
        let p = MatrixPencil::new(DMatrix::identity(2, 2), DMatrix::zeros(2, 2)).unwrap();
        let cfg = ToleranceConfig::default();
        let mut k = KcfDecomposition::from_parts(
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
            DMatrix::zeros(2, 2),
            vec![],
        )
        .unwrap();
        let exact = validate_kcf(&p, &k, &cfg).unwrap();
        assert_eq!((exact.residual_a, exact.residual_b), (0.0, 0.0));
        k.p *= 2.0;
        let v = validate_kcf(&p, &k, &cfg).unwrap();
        assert!(!v.pass);
        assert_eq!(v.residual_a, 1.0);
    }

    #[test]
    fn validation_dimension_mismatch() {
        let p = ll_cutset();
        let k = KcfDecomposition::from_parts(
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
            DMatrix::zeros(2, 2),
            vec![],
        )
        .unwrap();
        assert!(matches!(
            validate_kcf(&p, &k, &ToleranceConfig::default()),
            Err(PencilError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn single_block_of_size_three() {
        // N v̇ + v = 0 with a 3-block, disguised by a change of basis.
        let n = DMatrix::from_row_slice(3, 3, &[0., 1., 0., 0., 0., 1., 0., 0., 0.]);
        let m = DMatrix::from_row_slice(3, 3, &[2., 1., 0., 0., 1., 1., 1., 0., 3.]);
        let mi = m.clone().try_inverse().unwrap();
        let p = MatrixPencil::new(&m * &n * &mi, DMatrix::identity(3, 3)).unwrap();
        let k = compute_kcf(&p, &ToleranceConfig::default()).unwrap();
        assert_eq!(k.block_sizes, vec![3]);
        assert_eq!(k.index, 3);
    }

    #[test]
    fn zero_order_block_returns_input() {
        let cfg = QuadratureConfig::default();
        let phi = BumpTestFunction::default().normalized(&cfg).unwrap();
        let v = solve_algebraic_deterministic(1, &[PiecewisePoly::constant(5.0)], &phi, &cfg)
            .unwrap();
        assert!((v[0] - 5.0).abs() < 1e-10);
    }
}
