//! Small dense linear-algebra helpers on top of `nalgebra`.
//!
//! Everything here works on `DMatrix<f64>`; rank decisions are made on
//! singular values against an explicit cutoff supplied by the caller.

use nalgebra::{DMatrix, DVector};

/// Singular value decomposition with singular values in descending order,
/// a thin left factor and a full (square) right factor.
#[derive(Debug, Clone)]
pub struct SortedSvd {
    /// `rows × min(rows, cols)`.
    pub u: DMatrix<f64>,
    pub sigma: DVector<f64>,
    /// `cols × cols`, columns are right singular vectors.
    pub v: DMatrix<f64>,
}

// nalgebra's bidiagonal SVD can return a wrong U for rank-deficient tall
// inputs (U·Σ·Vᵀ off by percents), so the decomposition goes through faer.
pub fn svd_full(m: &DMatrix<f64>) -> SortedSvd {
    let (rows, cols) = m.shape();
    let k = rows.min(cols);
    if k == 0 {
        return SortedSvd {
            u: DMatrix::zeros(rows, 0),
            sigma: DVector::zeros(0),
            v: DMatrix::identity(cols, cols),
        };
    }
    let f = faer::Mat::<f64>::from_fn(rows, cols, |i, j| m[(i, j)]);
    let svd = f.svd().expect("SVD of a finite matrix converges");
    let (u, s, v) = (svd.U(), svd.S().column_vector(), svd.V());
    SortedSvd {
        u: DMatrix::from_fn(rows, k, |i, j| u[(i, j)]),
        sigma: DVector::from_fn(k, |i, _| s[i]),
        v: DMatrix::from_fn(cols, cols, |i, j| v[(i, j)]),
    }
}

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    svd_full(m).sigma.iter().cloned().fold(0.0, f64::max)
}

/// Result of a rank decision: the count plus the singular values that were
/// closest to the cutoff on either side, used for ambiguity checks.
#[derive(Debug, Clone, Copy)]
pub struct RankDecision {
    pub rank: usize,
    pub smallest_kept: Option<f64>,
    pub largest_dropped: Option<f64>,
}

impl RankDecision {
    /// True when a singular value lies within `margin` (a factor) of `cutoff`.
    pub fn is_ambiguous(&self, cutoff: f64, margin: f64) -> bool {
        if cutoff <= 0.0 {
            return false;
        }
        let near = |s: f64| s > cutoff / margin && s < cutoff * margin;
        self.smallest_kept.is_some_and(near) || self.largest_dropped.is_some_and(near)
    }
}

fn decide(sigma: &DVector<f64>, cutoff: f64) -> RankDecision {
    let rank = sigma.iter().filter(|&&s| s > cutoff).count();
    RankDecision {
        rank,
        smallest_kept: if rank > 0 { Some(sigma[rank - 1]) } else { None },
        largest_dropped: sigma.iter().nth(rank).copied(),
    }
}

/// Numerical rank with a relative cutoff `rel_tol · σ_max`.
pub fn rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let svd = svd_full(m);
    let smax = svd.sigma.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    decide(&svd.sigma, rel_tol * smax).rank
}

/// Orthonormal basis of the null space, using an absolute cutoff.
pub fn null_space(m: &DMatrix<f64>, cutoff: f64) -> (DMatrix<f64>, RankDecision) {
    let cols = m.ncols();
    let svd = svd_full(m);
    let dec = decide(&svd.sigma, cutoff);
    let basis = svd.v.columns(dec.rank, cols - dec.rank).into_owned();
    (basis, dec)
}

/// Orthonormal basis of the column space, using an absolute cutoff.
pub fn range_basis(m: &DMatrix<f64>, cutoff: f64) -> (DMatrix<f64>, RankDecision) {
    let rows = m.nrows();
    if m.ncols() == 0 || rows == 0 {
        return (
            DMatrix::zeros(rows, 0),
            RankDecision {
                rank: 0,
                smallest_kept: None,
                largest_dropped: None,
            },
        );
    }
    let svd = svd_full(m);
    let dec = decide(&svd.sigma, cutoff);
    (svd.u.columns(0, dec.rank).into_owned(), dec)
}

/// Orthonormal basis of the orthogonal complement of `span(basis)`.
pub fn orthogonal_complement(basis: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    if basis.ncols() == 0 {
        return DMatrix::identity(n, n);
    }
    let (ns, _) = null_space(&basis.transpose(), 1e-12);
    ns
}

/// `I − B Bᵀ` for an orthonormal `B`.
pub fn complement_projector(basis: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    DMatrix::identity(n, n) - basis * basis.transpose()
}

/// 2-norm condition number (∞ for singular or empty-rank input).
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 1.0;
    }
    let svd = svd_full(m);
    let smax = svd.sigma[0];
    let smin = svd.sigma[svd.sigma.len() - 1];
    if smin == 0.0 {
        f64::INFINITY
    } else {
        smax / smin
    }
}

/// Inverse, refused when the condition number exceeds `cond_bound`.
pub fn inverse_checked(m: &DMatrix<f64>, cond_bound: f64) -> Option<DMatrix<f64>> {
    if m.is_empty() {
        return Some(m.clone());
    }
    if condition_number(m) > cond_bound {
        return None;
    }
    m.clone().try_inverse()
}

pub fn determinant(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 1.0;
    }
    m.clone().lu().determinant()
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

/// Matrix exponential; empty matrices pass through.
pub fn expm(m: &DMatrix<f64>) -> DMatrix<f64> {
    if m.is_empty() {
        return m.clone();
    }
    m.exp()
}

pub fn block_diag(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows() + b.nrows();
    let m = a.ncols() + b.ncols();
    let mut out = DMatrix::zeros(n, m);
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((a.nrows(), a.ncols()), b.shape()).copy_from(b);
    out
}

/// Greedy column selection by pivoted Gram–Schmidt: returns `count`
/// column indices of `m` (restricted to `allowed`) whose span is the most
/// independent, or `None` if a pivot falls below `cutoff`.
pub fn pivoted_columns(
    m: &DMatrix<f64>,
    allowed: &[usize],
    count: usize,
    cutoff: f64,
) -> Option<Vec<usize>> {
    let mut work: Vec<(usize, DVector<f64>)> =
        allowed.iter().map(|&j| (j, m.column(j).into_owned())).collect();
    let mut chosen = Vec::with_capacity(count);
    for _ in 0..count {
        let (pos, norm) = work
            .iter()
            .enumerate()
            .map(|(p, (_, v))| (p, v.norm()))
            .fold((usize::MAX, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pos == usize::MAX || norm <= cutoff {
            return None;
        }
        let (idx, pivot) = work.swap_remove(pos);
        let q = pivot / norm;
        for (_, v) in work.iter_mut() {
            let proj = q.dot(v);
            *v -= &q * proj;
        }
        chosen.push(idx);
    }
    Some(chosen)
}

/// Sum by recursive halving, independent of thread scheduling.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_space_of_wide_matrix() {
        let m = DMatrix::from_row_slice(2, 3, &[1.0, -1.0, 0.0, 0.0, 1.0, -1.0]);
        let (ns, dec) = null_space(&m, 1e-12);
        assert_eq!(dec.rank, 2);
        assert_eq!(ns.ncols(), 1);
        assert!((&m * &ns).norm() < 1e-12);
    }

    #[test]
    fn svd_sorted_descending() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![0.5, 3.0, 1.0]));
        let s = svd_full(&m);
        assert!(s.sigma[0] >= s.sigma[1] && s.sigma[1] >= s.sigma[2]);
        let recon = &s.u * DMatrix::from_diagonal(&s.sigma) * s.v.transpose();
        assert!((recon - m).norm() < 1e-12);
    }

    #[test]
    fn pivoted_columns_skips_dependent() {
        let m = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 0.0, 0.0, 0.0, 1.0]);
        let cols = pivoted_columns(&m, &[0, 1, 2], 2, 1e-12).unwrap();
        assert!(cols.contains(&2));
        assert!(pivoted_columns(&m, &[0, 1], 2, 1e-12).is_none());
    }

    #[test]
    fn svd_of_rank_one_tall_matrix_recomposes() {
        #[rustfmt::skip]
        let m = DMatrix::from_row_slice(3, 2, &[
            0.08092311431632021, 0.9442944555241228,
            0.0014092866937184673, 0.016445012310332217,
            -0.027200787398670948, -0.31740687371537507,
        ]);
        let svd = svd_full(&m);
        let sigma = DMatrix::from_diagonal(&svd.sigma);
        let back = &svd.u * sigma * svd.v.transpose();
        assert!((back - &m).amax() < 1e-14);
        assert_eq!(rank(&m, 1e-10), 1);
    }

    #[test]
    fn ambiguity_band() {
        let dec = RankDecision {
            rank: 1,
            smallest_kept: Some(1.0),
            largest_dropped: Some(3e-10),
        };
        assert!(dec.is_ambiguous(1e-10, 10.0));
        assert!(!dec.is_ambiguous(1e-12, 10.0));
    }
}
