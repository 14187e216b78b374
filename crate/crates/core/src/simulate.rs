//! Monte Carlo sampling of white-noise pairings and of SDAE solutions on
//! an equidistant grid, plus empirical-versus-analytic comparison.
//!
//! Brownian increments for noise channel `ℓ` of sample `s` come from a
//! ChaCha stream keyed by `(seed, ℓ)` with stream number `s`, so any sample
//! can be regenerated alone and parallel runs are bitwise reproducible.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::law::{GaussianLaw, LawError, SdaeProblem};
use crate::linalg;
use crate::pencil::KcfDecomposition;
use crate::testfn::{BumpTestFunction, TestFnError};

/// Largest admissible share of a Riemann sum carried by a single node.
const MAX_NODE_SHARE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("TooFewSamples: need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("DimensionMismatch: {0}")]
    DimensionMismatch(String),
    #[error("GridTooCoarse: order-{order} derivative puts {share:.3} of its squared mass on one node")]
    GridTooCoarse { order: usize, share: f64 },
    #[error("InvalidGrid: {0}")]
    InvalidGrid(String),
    #[error(transparent)]
    Law(#[from] LawError),
    #[error(transparent)]
    TestFunction(#[from] TestFnError),
}

/// `t_i = i·dt` for `i = 0 … steps`, `dt = horizon / steps`.
///
/// A grid obtained by `refined()` halves every cell of its parent and
/// carries the same Brownian path for the same seed: parent increments are
/// split by a Brownian bridge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimGrid {
    pub horizon: f64,
    pub steps: usize,
    /// Number of halvings below the grid the path is drawn on.
    #[serde(default)]
    pub level: u32,
}

impl SimGrid {
    pub const DEFAULT_STEPS: usize = 10_000;

    pub fn new(horizon: f64, steps: usize) -> Result<Self, SimError> {
        if !(horizon > 0.0 && horizon.is_finite()) || steps == 0 {
            return Err(SimError::InvalidGrid(format!(
                "horizon {horizon} and steps {steps} must be positive"
            )));
        }
        Ok(Self {
            horizon,
            steps,
            level: 0,
        })
    }

    /// The same grid with every cell halved.
    pub fn refined(&self) -> Self {
        Self {
            horizon: self.horizon,
            steps: self.steps * 2,
            level: self.level + 1,
        }
    }

    fn base_steps(&self) -> usize {
        self.steps >> self.level
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.dt()
    }

    /// Grid indices covering `[a, b]`, which must lie inside `(0, T)`,
    /// aligned to cells of the base grid.
    fn covering(&self, a: f64, b: f64) -> Result<(usize, usize), SimError> {
        if !(a > 0.0 && b < self.horizon) {
            return Err(SimError::InvalidGrid(format!(
                "support [{a}, {b}] is not inside (0, {})",
                self.horizon
            )));
        }
        let base = self.base_steps();
        let dt = self.horizon / base as f64;
        let lo = (a / dt).floor() as usize;
        let hi = ((b / dt).ceil() as usize).min(base);
        Ok((lo << self.level, (hi << self.level).min(self.steps)))
    }

    fn increments(&self, seed: u64, channels: usize, len: usize) -> Increments {
        let cell = 1usize << self.level;
        Increments {
            seed,
            channels,
            len,
            stride: len.div_ceil(cell) * cell,
            level: self.level,
            base_dt: self.horizon / self.base_steps() as f64,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Brownian increments `ΔW_ℓ,i ~ N(0, dt)` for one sample, channel-major
/// with `stride` slots per channel (the first `len` are used).
#[derive(Debug, Clone)]
struct Increments {
    seed: u64,
    channels: usize,
    len: usize,
    stride: usize,
    level: u32,
    base_dt: f64,
}

impl Increments {
    fn fill(&self, sample: u64, buf: &mut Vec<f64>) {
        buf.resize(self.channels * self.stride, 0.0);
        let base_len = self.stride >> self.level;
        for l in 0..self.channels {
            let key = splitmix64(self.seed ^ splitmix64(l as u64 + 1));
            let row = &mut buf[l * self.stride..(l + 1) * self.stride];
            let mut rng = ChaCha8Rng::seed_from_u64(key);
            rng.set_stream(sample);
            let sd = self.base_dt.sqrt();
            for slot in &mut row[..base_len] {
                let z: f64 = rng.sample(StandardNormal);
                *slot = z * sd;
            }
            // Bridge: split each cell of width h into halves ΔW/2 ± (√h/2)·ζ.
            let mut cells = base_len;
            let mut h = self.base_dt;
            for level in 1..=self.level {
                let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(key ^ splitmix64(0x1000 + level as u64)));
                rng.set_stream(sample);
                let half = 0.5 * h.sqrt();
                for i in (0..cells).rev() {
                    let w = row[i];
                    let z: f64 = rng.sample(StandardNormal);
                    row[2 * i] = 0.5 * w + half * z;
                    row[2 * i + 1] = 0.5 * w - half * z;
                }
                cells *= 2;
                h *= 0.5;
            }
        }
    }
}

/// Values of `φ^{(o)}` on grid nodes `lo..=hi`, after checking resolution.
fn tabulate(
    phi: &BumpTestFunction,
    orders: usize,
    grid: &SimGrid,
    lo: usize,
    hi: usize,
) -> Result<Vec<Vec<f64>>, SimError> {
    if orders > 0 {
        phi.check_order(orders - 1)?;
    }
    let mut table = vec![Vec::with_capacity(hi - lo + 1); orders];
    for i in lo..=hi {
        let d = phi.derivatives(orders.saturating_sub(1), grid.time(i))?;
        for (o, col) in table.iter_mut().enumerate() {
            col.push(d[o]);
        }
    }
    for (order, col) in table.iter().enumerate() {
        let total: f64 = col.iter().map(|v| v * v).sum();
        let peak = col.iter().fold(0.0f64, |acc, v| acc.max(v * v));
        if total > 0.0 && peak > MAX_NODE_SHARE * total {
            return Err(SimError::GridTooCoarse {
                order,
                share: peak / total,
            });
        }
    }
    Ok(table)
}

/// Samples `(⟨ξ_ℓ, φ^{(j)}⟩)` for `j < k`, `ℓ < m`, ordered `j·m + ℓ`.
#[derive(Debug, Clone)]
pub struct WienerSampler {
    orders: usize,
    channels: usize,
    table: Vec<Vec<f64>>,
    increments: Increments,
}

impl WienerSampler {
    pub fn new(
        phi: &BumpTestFunction,
        k: usize,
        m: usize,
        grid: &SimGrid,
        seed: u64,
    ) -> Result<Self, SimError> {
        let (a, b) = phi.support();
        let (lo, hi) = grid.covering(a, b)?;
        let table = tabulate(phi, k, grid, lo, hi)?;
        Ok(Self {
            orders: k,
            channels: m,
            table,
            increments: grid.increments(seed, m, hi - lo + 1),
        })
    }

    pub fn dim(&self) -> usize {
        self.orders * self.channels
    }

    fn sample_with(&self, index: u64, buf: &mut Vec<f64>) -> Vec<f64> {
        let stride = self.increments.stride;
        self.increments.fill(index, buf);
        let mut out = vec![0.0; self.dim()];
        for (o, col) in self.table.iter().enumerate() {
            for l in 0..self.channels {
                let dw = &buf[l * stride..l * stride + self.increments.len];
                out[o * self.channels + l] = col.iter().zip(dw).map(|(p, w)| p * w).sum();
            }
        }
        out
    }

    pub fn sample(&self, index: u64) -> Vec<f64> {
        self.sample_with(index, &mut Vec::new())
    }

    /// Samples `0 … count−1`, in parallel.
    pub fn sample_many(&self, count: usize) -> Vec<Vec<f64>> {
        (0..count as u64)
            .into_par_iter()
            .map_init(Vec::new, |buf, i| self.sample_with(i, buf))
            .collect()
    }
}

/// One draw of the white-noise derivative vector.
pub fn sample_wiener_vector(
    phi: &BumpTestFunction,
    k: usize,
    m: usize,
    grid: &SimGrid,
    seed: u64,
) -> Result<Vec<f64>, SimError> {
    Ok(WienerSampler::new(phi, k, m, grid, seed)?.sample(0))
}

/// Joint sampler of `⟨y, φ⟩` (Kronecker coordinates) and `⟨x, φ⟩ = Q⟨y, φ⟩`.
///
/// The differential part is integrated exactly over each step with
/// `exp(−J·dt)` from `u = 0` at the first grid node of the supports, and the
/// initial condition `⟨u, φ₀⟩ = u0` is imposed afterwards with a
/// homogeneous correction. The algebraic part uses the same increments.
#[derive(Debug, Clone)]
pub struct SolutionSampler {
    n: usize,
    d: usize,
    m: usize,
    q_mat: DMatrix<f64>,
    dt: f64,
    step: DMatrix<f64>,
    s: DMatrix<f64>,
    /// `b(t_i)·dt` on the active range, `d` values per node.
    drift: Vec<f64>,
    phi: Vec<f64>,
    phi0: Vec<f64>,
    /// Offset of `φ`'s nodes inside the active range.
    phi_offset: usize,
    /// `φ^{(o)}` on `φ`'s nodes.
    deriv_table: Vec<Vec<f64>>,
    /// `⟨v, φ⟩` without noise.
    algebraic_mean: DVector<f64>,
    /// `H`, mapping the white-noise derivative vector to `⟨v, φ⟩`.
    hankel: DMatrix<f64>,
    /// `K_φ` and `K₀⁻¹` of the homogeneous correction.
    k_phi: DMatrix<f64>,
    k0_inv: DMatrix<f64>,
    u0: DVector<f64>,
    increments: Increments,
}

impl SolutionSampler {
    pub fn new(
        problem: &SdaeProblem,
        kcf: &KcfDecomposition,
        phi: &BumpTestFunction,
        grid: &SimGrid,
        seed: u64,
    ) -> Result<Self, SimError> {
        let n = problem.n();
        let m = problem.m();
        if kcf.n() != n {
            return Err(SimError::DimensionMismatch(format!(
                "reduction has dimension {}, problem has {n}",
                kcf.n()
            )));
        }
        let d = kcf.d;
        let q = kcf.q_dim();
        let orders = kcf.index;
        let dt = grid.dt();
        let (a1, b1) = phi.support();
        let (a2, b2) = problem.phi0.support();
        let (lo, hi) = grid.covering(a1.min(a2), b1.max(b2))?;
        let (plo, phi_hi) = grid.covering(a1, b1)?;
        let len = hi - lo + 1;

        let noise = &kcf.p * &problem.lambda;
        let s = noise.rows(0, d).into_owned();
        let r = noise.rows(d, q).into_owned();
        let g = crate::forcing::combine(&kcf.p, &problem.forcing_components());

        let phi_vals: Vec<f64> = (lo..=hi).map(|i| phi.eval(grid.time(i))).collect();
        let phi0_vals: Vec<f64> = (lo..=hi)
            .map(|i| problem.phi0.eval(grid.time(i)))
            .collect();
        let deriv_table = tabulate(phi, orders.max(1), grid, plo, phi_hi)?;
        if d > 0 {
            tabulate(&problem.phi0, 1, grid, lo, hi)?;
        }

        // Algebraic part: grid sums of ⟨c_k, φ^{(k−j)}⟩ and the shifted-row map.
        let mut algebraic_mean = DVector::zeros(q);
        let mut hankel = DMatrix::zeros(q, m * orders);
        for (off, &size) in kcf.block_offsets().iter().zip(&kcf.block_sizes) {
            for i in 0..size {
                let mut acc = 0.0;
                for k in i..size {
                    let ck = &g[d + off + k];
                    if ck.is_zero() {
                        continue;
                    }
                    let col = &deriv_table[k - i];
                    acc += (plo..=phi_hi)
                        .zip(col)
                        .map(|(idx, w)| ck.eval(grid.time(idx)) * w)
                        .sum::<f64>()
                        * dt;
                }
                algebraic_mean[off + i] = acc;
                for o in 0..orders {
                    if i + o < size {
                        for l in 0..m {
                            hankel[(off + i, o * m + l)] = r[(off + i + o, l)];
                        }
                    }
                }
            }
        }

        // Differential part.
        let step = linalg::expm(&(&kcf.j * -dt));
        let mut drift = vec![0.0; d * len];
        if d > 0 {
            for (node, idx) in (lo..=hi).enumerate() {
                let t = grid.time(idx);
                for c in 0..d {
                    drift[node * d + c] = g[c].eval(t) * dt;
                }
            }
        }
        let mut k_phi = DMatrix::zeros(d, d);
        let mut k0 = DMatrix::zeros(d, d);
        let mut prop = DMatrix::identity(d, d);
        for node in 0..len {
            k_phi += &prop * (phi_vals[node] * dt);
            k0 += &prop * (phi0_vals[node] * dt);
            prop = &step * prop;
        }
        let k0_inv = linalg::inverse_checked(&k0, 1e12).ok_or(LawError::SingularNormalization)?;
        let u0 = problem.initial_condition(d)?;

        Ok(Self {
            n,
            d,
            m,
            q_mat: kcf.q.clone(),
            dt,
            step,
            s,
            drift,
            phi: phi_vals,
            phi0: phi0_vals,
            phi_offset: plo - lo,
            deriv_table: deriv_table.into_iter().take(orders).collect(),
            algebraic_mean,
            hankel,
            k_phi,
            k0_inv,
            u0,
            increments: grid.increments(seed, m, len),
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn sample_y_with(&self, index: u64, buf: &mut Vec<f64>) -> DVector<f64> {
        let (d, m) = (self.d, self.m);
        let (len, stride) = (self.increments.len, self.increments.stride);
        self.increments.fill(index, buf);
        let mut y = DVector::zeros(self.n);

        if d > 0 {
            let mut u = vec![0.0; d];
            let mut next = vec![0.0; d];
            let mut a_phi = vec![0.0; d];
            let mut a0 = vec![0.0; d];
            for node in 0..len {
                let (wp, w0) = (self.phi[node] * self.dt, self.phi0[node] * self.dt);
                for c in 0..d {
                    a_phi[c] += u[c] * wp;
                    a0[c] += u[c] * w0;
                    let mut forced = u[c] + self.drift[node * d + c];
                    for l in 0..m {
                        forced += self.s[(c, l)] * buf[l * stride + node];
                    }
                    next[c] = forced;
                }
                for r in 0..d {
                    u[r] = (0..d).map(|c| self.step[(r, c)] * next[c]).sum();
                }
            }
            let a_phi = DVector::from_vec(a_phi);
            let a0 = DVector::from_vec(a0);
            let w = &self.k0_inv * (&self.u0 - a0);
            y.rows_mut(0, d).copy_from(&(a_phi + &self.k_phi * w));
        }

        if !self.hankel.is_empty() {
            let mut z = DVector::zeros(self.hankel.ncols());
            let nodes = self.deriv_table.first().map_or(0, Vec::len);
            for (o, col) in self.deriv_table.iter().enumerate() {
                for l in 0..m {
                    let dw = &buf[l * stride + self.phi_offset..l * stride + self.phi_offset + nodes];
                    z[o * m + l] = col.iter().zip(dw).map(|(p, w)| p * w).sum();
                }
            }
            let v = &self.algebraic_mean + &self.hankel * z;
            y.rows_mut(d, self.n - d).copy_from(&v);
        } else if self.n > d {
            y.rows_mut(d, self.n - d).copy_from(&self.algebraic_mean);
        }
        y
    }

    /// `⟨y, φ⟩` for sample `index`.
    pub fn sample_y(&self, index: u64) -> DVector<f64> {
        self.sample_y_with(index, &mut Vec::new())
    }

    /// `⟨x, φ⟩ = Q⟨y, φ⟩` for sample `index`.
    pub fn sample(&self, index: u64) -> DVector<f64> {
        &self.q_mat * self.sample_y(index)
    }

    /// Samples `0 … count−1` of `⟨y, φ⟩`, in parallel.
    pub fn sample_many_y(&self, count: usize) -> Vec<Vec<f64>> {
        (0..count as u64)
            .into_par_iter()
            .map_init(Vec::new, |buf, i| {
                self.sample_y_with(i, buf).iter().copied().collect()
            })
            .collect()
    }

    /// Samples `0 … count−1` of `⟨x, φ⟩`, in parallel.
    pub fn sample_many(&self, count: usize) -> Vec<Vec<f64>> {
        (0..count as u64)
            .into_par_iter()
            .map_init(Vec::new, |buf, i| {
                (&self.q_mat * self.sample_y_with(i, buf)).iter().copied().collect()
            })
            .collect()
    }
}

/// One joint sample of `⟨x, φ⟩`.
pub fn sample_solution(
    problem: &SdaeProblem,
    kcf: &KcfDecomposition,
    phi: &BumpTestFunction,
    grid: &SimGrid,
    seed: u64,
) -> Result<DVector<f64>, SimError> {
    Ok(SolutionSampler::new(problem, kcf, phi, grid, seed)?.sample(0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalLaw {
    pub sample_mean: DVector<f64>,
    pub sample_cov: DMatrix<f64>,
    pub n_samples: usize,
    pub std_err_mean: DVector<f64>,
    pub std_err_cov_diag: DVector<f64>,
}

impl EmpiricalLaw {
    pub fn dim(&self) -> usize {
        self.sample_mean.len()
    }

    /// Asymptotic standard error of the `(a, b)` covariance entry.
    pub fn std_err_cov(&self, a: usize, b: usize) -> f64 {
        let s = &self.sample_cov;
        ((s[(a, a)] * s[(b, b)] + s[(a, b)] * s[(a, b)]) / (self.n_samples - 1) as f64).sqrt()
    }
}

/// Unbiased mean and covariance with a fixed summation order.
pub fn empirical_law(samples: &[Vec<f64>]) -> Result<EmpiricalLaw, SimError> {
    let count = samples.len();
    if count < 2 {
        return Err(SimError::TooFewSamples(count));
    }
    let dim = samples[0].len();
    if let Some(bad) = samples.iter().find(|s| s.len() != dim) {
        return Err(SimError::DimensionMismatch(format!(
            "sample of length {} among samples of length {dim}",
            bad.len()
        )));
    }
    let nf = count as f64;
    let mut column = vec![0.0; count];
    let mean = DVector::from_fn(dim, |i, _| {
        column.iter_mut().zip(samples).for_each(|(c, s)| *c = s[i]);
        linalg::pairwise_sum(&column) / nf
    });
    let mut cov = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in i..dim {
            column
                .iter_mut()
                .zip(samples)
                .for_each(|(c, s)| *c = (s[i] - mean[i]) * (s[j] - mean[j]));
            let v = linalg::pairwise_sum(&column) / (nf - 1.0);
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    let std_err_mean = DVector::from_fn(dim, |i, _| (cov[(i, i)] / nf).sqrt());
    let std_err_cov_diag =
        DVector::from_fn(dim, |i, _| (2.0 * cov[(i, i)] * cov[(i, i)] / (nf - 1.0)).sqrt());
    Ok(EmpiricalLaw {
        sample_mean: mean,
        sample_cov: cov,
        n_samples: count,
        std_err_mean,
        std_err_cov_diag,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistic {
    Mean,
    Cov,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZEntry {
    pub statistic: Statistic,
    pub row: usize,
    pub col: usize,
    pub analytic: f64,
    pub empirical: f64,
    pub std_err: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub max_z: f64,
    pub pass: bool,
    pub z_threshold: f64,
    pub table: Vec<ZEntry>,
}

impl ComparisonReport {
    pub fn worst(&self) -> Option<&ZEntry> {
        self.table
            .iter()
            .max_by(|a, b| a.z.partial_cmp(&b.z).unwrap_or(std::cmp::Ordering::Equal))
    }
}

fn z_score(analytic: f64, empirical: f64, std_err: f64) -> f64 {
    let diff = (empirical - analytic).abs();
    if std_err > 0.0 {
        diff / std_err
    } else if diff <= 1e-12 * (1.0 + analytic.abs()) {
        0.0
    } else {
        f64::INFINITY
    }
}

/// z-scores of every mean entry and every upper-triangular covariance entry.
pub fn compare_laws(
    analytic: &GaussianLaw,
    empirical: &EmpiricalLaw,
    z_threshold: f64,
) -> Result<ComparisonReport, SimError> {
    let n = analytic.dim();
    if empirical.dim() != n {
        return Err(SimError::DimensionMismatch(format!(
            "analytic law has dimension {n}, empirical law {}",
            empirical.dim()
        )));
    }
    let mut table = Vec::with_capacity(n + n * (n + 1) / 2);
    for i in 0..n {
        let (a, e, se) = (
            analytic.mean()[i],
            empirical.sample_mean[i],
            empirical.std_err_mean[i],
        );
        table.push(ZEntry {
            statistic: Statistic::Mean,
            row: i,
            col: 0,
            analytic: a,
            empirical: e,
            std_err: se,
            z: z_score(a, e, se),
        });
    }
    for i in 0..n {
        for j in i..n {
            let (a, e, se) = (
                analytic.cov()[(i, j)],
                empirical.sample_cov[(i, j)],
                empirical.std_err_cov(i, j),
            );
            table.push(ZEntry {
                statistic: Statistic::Cov,
                row: i,
                col: j,
                analytic: a,
                empirical: e,
                std_err: se,
                z: z_score(a, e, se),
            });
        }
    }
    let max_z = table.iter().fold(0.0f64, |acc, e| acc.max(e.z));
    Ok(ComparisonReport {
        max_z,
        pass: max_z <= z_threshold,
        z_threshold,
        table,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn refinement_keeps_the_path() {
        let grid = SimGrid::new(2.0, 40).unwrap();
        let fine = grid.refined().refined();
        let (lo, hi) = grid.covering(0.5, 1.5).unwrap();
        let (flo, fhi) = fine.covering(0.5, 1.5).unwrap();
        assert_eq!((flo, fhi), (4 * lo, 4 * hi));
        let coarse_inc = grid.increments(9, 2, hi - lo + 1);
        let fine_inc = fine.increments(9, 2, fhi - flo + 1);
        let (mut a, mut b) = (Vec::new(), Vec::new());
        coarse_inc.fill(3, &mut a);
        fine_inc.fill(3, &mut b);
        for l in 0..2 {
            for i in 0..hi - lo {
                let parent = a[l * coarse_inc.stride + i];
                let kids: f64 = b[l * fine_inc.stride + 4 * i..l * fine_inc.stride + 4 * i + 4].iter().sum();
                assert!((parent - kids).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn two_point_sample() {
        let e = empirical_law(&[vec![0.0], vec![2.0]]).unwrap();
        assert_eq!(e.sample_mean[0], 1.0);
        assert_eq!(e.sample_cov[(0, 0)], 2.0);
    }

    #[test]
    fn constant_samples_have_zero_covariance() {
        let e = empirical_law(&vec![vec![3.0, -1.0]; 5]).unwrap();
        assert_eq!(e.sample_cov, DMatrix::zeros(2, 2));
    }

    #[test]
    fn too_few_samples() {
        assert_eq!(
            empirical_law(&[vec![1.0]]).unwrap_err(),
            SimError::TooFewSamples(1)
        );
    }

    #[test]
    fn zero_polynomial_gives_zero_vector() {
        let phi = BumpTestFunction::new(1.0, 0.5, vec![0.0]).unwrap();
        let grid = SimGrid::new(3.0, 3000).unwrap();
        let v = sample_wiener_vector(&phi, 2, 2, &grid, 7).unwrap();
        assert_eq!(v, vec![0.0; 4]);
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let phi = BumpTestFunction::default();
        let grid = SimGrid::new(3.0, 12).unwrap();
        assert!(matches!(
            WienerSampler::new(&phi, 1, 1, &grid, 0),
            Err(SimError::GridTooCoarse { .. })
        ));
    }

    #[test]
    fn zero_variance_against_exact_zero() {
        let law = GaussianLaw::point_mass(DVector::from_vec(vec![1.0]));
        let e = empirical_law(&[vec![1.0], vec![1.0]]).unwrap();
        let r = compare_laws(&law, &e, 4.0).unwrap();
        assert_eq!(r.max_z, 0.0);
        assert!(r.pass);
    }

    #[test]
    fn samples_are_reproducible() {
        let phi = BumpTestFunction::default();
        let grid = SimGrid::new(3.0, 3000).unwrap();
        let s = WienerSampler::new(&phi, 2, 2, &grid, 11).unwrap();
        let many = s.sample_many(8);
        assert_eq!(many[5], s.sample(5));
        assert_ne!(many[4], many[5]);
    }
}
