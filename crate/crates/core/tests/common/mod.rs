#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sdae::pencil::MatrixPencil;
use sdae::testfn::BumpTestFunction;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Bump with center in [0.5, 3], radius up to the center, polynomial of degree ≤ 3.
pub fn random_bump(rng: &mut impl Rng) -> BumpTestFunction {
    let center: f64 = rng.random_range(0.5..3.0);
    let radius = rng.random_range(0.1..center.min(1.5));
    let degree = rng.random_range(0..=3);
    let mut poly: Vec<f64> = (0..=degree).map(|_| rng.random_range(-1.0..1.0)).collect();
    poly[0] += 2.0f64.copysign(poly[0]);
    BumpTestFunction::new(center, radius, poly).expect("valid bump")
}

/// Random matrix `I + 0.3·G` with Gaussian-like entries, comfortably invertible.
pub fn well_conditioned(rng: &mut impl Rng, n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| {
        let g: f64 = rng.random_range(-1.0..1.0);
        if i == j { 1.0 + 0.3 * g } else { 0.3 * g }
    })
}

/// A regular pencil `M·(diag(I_d, N), diag(J, I))·R` with random block
/// structure, hidden by random `M`, `R`. Returns the pencil, `d` and the
/// nilpotent block sizes in descending order.
pub fn random_regular_pencil(rng: &mut impl Rng, n: usize) -> (MatrixPencil, usize, Vec<usize>) {
    let d = rng.random_range(0..=n);
    let mut blocks = Vec::new();
    let mut left = n - d;
    while left > 0 {
        let s = rng.random_range(1..=left.min(4));
        blocks.push(s);
        left -= s;
    }
    blocks.sort_unstable_by(|a, b| b.cmp(a));

    let mut a = DMatrix::zeros(n, n);
    let mut b = DMatrix::zeros(n, n);
    for i in 0..d {
        a[(i, i)] = 1.0;
        for j in 0..d {
            b[(i, j)] = rng.random_range(-1.0..1.0);
        }
    }
    let mut off = d;
    for &s in &blocks {
        for i in 0..s {
            b[(off + i, off + i)] = 1.0;
            if i + 1 < s {
                a[(off + i, off + i + 1)] = 1.0;
            }
        }
        off += s;
    }
    let m = well_conditioned(rng, n);
    let r = well_conditioned(rng, n);
    let pencil = MatrixPencil::new(&m * a * &r, &m * b * &r).expect("finite");
    (pencil, d, blocks)
}

/// Degree of `det(λA + B)`, read off a Chebyshev-node interpolant.
pub fn det_degree(pencil: &MatrixPencil) -> usize {
    let n = pencil.n();
    let pts: Vec<f64> = (0..=n)
        .map(|k| 2.0 * ((2 * k + 1) as f64 * std::f64::consts::PI / (2 * n + 2) as f64).cos())
        .collect();
    let vander = DMatrix::from_fn(n + 1, n + 1, |i, j| pts[i].powi(j as i32));
    let vals = nalgebra::DVector::from_iterator(n + 1, pts.iter().map(|&l| pencil.at(l).determinant()));
    let coeffs = vander.lu().solve(&vals).expect("distinct nodes");
    let scale = coeffs.amax();
    (0..=n).rev().find(|&k| coeffs[k].abs() > 1e-8 * scale).unwrap_or(0)
}

/// Composite Simpson rule with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// `‖φ^{(k)}‖²` by Simpson on the support.
pub fn simpson_norm_sq(phi: &BumpTestFunction, k: usize, panels: usize) -> f64 {
    let (a, b) = phi.support();
    simpson(|t| phi.eval_deriv(k, t).unwrap().powi(2), a, b, panels)
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Entries of magnitude in [0.25, 1.5] with random sign.
pub fn random_noise_rows(rng: &mut impl Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| {
        let v: f64 = rng.random_range(0.25..1.5);
        if rng.random_bool(0.5) { -v } else { v }
    })
}
