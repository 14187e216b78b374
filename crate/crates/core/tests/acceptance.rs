//! Acceptance run: one line per criterion, nonzero exit on any failure.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use common::{det_degree, random_bump, random_noise_rows, random_regular_pencil, rel_err, rng, simpson, well_conditioned};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use sdae::circuit::LlCutset;
use sdae::forcing::PiecewisePoly;
use sdae::law::{
    abs_continuity, algebraic_block_law, differential_law, full_law, horizon, joint_law,
    schur_complement, white_noise_deriv_cov, SdaeProblem,
};
use sdae::pencil::{compute_kcf, validate_kcf, KcfDecomposition, MatrixPencil};
use sdae::simulate::{compare_laws, empirical_law, EmpiricalLaw, SimGrid, SolutionSampler, WienerSampler};
use sdae::testfn::BumpTestFunction;
use sdae::Config;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn default_phi() -> BumpTestFunction {
    BumpTestFunction::new(1.0, 0.5, vec![1.0]).unwrap()
}

fn columns(samples: &[Vec<f64>], idx: &[usize]) -> Vec<Vec<f64>> {
    samples.iter().map(|s| idx.iter().map(|&i| s[i]).collect()).collect()
}

fn kcf_invariants() -> Outcome {
    let cfg = Config::default();
    let problem = LlCutset::default().reduced_problem().unwrap();
    let kcf = compute_kcf(&problem.pencil, &cfg.tolerance).map_err(|e| e.to_string())?;
    let v = validate_kcf(&problem.pencil, &kcf, &cfg.tolerance).map_err(|e| e.to_string())?;
    ensure!(kcf.d == 1 && kcf.q_dim() == 3, "d = {}, q = {}", kcf.d, kcf.q_dim());
    ensure!(kcf.block_sizes == [2, 1] && kcf.index == 2, "blocks {:?}, index {}", kcf.block_sizes, kcf.index);
    ensure!(v.residual_a <= 1e-8 && v.residual_b <= 1e-8, "residuals {:e}, {:e}", v.residual_a, v.residual_b);
    Ok(format!("d=1 q=3 blocks=[2,1] index=2, residuals {:.1e}/{:.1e}", v.residual_a, v.residual_b))
}

fn ll_classification() -> Outcome {
    let cfg = Config::default();
    let problem = LlCutset::default().reduced_problem().unwrap();
    let phi = default_phi();
    let report = abs_continuity(&problem, &phi, &cfg).map_err(|e| e.to_string())?;
    ensure!(report.degenerate_components == [2], "degenerate {:?}", report.degenerate_components);
    ensure!(report.nondegenerate_rank == 3, "rank {}", report.nondegenerate_rank);
    let kcf = compute_kcf(&problem.pencil, &cfg.tolerance).unwrap();
    let y = joint_law(&problem, &kcf, &phi, &cfg).unwrap().y;
    let var = y.cov()[(2, 2)];
    ensure!(var.abs() <= 1e-10, "Var y3 = {var:e}");
    let rest = y.marginal(&[0, 1, 3], cfg.tolerance.rank_tol).unwrap();
    ensure!(rest.rank() == 3, "rank of (y1,y2,y4) = {}", rest.rank());
    Ok(format!("y3 variance {var:.1e}, (y1,y2,y4) rank 3"))
}

fn ll_monte_carlo() -> Outcome {
    let cfg = Config::default();
    let problem = LlCutset::default().reduced_problem().unwrap();
    let phi = default_phi();
    let norm = phi.norm_sq(0, &cfg.quadrature).unwrap();
    let hand = LlCutset::unit_reduction();
    let analytic = joint_law(&problem, &hand, &phi, &cfg).map_err(|e| e.to_string())?;
    let x_law = full_law(&problem, &phi, &cfg).map_err(|e| e.to_string())?;
    ensure!(rel_err(analytic.y.cov()[(3, 3)], norm) < 1e-10, "Var y4 analytic");
    ensure!(rel_err(analytic.y.cov()[(1, 1)], 3.0 * norm) < 1e-10, "Var y2 analytic");

    let grid = SimGrid::new(horizon(&phi, &problem.phi0), 20_000).unwrap();
    let sampler = SolutionSampler::new(&problem, &hand, &phi, &grid, 2025).map_err(|e| e.to_string())?;
    let ys = sampler.sample_many_y(100_000);
    let xs: Vec<Vec<f64>> = ys
        .iter()
        .map(|y| (&hand.q * DVector::from_column_slice(y)).as_slice().to_vec())
        .collect();
    let cy = compare_laws(&analytic.y, &empirical_law(&ys).unwrap(), 4.0).unwrap();
    let cx = compare_laws(&x_law, &empirical_law(&xs).unwrap(), 4.0).unwrap();
    ensure!(cy.pass, "y: max |z| = {:.2} at {:?}", cy.max_z, cy.worst());
    ensure!(cx.pass, "x: max |z| = {:.2} at {:?}", cx.max_z, cx.worst());
    Ok(format!("max |z| {:.2} (y), {:.2} (x)", cy.max_z, cx.max_z))
}

fn wiener_covariance() -> Outcome {
    let cfg = Config::default();
    let phi = default_phi();
    let (k, m) = (4, 3);
    let grid = SimGrid::new(2.0, 4000).unwrap();
    let samples = WienerSampler::new(&phi, k, m, &grid, 77).map_err(|e| e.to_string())?.sample_many(100_000);
    let mut worst = 0.0f64;
    for kk in 1..=k {
        for mm in 1..=m {
            let w = white_noise_deriv_cov(&phi, kk, mm, &cfg.quadrature).unwrap();
            for i in 0..kk * mm {
                for j in 0..kk * mm {
                    let odd = ((i / mm) + (j / mm)) % 2 == 1;
                    ensure!(!odd || w[(i, j)] == 0.0, "k={kk} m={mm}: odd entry ({i},{j}) = {:e}", w[(i, j)]);
                }
            }
            let idx: Vec<usize> = (0..kk).flat_map(|o| (0..mm).map(move |c| o * m + c)).collect();
            let emp: EmpiricalLaw = empirical_law(&columns(&samples, &idx)).unwrap();
            let law = sdae::law::GaussianLaw::new(DVector::zeros(kk * mm), w, cfg.tolerance.rank_tol).unwrap();
            let c = compare_laws(&law, &emp, 4.0).unwrap();
            ensure!(c.pass, "k={kk} m={mm}: max |z| = {:.2} at {:?}", c.max_z, c.worst());
            worst = worst.max(c.max_z);
        }
    }
    Ok(format!("all k<=4, m<=3 marginals, max |z| {worst:.2}"))
}

fn positivity() -> Outcome {
    let cfg = Config::default();
    let tol = 10.0 * cfg.quadrature.rel_tol;
    let mut r = rng(404);
    let mut margin = f64::INFINITY;
    for trial in 0..100 {
        let phi = random_bump(&mut r);
        let n: Vec<f64> = (0..4).map(|k| phi.norm_sq(k, &cfg.quadrature).unwrap()).collect();
        let even = (n[0] * n[2] - n[1] * n[1]) / (n[0] * n[2]);
        let odd = (n[1] * n[3] - n[2] * n[2]) / (n[1] * n[3]);
        ensure!(even > tol && odd > tol, "bump {trial}: factors {even:e}, {odd:e}");
        let ratio: Vec<f64> = (0..3).map(|k| (n[k] / n[k + 1]).sqrt()).collect();
        ensure!(ratio[0] > ratio[1] && ratio[1] > ratio[2], "bump {trial}: ratios {ratio:?}");
        margin = margin.min(even).min(odd);
    }
    Ok(format!("smallest relative factor {margin:.3e}"))
}

fn two_block_determinant() -> Outcome {
    let cfg = Config::default();
    let mut r = rng(606);
    let mut worst = 0.0f64;
    for trial in 0..50 {
        let phi = random_bump(&mut r);
        let m = r.random_range(1..=4);
        let rho = random_noise_rows(&mut r, 2, m);
        let law = algebraic_block_law(&rho, &[PiecewisePoly::zero(), PiecewisePoly::zero()], &phi, &cfg)
            .map_err(|e| e.to_string())?;
        let (p0, p1) = (phi.norm_sq(0, &cfg.quadrature).unwrap(), phi.norm_sq(1, &cfg.quadrature).unwrap());
        let (r1, r2) = (rho.row(0), rho.row(1));
        let expected = p0 * p0 * (r1.norm_squared() * r2.norm_squared() - r1.dot(&r2).powi(2))
            + p0 * p1 * r2.norm_squared().powi(2);
        let c = law.cov();
        let err = rel_err(c[(0, 0)] * c[(1, 1)] - c[(0, 1)] * c[(1, 0)], expected);
        ensure!(err <= 1e-10, "draw {trial}: relative error {err:e}");
        worst = worst.max(err);
    }
    Ok(format!("max relative error {worst:.1e}"))
}

fn kcf_suite() -> Outcome {
    let cfg = Config::default();
    let mut r = rng(707);
    let mut worst = 0.0f64;
    for trial in 0..50 {
        let n = r.random_range(1..=6);
        let (pencil, d, blocks) = random_regular_pencil(&mut r, n);
        let kcf = compute_kcf(&pencil, &cfg.tolerance).map_err(|e| format!("pencil {trial}: {e}"))?;
        let v = validate_kcf(&pencil, &kcf, &cfg.tolerance).unwrap();
        ensure!(v.residual_a <= 1e-8 && v.residual_b <= 1e-8, "pencil {trial}: residuals {:e}, {:e}", v.residual_a, v.residual_b);
        ensure!(kcf.d == d && kcf.d == det_degree(&pencil), "pencil {trial}: d = {}, expected {d}", kcf.d);
        ensure!(kcf.block_sizes == blocks, "pencil {trial}: blocks {:?}, expected {blocks:?}", kcf.block_sizes);
        let m = well_conditioned(&mut r, n);
        let moved = MatrixPencil::new(&m * pencil.a(), &m * pencil.b()).unwrap();
        let other = compute_kcf(&moved, &cfg.tolerance).map_err(|e| format!("pencil {trial} after M: {e}"))?;
        ensure!(other.index == kcf.index, "pencil {trial}: index {} vs {}", other.index, kcf.index);
        worst = worst.max(v.residual_a).max(v.residual_b);
    }
    Ok(format!("50 pencils, max residual {worst:.1e}"))
}

fn schur_identity() -> Outcome {
    let cfg = Config::default();
    let mut r = rng(808);
    let mut worst = 0.0f64;
    for trial in 0..100 {
        let n = r.random_range(2..=6);
        let d = r.random_range(1..n);
        let m = DMatrix::from_fn(n, n, |_, _| r.random_range(-1.0..1.0)) + DMatrix::identity(n, n) * 3.0;
        let (schur, _) = schur_complement(&m, d, &cfg.tolerance).map_err(|e| e.to_string())?;
        let lower = m.view((d, d), (n - d, n - d)).into_owned();
        let err = rel_err(m.determinant(), lower.determinant() * schur.determinant());
        ensure!(err <= 1e-10, "matrix {trial}: relative error {err:e}");
        worst = worst.max(err);
    }
    Ok(format!("max relative error {worst:.1e}"))
}

fn ode_limits() -> Outcome {
    let cfg = Config::default();
    let phi = default_phi();
    let mut r = rng(909);

    // A = I: a classical linear SDE.
    let b = DMatrix::from_fn(2, 2, |_, _| r.random_range(-1.0..1.0));
    let lambda = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, -0.4, 0.8]);
    let u0 = vec![0.5, -0.2];
    let sde = SdaeProblem::new(MatrixPencil::new(DMatrix::identity(2, 2), b.clone()).unwrap(), lambda.clone())
        .unwrap()
        .with_u0(u0.clone());
    let law = differential_law(&b, &lambda, &[], &u0, &phi, &sde.phi0, &cfg).map_err(|e| e.to_string())?;
    let trivial = KcfDecomposition::from_parts(DMatrix::identity(2, 2), DMatrix::identity(2, 2), b, vec![]).unwrap();
    let grid = SimGrid::new(horizon(&phi, &sde.phi0), 4000).unwrap();
    let sampler = SolutionSampler::new(&sde, &trivial, &phi, &grid, 31).map_err(|e| e.to_string())?;
    let c = compare_laws(&law, &empirical_law(&sampler.sample_many(50_000)).unwrap(), 4.0).unwrap();
    ensure!(c.pass, "SDE: max |z| = {:.2} at {:?}", c.max_z, c.worst());

    // A = 0, B = I: x is forcing plus filtered noise.
    let forcing = vec![PiecewisePoly::polynomial(vec![1.0, -2.0]), PiecewisePoly::polynomial(vec![0.0, 0.0, 3.0])];
    let lambda = DMatrix::from_row_slice(2, 3, &[1.0, 0.5, 0.0, -0.3, 0.2, 1.2]);
    let alg = SdaeProblem::new(MatrixPencil::new(DMatrix::zeros(2, 2), DMatrix::identity(2, 2)).unwrap(), lambda.clone())
        .unwrap()
        .with_forcing(forcing)
        .unwrap();
    let law = full_law(&alg, &phi, &cfg).map_err(|e| e.to_string())?;
    let (lo, hi) = phi.support();
    let pair = |f: fn(f64) -> f64| simpson(|t| f(t) * phi.eval(t), lo, hi, 200_000);
    let mean = DVector::from_vec(vec![pair(|t| 1.0 - 2.0 * t), pair(|t| 3.0 * t * t)]);
    let cov = &lambda * lambda.transpose() * phi.norm_sq(0, &cfg.quadrature).unwrap();
    let (em, ec) = ((law.mean() - &mean).amax(), (law.cov() - &cov).amax() / cov.amax());
    ensure!(em <= 1e-10 && ec <= 1e-10, "algebraic limit: mean error {em:e}, covariance error {ec:e}");
    Ok(format!("SDE max |z| {:.2}; algebraic mean error {em:.1e}, covariance {ec:.1e}", c.max_z))
}

fn main() {
    let criteria: [(&str, Duration, fn() -> Outcome); 9] = [
        ("cutset network Kronecker invariants", Duration::from_secs(1), kcf_invariants),
        ("cutset network degenerate component", Duration::from_secs(1), ll_classification),
        ("cutset network Monte Carlo agreement", Duration::from_secs(120), ll_monte_carlo),
        ("white-noise derivative covariance", Duration::from_secs(60), wiener_covariance),
        ("derivative Gram determinant positivity", Duration::from_secs(60), positivity),
        ("two-row algebraic block determinant", Duration::from_secs(30), two_block_determinant),
        ("Kronecker form on random pencils", Duration::from_secs(30), kcf_suite),
        ("Schur complement identity", Duration::from_secs(5), schur_identity),
        ("ODE and purely algebraic limits", Duration::from_secs(60), ode_limits),
    ];
    let mut failed = 0;
    for (i, (name, budget, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|_| Err("panicked".to_string()));
        let took = start.elapsed();
        let outcome = match outcome {
            Ok(_) if took > *budget => Err(format!("took {took:.2?}, budget {budget:?}")),
            other => other,
        };
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        if outcome.is_err() {
            failed += 1;
        }
        println!("{tag} [{}] {name}: {detail} ({took:.2?})", i + 1);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
