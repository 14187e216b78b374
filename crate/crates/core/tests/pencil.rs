mod common;

use common::{det_degree, random_regular_pencil, rng, well_conditioned};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;
use sdae::pencil::{compute_kcf, is_regular, validate_kcf, MatrixPencil, PencilError};
use sdae::ToleranceConfig;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kcf_recovers_hidden_structure(seed in any::<u64>(), n in 1usize..=8) {
        let tol = ToleranceConfig::default();
        let (pencil, d, blocks) = random_regular_pencil(&mut rng(seed), n);
        let kcf = compute_kcf(&pencil, &tol).unwrap();
        prop_assert_eq!(kcf.d, d);
        prop_assert_eq!(&kcf.block_sizes, &blocks);
        prop_assert_eq!(kcf.index, blocks.first().copied().unwrap_or(0));
        let v = validate_kcf(&pencil, &kcf, &tol).unwrap();
        prop_assert!(v.pass, "residuals {} {}", v.residual_a, v.residual_b);
        prop_assert!(v.residual_a <= 1e-8 && v.residual_b <= 1e-8);
    }

    #[test]
    fn d_is_degree_of_determinant(seed in any::<u64>(), n in 1usize..=6) {
        let (pencil, _, _) = random_regular_pencil(&mut rng(seed), n);
        let kcf = compute_kcf(&pencil, &ToleranceConfig::default()).unwrap();
        prop_assert_eq!(kcf.d, det_degree(&pencil));
    }

    #[test]
    fn structure_survives_left_multiplication(seed in any::<u64>(), n in 1usize..=6) {
        let tol = ToleranceConfig::default();
        let mut r = rng(seed);
        let (pencil, _, _) = random_regular_pencil(&mut r, n);
        let m = well_conditioned(&mut r, n);
        let before = compute_kcf(&pencil, &tol).unwrap();
        let after = compute_kcf(&pencil.left_multiplied(&m).unwrap(), &tol).unwrap();
        prop_assert_eq!(before.index, after.index);
        prop_assert_eq!(before.d, after.d);
        prop_assert_eq!(before.block_sizes, after.block_sizes);
    }

    #[test]
    fn dense_random_pencils_are_odes(seed in any::<u64>(), n in 1usize..=6) {
        let mut r = rng(seed);
        let a = well_conditioned(&mut r, n);
        let b = DMatrix::from_fn(n, n, |_, _| r.random_range(-1.0..1.0));
        let pencil = MatrixPencil::new(a, b).unwrap();
        let kcf = compute_kcf(&pencil, &ToleranceConfig::default()).unwrap();
        prop_assert_eq!(kcf.d, n);
        prop_assert_eq!(kcf.index, 0);
    }

    #[test]
    fn common_kernel_means_singular(seed in any::<u64>(), n in 2usize..=6) {
        let tol = ToleranceConfig::default();
        let mut r = rng(seed);
        let mut proj = DMatrix::<f64>::identity(n, n);
        proj[(n - 1, n - 1)] = 0.0;
        let basis = well_conditioned(&mut r, n);
        let a = well_conditioned(&mut r, n) * &proj * &basis;
        let b = well_conditioned(&mut r, n) * &proj * &basis;
        let pencil = MatrixPencil::new(a, b).unwrap();
        prop_assert!(!is_regular(&pencil, &tol).regular);
        prop_assert!(matches!(compute_kcf(&pencil, &tol), Err(PencilError::NotRegular)));
    }
}

#[test]
fn witness_is_a_regular_point() {
    let tol = ToleranceConfig::default();
    // det(λA + B) = λ(λ − 1): 0 and 1 fail, −1 is the witness.
    let pencil = MatrixPencil::from_rows(2, &[1.0, 0.0, 0.0, 1.0], &[0.0, 0.0, 0.0, -1.0]).unwrap();
    let report = is_regular(&pencil, &tol);
    assert!(report.regular);
    assert_eq!(report.witness_lambda, Some(-1.0));
}

#[test]
fn index_one_chain_is_algebraic() {
    let tol = ToleranceConfig::default();
    let pencil = MatrixPencil::new(DMatrix::zeros(3, 3), DMatrix::identity(3, 3)).unwrap();
    let kcf = compute_kcf(&pencil, &tol).unwrap();
    assert_eq!((kcf.d, kcf.index), (0, 1));
    assert_eq!(kcf.block_sizes, vec![1, 1, 1]);
}

#[test]
fn rejects_non_finite_entries() {
    let err = MatrixPencil::from_rows(1, &[f64::NAN], &[1.0]).unwrap_err();
    assert!(matches!(err, PencilError::NonFinite { .. }));
}
