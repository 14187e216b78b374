//! Kronecker canonical form of a few regular pencils.
//!
//! Prints the split into a differential part `u̇ + J u` and nilpotent
//! chains, checks `P A Q` and `P B Q` against the canonical blocks, and
//! shows that left multiplication leaves the structure alone.

use nalgebra::DMatrix;
use sdae::pencil::{compute_kcf, is_regular, validate_kcf, MatrixPencil};
use sdae::{io, ToleranceConfig};

fn show(name: &str, pencil: &MatrixPencil, tol: &ToleranceConfig) -> Result<(), Box<dyn std::error::Error>> {
    let reg = is_regular(pencil, tol);
    if !reg.regular {
        println!("{name}: singular pencil, no canonical form");
        return Ok(());
    }
    let kcf = compute_kcf(pencil, tol)?;
    let check = validate_kcf(pencil, &kcf, tol)?;
    println!(
        "{name}: d = {}, blocks {:?}, index {}, residuals {:.1e} / {:.1e}",
        kcf.d, kcf.block_sizes, kcf.index, check.residual_a, check.residual_b
    );
    if kcf.d > 0 {
        println!("  J =\n{}", io::format_matrix(&kcf.j, "    "));
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tol = ToleranceConfig::default();

    // An ODE in disguise: A invertible.
    let ode = MatrixPencil::from_rows(2, &[2.0, 1.0, 0.0, 1.0], &[1.0, 0.0, -1.0, 3.0])?;
    show("ode", &ode, &tol)?;

    // A single nilpotent chain of length 3: x₂' = x₁ − f₁, …
    let chain = MatrixPencil::from_rows(
        3,
        &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0],
        &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
    )?;
    show("chain", &chain, &tol)?;

    // The same chain hidden by a change of basis on both sides.
    let m = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 0.0, 0.0, 1.0, -1.0, 3.0, 0.0, 1.0]);
    let r = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 1.0, 1.0, 0.0, 2.0, 1.0, 1.0, 0.0]);
    let mixed = MatrixPencil::new(&m * chain.a() * &r, &m * chain.b() * &r)?;
    show("mixed chain", &mixed, &tol)?;

    // Two differential states coupled to an index-2 constraint.
    let a = DMatrix::from_row_slice(
        4,
        4,
        &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0],
    );
    let b = DMatrix::from_row_slice(
        4,
        4,
        &[0.3, -1.0, 0.0, 1.0, 1.0, 0.3, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 1.0],
    );
    let coupled = MatrixPencil::new(a, b)?;
    show("coupled", &coupled, &tol)?;
    let scrambled = coupled.left_multiplied(&DMatrix::from_fn(4, 4, |i, j| {
        if i == j { 2.0 } else { 0.25 * (i as f64 - j as f64) }
    }))?;
    show("coupled, rows mixed", &scrambled, &tol)?;

    // det(λA + B) ≡ 0.
    let singular = MatrixPencil::from_rows(2, &[0.0, 0.0, 1.0, 1.0], &[1.0, 1.0, 0.0, 0.0])?;
    show("singular", &singular, &tol)?;
    Ok(())
}
