//! A purely algebraic system `N ẏ + y = ρ ξ`: the solution is a finite sum
//! of derivatives of white noise, so its law is Gaussian with a Hankel-type
//! covariance. Where the noise enters a chain decides which components are
//! genuinely random.

use nalgebra::DMatrix;
use sdae::forcing::PiecewisePoly;
use sdae::law::{algebraic_block_law, white_noise_deriv_cov};
use sdae::testfn::BumpTestFunction;
use sdae::{io, Config};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = Config::default();
    let phi = BumpTestFunction::new(1.0, 0.5, vec![1.0])?;

    let noise = white_noise_deriv_cov(&phi, 3, 1, &cfg.quadrature)?;
    println!("Cov(⟨ξ,φ⟩, ⟨ξ,φ'⟩, ⟨ξ,φ''⟩) =\n{}", io::format_matrix(&noise, "  "));

    let zero = vec![PiecewisePoly::zero(); 3];
    for (name, rho) in [
        ("noise at the head", DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0])),
        ("noise at the tail", DMatrix::from_column_slice(3, 1, &[0.0, 0.0, 1.0])),
        ("two channels", DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0])),
    ] {
        let law = algebraic_block_law(&rho, &zero, &phi, &cfg)?;
        println!(
            "{name}: rank {}, degenerate {:?}\n{}",
            law.rank(),
            law.degenerate_indices(),
            io::format_matrix(law.cov(), "  ")
        );
    }

    // Polynomial inputs shift the mean by signed derivatives.
    let c = vec![PiecewisePoly::polynomial(vec![0.0, 1.0]), PiecewisePoly::polynomial(vec![0.0, 0.0, 1.0])];
    let rho = DMatrix::zeros(2, 0);
    let law = algebraic_block_law(&rho, &c, &phi, &cfg)?;
    println!("deterministic chain with c = (t, t²): mean {:?}", law.mean().as_slice());
    Ok(())
}
