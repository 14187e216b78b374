//! When does `⟨x, φ⟩` have a density? Full-rank noise is enough for a
//! proof; otherwise the answer comes from the numerical rank of the
//! covariance.

use nalgebra::DMatrix;
use sdae::law::{abs_continuity, SdaeProblem};
use sdae::pencil::MatrixPencil;
use sdae::testfn::BumpTestFunction;
use sdae::Config;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = Config::default();
    let phi = BumpTestFunction::new(1.0, 0.5, vec![1.0])?;
    // x₁' + x₁ − x₂ = ·, x₂ = ·: one differential state, one constraint.
    let pencil = MatrixPencil::from_rows(2, &[1.0, 0.0, 0.0, 0.0], &[1.0, -1.0, 0.0, 1.0])?;

    for (name, lambda) in [
        ("identity noise", DMatrix::identity(2, 2)),
        ("noise on the state only", DMatrix::from_column_slice(2, 1, &[1.0, 0.0])),
        ("noise on the constraint only", DMatrix::from_column_slice(2, 1, &[0.0, 1.0])),
        ("one channel feeding both", DMatrix::from_column_slice(2, 1, &[1.0, 1.0])),
    ] {
        let problem = SdaeProblem::new(pencil.clone(), lambda)?;
        let r = abs_continuity(&problem, &phi, &cfg)?;
        println!(
            "{name}: {} ({}), covariance rank {}, degenerate {:?}",
            r.absolutely_continuous,
            r.provenance.as_str(),
            r.covariance_rank,
            r.degenerate_components
        );
        for note in &r.notes {
            println!("    {note}");
        }
    }
    Ok(())
}
