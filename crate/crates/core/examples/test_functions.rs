//! Bump test functions `p(t)·exp(−1/(1 − ((t−c)/r)²))` and the quantities
//! the rest of the crate builds on: derivatives, Sobolev seminorms and the
//! split `φ = λ φ₀ + ψ'`.

use sdae::testfn::{decompose, l2_inner, BumpTestFunction};
use sdae::QuadratureConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = QuadratureConfig::default();
    let phi = BumpTestFunction::new(1.0, 0.5, vec![1.0])?;
    let (a, b) = phi.support();
    println!("support [{a}, {b}], integral {:.12}", phi.integral(&cfg)?);

    for t in [0.6, 0.8, 1.0, 1.3] {
        let d = phi.derivatives(3, t)?;
        println!("t = {t:.1}: φ … φ''' = {:+.6e} {:+.6e} {:+.6e} {:+.6e}", d[0], d[1], d[2], d[3]);
    }

    // ‖φ^{(k)}‖² grows quickly with k; log-convexity holds along the chain.
    let norms: Vec<f64> = (0..=4).map(|k| phi.norm_sq(k, &cfg)).collect::<Result<_, _>>()?;
    for (k, n) in norms.iter().enumerate() {
        println!("‖φ^({k})‖² = {n:.6e}");
    }
    for k in 1..4 {
        println!(
            "  ‖φ^({k})‖⁴ ≤ ‖φ^({})‖²·‖φ^({})‖²: {}",
            k - 1,
            k + 1,
            norms[k] * norms[k] <= norms[k - 1] * norms[k + 1]
        );
    }
    // Integration by parts: ⟨φ', φ'⟩ = −⟨φ, φ''⟩.
    let lhs = l2_inner((&phi, 1), (&phi, 1), &cfg)?;
    let rhs = -l2_inner((&phi, 0), (&phi, 2), &cfg)?;
    println!("⟨φ', φ'⟩ = {lhs:.10}, −⟨φ, φ''⟩ = {rhs:.10}");

    let phi0 = BumpTestFunction::new(0.75, 0.5, vec![1.0])?.normalized(&cfg)?;
    let split = decompose(&phi, &phi0, &cfg)?;
    println!("φ = {:.6} φ₀ + ψ'", split.lambda);
    for t in [0.3, 0.75, 1.0, 1.25, 1.6] {
        println!("  ψ({t}) = {:+.6e}", split.psi.eval(t)?);
    }
    Ok(())
}
