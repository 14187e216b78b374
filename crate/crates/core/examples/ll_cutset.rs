//! End to end on the LL-cutset circuit: two inductors sharing a node,
//! closed through a resistor, every device carrying thermal noise.
//!
//! ```text
//! cargo run --example ll_cutset
//! ```

use sdae::circuit::{assemble_sdae, LlCutset};
use sdae::law::{abs_continuity_with, joint_law};
use sdae::pencil::{compute_kcf, validate_kcf};
use sdae::testfn::BumpTestFunction;
use sdae::{io, Config};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = Config::default();
    let circuit = LlCutset::default();

    let netlist = circuit.netlist();
    let asm = assemble_sdae(&netlist, &cfg.tolerance)?;
    println!("assembled unknowns: {}", asm.variables.join(", "));
    println!("A =\n{}", io::format_matrix(asm.problem.pencil.a(), "  "));
    println!("B =\n{}", io::format_matrix(asm.problem.pencil.b(), "  "));
    println!("Lambda =\n{}", io::format_matrix(&asm.problem.lambda, "  "));

    // The hand-reduced form: same solution set, different row combination.
    let problem = circuit.reduced_problem()?;
    let kcf = compute_kcf(&problem.pencil, &cfg.tolerance)?;
    let check = validate_kcf(&problem.pencil, &kcf, &cfg.tolerance)?;
    println!(
        "d = {}, nilpotent blocks {:?}, index {}, J = {:.4}, residual {:.1e}",
        kcf.d,
        kcf.block_sizes,
        kcf.index,
        kcf.j[(0, 0)],
        check.residual_a.max(check.residual_b)
    );

    let phi = BumpTestFunction::new(1.0, 0.5, vec![1.0])?;
    let law = joint_law(&problem, &kcf, &phi, &cfg)?;
    println!("Cov <x, phi> =\n{}", io::format_matrix(law.x.cov(), "  "));

    let report = abs_continuity_with(&problem, &kcf, &phi, &cfg)?;
    println!(
        "absolutely continuous: {} ({}), degenerate components {:?}",
        report.absolutely_continuous,
        report.provenance.as_str(),
        report.degenerate_components
    );
    for note in &report.notes {
        println!("  {note}");
    }

    if std::env::args().any(|a| a == "--dump") {
        println!("{}", serde_json::to_string_pretty(&io::problem_to_json(&problem))?);
        let nl = serde_json::json!({
            "nodes": netlist.nodes,
            "devices": netlist.devices,
        });
        println!("{}", serde_json::to_string_pretty(&nl)?);
    }
    Ok(())
}
