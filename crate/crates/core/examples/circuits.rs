//! Small noisy networks assembled from a netlist, with their index and
//! absolute-continuity classification.

use sdae::circuit::{assemble_sdae, Device, DeviceKind, Netlist};
use sdae::law::abs_continuity;
use sdae::pencil::compute_kcf;
use sdae::testfn::BumpTestFunction;
use sdae::Config;

fn analyze(name: &str, netlist: Netlist) -> Result<(), Box<dyn std::error::Error>> {
    let cfg = Config::default();
    let asm = assemble_sdae(&netlist, &cfg.tolerance)?;
    let kcf = compute_kcf(&asm.problem.pencil, &cfg.tolerance)?;
    let phi = BumpTestFunction::new(1.0, 0.5, vec![1.0])?;
    let report = abs_continuity(&asm.problem, &phi, &cfg)?;
    println!(
        "{name}: unknowns [{}], d = {}, blocks {:?}, index {}, absolutely continuous {} ({})",
        asm.variables.join(", "),
        kcf.d,
        kcf.block_sizes,
        kcf.index,
        report.absolutely_continuous,
        report.provenance.as_str()
    );
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    use DeviceKind::*;
    let net = |nodes, devices| Netlist { nodes, devices, supplies: None };

    analyze(
        "noisy resistor loop",
        net(2, vec![Device::new(Resistor, 0, 1, 1.0, 1.0), Device::new(Resistor, 1, 0, 2.0, 1.0)]),
    )?;
    analyze(
        "RC with thermal noise",
        net(2, vec![Device::new(Resistor, 0, 1, 1.0, 1.0), Device::new(Capacitor, 1, 0, 0.5, 0.0)]),
    )?;
    analyze(
        "RL driven by a voltage source",
        net(
            3,
            vec![
                Device::new(VoltageSource, 0, 1, 1.0, 0.0),
                Device::new(Resistor, 1, 2, 1.0, 1.0),
                Device::new(Inductor, 2, 0, 1.0, 0.0),
            ],
        ),
    )?;
    analyze(
        "two inductors in series with a resistor",
        net(
            3,
            vec![
                Device::new(Inductor, 0, 1, 1.0, 1.0),
                Device::new(Inductor, 2, 1, 1.0, 1.0),
                Device::new(Resistor, 2, 0, 1.0, 1.0),
            ],
        ),
    )?;
    Ok(())
}
