//! A one-dimensional linear SDE read from `data/ornstein_uhlenbeck.json`:
//! exact law of `⟨x, φ⟩` against a Monte Carlo estimate.
//!
//! ```text
//! cargo run --release --example ornstein_uhlenbeck -- 20000
//! ```

use sdae::law::{horizon, joint_law};
use sdae::pencil::compute_kcf;
use sdae::simulate::{compare_laws, empirical_law, SimGrid, SolutionSampler};
use sdae::testfn::BumpTestFunction;
use sdae::{io, Config};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let samples: usize = std::env::args().nth(1).map_or(Ok(4000), |s| s.parse())?;
    let cfg = Config::default();
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/data/ornstein_uhlenbeck.json"))?;
    let problem = io::parse_problem(&text)?;

    let phi = BumpTestFunction::new(1.5, 1.0, vec![1.0, -0.5])?;
    let kcf = compute_kcf(&problem.pencil, &cfg.tolerance)?;
    let exact = joint_law(&problem, &kcf, &phi, &cfg)?;
    println!(
        "exact: mean {:.6}, variance {:.6e}",
        exact.x.mean()[0],
        exact.x.cov()[(0, 0)]
    );

    let grid = SimGrid::new(horizon(&phi, &problem.phi0), 4000)?;
    let sampler = SolutionSampler::new(&problem, &kcf, &phi, &grid, 7)?;
    let emp = empirical_law(&sampler.sample_many(samples))?;
    println!(
        "monte carlo ({samples}): mean {:.6} ± {:.1e}, variance {:.6e} ± {:.1e}",
        emp.sample_mean[0],
        emp.std_err_mean[0],
        emp.sample_cov[(0, 0)],
        emp.std_err_cov_diag[0]
    );
    let cmp = compare_laws(&exact.x, &emp, 4.0)?;
    println!("max |z| = {:.2} ({})", cmp.max_z, if cmp.pass { "agree" } else { "disagree" });
    Ok(())
}
