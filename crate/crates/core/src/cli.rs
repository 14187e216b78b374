//! The `sdae` command line.
//!
//! Exit status: 0 on success, 1 on domain errors (singular pencil,
//! ill-conditioning, invalid network, …), 2 on I/O and parse errors.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::circuit::{self, CircuitError};
use crate::io::{self, FormatError, Report};
use crate::law::{self, LawError, SdaeProblem};
use crate::pencil::{self, PencilError};
use crate::simulate::{self, SimError, SimGrid};
use crate::testfn::{BumpTestFunction, TestFnError};
use crate::Config;

const SCHEMA_HELP: &str = "\
Problem files (regularity, kcf, law, abscont, simulate) are JSON objects:
  {\"n\": 2, \"A\": [[1,0],[0,0]], \"B\": [[0.5,0],[0,1]],
   \"Lambda\": [[1],[0.5]],                       (optional, n x m)
   \"f\": \"zero\" | [component, ...],               (optional)
   \"u0\": [0],                                     (optional, length d)
   \"phi0\": {\"center\": 0.75, \"radius\": 0.5, \"poly\": [1]}}  (optional)
A forcing component is \"zero\" or a list of pieces
  {\"start\": t0, \"end\": t1 (optional), \"coeffs\": [c0, c1, ...]}.

Netlist files (circuit) are JSON objects:
  {\"nodes\": 3,
   \"devices\": [{\"kind\": \"inductor\", \"from\": 0, \"to\": 1, \"param\": 1, \"tau\": 1}, ...],
   \"supplies\": {\"flows\": [...per node], \"tensions\": [...per cycle]}}  (optional)
Kinds: resistor, inductor, capacitor, currentSource, voltageSource.

Exit status: 0 success, 1 domain error, 2 I/O or parse error.";

#[derive(Debug, Parser)]
#[command(name = "sdae", version, about = "Linear stochastic differential-algebraic equations", after_help = SCHEMA_HELP)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decide regularity of the pencil.
    Regularity(Common),
    /// Kronecker canonical form of the pencil.
    Kcf(Common),
    /// Exact Gaussian law of the solution at a test function.
    Law(Analysis),
    /// Absolute-continuity classification of that law.
    Abscont(Analysis),
    /// Monte Carlo check of the law.
    Simulate(Simulate),
    /// Assemble and analyze a netlist.
    Circuit(CircuitArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Input file.
    pub input: PathBuf,
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args, Clone)]
pub struct TestFnArgs {
    /// Center of the bump test function.
    #[arg(long, default_value_t = 1.0)]
    pub center: f64,
    /// Radius of the bump test function.
    #[arg(long, default_value_t = 0.5)]
    pub radius: f64,
    /// Polynomial factor, lowest degree first, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1", allow_negative_numbers = true)]
    pub poly: Vec<f64>,
    /// Initial condition on the differential coordinates, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub u0: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct Analysis {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub test_fn: TestFnArgs,
}

#[derive(Debug, Args)]
pub struct Simulate {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub test_fn: TestFnArgs,
    /// Number of Monte Carlo samples.
    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(2..))]
    pub samples: u64,
    /// Grid steps over the horizon.
    #[arg(long, default_value_t = SimGrid::DEFAULT_STEPS as u64, value_parser = clap::value_parser!(u64).range(1..))]
    pub steps: u64,
    /// Grid horizon; defaults to the end of the supports plus one support width.
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Largest admissible |z| over mean and covariance entries.
    #[arg(long, default_value_t = 4.0)]
    pub z_threshold: f64,
}

#[derive(Debug, Args)]
pub struct CircuitArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub test_fn: TestFnArgs,
    /// Also write the assembled problem file here.
    #[arg(long)]
    pub write_problem: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    Io { path: PathBuf, message: String },
    Format { path: PathBuf, error: FormatError },
    Domain { module: &'static str, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Domain { .. } => 1,
            CliError::Io { .. } | CliError::Format { .. } => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Io { path, message } => write!(f, "I/O error on {}: {message}", path.display()),
            CliError::Format { path, error } => write!(f, "{}: {error}", path.display()),
            CliError::Domain { module, message } => write!(f, "{module}: {message}"),
        }
    }
}

fn domain(module: &'static str, e: impl ToString) -> CliError {
    CliError::Domain {
        module,
        message: e.to_string(),
    }
}

impl From<PencilError> for CliError {
    fn from(e: PencilError) -> Self {
        match e {
            PencilError::TestFunction(t) => t.into(),
            e => domain("pencil", e),
        }
    }
}

impl From<TestFnError> for CliError {
    fn from(e: TestFnError) -> Self {
        domain("testfn", e)
    }
}

impl From<LawError> for CliError {
    fn from(e: LawError) -> Self {
        match e {
            LawError::Pencil(p) => p.into(),
            LawError::TestFunction(t) => t.into(),
            e => domain("law", e),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Law(l) => l.into(),
            SimError::TestFunction(t) => t.into(),
            e => domain("simulate", e),
        }
    }
}

impl From<CircuitError> for CliError {
    fn from(e: CircuitError) -> Self {
        match e {
            CircuitError::Pencil(p) => p.into(),
            CircuitError::Law(l) => l.into(),
            e => domain("circuit", e),
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn load_problem(common: &Common, u0: Option<&Vec<f64>>) -> Result<SdaeProblem, CliError> {
    let text = read(&common.input)?;
    let problem = io::parse_problem(&text).map_err(|error| CliError::Format {
        path: common.input.clone(),
        error,
    })?;
    Ok(match u0 {
        Some(u0) => problem.with_u0(u0.clone()),
        None => problem,
    })
}

fn test_function(args: &TestFnArgs) -> Result<BumpTestFunction, CliError> {
    Ok(BumpTestFunction::new(args.center, args.radius, args.poly.clone())?)
}

fn law_json(law: &law::GaussianLaw) -> serde_json::Value {
    json!({
        "mean": law.mean().iter().collect::<Vec<_>>(),
        "cov": io::matrix_rows(law.cov()),
        "rank": law.rank(),
        "degenerate": law.degenerate_indices(),
    })
}

fn describe_law(report: &mut Report, name: &str, law: &law::GaussianLaw) {
    report.line(format!("{name}: rank {} of {}", law.rank(), law.dim()));
    report.line(format!(
        "  mean {:?}",
        law.mean().iter().map(|v| format!("{v:.6}")).collect::<Vec<_>>()
    ));
    report.line("  covariance");
    report.line(io::format_matrix(law.cov(), "    "));
    if !law.degenerate_indices().is_empty() {
        report.line(format!(
            "  degenerate components {:?}",
            law.degenerate_indices().iter().map(|i| i + 1).collect::<Vec<_>>()
        ));
    }
}

fn kcf_report(report: &mut Report, kcf: &pencil::KcfDecomposition, v: &pencil::ValidationReport) {
    report.line(format!(
        "d = {}, q = {}, blocks = {:?}, index = {}",
        kcf.d,
        kcf.q_dim(),
        kcf.block_sizes,
        kcf.index
    ));
    report.line(format!(
        "residuals: A {:.3e}, B {:.3e} ({})",
        v.residual_a,
        v.residual_b,
        if v.pass { "pass" } else { "fail" }
    ));
    report.set("d", kcf.d);
    report.set("q", kcf.q_dim());
    report.set("block_sizes", &kcf.block_sizes);
    report.set("index", kcf.index);
    report.set("J", io::matrix_rows(&kcf.j));
    report.set("P", io::matrix_rows(&kcf.p));
    report.set("Q", io::matrix_rows(&kcf.q));
    report.set("residual_a", v.residual_a);
    report.set("residual_b", v.residual_b);
    report.set("pass", v.pass);
}

fn abscont_report(report: &mut Report, r: &law::AbsContReport) {
    report.line(format!(
        "absolutely continuous: {} ({})",
        r.absolutely_continuous,
        r.provenance.as_str()
    ));
    report.line(format!("test function in E(index): {}", r.test_function_in_e));
    report.line(format!("last nonzero noise row per block: {:?}", r.algebraic_ranks));
    report.line(format!(
        "degenerate Kronecker coordinates y: {:?}",
        r.degenerate_components.iter().map(|i| i + 1).collect::<Vec<_>>()
    ));
    report.line(format!(
        "covariance rank {}, rank without degenerate components {}",
        r.covariance_rank, r.nondegenerate_rank
    ));
    for note in &r.notes {
        report.line(format!("note: {note}"));
    }
    report.set("absolutely_continuous", r.absolutely_continuous);
    report.set("provenance", r.provenance.as_str());
    report.set("test_function_in_e", r.test_function_in_e);
    report.set("algebraic_ranks", &r.algebraic_ranks);
    report.set("degenerate_components", &r.degenerate_components);
    report.set("covariance_rank", r.covariance_rank);
    report.set("nondegenerate_rank", r.nondegenerate_rank);
    report.set("notes", &r.notes);
}

/// Runs a parsed command and returns the rendered report. `Err` carries
/// the report produced so far, if any, with the error.
pub fn execute(cli: &Cli) -> Result<(String, Option<PathBuf>), (Option<String>, CliError)> {
    let cfg = Config::default();
    match &cli.command {
        Command::Regularity(common) => {
            let problem = load_problem(common, None).map_err(|e| (None, e))?;
            let r = pencil::is_regular(&problem.pencil, &cfg.tolerance);
            let mut report = Report::new("regularity");
            report.line(format!("regular: {}", r.regular));
            if let Some(l) = r.witness_lambda {
                report.line(format!("witness lambda: {l}"));
            }
            report.set("regular", r.regular);
            report.set("witness_lambda", r.witness_lambda);
            let text = report.render();
            if r.regular {
                Ok((text, common.output.clone()))
            } else {
                Err((Some(text), PencilError::NotRegular.into()))
            }
        }
        Command::Kcf(common) => {
            let problem = load_problem(common, None).map_err(|e| (None, e))?;
            let kcf = pencil::compute_kcf(&problem.pencil, &cfg.tolerance)
                .map_err(|e| (None, e.into()))?;
            let v = pencil::validate_kcf(&problem.pencil, &kcf, &cfg.tolerance)
                .map_err(|e| (None, e.into()))?;
            let mut report = Report::new("kcf");
            kcf_report(&mut report, &kcf, &v);
            Ok((report.render(), common.output.clone()))
        }
        Command::Law(a) => run_law(a, &cfg).map_err(|e| (None, e)),
        Command::Abscont(a) => run_abscont(a, &cfg).map_err(|e| (None, e)),
        Command::Simulate(s) => run_simulate(s, &cfg).map_err(|e| (None, e)),
        Command::Circuit(c) => run_circuit(c, &cfg).map_err(|e| (None, e)),
    }
}

fn run_law(a: &Analysis, cfg: &Config) -> Result<(String, Option<PathBuf>), CliError> {
    let problem = load_problem(&a.common, a.test_fn.u0.as_ref())?;
    let phi = test_function(&a.test_fn)?;
    let kcf = pencil::compute_kcf(&problem.pencil, &cfg.tolerance)?;
    let joint = law::joint_law(&problem, &kcf, &phi, cfg)?;
    let mut report = Report::new("law");
    report.line(format!("d = {}, blocks = {:?}", kcf.d, kcf.block_sizes));
    describe_law(&mut report, "<y, phi> (Kronecker coordinates)", &joint.y);
    describe_law(&mut report, "<x, phi>", &joint.x);
    report.set("d", kcf.d);
    report.set("block_sizes", &kcf.block_sizes);
    report.set("y", law_json(&joint.y));
    report.set("x", law_json(&joint.x));
    Ok((report.render(), a.common.output.clone()))
}

fn run_abscont(a: &Analysis, cfg: &Config) -> Result<(String, Option<PathBuf>), CliError> {
    let problem = load_problem(&a.common, a.test_fn.u0.as_ref())?;
    let phi = test_function(&a.test_fn)?;
    let r = law::abs_continuity(&problem, &phi, cfg)?;
    let mut report = Report::new("abscont");
    abscont_report(&mut report, &r);
    Ok((report.render(), a.common.output.clone()))
}

fn run_simulate(s: &Simulate, cfg: &Config) -> Result<(String, Option<PathBuf>), CliError> {
    let problem = load_problem(&s.common, s.test_fn.u0.as_ref())?;
    let phi = test_function(&s.test_fn)?;
    let kcf = pencil::compute_kcf(&problem.pencil, &cfg.tolerance)?;
    let analytic = law::joint_law(&problem, &kcf, &phi, cfg)?;
    let horizon = s.horizon.unwrap_or_else(|| law::horizon(&phi, &problem.phi0));
    let grid = SimGrid::new(horizon, s.steps as usize)?;
    let sampler = simulate::SolutionSampler::new(&problem, &kcf, &phi, &grid, s.seed)?;
    let samples = sampler.sample_many(s.samples as usize);
    let empirical = simulate::empirical_law(&samples)?;
    let cmp = simulate::compare_laws(&analytic.x, &empirical, s.z_threshold)?;

    let mut report = Report::new("simulate");
    report.line(format!(
        "{} samples, {} steps over [0, {horizon}], seed {}",
        s.samples, s.steps, s.seed
    ));
    report.line(format!(
        "max |z| = {:.3} against threshold {} -> {}",
        cmp.max_z,
        s.z_threshold,
        if cmp.pass { "PASS" } else { "FAIL" }
    ));
    if let Some(w) = cmp.worst() {
        report.line(format!(
            "worst entry: {:?} ({}, {}) analytic {:.6e}, empirical {:.6e}, std err {:.3e}",
            w.statistic,
            w.row + 1,
            w.col + 1,
            w.analytic,
            w.empirical,
            w.std_err
        ));
    }
    report.set("samples", s.samples);
    report.set("steps", s.steps);
    report.set("horizon", horizon);
    report.set("seed", s.seed);
    report.set("analytic", law_json(&analytic.x));
    report.set(
        "empirical",
        json!({
            "mean": empirical.sample_mean.iter().collect::<Vec<_>>(),
            "cov": io::matrix_rows(&empirical.sample_cov),
        }),
    );
    report.set("comparison", &cmp);
    Ok((report.render(), s.common.output.clone()))
}

fn run_circuit(c: &CircuitArgs, cfg: &Config) -> Result<(String, Option<PathBuf>), CliError> {
    let text = read(&c.common.input)?;
    let raw = io::parse_netlist(&text).map_err(|error| CliError::Format {
        path: c.common.input.clone(),
        error,
    })?;
    let netlist = raw.into_netlist()?;
    let asm = circuit::assemble_sdae(&netlist, &cfg.tolerance)?;
    let problem = match &c.test_fn.u0 {
        Some(u0) => asm.problem.clone().with_u0(u0.clone()),
        None => asm.problem.clone(),
    };
    if let Some(path) = &c.write_problem {
        let body = serde_json::to_string_pretty(&io::problem_to_json(&problem))
            .expect("serializable");
        write(path, &(body + "\n"))?;
    }
    let phi = test_function(&c.test_fn)?;
    let kcf = pencil::compute_kcf(&problem.pencil, &cfg.tolerance)?;
    let v = pencil::validate_kcf(&problem.pencil, &kcf, &cfg.tolerance)?;
    let joint = law::joint_law(&problem, &kcf, &phi, cfg)?;
    let abscont = law::abs_continuity_with(&problem, &kcf, &phi, cfg)?;

    let mut report = Report::new("circuit");
    report.line(format!("unknowns: {}", asm.variables.join(", ")));
    report.line(format!(
        "noise channels on arcs: {:?}",
        asm.noise_arcs.iter().map(|a| a + 1).collect::<Vec<_>>()
    ));
    report.line("A =");
    report.line(io::format_matrix(problem.pencil.a(), "  "));
    report.line("B =");
    report.line(io::format_matrix(problem.pencil.b(), "  "));
    report.line("Lambda =");
    report.line(io::format_matrix(&problem.lambda, "  "));
    kcf_report(&mut report, &kcf, &v);
    describe_law(&mut report, "<x, phi>", &joint.x);
    abscont_report(&mut report, &abscont);
    report.set("variables", &asm.variables);
    report.set("noise_arcs", &asm.noise_arcs);
    report.set("problem", io::problem_to_json(&problem));
    report.set("x", law_json(&joint.x));
    report.set("y", law_json(&joint.y));
    Ok((report.render(), c.common.output.clone()))
}

/// Parses `args`, runs the command, prints the report and returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let emit = |text: &str, output: Option<PathBuf>| -> Result<(), CliError> {
        match output {
            Some(path) => write(&path, text),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    };
    let output = match &cli.command {
        Command::Regularity(c) | Command::Kcf(c) => c.output.clone(),
        Command::Law(a) | Command::Abscont(a) => a.common.output.clone(),
        Command::Simulate(s) => s.common.output.clone(),
        Command::Circuit(c) => c.common.output.clone(),
    };
    match execute(&cli) {
        Ok((text, out)) => match emit(&text, out) {
            Ok(()) => 0,
            Err(e) => {
                eprintln!("error: {e}");
                e.exit_code()
            }
        },
        Err((partial, e)) => {
            if let Some(text) = partial {
                let _ = emit(&text, output);
            }
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
