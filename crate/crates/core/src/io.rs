//! JSON file formats for problems and netlists, and the report writer.
//!
//! Problem file:
//!
//! ```json
//! {
//!   "n": 2,
//!   "A": [[1, 0], [0, 0]],
//!   "B": [[0.5, 0], [0, 1]],
//!   "Lambda": [[1], [0.5]],
//!   "f": [[{"start": 0, "coeffs": [1, 0.5]}], "zero"],
//!   "u0": [0],
//!   "phi0": {"center": 0.75, "radius": 0.5, "poly": [1]}
//! }
//! ```
//!
//! `Lambda` defaults to no noise, `f` to `"zero"` (either for the whole
//! vector or per component), `u0` to zeros. A forcing component is a list
//! of polynomial pieces `{start, end?, coeffs}` with coefficients lowest
//! degree first; pieces without `end` extend to infinity. `phi0` is
//! normalized on load.
//!
//! Netlist file:
//!
//! ```json
//! {
//!   "nodes": 3,
//!   "devices": [{"kind": "inductor", "from": 0, "to": 1, "param": 1, "tau": 1}],
//!   "supplies": {"flows": [0, 0, 0], "tensions": []}
//! }
//! ```
//!
//! Device kinds: `resistor`, `inductor`, `capacitor`, `currentSource`,
//! `voltageSource`. Nodes are numbered from 0.

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::circuit::{CircuitError, Device, Netlist, Supplies};
use crate::forcing::PiecewisePoly;
use crate::law::{self, SdaeProblem};
use crate::pencil::MatrixPencil;
use crate::quad::QuadratureConfig;
use crate::testfn::BumpTestFunction;

/// A parse or schema error, located by line and field path.
#[derive(Debug, Clone, PartialEq)]
pub struct FormatError {
    pub line: usize,
    pub field: String,
    pub message: String,
}

impl fmt::Display for FormatError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "FormatError: line {}, field `{}`: {}",
            self.line, self.field, self.message
        )
    }
}

impl std::error::Error for FormatError {}

/// Line of the first occurrence of `"key"` in `text`, or 1.
fn line_of(text: &str, key: &str) -> usize {
    let needle = format!("\"{key}\"");
    text.find(&needle)
        .map_or(1, |pos| text[..pos].matches('\n').count() + 1)
}

fn semantic(text: &str, field: &str, message: impl Into<String>) -> FormatError {
    let key = field.split(['.', '[']).next().unwrap_or(field);
    FormatError {
        line: line_of(text, key),
        field: field.to_string(),
        message: message.into(),
    }
}

fn parse_typed<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T, FormatError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner();
        FormatError {
            line: inner.line(),
            field,
            message: inner.to_string(),
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFnSpec {
    pub center: f64,
    pub radius: f64,
    #[serde(default = "unit_poly")]
    pub poly: Vec<f64>,
}

fn unit_poly() -> Vec<f64> {
    vec![1.0]
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemFile {
    n: usize,
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    b: Vec<Vec<f64>>,
    #[serde(rename = "Lambda", default)]
    lambda: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    f: Option<Value>,
    #[serde(default)]
    u0: Option<Vec<f64>>,
    #[serde(default)]
    phi0: Option<TestFnSpec>,
}

fn matrix(
    text: &str,
    field: &str,
    rows: &[Vec<f64>],
    nrows: usize,
    ncols: Option<usize>,
) -> Result<DMatrix<f64>, FormatError> {
    if rows.len() != nrows {
        return Err(semantic(
            text,
            field,
            format!("expected {nrows} rows, found {}", rows.len()),
        ));
    }
    let width = ncols.unwrap_or_else(|| rows.first().map_or(0, Vec::len));
    for (i, row) in rows.iter().enumerate() {
        if row.len() != width {
            return Err(semantic(
                text,
                &format!("{field}[{i}]"),
                format!("expected {width} entries, found {}", row.len()),
            ));
        }
    }
    Ok(DMatrix::from_fn(nrows, width, |i, j| rows[i][j]))
}

fn forcing_component(text: &str, field: &str, v: &Value) -> Result<PiecewisePoly, FormatError> {
    if v.as_str() == Some("zero") {
        return Ok(PiecewisePoly::zero());
    }
    serde_json::from_value(v.clone()).map_err(|e| {
        semantic(
            text,
            field,
            format!("expected \"zero\" or a list of {{start, end?, coeffs}} pieces: {e}"),
        )
    })
}

fn forcing(text: &str, spec: Option<&Value>, n: usize) -> Result<Vec<PiecewisePoly>, FormatError> {
    match spec {
        None => Ok(Vec::new()),
        Some(Value::String(s)) if s == "zero" => Ok(Vec::new()),
        Some(Value::Array(items)) => {
            if items.len() != n {
                return Err(semantic(
                    text,
                    "f",
                    format!("expected {n} components, found {}", items.len()),
                ));
            }
            let comps = items
                .iter()
                .enumerate()
                .map(|(i, v)| forcing_component(text, &format!("f[{i}]"), v))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(if comps.iter().all(PiecewisePoly::is_zero) {
                Vec::new()
            } else {
                comps
            })
        }
        Some(_) => Err(semantic(text, "f", "expected \"zero\" or an array of components")),
    }
}

/// Parses a problem file. Domain checks on the matrices (finiteness, shape)
/// are reported as format errors here.
pub fn parse_problem(text: &str) -> Result<SdaeProblem, FormatError> {
    let file: ProblemFile = parse_typed(text)?;
    let n = file.n;
    if n == 0 {
        return Err(semantic(text, "n", "dimension must be at least 1"));
    }
    let a = matrix(text, "A", &file.a, n, Some(n))?;
    let b = matrix(text, "B", &file.b, n, Some(n))?;
    let lambda = match &file.lambda {
        Some(rows) => matrix(text, "Lambda", rows, n, None)?,
        None => DMatrix::zeros(n, 0),
    };
    let pencil = MatrixPencil::new(a, b).map_err(|e| semantic(text, "A", e.to_string()))?;
    let f = forcing(text, file.f.as_ref(), n)?;
    let qcfg = QuadratureConfig::default();
    let phi0 = match &file.phi0 {
        Some(spec) => test_function(spec)
            .and_then(|p| Ok(p.normalized(&qcfg)?))
            .map_err(|e| semantic(text, "phi0", e.to_string()))?,
        None => law::default_reference(&qcfg).map_err(|e| semantic(text, "phi0", e.to_string()))?,
    };
    let problem = SdaeProblem::new(pencil, lambda)
        .and_then(|p| p.with_forcing(f))
        .map_err(|e| semantic(text, "Lambda", e.to_string()))?;
    Ok(problem
        .with_u0(file.u0.unwrap_or_default())
        .with_phi0(phi0))
}

pub fn test_function(spec: &TestFnSpec) -> Result<BumpTestFunction, law::LawError> {
    Ok(BumpTestFunction::new(spec.center, spec.radius, spec.poly.clone())?)
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Serializes a problem in the file format read by [`parse_problem`].
pub fn problem_to_json(problem: &SdaeProblem) -> Value {
    let mut obj = serde_json::Map::new();
    obj.insert("n".into(), problem.n().into());
    obj.insert("A".into(), serde_json::to_value(rows(problem.pencil.a())).expect("finite"));
    obj.insert("B".into(), serde_json::to_value(rows(problem.pencil.b())).expect("finite"));
    obj.insert(
        "Lambda".into(),
        serde_json::to_value(rows(&problem.lambda)).expect("finite"),
    );
    if !problem.forcing.is_empty() {
        obj.insert(
            "f".into(),
            serde_json::to_value(&problem.forcing).expect("finite"),
        );
    }
    if !problem.u0.is_empty() {
        obj.insert("u0".into(), serde_json::to_value(&problem.u0).expect("finite"));
    }
    obj.insert(
        "phi0".into(),
        serde_json::to_value(TestFnSpec {
            center: problem.phi0.center(),
            radius: problem.phi0.radius(),
            poly: problem.phi0.poly().to_vec(),
        })
        .expect("finite"),
    );
    Value::Object(obj)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDevice {
    kind: String,
    from: usize,
    to: usize,
    param: f64,
    #[serde(default)]
    tau: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetlistFile {
    nodes: usize,
    devices: Vec<RawDevice>,
    #[serde(default)]
    supplies: Option<Supplies>,
}

/// Netlist file contents, with device kinds still unchecked.
#[derive(Debug)]
pub struct RawNetlist(NetlistFile);

pub fn parse_netlist(text: &str) -> Result<RawNetlist, FormatError> {
    Ok(RawNetlist(parse_typed(text)?))
}

impl RawNetlist {
    /// Resolves device kinds; an unknown kind is a `NonlinearDevice`.
    pub fn into_netlist(self) -> Result<Netlist, CircuitError> {
        let devices = self
            .0
            .devices
            .into_iter()
            .map(|d| Ok(Device::new(d.kind.parse()?, d.from, d.to, d.param, d.tau)))
            .collect::<Result<Vec<_>, CircuitError>>()?;
        Ok(Netlist {
            nodes: self.0.nodes,
            devices,
            supplies: self.0.supplies,
        })
    }
}

/// A report: free-form human lines followed by one JSON object.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub title: String,
    pub lines: Vec<String>,
    pub data: Value,
}

pub const MACHINE_MARKER: &str = "--- machine-readable ---";

impl Report {
    pub fn new(title: impl Into<String>) -> Self {
        Self {
            title: title.into(),
            lines: Vec::new(),
            data: Value::Object(serde_json::Map::new()),
        }
    }

    pub fn line(&mut self, s: impl Into<String>) {
        self.lines.push(s.into());
    }

    pub fn set(&mut self, key: &str, value: impl Serialize) {
        if let Value::Object(map) = &mut self.data {
            map.insert(key.to_string(), serde_json::to_value(value).expect("serializable"));
        }
    }

    pub fn render(&self) -> String {
        let mut out = format!("== {} ==\n", self.title);
        for l in &self.lines {
            out.push_str(l);
            out.push('\n');
        }
        out.push_str(MACHINE_MARKER);
        out.push('\n');
        out.push_str(&serde_json::to_string_pretty(&self.data).expect("serializable"));
        out.push('\n');
        out
    }

    /// The JSON object from a rendered report.
    pub fn machine_section(rendered: &str) -> Option<Value> {
        let start = rendered.find(MACHINE_MARKER)? + MACHINE_MARKER.len();
        serde_json::from_str(rendered[start..].trim()).ok()
    }
}

/// `[[…], …]` rows of a matrix, for reports.
pub fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    rows(m)
}

/// Fixed-width text rendering of a matrix.
pub fn format_matrix(m: &DMatrix<f64>, indent: &str) -> String {
    m.row_iter()
        .map(|r| {
            let cells: Vec<String> = r.iter().map(|v| format!("{v:>12.6}")).collect();
            format!("{indent}[{}]", cells.join(" "))
        })
        .collect::<Vec<_>>()
        .join("\n")
}
