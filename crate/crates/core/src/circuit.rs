//! Linear electrical networks with noisy two-terminal devices.
//!
//! Unknowns are the arc tensions and flows `(u₁ … u_a, x₁ … x_a)`. The
//! network gives flow conservation `Inc·x = d`, tension conservation over
//! cycles `Bᵀu = c`, and one characteristic per device. Conservation rows
//! are used to eliminate variables that no characteristic differentiates;
//! the remaining rows form a square pencil.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::forcing::PiecewisePoly;
use crate::law::{LawError, SdaeProblem};
use crate::linalg;
use crate::pencil::{KcfDecomposition, MatrixPencil, PencilError, ToleranceConfig};

const PIVOT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CircuitError {
    #[error("NonlinearDevice: unsupported device kind '{0}'")]
    NonlinearDevice(String),
    #[error("InvalidArc: device {arc} connects nodes {from} -> {to} in a network of {nodes} nodes")]
    InvalidArc {
        arc: usize,
        from: usize,
        to: usize,
        nodes: usize,
    },
    #[error("InvalidParameter: device {arc} ({kind}) has parameter {param}")]
    InvalidParameter {
        arc: usize,
        kind: DeviceKind,
        param: f64,
    },
    #[error("InconsistentNetwork: {0}")]
    InconsistentNetwork(String),
    #[error(transparent)]
    Pencil(#[from] PencilError),
    #[error(transparent)]
    Law(#[from] LawError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum DeviceKind {
    Resistor,
    Inductor,
    Capacitor,
    CurrentSource,
    VoltageSource,
}

impl DeviceKind {
    pub fn name(&self) -> &'static str {
        match self {
            DeviceKind::Resistor => "resistor",
            DeviceKind::Inductor => "inductor",
            DeviceKind::Capacitor => "capacitor",
            DeviceKind::CurrentSource => "currentSource",
            DeviceKind::VoltageSource => "voltageSource",
        }
    }

    fn needs_positive_param(&self) -> bool {
        matches!(
            self,
            DeviceKind::Resistor | DeviceKind::Inductor | DeviceKind::Capacitor
        )
    }
}

impl fmt::Display for DeviceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DeviceKind {
    type Err = CircuitError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .map(|c| c.to_ascii_lowercase())
            .collect();
        Ok(match key.as_str() {
            "resistor" | "r" => DeviceKind::Resistor,
            "inductor" | "l" => DeviceKind::Inductor,
            "capacitor" | "c" => DeviceKind::Capacitor,
            "currentsource" => DeviceKind::CurrentSource,
            "voltagesource" => DeviceKind::VoltageSource,
            _ => return Err(CircuitError::NonlinearDevice(s.to_string())),
        })
    }
}

/// A device on the arc `from → to`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Device {
    pub kind: DeviceKind,
    pub from: usize,
    pub to: usize,
    /// R, L, C or the source value.
    pub param: f64,
    /// Noise magnitude; zero for a noiseless device.
    #[serde(default)]
    pub tau: f64,
}

impl Device {
    pub fn new(kind: DeviceKind, from: usize, to: usize, param: f64, tau: f64) -> Self {
        Self {
            kind,
            from,
            to,
            param,
            tau,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Supplies {
    /// Flow supply per node (`Inc·x = flows`).
    #[serde(default)]
    pub flows: Vec<f64>,
    /// Tension supply per cycle of [`cycle_basis`].
    #[serde(default)]
    pub tensions: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Netlist {
    pub nodes: usize,
    pub devices: Vec<Device>,
    #[serde(default)]
    pub supplies: Option<Supplies>,
}

impl Netlist {
    pub fn arcs(&self) -> usize {
        self.devices.len()
    }

    pub fn validate(&self) -> Result<(), CircuitError> {
        for (arc, dev) in self.devices.iter().enumerate() {
            if dev.from >= self.nodes || dev.to >= self.nodes || dev.from == dev.to {
                return Err(CircuitError::InvalidArc {
                    arc,
                    from: dev.from,
                    to: dev.to,
                    nodes: self.nodes,
                });
            }
            let bad_param = !dev.param.is_finite()
                || (dev.kind.needs_positive_param() && dev.param <= 0.0);
            if bad_param || !(dev.tau >= 0.0 && dev.tau.is_finite()) {
                return Err(CircuitError::InvalidParameter {
                    arc,
                    kind: dev.kind,
                    param: if bad_param { dev.param } else { dev.tau },
                });
            }
        }
        Ok(())
    }
}

/// `a_ij = +1` if arc `j` leaves node `i`, `−1` if it enters it.
pub fn incidence_matrix(netlist: &Netlist) -> Result<DMatrix<f64>, CircuitError> {
    netlist.validate()?;
    let mut inc = DMatrix::zeros(netlist.nodes, netlist.arcs());
    for (j, dev) in netlist.devices.iter().enumerate() {
        inc[(dev.from, j)] = 1.0;
        inc[(dev.to, j)] = -1.0;
    }
    Ok(inc)
}

/// Orthonormal basis of the cycle space `ker Inc`, one column per cycle.
pub fn cycle_basis(incidence: &DMatrix<f64>, cfg: &ToleranceConfig) -> DMatrix<f64> {
    let arcs = incidence.ncols();
    if arcs == 0 {
        return DMatrix::zeros(0, 0);
    }
    let smax = linalg::spectral_norm(incidence);
    if smax == 0.0 {
        return DMatrix::identity(arcs, arcs);
    }
    linalg::null_space(incidence, cfg.rank_tol * smax).0
}

/// An assembled network: the SDAE plus labels for its unknowns and noises.
#[derive(Debug, Clone)]
pub struct AssembledCircuit {
    pub problem: SdaeProblem,
    /// Names of the unknowns, e.g. `u1`, `x2`.
    pub variables: Vec<String>,
    /// Arc index driving each noise channel.
    pub noise_arcs: Vec<usize>,
}

/// One linear row `A·ẏ + B·y = f + Λξ` over the full variable vector.
struct Row {
    a: Vec<f64>,
    b: Vec<f64>,
    rhs: f64,
    noise: Vec<f64>,
}

pub fn assemble_sdae(
    netlist: &Netlist,
    cfg: &ToleranceConfig,
) -> Result<AssembledCircuit, CircuitError> {
    let inc = incidence_matrix(netlist)?;
    let arcs = netlist.arcs();
    let nvar = 2 * arcs;
    let cycles = cycle_basis(&inc, cfg);
    let supplies = netlist.supplies.clone().unwrap_or_default();
    let flow_rhs = pad(&supplies.flows, netlist.nodes, "flow supplies per node")?;
    let tension_rhs = pad(&supplies.tensions, cycles.ncols(), "tension supplies per cycle")?;

    let noise_arcs: Vec<usize> = (0..arcs).filter(|&j| netlist.devices[j].tau > 0.0).collect();
    let m = noise_arcs.len();
    let u = |j: usize| j;
    let x = |j: usize| arcs + j;

    // Conservation rows: [coefficients | rhs].
    let mut cons: Vec<(Vec<f64>, f64)> = Vec::new();
    for i in 0..netlist.nodes {
        let mut row = vec![0.0; nvar];
        for j in 0..arcs {
            row[x(j)] = inc[(i, j)];
        }
        cons.push((row, flow_rhs[i]));
    }
    for k in 0..cycles.ncols() {
        let mut row = vec![0.0; nvar];
        for j in 0..arcs {
            row[u(j)] = cycles[(j, k)];
        }
        cons.push((row, tension_rhs[k]));
    }

    // Characteristics.
    let mut chars = Vec::with_capacity(arcs);
    let mut differentiated = vec![false; nvar];
    for (j, dev) in netlist.devices.iter().enumerate() {
        let mut row = Row {
            a: vec![0.0; nvar],
            b: vec![0.0; nvar],
            rhs: 0.0,
            noise: vec![0.0; m],
        };
        let channel = noise_arcs.iter().position(|&a| a == j);
        let mut noise = dev.tau;
        match dev.kind {
            DeviceKind::Resistor => {
                row.b[x(j)] = 1.0;
                row.b[u(j)] = -1.0 / dev.param;
                noise = -dev.tau / dev.param;
            }
            DeviceKind::Inductor => {
                row.a[x(j)] = dev.param;
                row.b[u(j)] = -1.0;
                noise = -dev.tau;
                differentiated[x(j)] = true;
            }
            DeviceKind::Capacitor => {
                row.a[u(j)] = dev.param;
                row.b[x(j)] = -1.0;
                noise = -dev.tau;
                differentiated[u(j)] = true;
            }
            DeviceKind::CurrentSource => {
                row.b[x(j)] = 1.0;
                row.rhs = dev.param;
            }
            DeviceKind::VoltageSource => {
                row.b[u(j)] = 1.0;
                row.rhs = dev.param;
            }
        }
        if let Some(c) = channel {
            row.noise[c] = noise;
        }
        chars.push(row);
    }

    // Gauss–Jordan on the conservation rows, tensions u_a … u_1 first,
    // then flows x_a … x_1.
    let priority: Vec<usize> = (0..arcs).rev().map(u).chain((0..arcs).rev().map(x)).collect();
    let mut used = vec![false; cons.len()];
    let mut eliminated: Vec<(usize, usize)> = Vec::new(); // (variable, row)
    for &var in priority.iter().filter(|&&v| !differentiated[v]) {
        let mut best: Option<(usize, f64)> = None;
        for (r, (row, _)) in cons.iter().enumerate() {
            if used[r] {
                continue;
            }
            let mag = row[var].abs();
            if mag > PIVOT_TOL && best.is_none_or(|(_, b)| mag > b) {
                best = Some((r, mag));
            }
        }
        let Some((pr, _)) = best else { continue };
        used[pr] = true;
        let pivot = cons[pr].0[var];
        let (prow, prhs) = {
            let (row, rhs) = &mut cons[pr];
            row.iter_mut().for_each(|v| *v /= pivot);
            *rhs /= pivot;
            (row.clone(), *rhs)
        };
        for (r, (row, rhs)) in cons.iter_mut().enumerate() {
            if r == pr || row[var] == 0.0 {
                continue;
            }
            let factor = row[var];
            row.iter_mut().zip(&prow).for_each(|(v, p)| *v -= factor * p);
            row[var] = 0.0;
            *rhs -= factor * prhs;
        }
        eliminated.push((var, pr));
    }
    // Reduce the leftover conservation rows to an independent set.
    let mut settled = used.clone();
    for var in 0..nvar {
        let pivot = (0..cons.len())
            .filter(|&r| !settled[r] && cons[r].0[var].abs() > PIVOT_TOL)
            .fold(None::<usize>, |best, r| match best {
                Some(b) if cons[b].0[var].abs() >= cons[r].0[var].abs() => Some(b),
                _ => Some(r),
            });
        let Some(pr) = pivot else { continue };
        settled[pr] = true;
        let (prow, prhs) = cons[pr].clone();
        for r in 0..cons.len() {
            if settled[r] || cons[r].0[var] == 0.0 {
                continue;
            }
            let factor = cons[r].0[var] / prow[var];
            let (row, rhs) = &mut cons[r];
            row.iter_mut().zip(&prow).for_each(|(v, p)| *v -= factor * p);
            row[var] = 0.0;
            *rhs -= factor * prhs;
        }
    }
    let scale = flow_rhs
        .iter()
        .chain(&tension_rhs)
        .fold(1.0f64, |acc, v| acc.max(v.abs()));
    let mut rows: Vec<Row> = Vec::new();
    for (r, (row, rhs)) in cons.iter().enumerate() {
        if used[r] {
            continue;
        }
        if row.iter().all(|v| v.abs() <= PIVOT_TOL) {
            if rhs.abs() > 1e-10 * scale {
                return Err(CircuitError::InconsistentNetwork(format!(
                    "conservation law reduces to 0 = {rhs}"
                )));
            }
            continue;
        }
        rows.push(Row {
            a: vec![0.0; nvar],
            b: row.clone(),
            rhs: *rhs,
            noise: vec![0.0; m],
        });
    }
    for mut row in chars {
        for &(var, r) in &eliminated {
            let coef = row.b[var];
            if coef == 0.0 {
                continue;
            }
            let (erow, erhs) = &cons[r];
            row.b.iter_mut().zip(erow).for_each(|(v, e)| *v -= coef * e);
            row.b[var] = 0.0;
            row.rhs -= coef * erhs;
        }
        rows.push(row);
    }

    let gone: Vec<usize> = eliminated.iter().map(|&(v, _)| v).collect();
    let kept: Vec<usize> = (0..nvar).filter(|v| !gone.contains(v)).collect();
    let n = kept.len();
    if rows.len() != n {
        return Err(CircuitError::InconsistentNetwork(format!(
            "{} equations for {n} unknowns after elimination",
            rows.len()
        )));
    }
    if n == 0 {
        return Err(CircuitError::InconsistentNetwork("network has no unknowns".into()));
    }
    let a = DMatrix::from_fn(n, n, |i, j| rows[i].a[kept[j]]);
    let b = DMatrix::from_fn(n, n, |i, j| rows[i].b[kept[j]]);
    let lambda = DMatrix::from_fn(n, m, |i, k| rows[i].noise[k]);
    let forcing: Vec<PiecewisePoly> = rows.iter().map(|r| PiecewisePoly::constant(r.rhs)).collect();
    let forcing = if forcing.iter().all(PiecewisePoly::is_zero) {
        Vec::new()
    } else {
        forcing
    };
    let problem = SdaeProblem::new(MatrixPencil::new(a, b)?, lambda)?.with_forcing(forcing)?;
    let variables = kept
        .iter()
        .map(|&v| {
            if v < arcs {
                format!("u{}", v + 1)
            } else {
                format!("x{}", v - arcs + 1)
            }
        })
        .collect();
    Ok(AssembledCircuit {
        problem,
        variables,
        noise_arcs,
    })
}

fn pad(values: &[f64], len: usize, what: &str) -> Result<Vec<f64>, CircuitError> {
    match values.len() {
        0 => Ok(vec![0.0; len]),
        l if l == len => Ok(values.to_vec()),
        l => Err(CircuitError::InconsistentNetwork(format!(
            "expected {len} {what}, got {l}"
        ))),
    }
}

/// Component values of the two-inductor, one-resistor cutset network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LlCutset {
    pub resistance: f64,
    pub inductance: [f64; 2],
    /// Noise magnitudes of the first inductor, second inductor, resistor.
    pub tau: [f64; 3],
}

impl Default for LlCutset {
    fn default() -> Self {
        Self {
            resistance: 1.0,
            inductance: [1.0, 1.0],
            tau: [1.0, 1.0, 1.0],
        }
    }
}

impl LlCutset {
    /// Three nodes `a, b, c`: first inductor `a → b`, second inductor
    /// `c → b`, resistor `c → a`. Flows satisfy `x₁ = −x₂ = x₃` and the
    /// single cycle gives `u₁ − u₂ + u₃ = 0`.
    pub fn netlist(&self) -> Netlist {
        Netlist {
            nodes: 3,
            devices: vec![
                Device::new(DeviceKind::Inductor, 0, 1, self.inductance[0], self.tau[0]),
                Device::new(DeviceKind::Inductor, 2, 1, self.inductance[1], self.tau[1]),
                Device::new(DeviceKind::Resistor, 2, 0, self.resistance, self.tau[2]),
            ],
            supplies: None,
        }
    }

    /// Reduced problem on `(u₁, u₂, x₁, x₂)` written out by hand.
    pub fn reduced_problem(&self) -> Result<SdaeProblem, CircuitError> {
        let r = self.resistance;
        let [l1, l2] = self.inductance;
        let [t1, t2, t3] = self.tau;
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.0, 0.0, l1, l2]));
        #[rustfmt::skip]
        let b = DMatrix::from_row_slice(4, 4, &[
            1.0 / r, -1.0 / r, 1.0, 0.0,
            -1.0 / r, 1.0 / r, 0.0, 1.0,
            -1.0, 0.0, 0.0, 0.0,
            0.0, -1.0, 0.0, 0.0,
        ]);
        #[rustfmt::skip]
        let lambda = DMatrix::from_row_slice(4, 3, &[
            0.0, 0.0, -t3 / r,
            0.0, 0.0, t3 / r,
            -t1, 0.0, 0.0,
            0.0, -t2, 0.0,
        ]);
        Ok(SdaeProblem::new(MatrixPencil::new(a, b)?, lambda)?)
    }

    /// A hand-derived Kronecker reduction of [`reduced_problem`](Self::reduced_problem)
    /// for unit resistance and inductances.
    pub fn unit_reduction() -> KcfDecomposition {
        #[rustfmt::skip]
        let p = DMatrix::from_row_slice(4, 4, &[
            0.5, -0.5, 1.0, -1.0,
            0.0, -1.0, 1.0, 1.0,
            1.0, 1.0, 0.0, 0.0,
            -1.0, 0.0, 0.0, 0.0,
        ]);
        #[rustfmt::skip]
        let q = DMatrix::from_row_slice(4, 4, &[
            -0.25, -0.5, -0.75, -1.0,
            0.25, -0.5, -0.25, 0.0,
            0.5, 0.0, 0.5, 0.0,
            -0.5, 0.0, 0.5, 0.0,
        ]);
        KcfDecomposition::from_parts(p, q, DMatrix::from_element(1, 1, 0.5), vec![2, 1])
            .expect("consistent dimensions")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pencil::validate_kcf;

    #[test]
    fn single_arc_incidence() {
        let n = Netlist {
            nodes: 2,
            devices: vec![Device::new(DeviceKind::Resistor, 0, 1, 1.0, 0.0)],
            supplies: None,
        };
        let inc = incidence_matrix(&n).unwrap();
        assert_eq!(inc, DMatrix::from_row_slice(2, 1, &[1.0, -1.0]));
    }

    #[test]
    fn empty_netlist() {
        let n = Netlist {
            nodes: 2,
            devices: vec![],
            supplies: None,
        };
        assert_eq!(incidence_matrix(&n).unwrap().ncols(), 0);
    }

    #[test]
    fn rejects_bad_arcs_and_kinds() {
        let n = Netlist {
            nodes: 2,
            devices: vec![Device::new(DeviceKind::Resistor, 0, 2, 1.0, 0.0)],
            supplies: None,
        };
        assert!(matches!(incidence_matrix(&n), Err(CircuitError::InvalidArc { .. })));
        assert!(matches!(
            "diode".parse::<DeviceKind>(),
            Err(CircuitError::NonlinearDevice(_))
        ));
        assert_eq!("current_source".parse::<DeviceKind>().unwrap(), DeviceKind::CurrentSource);
    }

    #[test]
    fn ll_cutset_cycle_space_is_one_dimensional() {
        let inc = incidence_matrix(&LlCutset::default().netlist()).unwrap();
        let b = cycle_basis(&inc, &ToleranceConfig::default());
        assert_eq!(b.ncols(), 1);
        assert!((&inc * &b).norm() < 1e-12);
        let v = b.column(0) / b[(0, 0)];
        assert!((v[1] + 1.0).abs() < 1e-12 && (v[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hand_reduction_is_valid() {
        let ll = LlCutset::default();
        let p = ll.reduced_problem().unwrap();
        let v = validate_kcf(&p.pencil, &LlCutset::unit_reduction(), &ToleranceConfig::default())
            .unwrap();
        assert_eq!((v.residual_a, v.residual_b), (0.0, 0.0));
    }

    #[test]
    fn assembled_ll_cutset_keeps_reduced_unknowns() {
        let asm = assemble_sdae(&LlCutset::default().netlist(), &ToleranceConfig::default())
            .unwrap();
        assert_eq!(asm.variables, vec!["u1", "u2", "x1", "x2"]);
        assert_eq!(asm.noise_arcs, vec![0, 1, 2]);
    }

    #[test]
    fn inconsistent_supplies() {
        let n = Netlist {
            nodes: 2,
            devices: vec![Device::new(DeviceKind::Resistor, 0, 1, 1.0, 0.0)],
            supplies: Some(Supplies {
                flows: vec![1.0, 0.0],
                tensions: vec![],
            }),
        };
        assert!(matches!(
            assemble_sdae(&n, &ToleranceConfig::default()),
            Err(CircuitError::InconsistentNetwork(_))
        ));
    }
}
