//! Stochastic differential-algebraic equations `A ẋ + B x = f + Λξ` driven by
//! white noise, read in the sense of generalized processes.

use serde::{Deserialize, Serialize};

pub mod circuit;
pub mod cli;
pub mod forcing;
pub mod io;
pub mod law;
pub mod linalg;
pub mod pencil;
pub mod quad;
pub mod simulate;
pub mod testfn;

pub use pencil::ToleranceConfig;
pub use quad::QuadratureConfig;

/// Numerical settings shared by the analytic modules.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Config {
    pub tolerance: ToleranceConfig,
    pub quadrature: QuadratureConfig,
}

impl Config {
    pub fn validate(&self) -> Result<(), String> {
        self.tolerance.validate()?;
        self.quadrature.validate()
    }
}
