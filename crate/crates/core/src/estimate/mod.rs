//! Estimators for causal-invertible VARMA models.

mod bayes;
mod init;
mod metrics;
mod mle;
mod optim;
mod yule_walker;

pub use bayes::{bayes_fit, log_prior, BayesFit, ChainOptions, PriorSpec};
pub use init::{default_long_order, long_var_init, InitAdjustment, Initialization};
pub use metrics::{entry_rmse, nmse, overall_nmse, rmse};
pub use mle::{mle_fit, FitOptions};
pub use optim::{minimize_box, nelder_mead, Bounds, OptimOptions, OptimResult};
pub use yule_walker::{sample_acvf, yule_walker_var};

use crate::codec::RealCodec;
use crate::model::VarmaSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    YuleWalker,
    Mle,
    Bayes,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::YuleWalker => "yw",
            Method::Mle => "mle",
            Method::Bayes => "bayes",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "yw" => Ok(Method::YuleWalker),
            "mle" => Ok(Method::Mle),
            "bayes" => Ok(Method::Bayes),
            other => Err(format!("unknown method '{other}' (expected yw, mle or bayes)")),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    pub iterations: usize,
    pub converged: bool,
    /// Log-likelihood of each evaluated reflection-bit branch.
    pub branch_logliks: Vec<(Vec<bool>, f64)>,
    /// Metropolis acceptance rate per block (AR lags, MA lags, Σ, then bits).
    pub acceptance_rates: Vec<f64>,
    /// Spectral radii of the AR and MA companions.
    pub spectral_radii: (f64, f64),
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub method: Method,
    pub spec: VarmaSpec,
    /// Packed pre-parameters of `spec`, when it lies in the chart's domain.
    pub codec: Option<RealCodec>,
    pub loglik: f64,
    pub delta_profile: Vec<bool>,
    pub diagnostics: Diagnostics,
}
