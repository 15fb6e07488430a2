//! The one place numeric defaults live. A `--config` JSON file may override
//! any subset of fields.

use std::path::Path;

use anyhow::{Context, Result};
use dlab_core::disentangler::{DefinettiCaps, VerifyOptions};
use dlab_core::sepkit::SepOptions;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Seeded restarts for every separable-set optimizer.
    pub restarts: usize,
    /// Sweep budget per restart.
    pub iters: usize,
    /// Stop a restart once a sweep gains less than this.
    pub tol: f64,
    /// Slack added to claims when deciding whether a check passed.
    pub tolerance: f64,
    /// Frank-Wolfe budget for convex fits over nets.
    pub fit_iters: usize,
    /// Frank-Wolfe budget for the net weights of second-condition inputs.
    pub cover_iters: usize,
    /// Haar samples used to certify a net's covering radius.
    pub net_samples: usize,
    pub definetti_caps: DefinettiCaps,
    /// Largest `d^2 dim_R` for sampled strong checks.
    pub max_strong_output: usize,
    /// Largest Choi dimension for entanglement-breaking checks.
    pub max_eb_choi: usize,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            restarts: 20,
            iters: 500,
            tol: 1e-9,
            tolerance: 1e-6,
            fit_iters: 500,
            cover_iters: 2000,
            net_samples: 100_000,
            definetti_caps: DefinettiCaps::default(),
            max_strong_output: 64,
            max_eb_choi: 64,
        }
    }
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn sep(&self) -> SepOptions {
        SepOptions { restarts: self.restarts, iters: self.iters, tol: self.tol, ensemble_size: None }
    }

    pub fn verify(&self) -> VerifyOptions {
        VerifyOptions {
            tolerance: self.tolerance,
            sep: self.sep(),
            cover_iters: self.cover_iters,
            generic_input_opt: false,
            max_strong_output: self.max_strong_output,
            max_eb_choi: self.max_eb_choi,
        }
    }
}
