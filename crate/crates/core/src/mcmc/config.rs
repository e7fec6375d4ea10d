use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// What the kernels target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    /// The full posterior.
    #[default]
    Posterior,
    /// Data switched off, for checking kernels against their priors: the
    /// Poisson observation layer is dropped, the rate and label kernels
    /// ignore the latent paths, and variances are left untouched.
    Prior,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    pub iterations: usize,
    pub burnin: usize,
    pub thin: usize,
    pub proposal_sd_w: f64,
    pub proposal_sd_param: f64,
    pub proposal_sd_loglambda: f64,
    /// Fresh base-measure draws offered to each label update.
    pub aux_m: usize,
    pub seed: u64,
    /// Robbins-Monro tuning of proposal scales, during burn-in only.
    pub adapt: bool,
    pub target: Target,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            iterations: 15_000,
            burnin: 5_000,
            thin: 5,
            proposal_sd_w: 0.1,
            proposal_sd_param: 0.3,
            proposal_sd_loglambda: 0.5,
            aux_m: 1,
            seed: 1,
            adapt: true,
            target: Target::Posterior,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::config("iterations", "must be positive"));
        }
        if self.burnin >= self.iterations {
            return Err(Error::config("burnin", "must be smaller than iterations"));
        }
        if self.thin == 0 {
            return Err(Error::config("thin", "must be at least 1"));
        }
        if self.aux_m == 0 {
            return Err(Error::config("aux_m", "must be at least 1"));
        }
        for (name, v) in [
            ("proposal_sd_w", self.proposal_sd_w),
            ("proposal_sd_param", self.proposal_sd_param),
            ("proposal_sd_loglambda", self.proposal_sd_loglambda),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(name, "must be positive"));
            }
        }
        Ok(())
    }

    /// Number of stored draws: `floor((iterations - burnin) / thin)`.
    pub fn stored_draws(&self) -> usize {
        (self.iterations - self.burnin) / self.thin
    }
}
