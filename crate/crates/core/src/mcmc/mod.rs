//! Metropolis-within-Gibbs sampler for the hierarchical SIRS model.
//!
//! One sweep updates, in order: every latent coordinate (single-site random
//! walk), the cluster-level rates of each family (logit-scale random walk),
//! the labels of each family (auxiliary-variable update with MFM seat
//! weights), the innovation variances (conjugate inverse-gamma draw) and the
//! three MFM rates (log-scale random walk).

mod chain;
mod config;
pub mod kernels;
mod state;

pub use chain::{
    initial_state, log_posterior, run_chain, run_chain_stream, AcceptanceRates, ChainMeta,
    ChainOutput, Draw, FamilyDraw,
};
pub use config::{SamplerConfig, Target};
pub use kernels::{
    update_cluster_params, update_labels, update_lambda, update_latent_paths, update_variances,
    MoveStats,
};
pub use state::{validate_dataset, Family, ModelState, RegionData};
