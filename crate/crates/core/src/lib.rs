//! Bayesian heterogeneity learning for the SIRS epidemic model.
//!
//! Regions share transmission, recovery and loss-of-immunity rates through
//! three independent mixture-of-finite-mixtures (MFM) partitions. The crate
//! covers forward simulation, a Metropolis-within-Gibbs sampler for the
//! hierarchical state-space model, posterior summaries (Dahl's partition
//! estimate, HPD intervals, Rand index, basic reproduction numbers) and a
//! simulation-study harness.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytics;
pub mod epidemic;
pub mod error;
pub mod io;
pub mod math;
pub mod mcmc;
pub mod mfm;
pub mod partition;
pub mod study;

pub use error::{Error, Result};
pub use partition::Partition;
