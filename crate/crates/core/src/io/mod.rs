//! Data ingestion, chain storage, result tables and command orchestration.

pub mod chain;
pub mod commands;
pub mod config;
pub mod format;
pub mod raw;
pub mod tables;

pub use chain::{read_chain, read_chain_from, write_chain, write_chain_to};
pub use commands::run;
pub use config::{Mode, RunConfig, ScenarioConfig};
pub use format::sig6;
pub use raw::{ingest, DateWindow, IngestOptions, Ingested, MonotonePolicy, RawCovidRow};
