//! The four commands, driven by a validated [`RunConfig`].

use std::path::{Path, PathBuf};
use std::time::Instant;

use chrono::{SecondsFormat, Utc};

use super::chain::{read_chain, write_chain};
use super::config::{Mode, RunConfig};
use super::raw::{ingest, read_populations, rows_from_series, write_populations, write_rows, IngestOptions};
use super::tables::{write_manifest, write_study, write_summary, Manifest, RunTiming};
use crate::analytics::summarize;
use crate::error::{Error, Result};
use crate::mcmc::{run_chain, Family};
use crate::study::{generate_replicate, run_study_with};

pub const CHAIN_FILE: &str = "chain.jsonl";
pub const RAW_FILE: &str = "raw.csv";
pub const POPULATIONS_FILE: &str = "populations.csv";
pub const TRUTH_FILE: &str = "truth.csv";
pub const WARNINGS_FILE: &str = "ingest_warnings.csv";
pub const REPLICATE_DIR: &str = "replicates";

/// Validates `config` and runs its command; returns the files written.
pub fn run(config: &RunConfig) -> Result<Vec<PathBuf>> {
    config.validate()?;
    let started = Instant::now();
    let started_at = Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true);
    let dir = config.output_dir()?;
    std::fs::create_dir_all(dir)?;
    let (mut files, seed) = match config.mode {
        Mode::Fit => (fit(config, dir)?, config.sampler.seed),
        Mode::Simulate => (simulate(config, dir)?, scenario_seed(config)),
        Mode::Study => (study(config, dir)?, config.sampler.seed),
        Mode::Summarize => (summarize_chain(config, dir)?, config.sampler.seed),
    };
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command: config.mode.name(),
        seed,
        config,
        outputs: files
            .iter()
            .map(|p| p.strip_prefix(dir).unwrap_or(p).display().to_string())
            .collect(),
        run: RunTiming {
            started_at,
            wall_time_secs: started.elapsed().as_secs_f64(),
        },
    };
    files.push(write_manifest(dir, &manifest)?);
    Ok(files)
}

fn scenario_seed(config: &RunConfig) -> u64 {
    config.scenario.as_ref().map_or(0, |s| s.base_seed)
}

fn fit(config: &RunConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    let input = config.input.as_deref().ok_or_else(|| Error::config("input", "required for `fit`"))?;
    let options = IngestOptions {
        window: config.parsed_window()?,
        regions: config.regions.clone(),
        populations: match &config.populations {
            Some(p) => read_populations(p)?,
            None => Default::default(),
        },
        monotone: config.monotone,
    };
    let ingested = ingest(input, &options)?;
    log::info!(
        "fitting {} regions over {} days ({})",
        ingested.data.len(),
        ingested.window.days(),
        ingested.window
    );

    let mut w = csv::Writer::from_path(dir.join(WARNINGS_FILE))?;
    w.write_record(["region", "date", "warning"])?;
    for warning in &ingested.warnings {
        w.write_record([
            warning.region.clone(),
            warning.date.to_string(),
            serde_json::to_string(&warning.kind)?,
        ])?;
    }
    w.flush()?;

    let chain = run_chain(&ingested.data, &config.sampler)?;
    let a = &chain.meta.acceptance;
    log::info!(
        "acceptance: latent {:.3} beta {:.3} gamma {:.3} phi {:.3} lambda {:.3}",
        a.latent,
        a.beta,
        a.gamma,
        a.phi,
        a.lambda
    );
    let chain_path = dir.join(CHAIN_FILE);
    write_chain(&chain_path, &chain)?;
    let summary = summarize(&chain)?;
    let mut files = vec![dir.join(WARNINGS_FILE), chain_path];
    files.extend(write_summary(dir, &chain, &summary)?);
    Ok(files)
}

fn simulate(config: &RunConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    let scenario = config.scenario.as_ref().ok_or_else(|| Error::config("scenario", "required for `simulate`"))?;
    let spec = scenario.to_spec()?;
    let data = generate_replicate(&spec, 0)?;

    let raw = dir.join(RAW_FILE);
    write_rows(&raw, &rows_from_series(&data, scenario.start_date))?;
    let pops = dir.join(POPULATIONS_FILE);
    let pairs: Vec<(String, u64)> = spec.region_ids.iter().cloned().zip(spec.populations.iter().copied()).collect();
    write_populations(&pops, &pairs)?;

    let truth = dir.join(TRUTH_FILE);
    let mut w = csv::Writer::from_path(&truth)?;
    w.write_record(["region", "family", "cluster", "value"])?;
    for f in Family::ALL {
        let t = spec.truth(f);
        for (i, id) in spec.region_ids.iter().enumerate() {
            w.write_record([
                id.clone(),
                f.to_string(),
                (t.labels[i] + 1).to_string(),
                super::format::sig6(t.region_value(i)),
            ])?;
        }
    }
    w.flush()?;
    Ok(vec![raw, pops, truth])
}

fn study(config: &RunConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    let scenario = config.scenario.as_ref().ok_or_else(|| Error::config("scenario", "required for `study`"))?;
    let spec = scenario.to_spec()?;
    let rep_dir = dir.join(REPLICATE_DIR);
    std::fs::create_dir_all(&rep_dir)?;
    // each replicate is persisted as soon as it finishes
    let result = run_study_with(&spec, &config.sampler, |rec| {
        let path = rep_dir.join(format!("replicate_{:04}.json", rec.replicate));
        std::fs::write(path, serde_json::to_string(rec)?)?;
        log::info!("replicate {} done", rec.replicate);
        Ok(())
    })?;
    write_study(dir, &spec, &result.report, &result.records)
}

fn summarize_chain(config: &RunConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    let path = config.chain.as_deref().ok_or_else(|| Error::config("chain", "required for `summarize`"))?;
    let chain = read_chain(path)?;
    let summary = summarize(&chain)?;
    write_summary(dir, &chain, &summary)
}
