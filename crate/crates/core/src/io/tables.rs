//! Result tables (comma-delimited, fixed column order, six significant
//! digits) and the run manifest.

use std::path::{Path, PathBuf};

use serde::Serialize;

use super::format::sig6;
use crate::analytics::PosteriorSummary;
use crate::error::Result;
use crate::mcmc::ChainOutput;
use crate::study::{MetricsReport, ReplicateRecord, ScenarioSpec};

pub const ASSIGNMENTS_FILE: &str = "assignments.csv";
pub const CLUSTERS_FILE: &str = "clusters.csv";
pub const R0_FILE: &str = "r0.csv";
pub const METRICS_FILE: &str = "metrics.csv";
pub const GROUPING_FILE: &str = "grouping.csv";
pub const REPLICATES_FILE: &str = "replicates.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

fn write_table(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<PathBuf> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(path.to_path_buf())
}

/// Writes the assignment, cluster and R0 tables. Cluster ids are one-based.
pub fn write_summary(dir: &Path, chain: &ChainOutput, summary: &PosteriorSummary) -> Result<Vec<PathBuf>> {
    let ids = &chain.meta.region_ids;
    let assignments = summary.families.iter().flat_map(|fam| {
        ids.iter().enumerate().map(move |(i, id)| {
            vec![id.clone(), fam.family.to_string(), (fam.partition.label(i) + 1).to_string()]
        })
    });
    let a = write_table(&dir.join(ASSIGNMENTS_FILE), &["region", "family", "cluster"], assignments)?;

    let clusters = summary.families.iter().flat_map(|fam| {
        let iteration = chain.draws[fam.dahl_index].iteration;
        fam.clusters.iter().map(move |c| {
            vec![
                fam.family.to_string(),
                (c.cluster + 1).to_string(),
                c.members.len().to_string(),
                sig6(c.point),
                sig6(c.dahl_value),
                sig6(c.hpd.lower),
                sig6(c.hpd.upper),
                iteration.to_string(),
            ]
        })
    });
    let c = write_table(
        &dir.join(CLUSTERS_FILE),
        &["family", "cluster", "size", "point", "dahl_value", "hpd_lo", "hpd_hi", "dahl_iteration"],
        clusters,
    )?;

    let r0 = summary.regions.iter().map(|r| {
        vec![
            r.region_id.clone(),
            sig6(r.beta),
            sig6(r.gamma),
            sig6(r.phi),
            sig6(r.r0),
            sig6(r.r0_draw_mean),
            sig6(r.r0_hpd.lower),
            sig6(r.r0_hpd.upper),
        ]
    });
    let r = write_table(
        &dir.join(R0_FILE),
        &["region", "beta", "gamma", "phi", "r0", "r0_draw_mean", "r0_hpd_lo", "r0_hpd_hi"],
        r0,
    )?;
    Ok(vec![a, c, r])
}

/// Writes the per-parameter, per-family and per-replicate study tables.
pub fn write_study(dir: &Path, spec: &ScenarioSpec, report: &MetricsReport, records: &[ReplicateRecord]) -> Result<Vec<PathBuf>> {
    let params = report.params.iter().map(|p| {
        vec![
            p.family.to_string(),
            (p.group + 1).to_string(),
            sig6(p.truth),
            p.regions.to_string(),
            sig6(p.mb),
            sig6(p.mb),
            sig6(p.msd),
        ]
    });
    let m = write_table(&dir.join(METRICS_FILE), &["family", "group", "truth", "regions", "mb", "mab", "msd"], params)?;

    let grouping = report.grouping.iter().map(|g| {
        vec![
            g.family.to_string(),
            report.replicates.to_string(),
            sig6(g.mri),
            sig6(g.sd_ri),
            sig6(g.mean_k),
            sig6(g.sd_k),
        ]
    });
    let g = write_table(&dir.join(GROUPING_FILE), &["family", "replicates", "mri", "sd_ri", "mean_k", "sd_k"], grouping)?;

    let mut sorted: Vec<&ReplicateRecord> = records.iter().collect();
    sorted.sort_by_key(|r| r.replicate);
    let reps = sorted.into_iter().flat_map(|rec| {
        rec.families.iter().flat_map(move |f| {
            (0..spec.n()).map(move |i| {
                vec![
                    rec.replicate.to_string(),
                    f.family.to_string(),
                    spec.region_ids[i].clone(),
                    (f.partition.label(i) + 1).to_string(),
                    sig6(spec.truth(f.family).region_value(i)),
                    sig6(f.estimates[i]),
                    sig6(f.posterior_means[i]),
                    f.k_hat.to_string(),
                    sig6(f.rand_index),
                ]
            })
        })
    });
    let r = write_table(
        &dir.join(REPLICATES_FILE),
        &["replicate", "family", "region", "cluster", "truth", "estimate", "posterior_mean", "k_hat", "rand_index"],
        reps,
    )?;
    Ok(vec![m, g, r])
}

/// Timing block of the manifest; the only part that varies between
/// otherwise identical runs.
#[derive(Debug, Clone, Serialize)]
pub struct RunTiming {
    pub started_at: String,
    pub wall_time_secs: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest<'a, C: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub seed: u64,
    pub config: &'a C,
    pub outputs: Vec<String>,
    pub run: RunTiming,
}

pub fn write_manifest<C: Serialize>(dir: &Path, manifest: &Manifest<'_, C>) -> Result<PathBuf> {
    let path = dir.join(MANIFEST_FILE);
    let mut text = serde_json::to_string_pretty(manifest)?;
    text.push('\n');
    std::fs::write(&path, text)?;
    Ok(path)
}
