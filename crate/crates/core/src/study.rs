//! Simulation study: clustered synthetic data, replicate chains and the
//! estimation/grouping metrics (MB, MSD, Rand index, estimated cluster count).

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::{dahl_estimate, rand_index};
use crate::epidemic::{simulate_series, ObservedSeries, ProbTriple, SirsParams, VarianceParams};
use crate::error::{Error, Result};
use crate::mcmc::{run_chain_stream, Family, RegionData, SamplerConfig};
use crate::partition::Partition;

/// US state (and DC) resident populations, 2019 census estimates,
/// alphabetical. Used as default simulation populations.
pub const US_STATE_POPULATIONS: [(&str, u64); 51] = [
    ("Alabama", 4_903_185),
    ("Alaska", 731_545),
    ("Arizona", 7_278_717),
    ("Arkansas", 3_017_825),
    ("California", 39_512_223),
    ("Colorado", 5_758_736),
    ("Connecticut", 3_565_287),
    ("Delaware", 973_764),
    ("District of Columbia", 705_749),
    ("Florida", 21_477_737),
    ("Georgia", 10_617_423),
    ("Hawaii", 1_415_872),
    ("Idaho", 1_787_065),
    ("Illinois", 12_671_821),
    ("Indiana", 6_732_219),
    ("Iowa", 3_155_070),
    ("Kansas", 2_913_314),
    ("Kentucky", 4_467_673),
    ("Louisiana", 4_648_794),
    ("Maine", 1_344_212),
    ("Maryland", 6_045_680),
    ("Massachusetts", 6_892_503),
    ("Michigan", 9_986_857),
    ("Minnesota", 5_639_632),
    ("Mississippi", 2_976_149),
    ("Missouri", 6_137_428),
    ("Montana", 1_068_778),
    ("Nebraska", 1_934_408),
    ("Nevada", 3_080_156),
    ("New Hampshire", 1_359_711),
    ("New Jersey", 8_882_190),
    ("New Mexico", 2_096_829),
    ("New York", 19_453_561),
    ("North Carolina", 10_488_084),
    ("North Dakota", 762_062),
    ("Ohio", 11_689_100),
    ("Oklahoma", 3_956_971),
    ("Oregon", 4_217_737),
    ("Pennsylvania", 12_801_989),
    ("Rhode Island", 1_059_361),
    ("South Carolina", 5_148_714),
    ("South Dakota", 884_659),
    ("Tennessee", 6_829_174),
    ("Texas", 28_995_881),
    ("Utah", 3_205_958),
    ("Vermont", 623_989),
    ("Virginia", 8_535_519),
    ("Washington", 7_614_893),
    ("West Virginia", 1_792_147),
    ("Wisconsin", 5_822_434),
    ("Wyoming", 578_759),
];

/// Cluster values and fixed region labels for one rate family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyTruth {
    pub values: Vec<f64>,
    /// Zero-based index into `values` for every region.
    pub labels: Vec<usize>,
}

impl FamilyTruth {
    pub fn partition(&self) -> Partition {
        Partition::from_labels(&self.labels)
    }

    pub fn region_value(&self, i: usize) -> f64 {
        self.values[self.labels[i]]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub region_ids: Vec<String>,
    pub populations: Vec<u64>,
    pub days: usize,
    pub beta: FamilyTruth,
    pub gamma: FamilyTruth,
    pub phi: FamilyTruth,
    pub sigma2_s: f64,
    pub sigma2_i: f64,
    /// Hidden `(p_s, p_i, p_r)` on the day before the first observation.
    pub init: [f64; 3],
    pub replicates: usize,
    pub base_seed: u64,
}

impl ScenarioSpec {
    /// Two groups per family with truths `low` and `high`, random labels
    /// drawn once from `base_seed`, state populations in alphabetical order.
    pub fn two_group(n: usize, days: usize, low: f64, high: f64, replicates: usize, base_seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
        let mut labels = || {
            // both groups non-empty for n >= 2
            let mut l: Vec<usize> = (0..n).map(|i| usize::from(i >= n / 2)).collect();
            l.shuffle(&mut rng);
            l
        };
        let truth = |labels| FamilyTruth {
            values: vec![low, high],
            labels,
        };
        let beta = truth(labels());
        let gamma = truth(labels());
        let phi = truth(labels());
        let (region_ids, populations) = (0..n)
            .map(|i| {
                let (name, pop) = US_STATE_POPULATIONS[i % US_STATE_POPULATIONS.len()];
                let id = if i < US_STATE_POPULATIONS.len() {
                    name.to_string()
                } else {
                    format!("{name} {}", i / US_STATE_POPULATIONS.len() + 1)
                };
                (id, pop)
            })
            .unzip();
        Self {
            region_ids,
            populations,
            days,
            beta,
            gamma,
            phi,
            sigma2_s: 0.01,
            sigma2_i: 0.01,
            init: [0.98, 0.015, 0.005],
            replicates,
            base_seed,
        }
    }

    pub fn n(&self) -> usize {
        self.region_ids.len()
    }

    pub fn truth(&self, f: Family) -> &FamilyTruth {
        match f {
            Family::Beta => &self.beta,
            Family::Gamma => &self.gamma,
            Family::Phi => &self.phi,
        }
    }

    pub fn region_params(&self, i: usize) -> Result<SirsParams> {
        SirsParams::new(
            self.beta.region_value(i),
            self.gamma.region_value(i),
            self.phi.region_value(i),
        )
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if n == 0 {
            return Err(Error::config("region_ids", "scenario has no regions"));
        }
        if self.populations.len() != n {
            return Err(Error::config("populations", format!("expected {n} entries")));
        }
        if self.populations.contains(&0) {
            return Err(Error::config("populations", "must be positive"));
        }
        if self.days < 2 {
            return Err(Error::config("days", "must be at least 2"));
        }
        if self.replicates == 0 {
            return Err(Error::config("replicates", "must be positive"));
        }
        for f in Family::ALL {
            let t = self.truth(f);
            if t.labels.len() != n {
                return Err(Error::config(f.name(), format!("expected {n} labels")));
            }
            if t.labels.iter().any(|&l| l >= t.values.len()) {
                return Err(Error::config(f.name(), "label outside the value list"));
            }
            if t.values.iter().any(|&v| !(v > 0.0 && v < 1.0)) {
                return Err(Error::config(f.name(), "values must lie in (0, 1)"));
            }
        }
        VarianceParams::new(self.sigma2_s, self.sigma2_i)
            .map_err(|e| Error::config("sigma2", e.to_string()))?;
        ProbTriple::new(self.init[0], self.init[1], self.init[2])
            .map_err(|e| Error::config("init", e.to_string()))?;
        Ok(())
    }
}

/// Synthetic data of replicate `r`, deterministic in `(spec, r)`.
pub fn generate_replicate(spec: &ScenarioSpec, r: usize) -> Result<Vec<RegionData>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.base_seed);
    rng.set_stream(r as u64 + 1);
    let var = VarianceParams::new(spec.sigma2_s, spec.sigma2_i)?;
    let init = ProbTriple::new(spec.init[0], spec.init[1], spec.init[2])?;
    (0..spec.n())
        .map(|i| {
            let params = spec.region_params(i)?;
            let (series, _) = simulate_series(&params, &var, &init, spec.populations[i], spec.days, &mut rng)?;
            RegionData::new(spec.region_ids[i].clone(), series)
        })
        .collect()
}

/// Outcome of one replicate for one family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyRecord {
    pub family: Family,
    pub dahl_index: usize,
    pub partition: Partition,
    pub k_hat: usize,
    pub rand_index: f64,
    /// Per-region values at the Dahl-selected draw.
    pub estimates: Vec<f64>,
    /// Per-region posterior means, for diagnostics.
    pub posterior_means: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub replicate: usize,
    pub families: Vec<FamilyRecord>,
}

impl ReplicateRecord {
    pub fn family(&self, f: Family) -> &FamilyRecord {
        &self.families[f.index()]
    }
}

/// Bias and spread of one true cluster value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamMetrics {
    pub family: Family,
    /// Zero-based index of the true cluster value.
    pub group: usize,
    pub truth: f64,
    pub regions: usize,
    /// Region-averaged signed bias, averaged over replicates (reported as
    /// both MB and MAB).
    pub mb: f64,
    pub msd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupingMetrics {
    pub family: Family,
    pub mri: f64,
    pub sd_ri: f64,
    pub mean_k: f64,
    pub sd_k: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub replicates: usize,
    pub params: Vec<ParamMetrics>,
    pub grouping: Vec<GroupingMetrics>,
}

impl MetricsReport {
    pub fn grouping(&self, f: Family) -> &GroupingMetrics {
        &self.grouping[f.index()]
    }

    pub fn param(&self, f: Family, group: usize) -> Option<&ParamMetrics> {
        self.params.iter().find(|p| p.family == f && p.group == group)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub report: MetricsReport,
    pub records: Vec<ReplicateRecord>,
}

fn sample_sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Aggregates replicate records into the study metrics.
pub fn compute_metrics(spec: &ScenarioSpec, records: &[ReplicateRecord]) -> Result<MetricsReport> {
    if records.is_empty() {
        return Err(Error::invalid("no replicate records"));
    }
    let reps = records.len() as f64;
    let n = spec.n();
    let mut params = Vec::new();
    let mut grouping = Vec::new();
    for f in Family::ALL {
        let truth = spec.truth(f);
        // replicate mean of each region's estimate
        let region_mean: Vec<f64> = (0..n)
            .map(|i| records.iter().map(|r| r.family(f).estimates[i]).sum::<f64>() / reps)
            .collect();
        for (g, &value) in truth.values.iter().enumerate() {
            let members: Vec<usize> = (0..n).filter(|&i| truth.labels[i] == g).collect();
            if members.is_empty() {
                continue;
            }
            let m = members.len() as f64;
            let mb = records
                .iter()
                .map(|r| {
                    let est = &r.family(f).estimates;
                    members.iter().map(|&i| est[i] - value).sum::<f64>() / m
                })
                .sum::<f64>()
                / reps;
            let msd = (records
                .iter()
                .map(|r| {
                    let est = &r.family(f).estimates;
                    members.iter().map(|&i| (est[i] - region_mean[i]).powi(2)).sum::<f64>() / m
                })
                .sum::<f64>()
                / reps)
                .sqrt();
            params.push(ParamMetrics {
                family: f,
                group: g,
                truth: value,
                regions: members.len(),
                mb,
                msd,
            });
        }
        let ri: Vec<f64> = records.iter().map(|r| r.family(f).rand_index).collect();
        let ks: Vec<f64> = records.iter().map(|r| r.family(f).k_hat as f64).collect();
        grouping.push(GroupingMetrics {
            family: f,
            mri: ri.iter().sum::<f64>() / reps,
            sd_ri: sample_sd(&ri),
            mean_k: ks.iter().sum::<f64>() / reps,
            sd_k: sample_sd(&ks),
        });
    }
    Ok(MetricsReport {
        replicates: records.len(),
        params,
        grouping,
    })
}

/// Runs one replicate: simulate, sample, pick the Dahl draw per family.
pub fn run_replicate(spec: &ScenarioSpec, config: &SamplerConfig, r: usize) -> Result<ReplicateRecord> {
    let data = generate_replicate(spec, r)?;
    let chain = run_chain_stream(&data, config, r as u64)?;
    let n = spec.n();
    let families = Family::ALL
        .iter()
        .map(|&f| {
            let (dahl_index, partition) = dahl_estimate(&chain.partitions(f))?;
            let estimates = chain.draws[dahl_index].family(f).values.clone();
            let m = chain.draws.len() as f64;
            let posterior_means = (0..n)
                .map(|i| chain.draws.iter().map(|d| d.family(f).values[i]).sum::<f64>() / m)
                .collect();
            let ri = if n >= 2 {
                rand_index(&partition, &spec.truth(f).partition())?
            } else {
                1.0
            };
            Ok(FamilyRecord {
                family: f,
                dahl_index,
                k_hat: partition.k(),
                partition,
                rand_index: ri,
                estimates,
                posterior_means,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ReplicateRecord { replicate: r, families })
}

/// Runs every replicate (in parallel) and aggregates. `on_record` sees each
/// replicate as soon as it finishes, e.g. to persist partial results.
pub fn run_study_with<F>(spec: &ScenarioSpec, config: &SamplerConfig, on_record: F) -> Result<StudyResult>
where
    F: Fn(&ReplicateRecord) -> Result<()> + Sync,
{
    spec.validate()?;
    config.validate()?;
    let records = (0..spec.replicates)
        .into_par_iter()
        .map(|r| {
            let rec = run_replicate(spec, config, r)?;
            on_record(&rec)?;
            Ok(rec)
        })
        .collect::<Result<Vec<_>>>()?;
    let report = compute_metrics(spec, &records)?;
    Ok(StudyResult { report, records })
}

pub fn run_study(spec: &ScenarioSpec, config: &SamplerConfig) -> Result<StudyResult> {
    run_study_with(spec, config, |_| Ok(()))
}

/// Observed series of a replicate, keyed by region id.
pub fn replicate_series(data: &[RegionData]) -> Vec<(&str, &ObservedSeries)> {
    data.iter().map(|r| (r.region_id.as_str(), &r.series)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fake_record(r: usize, est: [Vec<f64>; 3], parts: [&[usize]; 3], spec: &ScenarioSpec) -> ReplicateRecord {
        let families = Family::ALL
            .iter()
            .map(|&f| {
                let partition = Partition::from_labels(parts[f.index()]);
                FamilyRecord {
                    family: f,
                    dahl_index: 0,
                    k_hat: partition.k(),
                    rand_index: rand_index(&partition, &spec.truth(f).partition()).unwrap(),
                    partition,
                    estimates: est[f.index()].clone(),
                    posterior_means: est[f.index()].clone(),
                }
            })
            .collect();
        ReplicateRecord { replicate: r, families }
    }

    fn small_spec() -> ScenarioSpec {
        let mut s = ScenarioSpec::two_group(3, 10, 0.06, 0.6, 2, 9);
        for f in [&mut s.beta, &mut s.gamma, &mut s.phi] {
            f.labels = vec![0, 0, 1];
        }
        s
    }

    #[test]
    fn two_group_spec_is_valid_and_fixed() {
        let a = ScenarioSpec::two_group(20, 30, 0.06, 0.6, 10, 5);
        let b = ScenarioSpec::two_group(20, 30, 0.06, 0.6, 10, 5);
        a.validate().unwrap();
        assert_eq!(a, b);
        for f in Family::ALL {
            assert_eq!(a.truth(f).partition().k(), 2);
        }
        assert_eq!(a.populations[4], 39_512_223);
    }

    #[test]
    fn replicate_generation_is_deterministic() {
        let spec = ScenarioSpec::two_group(4, 30, 0.06, 0.6, 3, 11);
        let a = generate_replicate(&spec, 1).unwrap();
        assert_eq!(a, generate_replicate(&spec, 1).unwrap());
        assert_ne!(a, generate_replicate(&spec, 2).unwrap());
        assert_eq!(a.len(), 4);
        assert!(a.iter().all(|r| r.series.len() == 30));
    }

    #[test]
    fn validation_names_fields() {
        let mut s = small_spec();
        s.populations.pop();
        assert!(matches!(s.validate(), Err(Error::Config { field, .. }) if field == "populations"));
        let mut s = small_spec();
        s.gamma.labels[0] = 5;
        assert!(matches!(s.validate(), Err(Error::Config { field, .. }) if field == "gamma"));
    }

    #[test]
    fn perfect_estimates_give_zero_error() {
        let spec = small_spec();
        let truth: Vec<f64> = (0..3).map(|i| spec.beta.region_value(i)).collect();
        let parts: [&[usize]; 3] = [&[0, 0, 1]; 3];
        let recs: Vec<_> = (0..2)
            .map(|r| fake_record(r, [truth.clone(), truth.clone(), truth.clone()], parts, &spec))
            .collect();
        let m = compute_metrics(&spec, &recs).unwrap();
        for p in &m.params {
            assert_eq!(p.mb, 0.0);
            assert_eq!(p.msd, 0.0);
        }
        for g in &m.grouping {
            assert_eq!(g.mri, 1.0);
            assert_eq!(g.mean_k, 2.0);
            assert_eq!(g.sd_k, 0.0);
        }
    }

    #[test]
    fn metrics_by_hand() {
        // group 0 = regions {0, 1} truth 0.06; group 1 = region {2} truth 0.6
        let spec = small_spec();
        let r0 = vec![0.08, 0.06, 0.5];
        let r1 = vec![0.06, 0.10, 0.7];
        let parts: [&[usize]; 3] = [&[0, 0, 0], &[0, 0, 1], &[0, 1, 2]];
        let recs = vec![
            fake_record(0, [r0.clone(), r0.clone(), r0.clone()], parts, &spec),
            fake_record(1, [r1.clone(), r1.clone(), r1.clone()], parts, &spec),
        ];
        let m = compute_metrics(&spec, &recs).unwrap();
        let low = m.param(Family::Beta, 0).unwrap();
        // rep 0: (0.02 + 0) / 2 = 0.01; rep 1: (0 + 0.04) / 2 = 0.02; MB = 0.015
        assert!((low.mb - 0.015).abs() < 1e-15);
        // region means 0.07, 0.08; squared deviations per rep: (1e-4 + 4e-4) / 2
        assert!((low.msd - (2.5e-4f64).sqrt()).abs() < 1e-15);
        let high = m.param(Family::Beta, 1).unwrap();
        assert!((high.mb - 0.0).abs() < 1e-15);
        assert!((high.msd - 0.1).abs() < 1e-12);
        // all-in-one vs {0,0,1}: pairs (0,1) agree, (0,2) and (1,2) disagree
        assert!((m.grouping(Family::Beta).mri - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(m.grouping(Family::Gamma).mri, 1.0);
        assert_eq!(m.grouping(Family::Phi).mean_k, 3.0);
    }

    #[test]
    fn single_replicate_has_zero_spread() {
        let spec = small_spec();
        let est = vec![0.1, 0.2, 0.3];
        let parts: [&[usize]; 3] = [&[0, 0, 1]; 3];
        let m = compute_metrics(&spec, &[fake_record(0, [est.clone(), est.clone(), est], parts, &spec)]).unwrap();
        assert!(m.params.iter().all(|p| p.msd == 0.0));
        assert!(m.grouping.iter().all(|g| g.sd_ri == 0.0 && g.sd_k == 0.0));
    }

    #[test]
    fn metrics_ignore_replicate_order() {
        let spec = small_spec();
        let parts: [&[usize]; 3] = [&[0, 0, 1], &[0, 1, 1], &[0, 0, 0]];
        let recs: Vec<_> = (0..4)
            .map(|r| {
                let e: Vec<f64> = (0..3).map(|i| 0.05 + 0.01 * (r * 3 + i) as f64).collect();
                fake_record(r, [e.clone(), e.clone(), e], parts, &spec)
            })
            .collect();
        let a = compute_metrics(&spec, &recs).unwrap();
        let mut rev = recs.clone();
        rev.reverse();
        let b = compute_metrics(&spec, &rev).unwrap();
        for (x, y) in a.params.iter().zip(&b.params) {
            assert!((x.mb - y.mb).abs() < 1e-15 && (x.msd - y.msd).abs() < 1e-15);
        }
        assert_eq!(a.grouping, b.grouping);
    }
}
