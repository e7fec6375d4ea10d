//! Posterior summaries: Dahl's least-squares partition estimate, empirical
//! HPD intervals, the Rand index and per-region reproduction numbers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mcmc::{ChainOutput, Family};
use crate::partition::Partition;

/// Co-membership matrix of one partition, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MembershipMatrix {
    n: usize,
    b: Vec<u8>,
}

impl MembershipMatrix {
    pub fn from_partition(p: &Partition) -> Self {
        let n = p.n();
        let labels = p.labels();
        let mut b = vec![0u8; n * n];
        for i in 0..n {
            for j in 0..n {
                b[i * n + j] = u8::from(labels[i] == labels[j]);
            }
        }
        Self { n, b }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> u8 {
        self.b[i * self.n + j]
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.b
    }
}

/// Draw whose co-membership matrix is closest in squared error to the mean
/// co-membership matrix. Returns the zero-based draw index; ties go to the
/// earliest draw.
pub fn dahl_estimate(partitions: &[Partition]) -> Result<(usize, Partition)> {
    let first = partitions
        .first()
        .ok_or_else(|| Error::invalid("no partitions to summarise"))?;
    let n = first.n();
    if partitions.iter().any(|p| p.n() != n) {
        return Err(Error::invalid("partitions cover different numbers of items"));
    }
    let m = partitions.len() as f64;
    let mut mean = vec![0.0; n * n];
    for p in partitions {
        let labels = p.labels();
        for i in 0..n {
            for j in 0..n {
                if labels[i] == labels[j] {
                    mean[i * n + j] += 1.0;
                }
            }
        }
    }
    mean.iter_mut().for_each(|v| *v /= m);

    let mut best = (0usize, f64::INFINITY);
    for (t, p) in partitions.iter().enumerate() {
        let labels = p.labels();
        let mut loss = 0.0;
        for i in 0..n {
            for j in 0..n {
                let b = if labels[i] == labels[j] { 1.0 } else { 0.0 };
                let d = b - mean[i * n + j];
                loss += d * d;
            }
        }
        if loss < best.1 {
            best = (t, loss);
        }
    }
    Ok((best.0, partitions[best.0].clone()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HpdInterval {
    pub lower: f64,
    pub upper: f64,
    pub mass: f64,
}

/// Narrowest window of `ceil(mass * M)` sorted samples. Ties resolve to the
/// lowest window.
pub fn hpd_interval(samples: &[f64], mass: f64) -> Result<HpdInterval> {
    if samples.len() < 2 {
        return Err(Error::invalid(format!(
            "HPD interval needs at least two samples, got {}",
            samples.len()
        )));
    }
    if !(mass > 0.0 && mass < 1.0) {
        return Err(Error::invalid(format!("HPD mass {mass} outside (0, 1)")));
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::invalid("NaN sample"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len();
    // guard against products like 0.95 * 100 landing a hair above 95
    let count = ((mass * m as f64 - 1e-9).ceil() as usize).clamp(1, m);
    let mut best = (0usize, f64::INFINITY);
    for j in 0..=m - count {
        let width = sorted[j + count - 1] - sorted[j];
        if width < best.1 {
            best = (j, width);
        }
    }
    Ok(HpdInterval {
        lower: sorted[best.0],
        upper: sorted[best.0 + count - 1],
        mass,
    })
}

/// HPD interval that degrades to `(x, x)` for a single sample.
pub fn hpd_or_point(samples: &[f64], mass: f64) -> Result<HpdInterval> {
    match samples {
        [] => Err(Error::invalid("no samples")),
        [x] => Ok(HpdInterval {
            lower: *x,
            upper: *x,
            mass,
        }),
        _ => hpd_interval(samples, mass),
    }
}

/// Fraction of item pairs on which two partitions agree, via the
/// contingency table.
pub fn rand_index(a: &Partition, b: &Partition) -> Result<f64> {
    let n = a.n();
    if n != b.n() {
        return Err(Error::invalid(format!(
            "partitions cover {} and {} items",
            n,
            b.n()
        )));
    }
    if n < 2 {
        return Err(Error::invalid("Rand index needs at least two items"));
    }
    let pairs = |x: usize| (x * x.saturating_sub(1) / 2) as u64;
    let mut table = vec![0usize; a.k() * b.k()];
    for i in 0..n {
        table[a.label(i) * b.k() + b.label(i)] += 1;
    }
    let together_both: u64 = table.iter().map(|&c| pairs(c)).sum();
    let together_a: u64 = a.sizes().iter().map(|&c| pairs(c)).sum();
    let together_b: u64 = b.sizes().iter().map(|&c| pairs(c)).sum();
    let total = pairs(n);
    let disagree = together_a + together_b - 2 * together_both;
    Ok((total - disagree) as f64 / total as f64)
}

/// Estimate for one cluster of the Dahl partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    /// Zero-based cluster id in the Dahl partition.
    pub cluster: usize,
    pub members: Vec<usize>,
    /// Mean over all draws of all member regions.
    pub point: f64,
    /// Value at the Dahl-selected draw.
    pub dahl_value: f64,
    pub hpd: HpdInterval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilySummary {
    pub family: Family,
    pub dahl_index: usize,
    pub partition: Partition,
    pub clusters: Vec<ClusterSummary>,
}

impl FamilySummary {
    pub fn cluster_count(&self) -> usize {
        self.partition.k()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionSummary {
    pub region_id: String,
    pub beta: f64,
    pub gamma: f64,
    pub phi: f64,
    /// Ratio of posterior means.
    pub r0: f64,
    /// Posterior mean of the draw-wise ratio.
    pub r0_draw_mean: f64,
    pub r0_hpd: HpdInterval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub families: Vec<FamilySummary>,
    pub regions: Vec<RegionSummary>,
}

impl PosteriorSummary {
    pub fn family(&self, f: Family) -> &FamilySummary {
        &self.families[f.index()]
    }
}

pub const REPORT_MASS: f64 = 0.95;

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn summarize(chain: &ChainOutput) -> Result<PosteriorSummary> {
    if chain.draws.is_empty() {
        return Err(Error::invalid("chain has no stored draws"));
    }
    let n = chain.n_regions();
    let mut families = Vec::with_capacity(3);
    for f in Family::ALL {
        let (dahl_index, partition) = dahl_estimate(&chain.partitions(f))?;
        let dahl_draw = chain.draws[dahl_index].family(f);
        let clusters = partition
            .clusters()
            .into_iter()
            .enumerate()
            .map(|(c, members)| {
                let pooled: Vec<f64> = chain
                    .draws
                    .iter()
                    .flat_map(|d| members.iter().map(move |&i| d.family(f).values[i]))
                    .collect();
                let hpd = if pooled.iter().all(|&v| v == pooled[0]) {
                    hpd_or_point(&pooled[..1], REPORT_MASS)?
                } else {
                    hpd_interval(&pooled, REPORT_MASS)?
                };
                Ok(ClusterSummary {
                    cluster: c,
                    point: mean(&pooled),
                    dahl_value: dahl_draw.values[members[0]],
                    members,
                    hpd,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        families.push(FamilySummary {
            family: f,
            dahl_index,
            partition,
            clusters,
        });
    }

    let regions = (0..n)
        .map(|i| {
            let series = |f: Family| -> Vec<f64> { chain.draws.iter().map(|d| d.family(f).values[i]).collect() };
            let (b, g, p) = (series(Family::Beta), series(Family::Gamma), series(Family::Phi));
            let ratios: Vec<f64> = b.iter().zip(&g).map(|(b, g)| b / g).collect();
            let r0_hpd = if ratios.iter().all(|&v| v == ratios[0]) {
                hpd_or_point(&ratios[..1], REPORT_MASS)?
            } else {
                hpd_interval(&ratios, REPORT_MASS)?
            };
            let (beta, gamma) = (mean(&b), mean(&g));
            Ok(RegionSummary {
                region_id: chain.meta.region_ids[i].clone(),
                beta,
                gamma,
                phi: mean(&p),
                r0: crate::epidemic::basic_reproduction_number(beta, gamma)?,
                r0_draw_mean: mean(&ratios),
                r0_hpd,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(PosteriorSummary { families, regions })
}
