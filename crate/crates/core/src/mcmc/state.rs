use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::fmt;

use crate::epidemic::{LatentPath, ObservedSeries, SirsParams, VarianceParams};
use crate::error::{Error, Result};
use crate::partition::Partition;

/// The three rate families that carry their own partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Beta,
    Gamma,
    Phi,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Beta, Family::Gamma, Family::Phi];

    pub fn index(self) -> usize {
        match self {
            Family::Beta => 0,
            Family::Gamma => 1,
            Family::Phi => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Beta => "beta",
            Family::Gamma => "gamma",
            Family::Phi => "phi",
        }
    }

    /// Copy of `params` with this family's rate replaced.
    #[inline]
    pub fn with_value(self, params: SirsParams, value: f64) -> SirsParams {
        let mut p = params;
        match self {
            Family::Beta => p.beta = value,
            Family::Gamma => p.gamma = value,
            Family::Phi => p.phi = value,
        }
        p
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "beta" => Ok(Family::Beta),
            "gamma" => Ok(Family::Gamma),
            "phi" => Ok(Family::Phi),
            other => Err(Error::invalid(format!("unknown family `{other}`"))),
        }
    }
}

/// Observed counts for one region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionData {
    pub region_id: String,
    pub series: ObservedSeries,
}

impl RegionData {
    pub fn new(region_id: impl Into<String>, series: ObservedSeries) -> Result<Self> {
        let region_id = region_id.into();
        if region_id.is_empty() {
            return Err(Error::Data("region id is empty".into()));
        }
        Ok(Self { region_id, series })
    }
}

/// Checks a dataset for the sampler: non-empty, unique ids, shared `T >= 2`.
pub fn validate_dataset(data: &[RegionData]) -> Result<usize> {
    let first = data
        .first()
        .ok_or_else(|| Error::Data("dataset has no regions".into()))?;
    let days = first.series.len();
    if days < 2 {
        return Err(Error::Data(format!("need at least two days, got {days}")));
    }
    let mut seen = HashSet::new();
    for r in data {
        if r.region_id.is_empty() {
            return Err(Error::Data("region id is empty".into()));
        }
        if !seen.insert(r.region_id.as_str()) {
            return Err(Error::Data(format!("duplicate region id `{}`", r.region_id)));
        }
        if r.series.len() != days {
            return Err(Error::Data(format!(
                "region `{}` has {} days, expected {days}",
                r.region_id,
                r.series.len()
            )));
        }
    }
    Ok(days)
}

/// Full sampler state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelState {
    pub paths: Vec<LatentPath>,
    pub variances: Vec<VarianceParams>,
    /// Partitions indexed by [`Family::index`].
    pub partitions: [Partition; 3],
    /// Cluster-level rates, one per cluster of the matching partition.
    pub cluster_values: [Vec<f64>; 3],
    pub lambdas: [f64; 3],
}

impl ModelState {
    pub fn n_regions(&self) -> usize {
        self.paths.len()
    }

    pub fn partition(&self, f: Family) -> &Partition {
        &self.partitions[f.index()]
    }

    pub fn values(&self, f: Family) -> &[f64] {
        &self.cluster_values[f.index()]
    }

    pub fn lambda(&self, f: Family) -> f64 {
        self.lambdas[f.index()]
    }

    /// Rate of family `f` for region `i`.
    #[inline]
    pub fn region_value(&self, f: Family, i: usize) -> f64 {
        let k = f.index();
        self.cluster_values[k][self.partitions[k].label(i)]
    }

    #[inline]
    pub fn region_params(&self, i: usize) -> SirsParams {
        SirsParams {
            beta: self.region_value(Family::Beta, i),
            gamma: self.region_value(Family::Gamma, i),
            phi: self.region_value(Family::Phi, i),
        }
    }

    /// Checks every structural invariant.
    pub fn validate(&self) -> Result<()> {
        let n = self.n_regions();
        if self.variances.len() != n {
            return Err(Error::invalid("variance count differs from region count"));
        }
        for f in Family::ALL {
            let part = self.partition(f);
            if part.n() != n {
                return Err(Error::invalid(format!("{f} partition covers {} regions", part.n())));
            }
            if !part.is_canonical() || part.sizes().contains(&0) {
                return Err(Error::invalid(format!("{f} partition not canonical")));
            }
            if self.values(f).len() != part.k() {
                return Err(Error::invalid(format!(
                    "{f} has {} values for {} clusters",
                    self.values(f).len(),
                    part.k()
                )));
            }
            if self.values(f).iter().any(|&v| !(v > 0.0 && v < 1.0)) {
                return Err(Error::invalid(format!("{f} value outside (0, 1)")));
            }
            if !(self.lambda(f) > 0.0 && self.lambda(f).is_finite()) {
                return Err(Error::invalid(format!("{f} lambda not positive")));
            }
        }
        if self
            .variances
            .iter()
            .any(|v| !(v.sigma2_s > 0.0 && v.sigma2_i > 0.0))
        {
            return Err(Error::invalid("variance not positive"));
        }
        if self
            .paths
            .iter()
            .any(|p| p.w_s.iter().chain(&p.w_i).any(|w| !w.is_finite()))
        {
            return Err(Error::invalid("non-finite latent state"));
        }
        Ok(())
    }
}
