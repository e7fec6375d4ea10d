//! TOML run configuration shared by all commands.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::raw::{DateWindow, MonotonePolicy};
use crate::error::{Error, Result};
use crate::mcmc::{Family, SamplerConfig};
use crate::study::{FamilyTruth, ScenarioSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Fit,
    Simulate,
    Study,
    Summarize,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Fit => "fit",
            Mode::Simulate => "simulate",
            Mode::Study => "study",
            Mode::Summarize => "summarize",
        }
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fit" => Ok(Mode::Fit),
            "simulate" => Ok(Mode::Simulate),
            "study" => Ok(Mode::Study),
            "summarize" => Ok(Mode::Summarize),
            _ => Err(Error::config("mode", format!("unknown mode `{s}`"))),
        }
    }
}

/// Compact description of a simulation scenario. Unset lists are filled by
/// the two-group design (random fixed labels, state populations).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub n: usize,
    pub days: usize,
    pub low: f64,
    pub high: f64,
    pub replicates: usize,
    pub base_seed: u64,
    pub sigma2_s: f64,
    pub sigma2_i: f64,
    pub init: [f64; 3],
    /// First day written by `simulate`.
    pub start_date: NaiveDate,
    pub region_ids: Option<Vec<String>>,
    pub populations: Option<Vec<u64>>,
    pub beta: Option<FamilyTruth>,
    pub gamma: Option<FamilyTruth>,
    pub phi: Option<FamilyTruth>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            n: 20,
            days: 30,
            low: 0.06,
            high: 0.6,
            replicates: 10,
            base_seed: 1,
            sigma2_s: 0.01,
            sigma2_i: 0.01,
            init: [0.98, 0.015, 0.005],
            start_date: NaiveDate::from_ymd_opt(2020, 4, 1).expect("valid date"),
            region_ids: None,
            populations: None,
            beta: None,
            gamma: None,
            phi: None,
        }
    }
}

impl ScenarioConfig {
    pub fn to_spec(&self) -> Result<ScenarioSpec> {
        let mut spec = ScenarioSpec::two_group(self.n, self.days, self.low, self.high, self.replicates, self.base_seed);
        spec.sigma2_s = self.sigma2_s;
        spec.sigma2_i = self.sigma2_i;
        spec.init = self.init;
        if let Some(ids) = &self.region_ids {
            spec.region_ids = ids.clone();
        }
        if let Some(pops) = &self.populations {
            spec.populations = pops.clone();
        }
        for (f, truth) in [(Family::Beta, &self.beta), (Family::Gamma, &self.gamma), (Family::Phi, &self.phi)] {
            if let Some(t) = truth {
                *match f {
                    Family::Beta => &mut spec.beta,
                    Family::Gamma => &mut spec.gamma,
                    Family::Phi => &mut spec.phi,
                } = t.clone();
            }
        }
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    /// Cumulative case table (fit).
    #[serde(default)]
    pub input: Option<PathBuf>,
    /// Population side table `region,population` (fit, optional).
    #[serde(default)]
    pub populations: Option<PathBuf>,
    /// Stored chain (summarize).
    #[serde(default)]
    pub chain: Option<PathBuf>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// `START,END` or `START+DAYS` (fit).
    #[serde(default)]
    pub window: Option<String>,
    #[serde(default)]
    pub regions: Option<Vec<String>>,
    #[serde(default)]
    pub monotone: MonotonePolicy,
    #[serde(default)]
    pub sampler: SamplerConfig,
    #[serde(default)]
    pub scenario: Option<ScenarioConfig>,
}

impl RunConfig {
    pub fn new(mode: Mode) -> Self {
        Self {
            mode,
            input: None,
            populations: None,
            chain: None,
            output: None,
            window: None,
            regions: None,
            monotone: MonotonePolicy::default(),
            sampler: SamplerConfig::default(),
            scenario: None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config("config", e.message().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config { field, reason } => Error::config(field, format!("{}: {reason}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config("config", e.to_string()))
    }

    pub fn parsed_window(&self) -> Result<Option<DateWindow>> {
        self.window.as_deref().map(str::parse).transpose()
    }

    pub fn output_dir(&self) -> Result<&Path> {
        self.output.as_deref().ok_or_else(|| Error::config("output", format!("required for `{}`", self.mode.name())))
    }

    /// Checks that everything the mode needs is present and resolvable.
    pub fn validate(&self) -> Result<()> {
        self.sampler.validate()?;
        self.output_dir()?;
        let existing = |field: &str, p: &Option<PathBuf>| -> Result<()> {
            match p {
                None => Err(Error::config(field, format!("required for `{}`", self.mode.name()))),
                Some(p) if !p.is_file() => Err(Error::config(field, format!("`{}` does not exist", p.display()))),
                Some(_) => Ok(()),
            }
        };
        match self.mode {
            Mode::Fit => {
                existing("input", &self.input)?;
                if self.populations.is_some() {
                    existing("populations", &self.populations)?;
                }
                self.parsed_window()?;
            }
            Mode::Summarize => existing("chain", &self.chain)?,
            Mode::Simulate | Mode::Study => {
                self.scenario
                    .as_ref()
                    .ok_or_else(|| Error::config("scenario", format!("required for `{}`", self.mode.name())))?
                    .to_spec()?;
            }
        }
        Ok(())
    }
}
