use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::time::Instant;

use super::config::{SamplerConfig, Target};
use super::kernels::{
    self, update_cluster_params_with, update_labels_family, update_lambda_with,
    update_latent_paths_with, update_variances, LatentScales, MoveStats, LAMBDA_PRIOR,
    VARIANCE_PRIOR,
};
use super::state::{validate_dataset, Family, ModelState, RegionData};
use crate::epidemic::{log_density_path, log_likelihood_obs, LatentPath, VarianceParams};
use crate::error::Result;
use crate::math::{gamma_ln_pdf, inv_gamma_ln_pdf};
use crate::mfm::{log_partition_prior_with, CoefficientCache, DEFAULT_TOL};
use crate::partition::Partition;

/// Starting value of every innovation variance.
const INIT_VARIANCE: f64 = 0.1;

/// Unnormalised log posterior of a state. Returns `-inf` for any state
/// outside the support or inconsistent with the data.
pub fn log_posterior(state: &ModelState, data: &[RegionData]) -> f64 {
    if state.n_regions() != data.len() || state.validate().is_err() {
        return f64::NEG_INFINITY;
    }
    let mut total = 0.0;
    for (i, region) in data.iter().enumerate() {
        let params = state.region_params(i);
        let obs = match log_likelihood_obs(&region.series, &state.paths[i]) {
            Ok(v) => v,
            Err(_) => return f64::NEG_INFINITY,
        };
        let path = match log_density_path(&state.paths[i], &params, &state.variances[i]) {
            Ok(v) => v,
            Err(_) => return f64::NEG_INFINITY,
        };
        let var = &state.variances[i];
        let (a, b) = VARIANCE_PRIOR;
        total += obs + path + inv_gamma_ln_pdf(var.sigma2_s, a, b) + inv_gamma_ln_pdf(var.sigma2_i, a, b);
    }
    for f in Family::ALL {
        let lambda = state.lambda(f);
        let (a, b) = LAMBDA_PRIOR;
        // uniform base measure contributes zero on (0, 1)
        total += log_partition_prior_with(state.partition(f), lambda, DEFAULT_TOL)
            + gamma_ln_pdf(lambda, a, b);
    }
    total
}

/// Rates and labels of one family at one stored iteration, mapped to regions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyDraw {
    pub labels: Partition,
    pub values: Vec<f64>,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Draw {
    pub iteration: usize,
    pub beta: FamilyDraw,
    pub gamma: FamilyDraw,
    pub phi: FamilyDraw,
    pub sigma2_s: Vec<f64>,
    pub sigma2_i: Vec<f64>,
    pub log_posterior: f64,
}

impl Draw {
    pub fn family(&self, f: Family) -> &FamilyDraw {
        match f {
            Family::Beta => &self.beta,
            Family::Gamma => &self.gamma,
            Family::Phi => &self.phi,
        }
    }

    fn capture(iteration: usize, state: &ModelState, log_posterior: f64) -> Self {
        let n = state.n_regions();
        let family = |f: Family| FamilyDraw {
            labels: state.partition(f).clone(),
            values: (0..n).map(|i| state.region_value(f, i)).collect(),
            lambda: state.lambda(f),
        };
        Draw {
            iteration,
            beta: family(Family::Beta),
            gamma: family(Family::Gamma),
            phi: family(Family::Phi),
            sigma2_s: state.variances.iter().map(|v| v.sigma2_s).collect(),
            sigma2_i: state.variances.iter().map(|v| v.sigma2_i).collect(),
            log_posterior,
        }
    }
}

/// Post-burn-in acceptance rates per block.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceRates {
    pub latent: f64,
    pub beta: f64,
    pub gamma: f64,
    pub phi: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainMeta {
    pub config: SamplerConfig,
    pub region_ids: Vec<String>,
    pub days: usize,
    pub acceptance: AcceptanceRates,
    /// Not part of the persisted chain file.
    #[serde(skip)]
    pub wall_time_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainOutput {
    pub meta: ChainMeta,
    pub draws: Vec<Draw>,
}

impl ChainOutput {
    pub fn n_regions(&self) -> usize {
        self.meta.region_ids.len()
    }

    pub fn partitions(&self, f: Family) -> Vec<Partition> {
        self.draws.iter().map(|d| d.family(f).labels.clone()).collect()
    }
}

/// Initial state: paths from the counts, one cluster per family with a
/// uniform value, unit MFM rates.
pub fn initial_state<R: Rng + ?Sized>(data: &[RegionData], rng: &mut R) -> ModelState {
    let n = data.len();
    let paths: Vec<LatentPath> = data.iter().map(|r| LatentPath::from_counts(&r.series)).collect();
    let mut value = || loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    };
    let cluster_values = [vec![value()], vec![value()], vec![value()]];
    ModelState {
        paths,
        variances: vec![
            VarianceParams {
                sigma2_s: INIT_VARIANCE,
                sigma2_i: INIT_VARIANCE
            };
            n
        ],
        partitions: std::array::from_fn(|_| Partition::single_cluster(n)),
        cluster_values,
        lambdas: [1.0; 3],
    }
}

/// Proposal scales carried across iterations.
struct Tuning {
    latent: LatentScales,
    params: [f64; 3],
    lambda: [f64; 3],
}

#[derive(Default)]
struct Counters {
    latent: MoveStats,
    params: [MoveStats; 3],
    lambda: MoveStats,
}

/// Robbins-Monro step size at (one-based) burn-in iteration `it`.
fn adapt_rate(it: usize) -> f64 {
    (1.0 / (it as f64).powf(0.6)).min(0.5)
}

/// Runs one chain. Deterministic in `(data, config)`.
pub fn run_chain(data: &[RegionData], config: &SamplerConfig) -> Result<ChainOutput> {
    run_chain_stream(data, config, 0)
}

/// Runs one chain on ChaCha stream `stream` of `config.seed`, so parallel
/// chains with the same seed stay independent.
pub fn run_chain_stream(data: &[RegionData], config: &SamplerConfig, stream: u64) -> Result<ChainOutput> {
    config.validate()?;
    let days = validate_dataset(data)?;
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(stream);

    let mut state = initial_state(data, &mut rng);
    let cache = CoefficientCache::new();
    let mut tuning = Tuning {
        latent: kernels::uniform_latent_scales(&state, config.proposal_sd_w),
        params: [config.proposal_sd_param.ln(); 3],
        lambda: [config.proposal_sd_loglambda.ln(); 3],
    };
    let mut counters = Counters::default();
    let mut draws = Vec::with_capacity(config.stored_draws());

    for it in 1..=config.iterations {
        let burning = it <= config.burnin;
        let rate = (config.adapt && burning).then(|| adapt_rate(it));

        let s = update_latent_paths_with(&mut state, data, config.target, &mut tuning.latent, rate, &mut rng);
        if !burning {
            counters.latent.merge(s);
        }
        for f in Family::ALL {
            let s = update_cluster_params_with(
                &mut state,
                f,
                config.target,
                &mut tuning.params[f.index()],
                rate,
                &mut rng,
            );
            if !burning {
                counters.params[f.index()].merge(s);
            }
        }
        for f in Family::ALL {
            update_labels_family(&mut state, f, config.target, config.aux_m, &cache, &mut rng);
        }
        if config.target == Target::Posterior {
            update_variances(&mut state, &mut rng);
        }
        for f in Family::ALL {
            let ok = update_lambda_with(&mut state, f, &mut tuning.lambda[f.index()], rate, &mut rng);
            if !burning {
                counters.lambda.proposed += 1;
                counters.lambda.accepted += u64::from(ok);
            }
        }

        if !burning && (it - config.burnin).is_multiple_of(config.thin) {
            let lp = log_posterior(&state, data);
            draws.push(Draw::capture(it, &state, lp));
        }
    }

    Ok(ChainOutput {
        meta: ChainMeta {
            config: config.clone(),
            region_ids: data.iter().map(|r| r.region_id.clone()).collect(),
            days,
            acceptance: AcceptanceRates {
                latent: counters.latent.rate(),
                beta: counters.params[0].rate(),
                gamma: counters.params[1].rate(),
                phi: counters.params[2].rate(),
                lambda: counters.lambda.rate(),
            },
            wall_time_secs: start.elapsed().as_secs_f64(),
        },
        draws,
    })
}
