//! Metropolis-within-Gibbs update blocks.
//!
//! Each public `update_*` function is one block of the sweep, usable on its
//! own with the fixed proposal scales from [`SamplerConfig`]. The chain
//! driver calls the `*_with` variants, which take per-site scales so they
//! can be tuned during burn-in.

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use super::config::{SamplerConfig, Target};
use super::state::{Family, ModelState, RegionData};
use crate::epidemic::{
    innovation_sums, latent_drift, log_density_path, obs_log_term, LatentPath, SirsParams,
    VarianceParams,
};
use crate::math::{ln_logistic_jacobian, log_sum_exp, logit, normal_ln_pdf, sigmoid};
use crate::mfm::{log_partition_prior_with, CoefficientCache, DEFAULT_TOL, ETA};
use crate::partition::Partition;

/// Shape and scale of the inverse-gamma prior on each innovation variance.
pub const VARIANCE_PRIOR: (f64, f64) = (0.01, 0.01);
/// Shape and rate of the gamma prior on each MFM rate.
pub const LAMBDA_PRIOR: (f64, f64) = (1.0, 1.0);

/// Proposal and acceptance counts for one block.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MoveStats {
    pub proposed: u64,
    pub accepted: u64,
}

impl MoveStats {
    pub fn rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }

    fn record(&mut self, accepted: bool) {
        self.proposed += 1;
        self.accepted += u64::from(accepted);
    }

    pub fn merge(&mut self, other: MoveStats) {
        self.proposed += other.proposed;
        self.accepted += other.accepted;
    }
}

#[inline]
fn accept<R: Rng + ?Sized>(log_ratio: f64, rng: &mut R) -> bool {
    if log_ratio >= 0.0 {
        return true;
    }
    if log_ratio.is_nan() {
        return false;
    }
    rng.random::<f64>().ln() < log_ratio
}

#[inline]
fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Log-density of the latent transitions for one region, or `-inf`.
#[inline]
fn path_term(path: &LatentPath, params: &SirsParams, var: &VarianceParams) -> f64 {
    log_density_path(path, params, var).unwrap_or(f64::NEG_INFINITY)
}

/// Region log-likelihood as a function of one family's rate.
#[inline]
fn region_rate_loglik(state: &ModelState, target: Target, f: Family, i: usize, value: f64) -> f64 {
    match target {
        Target::Prior => 0.0,
        Target::Posterior => {
            let params = f.with_value(state.region_params(i), value);
            path_term(&state.paths[i], &params, &state.variances[i])
        }
    }
}

// ---------------------------------------------------------------------------
// Latent paths
// ---------------------------------------------------------------------------

/// Log-scales of the latent random-walk proposals, one per coordinate:
/// `scales[i][2 * t]` for `w_s(t)`, `scales[i][2 * t + 1]` for `w_i(t)`.
pub type LatentScales = Vec<Vec<f64>>;

pub fn uniform_latent_scales(state: &ModelState, sd: f64) -> LatentScales {
    state
        .paths
        .iter()
        .map(|p| vec![sd.ln(); 2 * p.len()])
        .collect()
}

/// Local log-density of day `t` given the current path, using a cached
/// drift of day `t - 1`.
#[inline]
#[allow(clippy::too_many_arguments)]
fn latent_local(
    path: &LatentPath,
    t: usize,
    ws: f64,
    wi: f64,
    prev_mu: Option<(f64, f64)>,
    obs: Option<(u64, u64, f64)>,
    params: &SirsParams,
    var: &VarianceParams,
) -> f64 {
    let mut total = 0.0;
    if let Some((zr, zi, ln_n)) = obs {
        total += obs_log_term(zr, zi, ln_n, ws, wi);
    }
    if let Some((mu_s, mu_i)) = prev_mu {
        total += normal_ln_pdf(ws, mu_s, var.sigma2_s) + normal_ln_pdf(wi, mu_i, var.sigma2_i);
    }
    if t + 1 < path.len() {
        match latent_drift(ws, wi, params) {
            Ok((mu_s, mu_i)) => {
                total += normal_ln_pdf(path.w_s[t + 1], mu_s, var.sigma2_s)
                    + normal_ln_pdf(path.w_i[t + 1], mu_i, var.sigma2_i);
            }
            Err(_) => return f64::NEG_INFINITY,
        }
    }
    total
}

/// Single-site Gaussian random-walk updates of every latent coordinate.
///
/// When `adapt_rate` is set, each coordinate's log-scale moves toward a 0.44
/// acceptance rate by that step size.
pub fn update_latent_paths_with<R: Rng + ?Sized>(
    state: &mut ModelState,
    data: &[RegionData],
    target: Target,
    scales: &mut LatentScales,
    adapt_rate: Option<f64>,
    rng: &mut R,
) -> MoveStats {
    const GOAL: f64 = 0.44;
    let mut stats = MoveStats::default();
    for i in 0..state.n_regions() {
        let params = state.region_params(i);
        let var = state.variances[i];
        let series = &data[i].series;
        let ln_n = (series.n as f64).ln();
        let path = &mut state.paths[i];
        let site_scales = &mut scales[i];
        for t in 0..path.len() {
            let prev_mu = if t == 0 {
                None
            } else {
                latent_drift(path.w_s[t - 1], path.w_i[t - 1], &params).ok()
            };
            let obs = match target {
                Target::Posterior => Some((series.z_r[t], series.z_i[t], ln_n)),
                Target::Prior => None,
            };
            let mut current = latent_local(path, t, path.w_s[t], path.w_i[t], prev_mu, obs, &params, &var);
            for component in 0..2 {
                let log_sd = &mut site_scales[2 * t + component];
                let step = log_sd.exp() * std_normal(rng);
                let (ws, wi) = if component == 0 {
                    (path.w_s[t] + step, path.w_i[t])
                } else {
                    (path.w_s[t], path.w_i[t] + step)
                };
                let proposed = latent_local(path, t, ws, wi, prev_mu, obs, &params, &var);
                let ok = proposed.is_finite() && accept(proposed - current, rng);
                if ok {
                    path.w_s[t] = ws;
                    path.w_i[t] = wi;
                    current = proposed;
                }
                stats.record(ok);
                if let Some(rate) = adapt_rate {
                    *log_sd += rate * (f64::from(u8::from(ok)) - GOAL);
                }
            }
        }
    }
    stats
}

pub fn update_latent_paths<R: Rng + ?Sized>(
    state: &mut ModelState,
    data: &[RegionData],
    config: &SamplerConfig,
    rng: &mut R,
) -> MoveStats {
    let mut scales = uniform_latent_scales(state, config.proposal_sd_w);
    update_latent_paths_with(state, data, config.target, &mut scales, None, rng)
}

// ---------------------------------------------------------------------------
// Cluster-level rates
// ---------------------------------------------------------------------------

/// Logit-scale random-walk update of every cluster value of one family,
/// pooling the member regions' path densities.
pub fn update_cluster_params_with<R: Rng + ?Sized>(
    state: &mut ModelState,
    family: Family,
    target: Target,
    log_sd: &mut f64,
    adapt_rate: Option<f64>,
    rng: &mut R,
) -> MoveStats {
    const GOAL: f64 = 0.44;
    let mut stats = MoveStats::default();
    let fi = family.index();
    let members = state.partitions[fi].clusters();
    for (c, regions) in members.iter().enumerate() {
        let value = state.cluster_values[fi][c];
        let x = logit(value);
        let x_new = x + log_sd.exp() * std_normal(rng);
        let value_new = sigmoid(x_new);
        let ok = if value_new > 0.0 && value_new < 1.0 {
            let loglik = |v: f64| -> f64 {
                regions
                    .iter()
                    .map(|&i| region_rate_loglik(state, target, family, i, v))
                    .sum()
            };
            let cur = loglik(value) + ln_logistic_jacobian(x);
            let new = loglik(value_new) + ln_logistic_jacobian(x_new);
            new.is_finite() && accept(new - cur, rng)
        } else {
            false
        };
        if ok {
            state.cluster_values[fi][c] = value_new;
        }
        stats.record(ok);
        if let Some(rate) = adapt_rate {
            *log_sd += rate * (f64::from(u8::from(ok)) - GOAL);
        }
    }
    stats
}

pub fn update_cluster_params<R: Rng + ?Sized>(
    state: &mut ModelState,
    config: &SamplerConfig,
    rng: &mut R,
) -> MoveStats {
    let mut stats = MoveStats::default();
    for f in Family::ALL {
        let mut log_sd = config.proposal_sd_param.ln();
        stats.merge(update_cluster_params_with(state, f, config.target, &mut log_sd, None, rng));
    }
    stats
}

// ---------------------------------------------------------------------------
// Labels
// ---------------------------------------------------------------------------

/// Reassigns each region of one family in turn using auxiliary draws from
/// the uniform base measure (Neal's algorithm 8 with MFM seat weights).
/// Returns the number of regions whose cluster changed.
pub fn update_labels_family<R: Rng + ?Sized>(
    state: &mut ModelState,
    family: Family,
    target: Target,
    aux_m: usize,
    cache: &CoefficientCache,
    rng: &mut R,
) -> usize {
    let n = state.n_regions();
    let fi = family.index();
    if n <= 1 {
        state.partitions[fi] = Partition::single_cluster(n);
        state.cluster_values[fi].truncate(n);
        return 0;
    }
    let coeffs = cache
        .get(n, state.lambdas[fi])
        .expect("lambda stays positive and n >= 1");
    let base: Vec<SirsParams> = (0..n).map(|i| state.region_params(i)).collect();
    let mut labels: Vec<usize> = state.partitions[fi].labels().to_vec();
    let mut sizes: Vec<usize> = state.partitions[fi].sizes().to_vec();
    let mut values: Vec<f64> = std::mem::take(&mut state.cluster_values[fi]);
    let mut aux = vec![0.0; aux_m];
    let mut weights = Vec::with_capacity(sizes.len() + aux_m);
    let mut moved = 0;

    for i in 0..n {
        let old = labels[i];
        sizes[old] -= 1;
        let singleton = sizes[old] == 0;
        for a in aux.iter_mut() {
            *a = draw_open_unit(rng);
        }
        if singleton {
            aux[0] = values[old];
            sizes.remove(old);
            values.remove(old);
            for l in labels.iter_mut() {
                if *l > old {
                    *l -= 1;
                }
            }
        }
        let k = sizes.len();
        // with i removed there are k clusters among the other n - 1 regions
        let new_weight = if k == 0 {
            0.0
        } else {
            coeffs.log_vn(k + 1).unwrap() - coeffs.log_vn(k).unwrap() + ETA.ln()
                - (aux_m as f64).ln()
        };

        let cluster_lik = |v: f64| match target {
            Target::Prior => 0.0,
            Target::Posterior => path_term(
                &state.paths[i],
                &family.with_value(base[i], v),
                &state.variances[i],
            ),
        };
        weights.clear();
        for c in 0..k {
            weights.push((sizes[c] as f64 + ETA).ln() + cluster_lik(values[c]));
        }
        for &a in &aux {
            weights.push(new_weight + cluster_lik(a));
        }
        let choice = sample_log_weights(&weights, rng);
        let label = if choice < k {
            sizes[choice] += 1;
            choice
        } else {
            sizes.push(1);
            values.push(aux[choice - k]);
            k
        };
        labels[i] = label;
        moved += usize::from(if singleton { choice != k } else { label != old });
    }

    // restore canonical order
    let part = Partition::from_labels(&labels);
    let mut canon_values = vec![0.0; part.k()];
    for (i, &l) in labels.iter().enumerate() {
        canon_values[part.label(i)] = values[l];
    }
    state.partitions[fi] = part;
    state.cluster_values[fi] = canon_values;
    moved
}

pub fn update_labels<R: Rng + ?Sized>(
    state: &mut ModelState,
    config: &SamplerConfig,
    cache: &CoefficientCache,
    rng: &mut R,
) -> usize {
    Family::ALL
        .iter()
        .map(|&f| update_labels_family(state, f, config.target, config.aux_m, cache, rng))
        .sum()
}

/// Uniform draw on the open unit interval.
fn draw_open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// Index drawn with probability proportional to `exp(weights)`.
fn sample_log_weights<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let norm = log_sum_exp(weights);
    if !norm.is_finite() {
        // every option impossible: fall back to a uniform choice
        return rng.random_range(0..weights.len());
    }
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (j, w) in weights.iter().enumerate() {
        acc += (w - norm).exp();
        if u < acc {
            return j;
        }
    }
    weights
        .iter()
        .rposition(|w| w.is_finite())
        .unwrap_or(weights.len() - 1)
}

// ---------------------------------------------------------------------------
// Variances
// ---------------------------------------------------------------------------

/// Conjugate inverse-gamma draw of both innovation variances of every region.
pub fn update_variances<R: Rng + ?Sized>(state: &mut ModelState, rng: &mut R) {
    let (a0, b0) = VARIANCE_PRIOR;
    for i in 0..state.n_regions() {
        let params = state.region_params(i);
        let path = &state.paths[i];
        let Ok((ss_s, ss_i)) = innovation_sums(path, &params) else {
            continue;
        };
        let shape = a0 + (path.len() - 1) as f64 / 2.0;
        let s2s = draw_inv_gamma(shape, b0 + ss_s / 2.0, rng);
        let s2i = draw_inv_gamma(shape, b0 + ss_i / 2.0, rng);
        if let (Some(s2s), Some(s2i)) = (s2s, s2i) {
            state.variances[i] = VarianceParams {
                sigma2_s: s2s,
                sigma2_i: s2i,
            };
        }
    }
}

/// Inverse-gamma draw with shape `a` and scale `b`; `None` if the result is
/// not a positive finite number.
pub fn draw_inv_gamma<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> Option<f64> {
    let g: f64 = Gamma::new(a, 1.0 / b).ok()?.sample(rng);
    let x = 1.0 / g;
    (x > 0.0 && x.is_finite()).then_some(x)
}

// ---------------------------------------------------------------------------
// MFM rates
// ---------------------------------------------------------------------------

/// Log-scale random-walk update of one family's MFM rate. The target is the
/// gamma prior times the partition probability; data do not enter.
pub fn update_lambda_with<R: Rng + ?Sized>(
    state: &mut ModelState,
    family: Family,
    log_sd: &mut f64,
    adapt_rate: Option<f64>,
    rng: &mut R,
) -> bool {
    const GOAL: f64 = 0.44;
    let fi = family.index();
    let part = &state.partitions[fi];
    let lambda = state.lambdas[fi];
    let lambda_new = lambda * (log_sd.exp() * std_normal(rng)).exp();
    let (a, b) = LAMBDA_PRIOR;
    let log_target = |l: f64| {
        (a - 1.0) * l.ln() - b * l + log_partition_prior_with(part, l, DEFAULT_TOL) + l.ln()
    };
    let ok = lambda_new > 0.0
        && lambda_new.is_finite()
        && accept(log_target(lambda_new) - log_target(lambda), rng);
    if ok {
        state.lambdas[fi] = lambda_new;
    }
    if let Some(rate) = adapt_rate {
        *log_sd += rate * (f64::from(u8::from(ok)) - GOAL);
    }
    ok
}

pub fn update_lambda<R: Rng + ?Sized>(
    state: &mut ModelState,
    config: &SamplerConfig,
    rng: &mut R,
) -> MoveStats {
    let mut stats = MoveStats::default();
    for f in Family::ALL {
        let mut log_sd = config.proposal_sd_loglambda.ln();
        stats.record(update_lambda_with(state, f, &mut log_sd, None, rng));
    }
    stats
}
