//! Single-region SIRS dynamics and its latent log-ratio state-space form.
//!
//! The hidden rates `(P_S, P_I, P_R)` live on the open simplex. They are
//! tracked through the log-ratios `W_S = ln(P_S / P_R)` and
//! `W_I = ln(P_I / P_R)`, which evolve as a Gaussian random walk around the
//! deterministic SIRS drift. Counts of recovered and infectious individuals
//! are Poisson around `N * P_R` and `N * P_I`.

use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{log_add_exp, normal_ln_pdf, poisson_ln_pmf};

/// Compartment sizes of one region at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompartmentState {
    pub s: f64,
    pub i: f64,
    pub r: f64,
    pub n: u64,
}

impl CompartmentState {
    pub fn new(s: f64, i: f64, r: f64, n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("population must be positive"));
        }
        if !(s >= 0.0 && i >= 0.0 && r >= 0.0) {
            return Err(Error::domain(format!("negative compartment in ({s}, {i}, {r})")));
        }
        let total = n as f64;
        if (s + i + r - total).abs() > 1e-9 * total {
            return Err(Error::invalid(format!(
                "compartments sum to {} but population is {n}",
                s + i + r
            )));
        }
        Ok(Self { s, i, r, n })
    }
}

/// Per-day transmission, recovery and loss-of-immunity rates.
///
/// Rates must lie in `[0, 1)`. The model proper works on the open interval;
/// zero is accepted so that degenerate no-dynamics cases can be expressed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SirsParams {
    pub beta: f64,
    pub gamma: f64,
    pub phi: f64,
}

impl SirsParams {
    pub fn new(beta: f64, gamma: f64, phi: f64) -> Result<Self> {
        for (name, v) in [("beta", beta), ("gamma", gamma), ("phi", phi)] {
            if !(0.0..1.0).contains(&v) {
                return Err(Error::invalid(format!("{name} = {v} outside [0, 1)")));
            }
        }
        Ok(Self { beta, gamma, phi })
    }

    /// True when every rate is strictly inside `(0, 1)`.
    pub fn is_interior(&self) -> bool {
        [self.beta, self.gamma, self.phi]
            .iter()
            .all(|&v| v > 0.0 && v < 1.0)
    }
}

/// Hidden susceptible / infectious / recovered proportions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbTriple {
    pub p_s: f64,
    pub p_i: f64,
    pub p_r: f64,
}

impl ProbTriple {
    pub fn new(p_s: f64, p_i: f64, p_r: f64) -> Result<Self> {
        for (name, v) in [("p_s", p_s), ("p_i", p_i), ("p_r", p_r)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::domain(format!("{name} = {v} outside (0, 1)")));
            }
        }
        if (p_s + p_i + p_r - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!(
                "proportions sum to {}",
                p_s + p_i + p_r
            )));
        }
        Ok(Self { p_s, p_i, p_r })
    }

    pub fn sum(&self) -> f64 {
        self.p_s + self.p_i + self.p_r
    }
}

/// Daily log-ratio states of one region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentPath {
    pub w_s: Vec<f64>,
    pub w_i: Vec<f64>,
}

impl LatentPath {
    pub fn new(w_s: Vec<f64>, w_i: Vec<f64>) -> Result<Self> {
        if w_s.len() != w_i.len() {
            return Err(Error::invalid(format!(
                "latent sequences differ in length ({} vs {})",
                w_s.len(),
                w_i.len()
            )));
        }
        if w_s.is_empty() {
            return Err(Error::invalid("latent path is empty"));
        }
        if w_s.iter().chain(&w_i).any(|w| !w.is_finite()) {
            return Err(Error::domain("latent path has a non-finite entry"));
        }
        Ok(Self { w_s, w_i })
    }

    pub fn len(&self) -> usize {
        self.w_s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w_s.is_empty()
    }

    /// Initial path from observed counts: zero counts are replaced by 0.5
    /// before forming the log-ratios.
    pub fn from_counts(series: &ObservedSeries) -> Self {
        let n = series.n as f64;
        let adj = |x: f64| if x <= 0.0 { 0.5 } else { x };
        let (w_s, w_i) = series
            .z_r
            .iter()
            .zip(&series.z_i)
            .map(|(&zr, &zi)| {
                let zr = zr as f64;
                let zi = zi as f64;
                let zs = adj(n - zr - zi);
                let (zr, zi) = (adj(zr), adj(zi));
                ((zs / zr).ln(), (zi / zr).ln())
            })
            .unzip();
        Self { w_s, w_i }
    }
}

/// Innovation variances of the latent random walk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceParams {
    pub sigma2_s: f64,
    pub sigma2_i: f64,
}

impl VarianceParams {
    pub fn new(sigma2_s: f64, sigma2_i: f64) -> Result<Self> {
        if !(sigma2_s > 0.0 && sigma2_i > 0.0 && sigma2_s.is_finite() && sigma2_i.is_finite()) {
            return Err(Error::invalid(format!(
                "variances must be positive, got ({sigma2_s}, {sigma2_i})"
            )));
        }
        Ok(Self { sigma2_s, sigma2_i })
    }
}

/// Observed recovered (including deaths) and infectious counts of one region.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservedSeries {
    pub z_r: Vec<u64>,
    pub z_i: Vec<u64>,
    pub n: u64,
}

impl ObservedSeries {
    pub fn new(z_r: Vec<u64>, z_i: Vec<u64>, n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("population must be positive"));
        }
        if z_r.len() != z_i.len() {
            return Err(Error::invalid(format!(
                "count sequences differ in length ({} vs {})",
                z_r.len(),
                z_i.len()
            )));
        }
        if let Some(t) = z_r.iter().zip(&z_i).position(|(&r, &i)| r + i > n) {
            return Err(Error::invalid(format!(
                "day {t}: recovered + infectious exceeds population {n}"
            )));
        }
        Ok(Self { z_r, z_i, n })
    }

    pub fn len(&self) -> usize {
        self.z_r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z_r.is_empty()
    }

    /// Implied susceptible count `N - Z_I - Z_R` on day `t`.
    pub fn z_s(&self, t: usize) -> u64 {
        self.n - self.z_r[t] - self.z_i[t]
    }
}

/// One day of the discrete-time SIRS recursion on real-valued compartments.
pub fn step_deterministic(state: &CompartmentState, params: &SirsParams) -> Result<CompartmentState> {
    let n = state.n as f64;
    let infections = params.beta * state.s * state.i / n;
    let recoveries = params.gamma * state.i;
    let waning = params.phi * state.r;
    let s = state.s - infections + waning;
    let i = state.i + infections - recoveries;
    let r = state.r + recoveries - waning;
    if s < 0.0 || i < 0.0 || r < 0.0 {
        return Err(Error::domain(format!(
            "step produced a negative compartment ({s}, {i}, {r})"
        )));
    }
    Ok(CompartmentState { s, i, r, n: state.n })
}

pub fn latent_from_probs(p: &ProbTriple) -> Result<(f64, f64)> {
    for v in [p.p_s, p.p_i, p.p_r] {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::domain(format!("proportion {v} on the simplex boundary")));
        }
    }
    Ok(((p.p_s / p.p_r).ln(), (p.p_i / p.p_r).ln()))
}

/// Softmax back-transform. Shifts by the maximum exponent, so saturated
/// inputs yield proportions of exactly 0 or 1 rather than NaN.
pub fn probs_from_latent(w_s: f64, w_i: f64) -> ProbTriple {
    let m = w_s.max(w_i).max(0.0);
    let e_r = (-m).exp();
    let e_s = (w_s - m).exp();
    let e_i = (w_i - m).exp();
    let total = e_r + e_s + e_i;
    ProbTriple {
        p_s: e_s / total,
        p_i: e_i / total,
        p_r: e_r / total,
    }
}

/// `(ln P_S, ln P_I, ln P_R)` for the given log-ratios.
#[inline]
pub(crate) fn log_probs_from_latent(w_s: f64, w_i: f64) -> (f64, f64, f64) {
    let log_p_r = -log_add_exp(log_add_exp(0.0, w_s), w_i);
    (w_s + log_p_r, w_i + log_p_r, log_p_r)
}

/// Deterministic one-day evolution of the hidden proportions.
pub fn evolve_probs(p: &ProbTriple, params: &SirsParams) -> Result<ProbTriple> {
    let infections = params.beta * p.p_s * p.p_i;
    let recoveries = params.gamma * p.p_i;
    let waning = params.phi * p.p_r;
    let p_r = p.p_r + recoveries - waning;
    let p_i = p.p_i + infections - recoveries;
    let p_s = p.p_s - infections + waning;
    if !(p_s > 0.0) {
        return Err(Error::domain(format!("evolved susceptible proportion {p_s} <= 0")));
    }
    if !(p_i > 0.0 && p_r > 0.0) {
        return Err(Error::domain(format!(
            "evolved proportions leave the simplex ({p_s}, {p_i}, {p_r})"
        )));
    }
    Ok(ProbTriple { p_s, p_i, p_r })
}

/// Conditional means `(mu_S, mu_I)` of the next day's log-ratios.
///
/// Evaluated in log space so that `|w|` in the hundreds neither overflows
/// nor loses the `phi * exp(-w_s)` term.
pub fn latent_drift(w_s: f64, w_i: f64, params: &SirsParams) -> Result<(f64, f64)> {
    if !(w_s.is_finite() && w_i.is_finite()) {
        return Err(Error::domain("non-finite latent state"));
    }
    let (log_p_s, log_p_i, _) = log_probs_from_latent(w_s, w_i);
    let SirsParams { beta, gamma, phi } = *params;

    // ln(1 - phi + gamma * e^{w_i})
    let denom = log_add_exp((1.0 - phi).ln(), gamma.ln() + w_i);

    // ln(1 + phi * e^{-w_s} - beta * P_I)
    let base_s = 1.0 - beta * log_p_i.exp();
    let num_s = if base_s > 0.0 {
        log_add_exp(base_s.ln(), phi.ln() - w_s)
    } else {
        let arg = base_s + phi * (-w_s).exp();
        if !(arg > 0.0) {
            return Err(Error::domain(format!(
                "susceptible drift argument {arg} <= 0"
            )));
        }
        arg.ln()
    };

    // ln(1 - gamma + beta * P_S)
    let arg_i = 1.0 - gamma + beta * log_p_s.exp();
    if !(arg_i > 0.0) {
        return Err(Error::domain(format!("infectious drift argument {arg_i} <= 0")));
    }

    let mu_s = w_s + num_s - denom;
    let mu_i = w_i + arg_i.ln() - denom;
    if !(mu_s.is_finite() && mu_i.is_finite()) {
        return Err(Error::domain("non-finite drift"));
    }
    Ok((mu_s, mu_i))
}

/// Poisson log-likelihood of one day's counts given its latent state.
#[inline]
pub(crate) fn obs_log_term(z_r: u64, z_i: u64, ln_n: f64, w_s: f64, w_i: f64) -> f64 {
    let (_, log_p_i, log_p_r) = log_probs_from_latent(w_s, w_i);
    poisson_ln_pmf(z_r, ln_n + log_p_r) + poisson_ln_pmf(z_i, ln_n + log_p_i)
}

/// Observation log-likelihood of a region's count series given its path.
pub fn log_likelihood_obs(series: &ObservedSeries, path: &LatentPath) -> Result<f64> {
    if series.len() != path.len() {
        return Err(Error::invalid(format!(
            "series has {} days but path has {}",
            series.len(),
            path.len()
        )));
    }
    let ln_n = (series.n as f64).ln();
    Ok((0..series.len())
        .map(|t| obs_log_term(series.z_r[t], series.z_i[t], ln_n, path.w_s[t], path.w_i[t]))
        .sum())
}

/// Log-density of the latent path's transitions. The first day carries no
/// density term.
pub fn log_density_path(path: &LatentPath, params: &SirsParams, var: &VarianceParams) -> Result<f64> {
    if path.len() < 2 {
        return Err(Error::invalid("path density needs at least two days"));
    }
    let mut total = 0.0;
    for t in 0..path.len() - 1 {
        let (mu_s, mu_i) = latent_drift(path.w_s[t], path.w_i[t], params)?;
        total += normal_ln_pdf(path.w_s[t + 1], mu_s, var.sigma2_s)
            + normal_ln_pdf(path.w_i[t + 1], mu_i, var.sigma2_i);
    }
    Ok(total)
}

/// Sum of squared innovations `(Σ r_S², Σ r_I²)` along a path.
pub fn innovation_sums(path: &LatentPath, params: &SirsParams) -> Result<(f64, f64)> {
    let mut ss = (0.0, 0.0);
    for t in 0..path.len().saturating_sub(1) {
        let (mu_s, mu_i) = latent_drift(path.w_s[t], path.w_i[t], params)?;
        ss.0 += (path.w_s[t + 1] - mu_s).powi(2);
        ss.1 += (path.w_i[t + 1] - mu_i).powi(2);
    }
    Ok(ss)
}

const MAX_RESAMPLES: usize = 1000;

/// Draw a latent path and its Poisson counts.
///
/// `init` is the hidden state on the day before the first observation, so
/// the first observed day is already one transition away from it.
pub fn simulate_series<R: Rng + ?Sized>(
    params: &SirsParams,
    var: &VarianceParams,
    init: &ProbTriple,
    n: u64,
    days: usize,
    rng: &mut R,
) -> Result<(ObservedSeries, LatentPath)> {
    if days < 2 {
        return Err(Error::invalid("simulation needs at least two days"));
    }
    if n == 0 {
        return Err(Error::invalid("population must be positive"));
    }
    let (mut ws, mut wi) = latent_from_probs(init)?;
    let noise_s = Normal::new(0.0, var.sigma2_s.sqrt()).map_err(|e| Error::invalid(e.to_string()))?;
    let noise_i = Normal::new(0.0, var.sigma2_i.sqrt()).map_err(|e| Error::invalid(e.to_string()))?;
    let ln_n = (n as f64).ln();

    let mut w_s = Vec::with_capacity(days);
    let mut w_i = Vec::with_capacity(days);
    let mut z_r = Vec::with_capacity(days);
    let mut z_i = Vec::with_capacity(days);
    for t in 0..days {
        let (mu_s, mu_i) = latent_drift(ws, wi, params)?;
        ws = mu_s + noise_s.sample(rng);
        wi = mu_i + noise_i.sample(rng);
        let (_, log_p_i, log_p_r) = log_probs_from_latent(ws, wi);
        let mean_r = (ln_n + log_p_r).exp();
        let mean_i = (ln_n + log_p_i).exp();
        let mut attempts = 0;
        let (r, i) = loop {
            let r = draw_poisson(mean_r, rng)?;
            let i = draw_poisson(mean_i, rng)?;
            if r + i <= n {
                break (r, i);
            }
            attempts += 1;
            if attempts >= MAX_RESAMPLES {
                return Err(Error::Simulation(format!(
                    "day {t}: {MAX_RESAMPLES} draws exceeded population {n}"
                )));
            }
        };
        w_s.push(ws);
        w_i.push(wi);
        z_r.push(r);
        z_i.push(i);
    }
    Ok((ObservedSeries { z_r, z_i, n }, LatentPath { w_s, w_i }))
}

fn draw_poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> Result<u64> {
    if mean <= 0.0 {
        return Ok(0);
    }
    let d = Poisson::new(mean).map_err(|e| Error::Simulation(format!("poisson({mean}): {e}")))?;
    Ok(d.sample(rng) as u64)
}

/// Basic reproduction number `beta / gamma`.
pub fn basic_reproduction_number(beta: f64, gamma: f64) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::domain(format!("recovery rate {gamma} must be positive")));
    }
    Ok(beta / gamma)
}
