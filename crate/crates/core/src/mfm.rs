//! Mixture-of-finite-mixtures partition prior with a shifted Poisson on the
//! number of components and symmetric Dirichlet(1) weights.
//!
//! Besides the generative construction, this module provides the
//! coefficients `V_n(t)` of the collapsed restaurant process:
//!
//! ```text
//! V_n(t) = Σ_{k ≥ t} k(k-1)…(k-t+1) / (k(k+1)…(k+n-1)) · p(k),   p(k) = Pois(k-1; λ)
//! ```
//!
//! The exchangeable partition probability of a partition with `t` clusters
//! of sizes `n_1..n_t` is `V_n(t) · Π n_c!`.

use rand::Rng;
use rand_distr::{Distribution, Exp, Exp1, Poisson};
use statrs::function::gamma::ln_gamma;
use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use crate::error::{Error, Result};
use crate::math::log_add_exp;
use crate::partition::Partition;

/// Symmetric Dirichlet concentration. Only `1` is supported.
pub const ETA: f64 = 1.0;

/// Default relative truncation tolerance of the `V_n(t)` series.
pub const DEFAULT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MfmSpec {
    lambda: f64,
}

impl MfmSpec {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::invalid(format!("MFM rate must be positive, got {lambda}")));
        }
        Ok(Self { lambda })
    }

    /// Rejects any concentration other than `1`.
    pub fn with_eta(lambda: f64, eta: f64) -> Result<Self> {
        if eta != ETA {
            return Err(Error::invalid(format!(
                "only eta = 1 is supported, got {eta}"
            )));
        }
        Self::new(lambda)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

/// Mixture weights from the exponential stick construction.
#[derive(Debug, Clone, PartialEq)]
pub struct StickWeights {
    pub pi: Vec<f64>,
}

/// Draws `k` and the weights by accumulating `Exp(λ)` lengths until they
/// reach one; the last weight takes the remainder.
pub fn sample_mfm_weights<R: Rng + ?Sized>(spec: &MfmSpec, rng: &mut R) -> (usize, StickWeights) {
    let exp = Exp::new(spec.lambda).expect("validated rate");
    let mut pi = Vec::new();
    let mut total = 0.0;
    loop {
        let e: f64 = exp.sample(rng);
        if total + e >= 1.0 {
            pi.push(1.0 - total);
            break;
        }
        total += e;
        pi.push(e);
    }
    (pi.len(), StickWeights { pi })
}

/// Draws a partition of `n` items from the MFM prior.
pub fn sample_partition_generative<R: Rng + ?Sized>(spec: &MfmSpec, n: usize, rng: &mut R) -> Partition {
    let extra = Poisson::new(spec.lambda).expect("validated rate").sample(rng) as usize;
    let k = 1 + extra;
    let mut cumulative: Vec<f64> = Vec::with_capacity(k);
    let mut acc = 0.0;
    for _ in 0..k {
        let g: f64 = Exp1.sample(rng);
        acc += g;
        cumulative.push(acc);
    }
    let labels: Vec<usize> = (0..n)
        .map(|_| {
            let u = rng.random::<f64>() * acc;
            cumulative.partition_point(|&c| c <= u).min(k - 1)
        })
        .collect();
    Partition::from_labels(&labels)
}

/// Table of `ln V_n(t)` for `t = 1..=t_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct MfmCoefficients {
    log_vn: Vec<f64>,
    n: usize,
    lambda: f64,
    tol: f64,
}

impl MfmCoefficients {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn t_max(&self) -> usize {
        self.log_vn.len()
    }

    /// `ln V_n(t)`, `t` one-based.
    pub fn log_vn(&self, t: usize) -> Option<f64> {
        t.checked_sub(1).and_then(|i| self.log_vn.get(i)).copied()
    }

    pub fn values(&self) -> &[f64] {
        &self.log_vn
    }
}

/// `ln V_n(t)` by summing the series in log space.
///
/// Consecutive terms have ratio `λ(k+1) / ((k+1-t)(k+n))`, which decreases
/// in `k`. Once it drops below one the remaining tail is bounded by a
/// geometric series, and summation stops when that bound is below `tol`
/// relative to the running total.
pub fn log_vn(n: usize, t: usize, lambda: f64, tol: f64) -> f64 {
    assert!(t >= 1 && n >= 1);
    let ln_lambda = lambda.ln();
    let (nf, tf) = (n as f64, t as f64);
    let mut k = tf;
    let mut term = ln_gamma(k + 1.0) - ln_gamma(k - tf + 1.0) - ln_gamma(k + nf) - lambda
        + (k - 1.0) * ln_lambda;
    let mut total = term;
    let ln_tol = tol.ln();
    for _ in 0..1_000_000 {
        let ratio = lambda * (k + 1.0) / ((k + 1.0 - tf) * (k + nf));
        if ratio < 1.0 {
            let tail = term + (ratio / (1.0 - ratio)).ln();
            if tail < total + ln_tol {
                break;
            }
        }
        term += ratio.ln();
        k += 1.0;
        total = log_add_exp(total, term);
    }
    total
}

pub fn log_vn_coefficients(n: usize, spec: &MfmSpec, t_max: usize, tol: f64) -> Result<MfmCoefficients> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::invalid(format!("truncation tolerance {tol} must be in (0, 1)")));
    }
    if n == 0 || t_max == 0 || t_max > n {
        return Err(Error::invalid(format!("need 1 <= t_max <= n, got t_max = {t_max}, n = {n}")));
    }
    let log_vn = (1..=t_max).map(|t| log_vn(n, t, spec.lambda, tol)).collect();
    Ok(MfmCoefficients {
        log_vn,
        n,
        lambda: spec.lambda,
        tol,
    })
}

/// Unnormalised log prior weights for seating one item given the others.
///
/// `part_minus_i` holds the other `n - 1` items. Entries `0..k` are the
/// existing clusters (`ln(|c| + 1)`); the last entry opens a new cluster
/// (`ln V_n(k+1) - ln V_n(k)`).
pub fn seat_log_weights(part_minus_i: &Partition, coeffs: &MfmCoefficients) -> Result<Vec<f64>> {
    let t = part_minus_i.k();
    let mut w: Vec<f64> = part_minus_i
        .sizes()
        .iter()
        .map(|&s| (s as f64 + ETA).ln())
        .collect();
    if t == 0 {
        w.push(0.0);
        return Ok(w);
    }
    let (lo, hi) = match (coeffs.log_vn(t), coeffs.log_vn(t + 1)) {
        (Some(lo), Some(hi)) => (lo, hi),
        _ => {
            return Err(Error::invalid(format!(
                "coefficients cover t <= {}, need {}",
                coeffs.t_max(),
                t + 1
            )))
        }
    };
    w.push(hi - lo + ETA.ln());
    Ok(w)
}

/// Log of the exchangeable partition probability under `MFM(λ)`.
pub fn log_partition_prior(part: &Partition, spec: &MfmSpec) -> f64 {
    log_partition_prior_with(part, spec.lambda, DEFAULT_TOL)
}

pub(crate) fn log_partition_prior_with(part: &Partition, lambda: f64, tol: f64) -> f64 {
    if part.n() <= 1 {
        return 0.0;
    }
    let sizes: f64 = part.sizes().iter().map(|&s| ln_gamma(s as f64 + 1.0)).sum();
    log_vn(part.n(), part.k(), lambda, tol) + sizes
}

/// Shared cache of coefficient tables keyed by `(n, λ)` with `λ` rounded to
/// twelve significant digits. Readers proceed concurrently; a miss takes the
/// write lock.
#[derive(Debug, Default)]
pub struct CoefficientCache {
    inner: RwLock<HashMap<(usize, u64), Arc<MfmCoefficients>>>,
}

const CACHE_LIMIT: usize = 4096;

impl CoefficientCache {
    pub fn new() -> Self {
        Self::default()
    }

    fn key(n: usize, lambda: f64) -> (usize, u64) {
        let rounded: f64 = format!("{lambda:.11e}").parse().unwrap_or(lambda);
        (n, rounded.to_bits())
    }

    /// Table covering `t = 1..=n` for this `(n, λ)`.
    pub fn get(&self, n: usize, lambda: f64) -> Result<Arc<MfmCoefficients>> {
        let key = Self::key(n, lambda);
        if let Some(c) = self.inner.read().expect("cache lock").get(&key) {
            return Ok(Arc::clone(c));
        }
        let coeffs = Arc::new(log_vn_coefficients(n, &MfmSpec::new(lambda)?, n, DEFAULT_TOL)?);
        let mut map = self.inner.write().expect("cache lock");
        if map.len() >= CACHE_LIMIT {
            map.clear();
        }
        map.insert(key, Arc::clone(&coeffs));
        Ok(coeffs)
    }

    pub fn len(&self) -> usize {
        self.inner.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
