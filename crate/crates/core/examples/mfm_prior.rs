//! The mixture-of-finite-mixtures prior: number of components, the partition
//! probabilities of four items and the seating weights that drive the
//! sampler's label moves.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sirs_mfm::mfm::{log_partition_prior, log_vn_coefficients, sample_mfm_weights, MfmSpec, DEFAULT_TOL};
use sirs_mfm::partition::enumerate_partitions;

fn main() -> sirs_mfm::Result<()> {
    let spec = MfmSpec::new(1.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (k, weights) = sample_mfm_weights(&spec, &mut rng);
    println!("one draw: k = {k}, weights = {:.3?}", weights.pi);

    let coeffs = log_vn_coefficients(4, &spec, 4, DEFAULT_TOL)?;
    for t in 1..=4 {
        println!("ln V_4({t}) = {:.6}", coeffs.log_vn(t).unwrap_or(f64::NAN));
    }

    let mut total = 0.0;
    for part in enumerate_partitions(4) {
        let p = log_partition_prior(&part, &spec).exp();
        total += p;
        println!("{:?}  {p:.5}", part.labels());
    }
    println!("sum over all 15 partitions = {total:.10}");
    Ok(())
}
