//! Forward simulation of one region: the deterministic SIRS recursion next
//! to a noisy latent path with Poisson counts.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sirs_mfm::epidemic::{
    basic_reproduction_number, simulate_series, step_deterministic, CompartmentState, ProbTriple, SirsParams,
    VarianceParams,
};

fn main() -> sirs_mfm::Result<()> {
    let params = SirsParams::new(0.3, 0.1, 0.02)?;
    let n = 1_000_000;
    println!("R0 = {:.4}", basic_reproduction_number(params.beta, params.gamma)?);

    let mut state = CompartmentState::new(980_000.0, 15_000.0, 5_000.0, n)?;
    let init = ProbTriple::new(0.98, 0.015, 0.005)?;
    let var = VarianceParams::new(0.01, 0.01)?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (series, _path) = simulate_series(&params, &var, &init, n, 30, &mut rng)?;

    println!("{:>3} {:>10} {:>10} {:>8} {:>8}", "day", "I (ode)", "R (ode)", "Z_I", "Z_R");
    for t in 0..series.len() {
        state = step_deterministic(&state, &params)?;
        println!("{:>3} {:>10.0} {:>10.0} {:>8} {:>8}", t + 1, state.i, state.r, series.z_i[t], series.z_r[t]);
    }
    Ok(())
}
