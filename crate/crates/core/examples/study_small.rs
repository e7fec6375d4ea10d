//! A small two-group simulation study: each family has regions at 0.06 and
//! 0.6; reports grouping (Rand index, estimated cluster count) and bias.
//!
//! Usage: cargo run --release --example study_small [n] [replicates] [iterations]

use std::time::Instant;

use sirs_mfm::mcmc::{Family, SamplerConfig};
use sirs_mfm::study::{run_study_with, ScenarioSpec};

fn main() -> sirs_mfm::Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let n = args.first().copied().unwrap_or(8);
    let replicates = args.get(1).copied().unwrap_or(2);
    let iterations = args.get(2).copied().unwrap_or(3000);

    let spec = ScenarioSpec::two_group(n, 30, 0.06, 0.6, replicates, 2024);
    let config = SamplerConfig {
        iterations,
        burnin: iterations / 3,
        thin: 5,
        ..SamplerConfig::default()
    };
    let start = Instant::now();
    let result = run_study_with(&spec, &config, |rec| {
        let ri: Vec<String> = rec.families.iter().map(|f| format!("{}={:.3}/k{}", f.family, f.rand_index, f.k_hat)).collect();
        println!("replicate {}: {}", rec.replicate, ri.join(" "));
        Ok(())
    })?;
    println!("{} replicates in {:.1}s", replicates, start.elapsed().as_secs_f64());

    for f in Family::ALL {
        let g = result.report.grouping(f);
        println!("{f:>5}: MRI {:.3} (sd {:.3})  mean K {:.2} (sd {:.2})", g.mri, g.sd_ri, g.mean_k, g.sd_k);
    }
    for p in &result.report.params {
        println!("{:>5}[{}] truth {:.2}: MB {:+.4}  MSD {:.4}", p.family, p.group, p.truth, p.mb, p.msd);
    }
    Ok(())
}
