//! Partition summaries on hand-made draws: Dahl's least-squares choice, the
//! Rand index against a reference and an HPD interval.

use sirs_mfm::analytics::{dahl_estimate, hpd_interval, rand_index, MembershipMatrix};
use sirs_mfm::Partition;

fn main() -> sirs_mfm::Result<()> {
    let draws: Vec<Partition> = [[1, 1, 2, 2], [1, 1, 2, 2], [1, 1, 1, 2], [5, 5, 7, 7], [1, 2, 3, 4]]
        .iter()
        .map(|l| Partition::from_labels(l))
        .collect();
    let (index, best) = dahl_estimate(&draws)?;
    println!("Dahl picks draw {index}: {:?}", best.labels());
    let b = MembershipMatrix::from_partition(&best);
    for i in 0..b.n() {
        println!("  {:?}", (0..b.n()).map(|j| b.get(i, j)).collect::<Vec<_>>());
    }
    for d in &draws {
        println!("RI({:?}, best) = {:.3}", d.labels(), rand_index(d, &best)?);
    }

    let samples: Vec<f64> = (1..=100).map(f64::from).collect();
    let hpd = hpd_interval(&samples, 0.95)?;
    println!("95% HPD of 1..=100: ({}, {})", hpd.lower, hpd.upper);
    Ok(())
}
