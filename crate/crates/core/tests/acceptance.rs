//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! The scaled-down simulation study (criteria 8 and 9) takes several
//! minutes on one core; set `SIRS_MFM_SKIP_SLOW=1` to skip it.

use std::collections::HashMap;
use std::path::Path;
use std::process::{Command, Stdio};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::distribution::{ContinuousCDF, Normal, Poisson};
use statrs::distribution::Discrete;

use sirs_mfm::analytics::{dahl_estimate, hpd_interval, rand_index};
use sirs_mfm::epidemic::{
    basic_reproduction_number, evolve_probs, innovation_sums, latent_drift, latent_from_probs, probs_from_latent,
    simulate_series, step_deterministic, CompartmentState, LatentPath, ObservedSeries, ProbTriple, SirsParams,
    VarianceParams,
};
use sirs_mfm::io::sig6;
use sirs_mfm::mcmc::kernels::{
    update_cluster_params_with, update_labels_family, update_latent_paths_with, VARIANCE_PRIOR,
};
use sirs_mfm::mcmc::{run_chain, update_variances, Family, ModelState, RegionData, SamplerConfig, Target};
use sirs_mfm::mfm::{log_partition_prior, sample_mfm_weights, sample_partition_generative, CoefficientCache, MfmSpec};
use sirs_mfm::partition::enumerate_partitions;
use sirs_mfm::study::{run_study, ScenarioSpec};
use sirs_mfm::Partition;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_params(r: &mut ChaCha8Rng) -> SirsParams {
    let mut u = || r.random_range(1e-6..1.0 - 1e-6);
    SirsParams::new(u(), u(), u()).unwrap()
}

// 1 -------------------------------------------------------------------------

fn drift_oracle() -> Outcome {
    let start = Instant::now();
    let mut r = rng(1);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let (ws, wi) = (r.random_range(-8.0..8.0), r.random_range(-8.0..8.0));
        let params = random_params(&mut r);
        let (mu_s, mu_i) = latent_drift(ws, wi, &params).unwrap();
        // transform, evolve, transform back
        let p = probs_from_latent(ws, wi);
        let (es, ei) = latent_from_probs(&evolve_probs(&p, &params).unwrap()).unwrap();
        let scale = 1.0f64.max(ws.abs()).max(wi.abs());
        worst = worst.max((mu_s - es).abs() / scale).max((mu_i - ei).abs() / scale);
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(worst <= 1e-10 && secs < 5.0, format!("max scaled error {worst:.2e} over 1e4 draws in {secs:.2}s"))
}

// 2 -------------------------------------------------------------------------

fn conservation() -> Outcome {
    let mut r = rng(2);
    let (mut worst_state, mut worst_probs): (f64, f64) = (0.0, 0.0);
    for _ in 0..10_000 {
        let n: u64 = r.random_range(1..40_000_000);
        let w: [f64; 3] = [r.random(), r.random(), r.random()];
        let total: f64 = w.iter().sum();
        let nf = n as f64;
        let state = CompartmentState::new(nf * w[0] / total, nf * w[1] / total, nf * w[2] / total, n).unwrap();
        let params = random_params(&mut r);
        let next = step_deterministic(&state, &params).unwrap();
        worst_state = worst_state.max((next.s + next.i + next.r - nf).abs() / nf);

        let p = probs_from_latent(r.random_range(-6.0..6.0), r.random_range(-6.0..6.0));
        let q = evolve_probs(&p, &params).unwrap();
        worst_probs = worst_probs.max((q.p_s + q.p_i + q.p_r - 1.0).abs());
    }
    outcome(
        worst_state <= 1e-9 && worst_probs <= 1e-12,
        format!("max |S+I+R-N|/N {worst_state:.1e}, max |sum p - 1| {worst_probs:.1e}"),
    )
}

// 3 -------------------------------------------------------------------------

fn mfm_construction() -> Outcome {
    let mut r = rng(3);
    let draws = 100_000;
    let mut pass = true;
    let mut notes = Vec::new();
    for lambda in [0.5, 1.0, 3.0] {
        let spec = MfmSpec::new(lambda).unwrap();
        let mut counts: HashMap<usize, usize> = HashMap::new();
        for _ in 0..draws {
            let (k, w) = sample_mfm_weights(&spec, &mut r);
            debug_assert_eq!(w.pi.len(), k);
            *counts.entry(k).or_default() += 1;
        }
        let pois = Poisson::new(lambda).unwrap();
        let kmax = counts.keys().copied().max().unwrap_or(1).max(60);
        let tv: f64 = 0.5
            * (1..=kmax)
                .map(|k| (*counts.get(&k).unwrap_or(&0) as f64 / draws as f64 - pois.pmf(k as u64 - 1)).abs())
                .sum::<f64>();
        pass &= tv < 0.02;
        notes.push(format!("TV(λ={lambda}) {tv:.4}"));
        if lambda == 1.0 {
            let p1 = *counts.get(&1).unwrap_or(&0) as f64 / draws as f64;
            pass &= (p1 - 0.3679).abs() <= 0.005;
            notes.push(format!("P(k=1|λ=1) {p1:.4}"));
        }
    }
    outcome(pass, notes.join(", "))
}

// 4 -------------------------------------------------------------------------

fn eppf() -> Outcome {
    let mut pass = true;
    let mut notes = Vec::new();
    let spec = MfmSpec::new(1.0).unwrap();
    let mut r = rng(4);
    for n in [2, 3, 4] {
        let parts = enumerate_partitions(n);
        let probs: Vec<f64> = parts.iter().map(|p| log_partition_prior(p, &spec).exp()).collect();
        let total: f64 = probs.iter().sum();
        pass &= (total - 1.0).abs() <= 1e-8;

        let draws = 1_000_000;
        let mut counts: HashMap<Vec<usize>, usize> = HashMap::new();
        for _ in 0..draws {
            *counts.entry(sample_partition_generative(&spec, n, &mut r).labels().to_vec()).or_default() += 1;
        }
        let mut worst_z: f64 = 0.0;
        for (p, &prob) in parts.iter().zip(&probs) {
            let freq = *counts.get(p.labels()).unwrap_or(&0) as f64 / draws as f64;
            let se = (prob * (1.0 - prob) / draws as f64).sqrt();
            worst_z = worst_z.max((freq - prob).abs() / se);
        }
        pass &= worst_z <= 3.0;
        notes.push(format!("n={n}: sum-1 {:.1e}, max |z| {worst_z:.2}", total - 1.0));
    }
    outcome(pass, notes.join("; "))
}

// 5 -------------------------------------------------------------------------

fn fixed_state(days: usize, seed: u64) -> (RegionData, ModelState) {
    let mut r = rng(seed);
    let params = SirsParams::new(0.3, 0.2, 0.1).unwrap();
    let var = VarianceParams::new(0.01, 0.01).unwrap();
    let init = ProbTriple::new(0.98, 0.015, 0.005).unwrap();
    let (series, path) = simulate_series(&params, &var, &init, 1_000_000, days, &mut r).unwrap();
    let one = Partition::single_cluster(1);
    let state = ModelState {
        paths: vec![path],
        variances: vec![var],
        partitions: [one.clone(), one.clone(), one],
        cluster_values: [vec![0.3], vec![0.2], vec![0.1]],
        lambdas: [1.0; 3],
    };
    (RegionData::new("A", series).unwrap(), state)
}

fn conjugate_variance() -> Outcome {
    let (_, mut state) = fixed_state(30, 5);
    let (ss_s, ss_i) = innovation_sums(&state.paths[0], &state.region_params(0)).unwrap();
    let a = VARIANCE_PRIOR.0 + 29.0 / 2.0;
    let mut r = rng(55);
    let m = 100_000;
    let (mut xs, mut ys) = (Vec::with_capacity(m), Vec::with_capacity(m));
    for _ in 0..m {
        update_variances(&mut state, &mut r);
        xs.push(state.variances[0].sigma2_s);
        ys.push(state.variances[0].sigma2_i);
    }
    let mut pass = true;
    let mut notes = Vec::new();
    for (name, draws, ss) in [("σ²_S", &xs, ss_s), ("σ²_I", &ys, ss_i)] {
        let b = VARIANCE_PRIOR.1 + ss / 2.0;
        let mean = b / (a - 1.0);
        let var = b * b / ((a - 1.0).powi(2) * (a - 2.0));
        let m_hat = draws.iter().sum::<f64>() / m as f64;
        let v_hat = draws.iter().map(|x| (x - m_hat).powi(2)).sum::<f64>() / (m - 1) as f64;
        let (em, ev) = (m_hat / mean - 1.0, v_hat / var - 1.0);
        pass &= em.abs() < 0.01 && ev.abs() < 0.01;
        notes.push(format!("{name}: mean {:+.2}%, var {:+.2}%", 100.0 * em, 100.0 * ev));
    }
    outcome(pass, notes.join(", "))
}

// 6 -------------------------------------------------------------------------

fn kolmogorov_p(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let x = (sn + 0.12 + 0.11 / sn) * d;
    let mut p = 0.0;
    for k in 1..=100 {
        let term = 2.0 * (-1.0f64).powi(k - 1) * (-2.0 * (k as f64).powi(2) * x * x).exp();
        p += term;
        if term.abs() < 1e-12 {
            break;
        }
    }
    p.clamp(0.0, 1.0)
}

fn ks_normal_p(mut xs: Vec<f64>) -> (f64, f64) {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    let z = Normal::new(0.0, 1.0).unwrap();
    let d = xs
        .iter()
        .enumerate()
        .map(|(k, &x)| {
            let f = z.cdf(x);
            (f - k as f64 / n as f64).max((k + 1) as f64 / n as f64 - f)
        })
        .fold(0.0, f64::max);
    (d, kolmogorov_p(d, n))
}

fn tv_against(counts: &HashMap<Vec<usize>, usize>, total: usize, probs: &[(Vec<usize>, f64)]) -> f64 {
    0.5 * probs
        .iter()
        .map(|(labels, p)| (*counts.get(labels).unwrap_or(&0) as f64 / total as f64 - p).abs())
        .sum::<f64>()
}

fn prior_recovery() -> Outcome {
    let n = 3;
    let days = 5;
    let mut r = rng(6);
    let var = VarianceParams::new(0.01, 0.02).unwrap();
    let data: Vec<RegionData> = (0..n)
        .map(|i| {
            let s = ObservedSeries::new(vec![10 + i as u64; days], vec![20; days], 100_000).unwrap();
            RegionData::new(format!("r{i}"), s).unwrap()
        })
        .collect();
    let single = Partition::single_cluster(n);
    let mut state = ModelState {
        paths: data.iter().map(|d| LatentPath::from_counts(&d.series)).collect(),
        variances: vec![var; n],
        partitions: [single.clone(), single.clone(), single],
        cluster_values: [vec![0.3], vec![0.2], vec![0.1]],
        lambdas: [1.0; 3],
    };
    let spec = MfmSpec::new(1.0).unwrap();
    let prior: Vec<(Vec<usize>, f64)> = enumerate_partitions(n)
        .into_iter()
        .map(|p| (p.labels().to_vec(), log_partition_prior(&p, &spec).exp()))
        .collect();

    // labels and cluster values, no data, λ held at 1
    let cache = CoefficientCache::new();
    let sweeps = 100_000;
    let mut counts: [HashMap<Vec<usize>, usize>; 3] = Default::default();
    let mut sd = [0.5f64.ln(); 3];
    for _ in 0..sweeps {
        for f in Family::ALL {
            update_cluster_params_with(&mut state, f, Target::Prior, &mut sd[f.index()], None, &mut r);
            update_labels_family(&mut state, f, Target::Prior, 1, &cache, &mut r);
            *counts[f.index()].entry(state.partition(f).labels().to_vec()).or_default() += 1;
        }
    }
    let tv_labels = Family::ALL
        .iter()
        .map(|f| tv_against(&counts[f.index()], sweeps, &prior))
        .fold(0.0, f64::max);

    // full sampler with data switched off: λ is updated too, so the
    // partition law is the EPPF mixed over the Gamma(1, 1) prior on λ
    let config = SamplerConfig {
        iterations: 100_001,
        burnin: 1,
        thin: 1,
        seed: 66,
        target: Target::Prior,
        ..SamplerConfig::default()
    };
    let chain = run_chain(&data, &config).unwrap();
    let grid = 200_000;
    let mixed: Vec<(Vec<usize>, f64)> = enumerate_partitions(n)
        .into_iter()
        .map(|p| {
            let h = 60.0 / grid as f64;
            let integral: f64 = (0..grid)
                .map(|k| {
                    let l = (k as f64 + 0.5) * h;
                    (log_partition_prior(&p, &MfmSpec::new(l).unwrap()) - l).exp() * h
                })
                .sum();
            (p.labels().to_vec(), integral)
        })
        .collect();
    let mut tv_chain: f64 = 0.0;
    for f in Family::ALL {
        let mut c: HashMap<Vec<usize>, usize> = HashMap::new();
        for d in &chain.draws {
            *c.entry(d.family(f).labels.labels().to_vec()).or_default() += 1;
        }
        tv_chain = tv_chain.max(tv_against(&c, chain.draws.len(), &mixed));
    }

    // latent paths alone: innovations should be N(0, σ²)
    let mut scales = vec![vec![0.15f64.ln(); 2 * days]; n];
    let mut z_s = Vec::new();
    let mut z_i = Vec::new();
    for sweep in 0..100_000 {
        update_latent_paths_with(&mut state, &data, Target::Prior, &mut scales, None, &mut r);
        if sweep >= 1000 && sweep % 20 == 0 {
            let params = state.region_params(0);
            let p = &state.paths[0];
            let (mu_s, mu_i) = latent_drift(p.w_s[1], p.w_i[1], &params).unwrap();
            z_s.push((p.w_s[2] - mu_s) / var.sigma2_s.sqrt());
            z_i.push((p.w_i[2] - mu_i) / var.sigma2_i.sqrt());
        }
    }
    let (ds, ps) = ks_normal_p(z_s);
    let (di, pi) = ks_normal_p(z_i);

    outcome(
        tv_labels < 0.03 && tv_chain < 0.03 && ps > 0.01 && pi > 0.01,
        format!(
            "label TV {tv_labels:.4} (λ fixed), full-chain TV {tv_chain:.4} (λ mixed), \
             KS innovations D={ds:.4} p={ps:.3} / D={di:.4} p={pi:.3}"
        ),
    )
}

// 7 -------------------------------------------------------------------------

fn random_partition(n: usize, r: &mut ChaCha8Rng) -> Partition {
    let k = r.random_range(1..=n);
    let labels: Vec<usize> = (0..n).map(|_| r.random_range(0..k)).collect();
    Partition::from_labels(&labels)
}

fn analytics_oracles() -> Outcome {
    let mut r = rng(7);
    let mut dahl_ok = true;
    for _ in 0..100 {
        let n = r.random_range(2..12);
        let m = r.random_range(1..60);
        let draws: Vec<Partition> = (0..m).map(|_| random_partition(n, &mut r)).collect();
        let together = |p: &Partition, i: usize, j: usize| f64::from(u8::from(p.label(i) == p.label(j)));
        let mean: Vec<f64> = (0..n * n)
            .map(|ij| draws.iter().map(|p| together(p, ij / n, ij % n)).sum::<f64>() / m as f64)
            .collect();
        let loss: Vec<f64> = draws
            .iter()
            .map(|p| (0..n * n).map(|ij| (together(p, ij / n, ij % n) - mean[ij]).powi(2)).sum())
            .collect();
        let best = loss.iter().cloned().fold(f64::INFINITY, f64::min);
        let first = loss.iter().position(|&l| l == best).unwrap();
        let (idx, part) = dahl_estimate(&draws).unwrap();
        dahl_ok &= idx == first && part == draws[first];
    }

    let samples: Vec<f64> = (0..1000).map(|_| StandardNormal.sample(&mut r)).collect();
    let mut sorted = samples.clone();
    sorted.sort_by(f64::total_cmp);
    let need = (0.95f64 * 1000.0).ceil() as usize;
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for i in 0..sorted.len() {
        for j in i..sorted.len() {
            if j - i + 1 >= need && sorted[j] - sorted[i] < best.0 {
                best = (sorted[j] - sorted[i], sorted[i], sorted[j]);
            }
        }
    }
    let hpd = hpd_interval(&samples, 0.95).unwrap();
    let hpd_ok = hpd.lower == best.1 && hpd.upper == best.2;

    let mut ri_ok = true;
    for _ in 0..500 {
        let n = r.random_range(2..15);
        let (a, b) = (random_partition(n, &mut r), random_partition(n, &mut r));
        let mut agree = 0;
        for i in 0..n {
            for j in i + 1..n {
                agree += usize::from((a.label(i) == a.label(j)) == (b.label(i) == b.label(j)));
            }
        }
        ri_ok &= rand_index(&a, &b).unwrap() == agree as f64 / (n * (n - 1) / 2) as f64;
    }
    let third = rand_index(&Partition::from_labels(&[1, 1, 2]), &Partition::from_labels(&[1, 2, 2])).unwrap();
    ri_ok &= third == 1.0 / 3.0;

    outcome(
        dahl_ok && hpd_ok && ri_ok,
        format!(
            "Dahl scan {}, HPD brute force {} ({:.4}, {:.4}), Rand index enumeration {} ({{1,1,2}} vs {{1,2,2}} = {third:.4})",
            ok(dahl_ok),
            ok(hpd_ok),
            hpd.lower,
            hpd.upper,
            ok(ri_ok)
        ),
    )
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "MISMATCH"
    }
}

// 8, 9 ----------------------------------------------------------------------

fn reduced_study() -> (Outcome, Outcome) {
    let spec = ScenarioSpec::two_group(20, 30, 0.06, 0.6, 10, 2024);
    let config = SamplerConfig {
        iterations: 15_000,
        burnin: 5_000,
        thin: 5,
        seed: 8,
        ..SamplerConfig::default()
    };
    let start = Instant::now();
    let result = run_study(&spec, &config).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let report = &result.report;

    let mut pass8 = true;
    let mut notes8 = Vec::new();
    for f in Family::ALL {
        let g = report.grouping(f);
        pass8 &= g.mri >= 0.75 && (1.5..=3.0).contains(&g.mean_k);
        notes8.push(format!("{f}: MRI {:.3} K̂ {:.2}", g.mri, g.mean_k));
    }
    notes8.push(format!("{secs:.0}s"));

    let mut pass9 = true;
    let mut notes9 = Vec::new();
    for p in report.params.iter().filter(|p| p.truth == 0.06) {
        pass9 &= p.mb.abs() <= 0.05;
        notes9.push(format!("{}: MB {:+.4}", p.family, p.mb));
    }
    (outcome(pass8, notes8.join(", ")), outcome(pass9, notes9.join(", ")))
}

// 10 ------------------------------------------------------------------------

fn r0_arithmetic() -> Outcome {
    let r0 = basic_reproduction_number(0.0042, 0.0381).unwrap();
    let four = format!("{r0:.4}");
    let table = sig6(r0);
    outcome(four == "0.1102" && table == "0.110236", format!("R0 = {four} (table value {table})"))
}

// 11 ------------------------------------------------------------------------

fn read_outputs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
                continue;
            }
            let mut bytes = std::fs::read(&path).unwrap();
            if path.file_name().is_some_and(|n| n == "manifest.json") {
                // the timing block is the only run-dependent part
                let mut v: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
                v.as_object_mut().unwrap().remove("run");
                bytes = serde_json::to_vec(&v).unwrap();
            }
            out.push((path.strip_prefix(dir).unwrap().display().to_string(), bytes));
        }
    }
    out.sort();
    out
}

fn cli(args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_sirs-mfm"))
        .args(args)
        .env("RUST_LOG", "error")
        .stdout(Stdio::null())
        .status()
        .map(|s| s.success())
        .unwrap_or(false)
}

fn cli_determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    let cfg = root.join("study.toml");
    std::fs::write(
        &cfg,
        "mode = \"study\"\n[sampler]\niterations = 400\nburnin = 100\nthin = 3\n[scenario]\nn = 5\nreplicates = 3\nbase_seed = 4\n",
    )
    .unwrap();
    let s = |p: &Path| p.display().to_string();
    let (sim, fit, study) = (root.join("sim"), root.join("fit"), root.join("study"));
    let mut ran = cli(&["simulate", "--out", &s(&sim), "--seed", "11"]);
    let raw = s(&sim.join("raw.csv"));
    let fit_args = ["fit", "--input", &raw, "--out", &s(&fit), "--seed", "5", "--iterations", "300", "--burnin", "100", "--thin", "2", "--monotone", "keep"];
    let study_args = ["study", "--config", &s(&cfg), "--out", &s(&study), "--seed", "9"];

    ran &= cli(&fit_args) && cli(&study_args);
    let first = (read_outputs(&fit), read_outputs(&study));
    ran &= cli(&fit_args) && cli(&study_args);
    let second = (read_outputs(&fit), read_outputs(&study));
    let files = first.0.len() + first.1.len();
    outcome(
        ran && first == second && files > 0,
        format!("{files} output files, identical across reruns (manifest timing excluded): {}", first == second),
    )
}

fn main() {
    let slow = std::env::var_os("SIRS_MFM_SKIP_SLOW").is_none();
    let mut results: Vec<(u32, &str, Option<Outcome>)> = vec![
        (1, "drift formula oracle", Some(drift_oracle())),
        (2, "conservation", Some(conservation())),
        (3, "MFM construction law", Some(mfm_construction())),
        (4, "EPPF correctness", Some(eppf())),
        (5, "conjugate variance update", Some(conjugate_variance())),
        (6, "prior recovery", Some(prior_recovery())),
        (7, "Dahl / HPD / Rand index oracles", Some(analytics_oracles())),
    ];
    let (c8, c9) = if slow {
        let (a, b) = reduced_study();
        (Some(a), Some(b))
    } else {
        (None, None)
    };
    results.push((8, "scaled simulation study: grouping", c8));
    results.push((9, "scaled simulation study: bias", c9));
    results.push((10, "R0 arithmetic", Some(r0_arithmetic())));
    results.push((11, "end-to-end determinism", Some(cli_determinism())));

    let mut failed = 0;
    for (id, name, res) in &results {
        match res {
            Some(o) => {
                println!("criterion {id:>2} {}: {name} — {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
                failed += usize::from(!o.pass);
            }
            None => println!("criterion {id:>2} SKIP: {name} — SIRS_MFM_SKIP_SLOW is set"),
        }
    }
    println!("acceptance: {} passed, {failed} failed", results.iter().filter(|r| r.2.as_ref().is_some_and(|o| o.pass)).count());
    if failed > 0 {
        std::process::exit(1);
    }
}
