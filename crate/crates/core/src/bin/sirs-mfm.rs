use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sirs_mfm::io::{run, Mode, MonotonePolicy, RunConfig, ScenarioConfig};

#[derive(Parser)]
#[command(version, about = "Clustered SIRS rates with mixture-of-finite-mixtures priors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the model to a cumulative case table.
    Fit(Common),
    /// Write a synthetic case table from a scenario.
    Simulate(Common),
    /// Run a replicated simulation study.
    Study(Common),
    /// Summarize a stored chain.
    Summarize(Common),
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Sampler seed (scenario seed for `simulate`).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Date window START,END or START+DAYS.
    #[arg(long)]
    window: Option<String>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    burnin: Option<usize>,
    #[arg(long)]
    thin: Option<usize>,
    /// Cumulative case table (fit).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Population side table (fit).
    #[arg(long)]
    populations: Option<PathBuf>,
    /// Stored chain (summarize).
    #[arg(long)]
    chain: Option<PathBuf>,
    /// Decreasing cumulative counts: `clamp` (default) or `keep`
    /// (use `keep` for tables written by `simulate`).
    #[arg(long)]
    monotone: Option<MonotonePolicy>,
}

fn build_config(mode: Mode, args: Common) -> sirs_mfm::Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            let cfg = RunConfig::load(path)?;
            if cfg.mode != mode {
                return Err(sirs_mfm::Error::Config {
                    field: "mode".into(),
                    reason: format!("config is for `{}`, command is `{}`", cfg.mode.name(), mode.name()),
                });
            }
            cfg
        }
        None => RunConfig::new(mode),
    };
    if matches!(mode, Mode::Simulate | Mode::Study) && cfg.scenario.is_none() {
        cfg.scenario = Some(ScenarioConfig::default());
    }
    if let Some(seed) = args.seed {
        match (mode, cfg.scenario.as_mut()) {
            (Mode::Simulate, Some(s)) => s.base_seed = seed,
            _ => cfg.sampler.seed = seed,
        }
    }
    cfg.output = args.out.or(cfg.output);
    cfg.window = args.window.or(cfg.window);
    cfg.input = args.input.or(cfg.input);
    cfg.populations = args.populations.or(cfg.populations);
    cfg.chain = args.chain.or(cfg.chain);
    if let Some(m) = args.monotone {
        cfg.monotone = m;
    }
    if let Some(v) = args.iterations {
        cfg.sampler.iterations = v;
    }
    if let Some(v) = args.burnin {
        cfg.sampler.burnin = v;
    }
    if let Some(v) = args.thin {
        cfg.sampler.thin = v;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let (mode, args) = match cli.command {
        Command::Fit(a) => (Mode::Fit, a),
        Command::Simulate(a) => (Mode::Simulate, a),
        Command::Study(a) => (Mode::Study, a),
        Command::Summarize(a) => (Mode::Summarize, a),
    };
    match build_config(mode, args).and_then(|cfg| run(&cfg)) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
