//! Drive a command from a TOML run configuration, as the binary does, and
//! list the files it writes.

use sirs_mfm::io::{run, RunConfig};

const CONFIG: &str = r#"
mode = "study"

[sampler]
iterations = 600
burnin = 200
thin = 4
seed = 3

[scenario]
n = 6
replicates = 2
base_seed = 5
"#;

fn main() -> sirs_mfm::Result<()> {
    let dir = std::env::temp_dir().join("sirs-mfm-run-config");
    let mut config = RunConfig::from_toml(CONFIG)?;
    config.output = Some(dir.clone());
    for file in run(&config)? {
        println!("{}", file.display());
    }
    print!("{}", std::fs::read_to_string(dir.join("grouping.csv"))?);
    Ok(())
}
