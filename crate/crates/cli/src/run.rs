use std::path::PathBuf;

use ligme::experiment::{run_to_files, ExperimentConfig, SweepTable};

use crate::{read_json, CliError, CliResult};

#[derive(Debug, Clone, Default)]
pub struct RunOverrides {
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub snr_db: Option<Vec<f64>>,
    pub output: Option<PathBuf>,
    pub threads: Option<usize>,
    pub log_floor: bool,
}

/// Loads the config and applies command-line overrides.
pub fn load_config(path: &std::path::Path, overrides: &RunOverrides) -> CliResult<ExperimentConfig> {
    let mut config: ExperimentConfig = read_json(path)?;
    if let Some(t) = overrides.trials {
        config.trials = t;
    }
    if let Some(s) = overrides.seed {
        config.seed = s;
    }
    if let Some(snr) = &overrides.snr_db {
        config.snr_db = snr.clone();
    }
    if let Some(out) = &overrides.output {
        config.output = Some(out.clone());
    }
    config.log_floor |= overrides.log_floor;
    config
        .validate()
        .map_err(|e| CliError::config(format!("invalid config {}: {e}", path.display())))?;
    if config.output.is_none() {
        return Err(CliError::config("no output path: set `output` in the config or pass --output"));
    }
    Ok(config)
}

/// Runs the sweep and writes the CSV plus its metadata sidecar.
pub fn cmd_run(config_path: &std::path::Path, overrides: &RunOverrides) -> CliResult<SweepTable> {
    let config = load_config(config_path, overrides)?;
    let output = config.output.clone().expect("checked in load_config");
    let table = run_to_files(&config, &output, overrides.threads).map_err(|e| CliError::runtime(e.to_string()))?;
    for row in table.rows.iter().filter(|r| r.best) {
        println!(
            "snr {:>6} dB  {:<12} best mu {:.0e}  ber {:.3e}",
            row.snr_db, row.detector, row.mu, row.ber
        );
    }
    println!("wrote {}", output.display());
    Ok(table)
}
