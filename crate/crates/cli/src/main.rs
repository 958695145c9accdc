use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ligme::constellation::Alphabet;
use ligme::regularizer::Grid;
use ligme_cli::landscape::{cmd_landscape, parse_alphabet, LandscapeArgs, LandscapeDesign};
use ligme_cli::prox_check::cmd_prox_check;
use ligme_cli::run::{cmd_run, RunOverrides};
use ligme_cli::{certify::cmd_certify, parse_list, CliError, EXIT_OK, EXIT_UNCERTIFIED};

/// A comma-separated list parsed as a single value.
type List = Vec<f64>;

#[derive(Parser)]
#[command(name = "ligme", version, about = "Discrete-valued MIMO detection with LiGME regularization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte-Carlo BER sweep from a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Comma-separated SNR grid in dB, replacing the config's.
        #[arg(long, value_parser = parse_list, allow_hyphen_values = true)]
        snr: Option<List>,
        #[arg(long)]
        output: Option<PathBuf>,
        /// Worker threads (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
        /// Write machine epsilon instead of zero BER.
        #[arg(long)]
        log_floor: bool,
    },
    /// Check the overall-convexity condition of a design.
    Certify {
        #[arg(long)]
        config: PathBuf,
    },
    /// Tabulate the regularizer over a 1-D (real) or 2-D (complex) slice.
    Landscape {
        /// 4qam, 16qam, 8psk or real:a,b,...
        #[arg(long, value_parser = parse_alphabet, allow_hyphen_values = true)]
        alphabet: Alphabet,
        #[arg(long, default_value_t = 50)]
        symbols: usize,
        /// Per-point weights, comma separated (default uniform).
        #[arg(long, value_parser = parse_list, allow_hyphen_values = true)]
        weights: Option<List>,
        /// Use `B_l = b·I`.
        #[arg(long, conflicts_with = "total_gamma")]
        b: Option<f64>,
        /// Use `B_l = √(γ/μ)·A` with a generated channel.
        #[arg(long, requires = "mu")]
        total_gamma: Option<f64>,
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long, default_value_t = 45)]
        m: usize,
        #[arg(long, default_value_t = 0.5)]
        rho: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, allow_hyphen_values = true, default_value_t = -1.5)]
        lo: f64,
        #[arg(long, allow_hyphen_values = true, default_value_t = 1.5)]
        hi: f64,
        #[arg(long, default_value_t = 0.01)]
        step: f64,
        #[arg(long)]
        output: PathBuf,
    },
    /// Compare the proximity operators and projections with brute-force oracles.
    ProxCheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        cases: usize,
        /// Perturb the threshold to exercise the failure path.
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
}

fn dispatch(command: Command) -> Result<i32, CliError> {
    match command {
        Command::Run {
            config,
            trials,
            seed,
            snr,
            output,
            threads,
            log_floor,
        } => {
            let overrides = RunOverrides {
                trials,
                seed,
                snr_db: snr,
                output,
                threads,
                log_floor,
            };
            cmd_run(&config, &overrides)?;
            Ok(EXIT_OK)
        }
        Command::Certify { config } => {
            let verdict = cmd_certify(&config)?;
            Ok(if verdict.is_psd() { EXIT_OK } else { EXIT_UNCERTIFIED })
        }
        Command::Landscape {
            alphabet,
            symbols,
            weights,
            b,
            total_gamma,
            mu,
            m,
            rho,
            seed,
            lo,
            hi,
            step,
            output,
        } => {
            let design = match (b, total_gamma, mu) {
                (Some(b), None, _) => LandscapeDesign::ScaledIdentity { b },
                (None, Some(total_gamma), Some(mu)) => LandscapeDesign::ScaledSensing {
                    total_gamma,
                    mu,
                    m,
                    rho,
                    seed,
                },
                _ => return Err(CliError::config("pass either --b or --total-gamma with --mu")),
            };
            cmd_landscape(&LandscapeArgs {
                alphabet,
                symbols,
                weights,
                design,
                grid: Grid { lo, hi, step },
                output,
            })?;
            Ok(EXIT_OK)
        }
        Command::ProxCheck {
            seed,
            cases,
            inject_fault,
        } => {
            cmd_prox_check(seed, cases, inject_fault)?;
            Ok(EXIT_OK)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.code as u8)
        }
    }
}
