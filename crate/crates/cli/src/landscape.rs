use std::fmt::Write as _;
use std::path::PathBuf;
use std::sync::Arc;

use ligme::constellation::{widen_channel, Alphabet};
use ligme::experiment::ChannelModel;
use ligme::linalg::{RealVector, SensingMatrix};
use ligme::prox::WeightVector;
use ligme::regularizer::{
    eval_ligme_closed_form, eval_ligme_iterative, GmeSpec, Grid, LigmeRegularizer, SeedRegularizer,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{create_parent, parse_list, CliError, CliResult};

const ITERATIVE_TOL: f64 = 1e-12;

/// Parses `4qam`, `16qam`, `8psk` or `real:-1,0,1`.
pub fn parse_alphabet(text: &str) -> std::result::Result<Alphabet, String> {
    let lower = text.trim().to_ascii_lowercase();
    let parsed = match lower.as_str() {
        "4qam" | "qpsk" => Alphabet::qam(2),
        "16qam" => Alphabet::qam(4),
        "8psk" => Alphabet::psk(8),
        other => match other.strip_prefix("real:") {
            Some(points) => Alphabet::real(parse_list(points)?),
            None => return Err(format!("unknown alphabet {text:?}; use 4qam, 16qam, 8psk or real:a,b,..")),
        },
    };
    parsed.map_err(|e| e.to_string())
}

#[derive(Debug, Clone, PartialEq)]
pub enum LandscapeDesign {
    /// `B_l = b·I`.
    ScaledIdentity { b: f64 },
    /// `B_l = √(γ/μ)·A` for a generated channel `A`.
    ScaledSensing {
        total_gamma: f64,
        mu: f64,
        m: usize,
        rho: f64,
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LandscapeArgs {
    pub alphabet: Alphabet,
    pub symbols: usize,
    /// Weight of each alphabet point, shared by all coordinates; uniform when absent.
    pub weights: Option<Vec<f64>>,
    pub design: LandscapeDesign,
    pub grid: Grid,
    pub output: PathBuf,
}

fn regularizer(args: &LandscapeArgs) -> CliResult<LigmeRegularizer> {
    if args.symbols == 0 {
        return Err(CliError::config("symbols must be positive"));
    }
    let mut seed = SeedRegularizer::for_alphabet(&args.alphabet, args.symbols)?;
    if let Some(w) = &args.weights {
        if w.len() != seed.len() {
            return Err(CliError::config(format!(
                "expected {} weights (one per alphabet point), got {}",
                seed.len(),
                w.len()
            )));
        }
        let width = seed.weights()[0].dim();
        let family = w
            .iter()
            .map(|&v| WeightVector::uniform(width, v))
            .collect::<ligme::Result<Vec<_>>>()?;
        seed.set_weights(family)?;
    }
    let (gme, mu) = match &args.design {
        LandscapeDesign::ScaledIdentity { b } => (GmeSpec::scaled_identity(*b)?, 1.0),
        LandscapeDesign::ScaledSensing {
            total_gamma,
            mu,
            m,
            rho,
            seed: rng_seed,
        } => {
            let model = ChannelModel::new(args.symbols, *m, *rho)?;
            let a = model.sampler()?.sample(&mut ChaCha8Rng::seed_from_u64(*rng_seed));
            let a = if args.alphabet.is_complex() {
                widen_channel(&a)
            } else {
                // real alphabets use the in-phase part of the channel
                let re: Vec<f64> = (0..a.rows() * a.cols()).map(|i| a.get(i / a.cols(), i % a.cols()).re).collect();
                ligme::linalg::RealMatrix::new(a.rows(), a.cols(), re)?
            };
            let sensing = Arc::new(SensingMatrix::new(a)?);
            let count = seed.len();
            (GmeSpec::scaled_sensing(sensing, vec![total_gamma / count as f64; count])?, *mu)
        }
    };
    Ok(LigmeRegularizer::new(seed, gme, mu)?)
}

fn theta(x: &RealVector, reg: &LigmeRegularizer, closed: bool) -> CliResult<f64> {
    Ok(if closed {
        eval_ligme_closed_form(x, reg)?
    } else {
        eval_ligme_iterative(x, reg, ITERATIVE_TOL)?
    })
}

/// Renders the landscape CSV: `x,theta` for real alphabets, `re,im,theta` over
/// the first symbol otherwise. Every other coordinate is held at 0.
pub fn landscape_csv(args: &LandscapeArgs) -> CliResult<String> {
    let reg = regularizer(args)?;
    let closed = matches!(args.design, LandscapeDesign::ScaledIdentity { .. });
    let ts = args.grid.points()?;
    let dim = reg.dim();
    let mut out = String::new();
    if args.alphabet.is_complex() {
        let n = args.symbols;
        out.push_str("re,im,theta\n");
        for &re in &ts {
            for &im in &ts {
                let mut x = vec![0.0; dim];
                x[0] = re;
                x[n] = im;
                let value = theta(&RealVector::new(x)?, &reg, closed)?;
                writeln!(out, "{re},{im},{value}").expect("writing to a String");
            }
        }
    } else {
        out.push_str("x,theta\n");
        for &t in &ts {
            let mut x = vec![0.0; dim];
            x[0] = t;
            let value = theta(&RealVector::new(x)?, &reg, closed)?;
            writeln!(out, "{t},{value}").expect("writing to a String");
        }
    }
    Ok(out)
}

pub fn cmd_landscape(args: &LandscapeArgs) -> CliResult<()> {
    let csv = landscape_csv(args)?;
    create_parent(&args.output)?;
    std::fs::write(&args.output, csv)
        .map_err(|e| CliError::runtime(format!("cannot write {}: {e}", args.output.display())))?;
    println!("wrote {}", args.output.display());
    Ok(())
}
