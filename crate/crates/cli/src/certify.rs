use std::path::{Path, PathBuf};
use std::sync::Arc;

use ligme::constellation::widen_channel;
use ligme::experiment::ChannelModel;
use ligme::linalg::{Certification, RealMatrix, SensingMatrix};
use ligme::regularizer::{certify_overall_convexity, GmeSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{read_json, CliError, CliResult};

/// Where the sensing matrix comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SensingSource {
    /// A correlated complex Gaussian channel, widened to its real form.
    Generated {
        n: usize,
        m: usize,
        #[serde(default = "default_rho")]
        rho: f64,
        seed: u64,
    },
    /// A JSON file holding `{"rows": .., "cols": .., "data": [..]}`.
    File { path: PathBuf },
    Inline { matrix: RealMatrix },
}

fn default_rho() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DesignChoice {
    Zero { blocks: usize },
    ScaledIdentity { b: f64, blocks: usize },
    ScaledSensing { gammas: Vec<f64> },
    /// `γ_l = total_gamma / blocks` for every block.
    UniformScaledSensing { total_gamma: f64, blocks: usize },
    Explicit { matrices: Vec<RealMatrix> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifyConfig {
    pub sensing: SensingSource,
    pub mu: f64,
    pub gme: DesignChoice,
}

pub fn load_sensing(source: &SensingSource, base: &Path) -> CliResult<RealMatrix> {
    match source {
        SensingSource::Generated { n, m, rho, seed } => {
            let model = ChannelModel::new(*n, *m, *rho)?;
            let a = model.sampler()?.sample(&mut ChaCha8Rng::seed_from_u64(*seed));
            Ok(widen_channel(&a))
        }
        SensingSource::File { path } => read_json(&base.join(path)),
        SensingSource::Inline { matrix } => Ok(matrix.clone()),
    }
}

pub fn build_design(choice: &DesignChoice, sensing: &Arc<SensingMatrix>) -> CliResult<(GmeSpec, usize)> {
    Ok(match choice {
        DesignChoice::Zero { blocks } => (GmeSpec::zero(), *blocks),
        DesignChoice::ScaledIdentity { b, blocks } => (GmeSpec::scaled_identity(*b)?, *blocks),
        DesignChoice::ScaledSensing { gammas } => {
            (GmeSpec::scaled_sensing(Arc::clone(sensing), gammas.clone())?, gammas.len())
        }
        DesignChoice::UniformScaledSensing { total_gamma, blocks } => {
            if *blocks == 0 {
                return Err(CliError::config("blocks must be positive"));
            }
            let gammas = vec![total_gamma / *blocks as f64; *blocks];
            (GmeSpec::scaled_sensing(Arc::clone(sensing), gammas)?, *blocks)
        }
        DesignChoice::Explicit { matrices } => (GmeSpec::explicit(matrices.clone())?, matrices.len()),
    })
}

/// Certifies `AᵀA − μ Σ B_lᵀB_l ⪰ O` for the configured design.
pub fn certify_config(config: &CertifyConfig, base: &Path) -> CliResult<Certification> {
    let a = load_sensing(&config.sensing, base)?;
    let sensing = Arc::new(SensingMatrix::new(a)?);
    let (mut spec, blocks) = build_design(&config.gme, &sensing)?;
    Ok(certify_overall_convexity(sensing.matrix(), &mut spec, config.mu, blocks)?)
}

pub fn cmd_certify(config_path: &Path) -> CliResult<Certification> {
    let config: CertifyConfig = read_json(config_path)?;
    let base = config_path.parent().unwrap_or(Path::new("."));
    let verdict = certify_config(&config, base)?;
    println!("certified: {}", verdict.is_psd());
    println!("min_eigenvalue: {:.6e}", verdict.min_eigenvalue());
    Ok(verdict)
}
