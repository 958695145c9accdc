//! Monte-Carlo MIMO detection experiments: channel and noise generation,
//! detector runs, bit-error counting and SNR/μ sweeps written as CSV.
//!
//! Every `(snr, trial)` pair owns the ChaCha stream `snr_index << 32 | trial`
//! of the master seed, so all detectors and all μ values see the same
//! transmitted symbols, channel and noise.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constellation::{complex_to_real_stack, symbols_to_bits, widen_channel, Alphabet, ComplexMatrix, Modulation};
use crate::error::{Error, Result};
use crate::linalg::{sqrt_psd, RealMatrix, RealVector, SensingMatrix};
use crate::modifications::{solve_modified, ReweightingPolicy, SuperiorizationPolicy};
use crate::regularizer::{GmeSpec, LigmeRegularizer, SeedRegularizer};
use crate::solver::{default_step_sizes, RealizedProblem, SolverState, StopCriteria, DEFAULT_KAPPA, DEFAULT_RESIDUAL_TOL};

pub const CSV_HEADER: &str = "snr_db,detector,mu,trials,bit_errors,total_bits,ber";
/// Suffix of the detector label on best-μ summary rows.
pub const BEST_SUFFIX: &str = "@best";
pub const PAIRING_NOTE: &str = "common random numbers: every detector and mu value at a given (snr, trial) \
     sees the same symbols, channel and noise, drawn from ChaCha8 stream (snr_index << 32 | trial) of the seed";

/// Receive-correlated Rayleigh channel `A = R^(1/2) G`, `R_rc = ρ^|r−c|`,
/// with `G` i.i.d. circular complex Gaussian of variance `1/M`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    pub n: usize,
    pub m: usize,
    pub rho: f64,
}

impl ChannelModel {
    pub fn new(n: usize, m: usize, rho: f64) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::invalid("channel", "N and M must be positive"));
        }
        if !(0.0..1.0).contains(&rho) {
            return Err(Error::invalid("rho", format!("must lie in [0, 1), got {rho}")));
        }
        Ok(ChannelModel { n, m, rho })
    }

    pub fn correlation(&self) -> RealMatrix {
        let mut r = RealMatrix::zeros(self.m, self.m);
        for i in 0..self.m {
            for j in 0..self.m {
                r.set(i, j, self.rho.powi((i as i64 - j as i64).unsigned_abs() as i32));
            }
        }
        r
    }

    pub fn sampler(&self) -> Result<ChannelSampler> {
        Ok(ChannelSampler {
            model: *self,
            sqrt_r: sqrt_psd(&self.correlation())?,
        })
    }
}

/// A channel model with its correlation square root precomputed.
#[derive(Debug, Clone)]
pub struct ChannelSampler {
    model: ChannelModel,
    sqrt_r: RealMatrix,
}

impl ChannelSampler {
    pub fn model(&self) -> &ChannelModel {
        &self.model
    }

    pub fn sqrt_correlation(&self) -> &RealMatrix {
        &self.sqrt_r
    }

    pub fn sample(&self, rng: &mut impl Rng) -> ComplexMatrix {
        let (m, n) = (self.model.m, self.model.n);
        let data = (0..m * n).map(|_| complex_normal(rng, 1.0 / m as f64)).collect();
        let g = ComplexMatrix::new(m, n, data).expect("shape is consistent");
        g.left_mul_real(&self.sqrt_r).expect("R is M × M")
    }
}

pub fn sample_channel(model: &ChannelModel, rng: &mut impl Rng) -> Result<ComplexMatrix> {
    Ok(model.sampler()?.sample(rng))
}

/// Circular complex Gaussian with total variance `variance`.
fn complex_normal(rng: &mut impl Rng, variance: f64) -> Complex64 {
    let s = (0.5 * variance).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

/// Noise of variance `signal_power / 10^(snr_db/10)` per complex entry.
pub fn sample_noise_for_snr(snr_db: f64, signal_power: f64, m: usize, rng: &mut impl Rng) -> (Vec<Complex64>, f64) {
    let variance = noise_variance(snr_db, signal_power);
    ((0..m).map(|_| complex_normal(rng, variance)).collect(), variance)
}

pub fn noise_variance(snr_db: f64, signal_power: f64) -> f64 {
    signal_power / 10f64.powf(snr_db / 10.0)
}

/// `E‖x★‖²` for symbols drawn uniformly from the alphabet.
pub fn signal_power(alphabet: &Alphabet, symbols: usize) -> f64 {
    symbols as f64 * alphabet.mean_energy()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorModel {
    /// Sum of absolute values (no enhancement).
    Soav,
    /// LiGME with the scaled-sensing enhancement.
    Cligme,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorSpec {
    pub id: String,
    pub model: DetectorModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reweighting: Option<ReweightingPolicy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub superiorization: Option<SuperiorizationPolicy>,
}

impl DetectorSpec {
    pub fn plain(id: &str, model: DetectorModel) -> Self {
        DetectorSpec {
            id: id.to_string(),
            model,
            reweighting: None,
            superiorization: None,
        }
    }
}

fn default_rho() -> f64 {
    0.5
}
fn default_trials() -> usize {
    100
}
fn default_max_iter() -> usize {
    500
}
fn default_residual_tol() -> f64 {
    DEFAULT_RESIDUAL_TOL
}
fn default_kappa() -> f64 {
    DEFAULT_KAPPA
}
fn default_total_gamma() -> f64 {
    0.99
}

/// `{10^i | i = −6, …, 1}`
pub fn default_mu_grid() -> Vec<f64> {
    (-6..=1).map(|i| 10f64.powi(i)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub modulation: Modulation,
    /// Transmit antennas (symbols per vector).
    pub n: usize,
    /// Receive antennas.
    pub m: usize,
    #[serde(default = "default_rho")]
    pub rho: f64,
    pub snr_db: Vec<f64>,
    #[serde(default = "default_mu_grid")]
    pub mu_grid: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_residual_tol")]
    pub residual_tol: f64,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    /// `Σ_l γ_l` of the enhancement `B_l = √(γ_l/μ)·A`.
    #[serde(default = "default_total_gamma")]
    pub total_gamma: f64,
    pub seed: u64,
    pub detectors: Vec<DetectorSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// Write machine epsilon instead of 0 in the `ber` column (for log axes).
    #[serde(default)]
    pub log_floor: bool,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if !matches!(self.modulation, Modulation::Qam { .. } | Modulation::Psk { .. }) {
            return Err(Error::Unsupported("experiments need a QAM or PSK modulation".into()));
        }
        ChannelModel::new(self.n, self.m, self.rho)?;
        if self.trials == 0 {
            return Err(Error::invalid("trials", "must be at least 1"));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter", "must be at least 1"));
        }
        if self.snr_db.is_empty() || self.snr_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::invalid("snr_db", "need at least one finite value"));
        }
        if self.mu_grid.is_empty() || self.mu_grid.iter().any(|m| !(*m > 0.0) || !m.is_finite()) {
            return Err(Error::invalid("mu_grid", "need at least one positive value"));
        }
        if !(self.residual_tol >= 0.0) {
            return Err(Error::invalid("residual_tol", "must be nonnegative"));
        }
        if !(self.kappa > 1.0) {
            return Err(Error::invalid("kappa", "must exceed 1"));
        }
        if !(self.total_gamma > 0.0 && self.total_gamma <= 1.0) {
            return Err(Error::invalid("total_gamma", "must lie in (0, 1]"));
        }
        if self.detectors.is_empty() {
            return Err(Error::invalid("detectors", "need at least one detector"));
        }
        for (i, d) in self.detectors.iter().enumerate() {
            if d.id.is_empty() || d.id.contains([',', '"', '\n']) {
                return Err(Error::invalid("detectors", format!("bad detector id {:?}", d.id)));
            }
            if self.detectors[..i].iter().any(|e| e.id == d.id) {
                return Err(Error::invalid("detectors", format!("duplicate detector id {:?}", d.id)));
            }
            if let Some(rw) = &d.reweighting {
                rw.validate()?;
            }
            if let Some(sp) = &d.superiorization {
                sp.schedule.validate()?;
            }
        }
        Ok(())
    }

    pub fn alphabet(&self) -> Result<Alphabet> {
        Alphabet::from_modulation(self.modulation, None)
    }

    pub fn channel(&self) -> Result<ChannelModel> {
        ChannelModel::new(self.n, self.m, self.rho)
    }
}

/// Shared, read-only pieces of a sweep.
#[derive(Debug, Clone)]
pub struct ExperimentSetup {
    pub config: ExperimentConfig,
    pub alphabet: Alphabet,
    pub sampler: ChannelSampler,
    pub signal_power: f64,
}

impl ExperimentSetup {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let alphabet = config.alphabet()?;
        let sampler = config.channel()?.sampler()?;
        let signal_power = signal_power(&alphabet, config.n);
        Ok(ExperimentSetup {
            config,
            alphabet,
            sampler,
            signal_power,
        })
    }

    /// The generator for trial `trial` at SNR index `snr_index`.
    pub fn trial_rng(&self, snr_index: usize, trial: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        rng.set_stream(((snr_index as u64) << 32) | trial as u64);
        rng
    }
}

/// One transmitted vector, its channel and the received signal.
#[derive(Debug, Clone)]
pub struct TrialInstance {
    pub symbols: Vec<usize>,
    pub bits: Vec<u8>,
    pub x_true: RealVector,
    pub sensing: Arc<SensingMatrix>,
    pub y: RealVector,
    pub noise_variance: f64,
}

/// Draws symbols, channel and noise, in that order, from `rng`.
pub fn draw_instance(setup: &ExperimentSetup, snr_db: f64, rng: &mut impl Rng) -> Result<TrialInstance> {
    let n = setup.config.n;
    let symbols: Vec<usize> = (0..n).map(|_| rng.random_range(0..setup.alphabet.len())).collect();
    let a = setup.sampler.sample(rng);
    let (noise, noise_variance) = sample_noise_for_snr(snr_db, setup.signal_power, setup.config.m, rng);
    let x_true = setup.alphabet.symbols_to_vector(&symbols)?;
    let a_real = widen_channel(&a);
    let mut y = a_real.apply(&x_true);
    y.axpy(1.0, &complex_to_real_stack(&noise));
    Ok(TrialInstance {
        bits: symbols_to_bits(&symbols, &setup.alphabet)?,
        symbols,
        x_true,
        sensing: Arc::new(SensingMatrix::new(a_real)?),
        y,
        noise_variance,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub snr_db: f64,
    pub mu: f64,
    pub detector: String,
    pub bit_errors: u64,
    pub total_bits: u64,
    pub iterations: usize,
}

/// Runs one detector with weight `mu` on a drawn instance.
pub fn detect(
    setup: &ExperimentSetup,
    instance: &TrialInstance,
    detector: &DetectorSpec,
    mu: f64,
    snr_db: f64,
) -> Result<TrialOutcome> {
    let cfg = &setup.config;
    let dim = instance.x_true.dim();
    let seed = SeedRegularizer::for_alphabet(&setup.alphabet, cfg.n)?;
    let count = seed.len();
    let gme = match detector.model {
        DetectorModel::Soav => GmeSpec::zero(),
        DetectorModel::Cligme => GmeSpec::scaled_sensing(
            Arc::clone(&instance.sensing),
            vec![cfg.total_gamma / count as f64; count],
        )?,
    };
    let reg = LigmeRegularizer::new(seed, gme, mu)?;
    let hull = setup.alphabet.hull(cfg.n)?;
    let problem = RealizedProblem::new(
        instance.y.clone(),
        Arc::clone(&instance.sensing),
        hull,
        reg,
        setup.alphabet.clone(),
    )?;
    let steps = default_step_sizes(&problem, cfg.kappa)?;
    let stop = StopCriteria {
        max_iter: cfg.max_iter,
        residual_tol: cfg.residual_tol,
        record_objective: false,
    };
    let report = solve_modified(
        &problem,
        &steps,
        SolverState::zeros(dim, count),
        stop,
        detector.reweighting.as_ref(),
        detector.superiorization.as_ref(),
    )?;
    let bits = symbols_to_bits(&report.symbols, &setup.alphabet)?;
    let bit_errors = bits.iter().zip(&instance.bits).filter(|(a, b)| a != b).count() as u64;
    Ok(TrialOutcome {
        snr_db,
        mu,
        detector: detector.id.clone(),
        bit_errors,
        total_bits: instance.bits.len() as u64,
        iterations: report.iterations,
    })
}

/// Draws the instance of `(snr_index, trial)` and runs one detector on it.
pub fn run_trial(
    setup: &ExperimentSetup,
    snr_index: usize,
    trial: usize,
    detector: &DetectorSpec,
    mu: f64,
) -> Result<TrialOutcome> {
    let snr_db = setup.config.snr_db[snr_index];
    let instance = draw_instance(setup, snr_db, &mut setup.trial_rng(snr_index, trial))?;
    detect(setup, &instance, detector, mu, snr_db)
}

/// Aggregated result for one `(snr, detector, μ)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub snr_db: f64,
    pub detector: String,
    pub mu: f64,
    pub trials: usize,
    pub bit_errors: u64,
    pub total_bits: u64,
    pub ber: f64,
    /// Best-μ summary row for its detector and SNR.
    pub best: bool,
    /// Bit errors of each trial, in trial order.
    pub per_trial_errors: Vec<u64>,
}

impl SweepRow {
    fn label(&self) -> String {
        if self.best {
            format!("{}{BEST_SUFFIX}", self.detector)
        } else {
            self.detector.clone()
        }
    }

    /// Standard error of the BER estimate from the spread across trials.
    pub fn standard_error(&self) -> f64 {
        let t = self.per_trial_errors.len();
        if t < 2 || self.total_bits == 0 {
            return 0.0;
        }
        let bits_per_trial = self.total_bits as f64 / t as f64;
        let rates: Vec<f64> = self.per_trial_errors.iter().map(|&e| e as f64 / bits_per_trial).collect();
        let mean = rates.iter().sum::<f64>() / t as f64;
        let var = rates.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (t - 1) as f64;
        (var / t as f64).sqrt()
    }

    pub fn csv_line(&self, log_floor: bool) -> String {
        let ber = if log_floor && self.ber == 0.0 { f64::EPSILON } else { self.ber };
        format!(
            "{},{},{},{},{},{},{}",
            self.snr_db,
            self.label(),
            format_sci(self.mu),
            self.trials,
            self.bit_errors,
            self.total_bits,
            format_sci(ber)
        )
    }
}

/// C-style `%.6e`: six fractional digits and a signed exponent of at least two digits.
pub fn format_sci(x: f64) -> String {
    let s = format!("{x:.6e}");
    match s.split_once('e') {
        Some((mantissa, exp)) => {
            let (sign, digits) = match exp.strip_prefix('-') {
                Some(d) => ('-', d),
                None => ('+', exp),
            };
            format!("{mantissa}e{sign}{digits:0>2}")
        }
        None => s,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn best(&self, snr_db: f64, detector: &str) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.best && r.snr_db == snr_db && r.detector == detector)
    }

    pub fn to_csv(&self, log_floor: bool) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.csv_line(log_floor));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Default)]
pub struct SweepOptions {
    /// Worker threads; `None` uses all available cores.
    pub threads: Option<usize>,
    /// CSV destination; rows are flushed after every SNR.
    pub output: Option<PathBuf>,
}

/// Runs every `(snr, detector, μ)` cell over all trials and selects the best μ
/// per SNR and detector (lowest BER, earliest in the grid on ties).
pub fn run_sweep(config: &ExperimentConfig, options: &SweepOptions) -> Result<SweepTable> {
    let setup = ExperimentSetup::new(config.clone())?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = options.threads {
        builder = builder.num_threads(t.max(1));
    }
    let pool = builder.build().map_err(|e| Error::invalid("threads", e.to_string()))?;

    let mut writer = match &options.output {
        Some(path) => Some(open_csv(path)?),
        None => None,
    };
    let mut rows = Vec::new();
    for (si, &snr_db) in config.snr_db.iter().enumerate() {
        // outcomes[trial][detector][mu]
        let outcomes: Vec<Vec<Vec<TrialOutcome>>> = pool.install(|| {
            (0..config.trials)
                .into_par_iter()
                .map(|t| {
                    let instance = draw_instance(&setup, snr_db, &mut setup.trial_rng(si, t))?;
                    config
                        .detectors
                        .iter()
                        .map(|d| {
                            config
                                .mu_grid
                                .iter()
                                .map(|&mu| detect(&setup, &instance, d, mu, snr_db))
                                .collect::<Result<Vec<_>>>()
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()
        })?;

        let mut snr_rows = Vec::new();
        let mut best_rows = Vec::new();
        for (di, d) in config.detectors.iter().enumerate() {
            let mut best: Option<SweepRow> = None;
            for (mi, &mu) in config.mu_grid.iter().enumerate() {
                let per_trial: Vec<u64> = outcomes.iter().map(|o| o[di][mi].bit_errors).collect();
                let bit_errors: u64 = per_trial.iter().sum();
                let total_bits: u64 = outcomes.iter().map(|o| o[di][mi].total_bits).sum();
                let row = SweepRow {
                    snr_db,
                    detector: d.id.clone(),
                    mu,
                    trials: config.trials,
                    bit_errors,
                    total_bits,
                    ber: bit_errors as f64 / total_bits as f64,
                    best: false,
                    per_trial_errors: per_trial,
                };
                if best.as_ref().is_none_or(|b| row.ber < b.ber) {
                    best = Some(SweepRow { best: true, ..row.clone() });
                }
                snr_rows.push(row);
            }
            best_rows.extend(best);
        }
        snr_rows.extend(best_rows);
        if let Some(w) = writer.as_mut() {
            for r in &snr_rows {
                writeln!(w, "{}", r.csv_line(config.log_floor))?;
            }
            w.flush()?;
        }
        rows.extend(snr_rows);
    }
    Ok(SweepTable { rows })
}

fn open_csv(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{CSV_HEADER}")?;
    w.flush()?;
    Ok(w)
}

/// Sidecar written next to the CSV as `<csv>.meta.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub seed: u64,
    pub version: String,
    pub started_unix: f64,
    pub elapsed_seconds: f64,
    pub threads: usize,
    pub pairing: String,
    pub config: ExperimentConfig,
}

pub fn metadata_path(csv: &Path) -> PathBuf {
    let mut name = csv.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

/// Runs the sweep, writing the CSV and its metadata sidecar to `output`.
pub fn run_to_files(config: &ExperimentConfig, output: &Path, threads: Option<usize>) -> Result<SweepTable> {
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0);
    let clock = Instant::now();
    let options = SweepOptions {
        threads,
        output: Some(output.to_path_buf()),
    };
    let table = run_sweep(config, &options)?;
    let meta = RunMetadata {
        seed: config.seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        started_unix: started,
        elapsed_seconds: clock.elapsed().as_secs_f64(),
        threads: threads.unwrap_or_else(rayon::current_num_threads),
        pairing: PAIRING_NOTE.to_string(),
        config: config.clone(),
    };
    let json = serde_json::to_string_pretty(&meta).map_err(|e| Error::Io(e.to_string()))?;
    std::fs::write(metadata_path(output), json + "\n")?;
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::operator_norm;

    fn small_config() -> ExperimentConfig {
        ExperimentConfig {
            modulation: Modulation::Qam { per_axis: 2 },
            n: 4,
            m: 6,
            rho: 0.5,
            snr_db: vec![10.0, 30.0],
            mu_grid: vec![1e-3, 1e-1],
            trials: 4,
            max_iter: 100,
            residual_tol: DEFAULT_RESIDUAL_TOL,
            kappa: DEFAULT_KAPPA,
            total_gamma: 0.99,
            seed: 7,
            detectors: vec![
                DetectorSpec::plain("soav", DetectorModel::Soav),
                DetectorSpec::plain("cligme", DetectorModel::Cligme),
            ],
            output: None,
            log_floor: false,
        }
    }

    #[test]
    fn sci_format_matches_c() {
        assert_eq!(format_sci(0.0), "0.000000e+00");
        assert_eq!(format_sci(1.0), "1.000000e+00");
        assert_eq!(format_sci(0.00123456789), "1.234568e-03");
        assert_eq!(format_sci(1e-100), "1.000000e-100");
        assert_eq!(format_sci(2.5e12), "2.500000e+12");
        assert_eq!(format_sci(f64::EPSILON), "2.220446e-16");
    }

    #[test]
    fn correlation_square_root() {
        let model = ChannelModel::new(3, 8, 0.5).unwrap();
        let s = model.sampler().unwrap();
        let back = s.sqrt_correlation().matmul(s.sqrt_correlation()).unwrap();
        assert!(back.sub(&model.correlation()).unwrap().frobenius_norm() < 1e-10);
        assert!(ChannelModel::new(3, 3, 1.0).is_err());
        assert!(ChannelModel::new(0, 3, 0.1).is_err());
    }

    #[test]
    fn uncorrelated_channel_is_the_gaussian_draw() {
        let model = ChannelModel::new(3, 4, 0.0).unwrap();
        let s = model.sampler().unwrap();
        let a = s.sample(&mut ChaCha8Rng::seed_from_u64(1));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for r in 0..4 {
            for c in 0..3 {
                let g = complex_normal(&mut rng, 0.25);
                assert!((a.get(r, c) - g).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn channel_columns_have_unit_energy() {
        let model = ChannelModel::new(2, 6, 0.5).unwrap();
        let s = model.sampler().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let draws = 10_000;
        let samples: Vec<f64> = (0..draws)
            .map(|_| {
                let a = s.sample(&mut rng);
                (0..6).map(|r| a.get(r, 0).norm_sqr()).sum()
            })
            .collect();
        let mean = samples.iter().sum::<f64>() / draws as f64;
        let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (draws - 1) as f64;
        assert!((mean - 1.0).abs() < 3.0 * (var / draws as f64).sqrt(), "{mean}");
    }

    #[test]
    fn channel_is_reproducible() {
        let model = ChannelModel::new(3, 3, 0.5).unwrap();
        let a = sample_channel(&model, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let b = sample_channel(&model, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn noise_variance_examples() {
        let psk = Alphabet::psk(8).unwrap();
        assert!((noise_variance(0.0, signal_power(&psk, 50)) - 50.0).abs() < 1e-12);
        assert_eq!(signal_power(&Alphabet::qam(4).unwrap(), 3), 30.0);
        assert_eq!(signal_power(&Alphabet::qam(2).unwrap(), 3), 6.0);
        assert!(noise_variance(400.0, 50.0) < 1e-38);

        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (noise, var) = sample_noise_for_snr(3.0, 10.0, 10_000, &mut rng);
        let samples: Vec<f64> = noise.iter().map(|z| z.norm_sqr()).collect();
        let mean = samples.iter().sum::<f64>() / samples.len() as f64;
        let sd = (samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (samples.len() - 1) as f64).sqrt();
        assert!((mean - var).abs() < 3.0 * sd / (samples.len() as f64).sqrt());
    }

    #[test]
    fn instance_is_consistent() {
        let setup = ExperimentSetup::new(small_config()).unwrap();
        let inst = draw_instance(&setup, 400.0, &mut setup.trial_rng(0, 0)).unwrap();
        assert_eq!(inst.sensing.rows(), 12);
        assert_eq!(inst.sensing.cols(), 8);
        assert_eq!(inst.bits.len(), 8);
        let clean = inst.sensing.matrix().apply(&inst.x_true);
        assert!(clean.sub(&inst.y).max_abs() < 1e-15);
        assert!(operator_norm(inst.sensing.matrix(), 1e-8, 10_000).is_ok());
    }

    #[test]
    fn noiseless_trial_has_no_errors() {
        let mut cfg = small_config();
        cfg.snr_db = vec![300.0];
        cfg.max_iter = 3000;
        let setup = ExperimentSetup::new(cfg).unwrap();
        for t in 0..3 {
            for d in &setup.config.detectors {
                let out = run_trial(&setup, 0, t, d, 1e-4).unwrap();
                assert_eq!(out.bit_errors, 0, "trial {t} detector {}", d.id);
            }
        }
    }

    #[test]
    fn trial_is_deterministic() {
        let setup = ExperimentSetup::new(small_config()).unwrap();
        let d = &setup.config.detectors[1];
        assert_eq!(run_trial(&setup, 0, 2, d, 1e-2).unwrap(), run_trial(&setup, 0, 2, d, 1e-2).unwrap());
    }

    #[test]
    fn streams_differ_across_snr_and_trial() {
        let setup = ExperimentSetup::new(small_config()).unwrap();
        let a = draw_instance(&setup, 10.0, &mut setup.trial_rng(0, 0)).unwrap();
        let b = draw_instance(&setup, 10.0, &mut setup.trial_rng(0, 1)).unwrap();
        let c = draw_instance(&setup, 10.0, &mut setup.trial_rng(1, 0)).unwrap();
        assert_ne!(a.y, b.y);
        assert_ne!(a.y, c.y);
    }

    #[test]
    fn sweep_rows_and_best_selection() {
        let cfg = small_config();
        let table = run_sweep(&cfg, &SweepOptions::default()).unwrap();
        // per SNR: 2 detectors × 2 μ plus 2 best rows
        assert_eq!(table.rows.len(), 2 * (4 + 2));
        for r in &table.rows {
            assert!(r.bit_errors <= r.total_bits);
            assert_eq!(r.total_bits, 4 * 4 * 2);
            assert!((0.0..=1.0).contains(&r.ber));
        }
        for snr in [10.0, 30.0] {
            for det in ["soav", "cligme"] {
                let best = table.best(snr, det).unwrap();
                let min = table
                    .rows
                    .iter()
                    .filter(|r| !r.best && r.snr_db == snr && r.detector == det)
                    .map(|r| r.ber)
                    .fold(f64::INFINITY, f64::min);
                assert_eq!(best.ber, min);
            }
        }
        let csv = table.to_csv(false);
        assert!(csv.starts_with(CSV_HEADER));
        assert!(csv.contains("soav@best"));
        assert!(!csv.contains('\r'));
    }

    #[test]
    fn single_cell_sweep() {
        let mut cfg = small_config();
        cfg.trials = 1;
        cfg.snr_db = vec![20.0];
        cfg.mu_grid = vec![0.01];
        cfg.detectors.truncate(1);
        let table = run_sweep(&cfg, &SweepOptions::default()).unwrap();
        assert_eq!(table.rows.iter().filter(|r| !r.best).count(), 1);
    }

    #[test]
    fn log_floor_substitutes_epsilon() {
        let row = SweepRow {
            snr_db: 20.0,
            detector: "d".into(),
            mu: 0.1,
            trials: 1,
            bit_errors: 0,
            total_bits: 10,
            ber: 0.0,
            best: false,
            per_trial_errors: vec![0],
        };
        assert_eq!(row.csv_line(false), "20,d,1.000000e-01,1,0,10,0.000000e+00");
        assert_eq!(row.csv_line(true), "20,d,1.000000e-01,1,0,10,2.220446e-16");
    }

    #[test]
    fn results_are_independent_of_thread_count() {
        let mut cfg = small_config();
        cfg.snr_db = vec![15.0];
        let one = run_sweep(&cfg, &SweepOptions { threads: Some(1), output: None }).unwrap();
        let three = run_sweep(&cfg, &SweepOptions { threads: Some(3), output: None }).unwrap();
        assert_eq!(one, three);
    }

    #[test]
    fn config_validation_and_parsing() {
        let json = r#"{
            "modulation": {"kind": "psk", "order": 8},
            "n": 4, "m": 4, "snr_db": [10], "seed": 1,
            "detectors": [{"id": "c", "model": "cligme",
                           "superiorization": {"schedule": {"kind": "constant", "c": 0.01}}}]
        }"#;
        let cfg: ExperimentConfig = serde_json::from_str(json).unwrap();
        assert_eq!(cfg.mu_grid.len(), 8);
        assert_eq!(cfg.trials, 100);
        assert_eq!(cfg.max_iter, 500);
        assert_eq!(cfg.kappa, 1.001);
        assert!(cfg.validate().is_ok());
        assert!(serde_json::from_str::<ExperimentConfig>(&json.replace("\"seed\"", "\"bogus\": 1, \"seed\"")).is_err());

        let mut bad = cfg.clone();
        bad.mu_grid = vec![0.0];
        assert!(bad.validate().is_err());
        let mut bad = cfg.clone();
        bad.trials = 0;
        assert!(bad.validate().is_err());
        let mut bad = cfg.clone();
        bad.detectors.push(bad.detectors[0].clone());
        assert!(bad.validate().is_err());
        let mut bad = cfg;
        bad.modulation = Modulation::Real;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn files_are_written() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested/out.csv");
        let mut cfg = small_config();
        cfg.snr_db = vec![20.0];
        cfg.trials = 2;
        let table = run_to_files(&cfg, &path, Some(1)).unwrap();
        let csv = std::fs::read_to_string(&path).unwrap();
        assert_eq!(csv, table.to_csv(false));
        let meta: RunMetadata = serde_json::from_str(&std::fs::read_to_string(metadata_path(&path)).unwrap()).unwrap();
        assert_eq!(meta.seed, 7);
        assert_eq!(meta.pairing, PAIRING_NOTE);
    }
}
