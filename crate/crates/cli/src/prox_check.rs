use ligme::linalg::RealVector;
use ligme::oracle;
use ligme::prox::{project_regular_octagon_pair, prox_weighted_l1, prox_weighted_l21, WeightVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::{CliError, CliResult};

pub const PROX_CHECK_TOL: f64 = 1e-6;

/// Factor applied to the threshold when a fault is injected on purpose.
pub const FAULT_FACTOR: f64 = 1.01;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "operator", rename_all = "snake_case")]
pub enum ProxCase {
    WeightedL1 { u: Vec<f64>, gamma: f64, omega: Vec<f64> },
    WeightedL21 { u: Vec<f64>, gamma: f64, omega: Vec<f64> },
    Octagon { point: (f64, f64), circumradius: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseResult {
    pub case: ProxCase,
    pub got: Vec<f64>,
    pub expected: Vec<f64>,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ProxCheckSummary {
    pub l1_max: f64,
    pub l21_max: f64,
    pub octagon_max: f64,
    pub cases: usize,
    /// Worst case of each kind, kept for diagnostics.
    pub worst: Vec<CaseResult>,
}

impl ProxCheckSummary {
    pub fn max_deviation(&self) -> f64 {
        self.l1_max.max(self.l21_max).max(self.octagon_max)
    }

    pub fn passed(&self, tol: f64) -> bool {
        self.max_deviation() < tol
    }
}

fn max_dev(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn random_case(rng: &mut ChaCha8Rng) -> (Vec<f64>, f64, Vec<f64>) {
    let dim = rng.random_range(1..=8);
    let gamma = 10f64.powf(rng.random_range(-2.0..2.0));
    let omega = (0..dim).map(|_| rng.random_range(0.05..1.0)).collect();
    // spread entries so both the thresholded and the surviving branch occur
    let scale = gamma * rng.random_range(0.1..3.0);
    let u = (0..2 * dim).map(|_| rng.random_range(-scale..scale)).collect();
    (u, gamma, omega)
}

/// Compares the closed-form operators with the brute-force oracles on
/// `cases` random instances of each kind.
pub fn run_prox_check(seed: u64, cases: usize, inject_fault: bool) -> CliResult<ProxCheckSummary> {
    if cases == 0 {
        return Err(CliError::config("cases must be at least 1"));
    }
    let fault = if inject_fault { FAULT_FACTOR } else { 1.0 };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut summary = ProxCheckSummary {
        cases,
        ..Default::default()
    };
    let mut worst: [Option<CaseResult>; 3] = [None, None, None];
    let mut keep = |slot: usize, result: CaseResult| {
        if worst[slot].as_ref().is_none_or(|w| result.deviation > w.deviation) {
            worst[slot] = Some(result);
        }
    };
    for _ in 0..cases {
        let (u, gamma, omega) = random_case(&mut rng);
        let dim = omega.len();
        let w = WeightVector::new(omega.clone())?;

        let u1 = u[..dim].to_vec();
        let got = prox_weighted_l1(&RealVector::new(u1.clone())?, gamma * fault, &w)?.into_vec();
        let expected = oracle::prox_weighted_l1(&u1, gamma, &omega);
        let deviation = max_dev(&got, &expected);
        summary.l1_max = summary.l1_max.max(deviation);
        keep(
            0,
            CaseResult {
                case: ProxCase::WeightedL1 { u: u1, gamma, omega: omega.clone() },
                got,
                expected,
                deviation,
            },
        );

        let got = prox_weighted_l21(&RealVector::new(u.clone())?, gamma * fault, &w)?.into_vec();
        let expected = oracle::prox_weighted_l21(&u, gamma, &omega);
        let deviation = max_dev(&got, &expected);
        summary.l21_max = summary.l21_max.max(deviation);
        keep(
            1,
            CaseResult {
                case: ProxCase::WeightedL21 { u, gamma, omega },
                got,
                expected,
                deviation,
            },
        );

        let r = rng.random_range(0.2..3.0);
        let point = (rng.random_range(-3.0 * r..3.0 * r), rng.random_range(-3.0 * r..3.0 * r));
        let (gx, gy) = project_regular_octagon_pair(point, r * fault)?;
        let (ex, ey) = oracle::project_octagon(point, r);
        let deviation = (gx - ex).abs().max((gy - ey).abs());
        summary.octagon_max = summary.octagon_max.max(deviation);
        keep(
            2,
            CaseResult {
                case: ProxCase::Octagon { point, circumradius: r },
                got: vec![gx, gy],
                expected: vec![ex, ey],
                deviation,
            },
        );
    }
    summary.worst = worst.into_iter().flatten().collect();
    Ok(summary)
}

pub fn cmd_prox_check(seed: u64, cases: usize, inject_fault: bool) -> CliResult<ProxCheckSummary> {
    let summary = run_prox_check(seed, cases, inject_fault)?;
    println!(
        "cases: {}  max deviation: l1 {:.3e}  l21 {:.3e}  octagon {:.3e}",
        summary.cases, summary.l1_max, summary.l21_max, summary.octagon_max
    );
    if summary.passed(PROX_CHECK_TOL) {
        return Ok(summary);
    }
    let failing: Vec<&CaseResult> = summary.worst.iter().filter(|c| c.deviation >= PROX_CHECK_TOL).collect();
    let json = serde_json::to_string(&failing).unwrap_or_default();
    Err(CliError::runtime(format!("oracle mismatch above {PROX_CHECK_TOL:e}: {json}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clean_run_passes() {
        let s = run_prox_check(1, 30, false).unwrap();
        assert!(s.passed(PROX_CHECK_TOL), "{s:?}");
        assert_eq!(s.worst.len(), 3);
    }

    #[test]
    fn fault_is_detected() {
        let s = run_prox_check(1, 30, true).unwrap();
        assert!(!s.passed(PROX_CHECK_TOL));
        assert!(cmd_prox_check(1, 30, true).is_err());
    }

    #[test]
    fn same_seed_same_cases() {
        assert_eq!(run_prox_check(9, 10, false).unwrap(), run_prox_check(9, 10, false).unwrap());
        assert!(run_prox_check(9, 0, false).is_err());
    }
}
