//! Iterative reweighting and (generalized) superiorization of the solver loop.

use serde::{Deserialize, Serialize};

use crate::constellation::{quantize_to_alphabet, Alphabet, Modulation};
use crate::error::{Error, Result};
use crate::linalg::RealVector;
use crate::prox::WeightVector;
use crate::solver::{iterate, Prestep, RealizedProblem, SolveReport, SolverState, StepSizes, StopCriteria};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReweightingPolicy {
    /// Reweight at iterations `k` with `k mod period = 0`.
    pub period: usize,
    /// Floor added to every distance.
    pub delta: f64,
}

impl ReweightingPolicy {
    pub fn new(period: usize, delta: f64) -> Result<Self> {
        let policy = ReweightingPolicy { period, delta };
        policy.validate()?;
        Ok(policy)
    }

    pub fn validate(&self) -> Result<()> {
        if self.period == 0 {
            return Err(Error::invalid("period", "must be at least 1"));
        }
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return Err(Error::invalid("delta", format!("must be positive, got {}", self.delta)));
        }
        Ok(())
    }
}

/// Step weights `β_k` of the perturbation toward the alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BetaSchedule {
    Zero,
    /// `c·r^k`
    Geometric { c: f64, r: f64 },
    /// `c·max(k, 1)^(−p)`
    InversePower { c: f64, p: f64 },
    Constant { c: f64 },
}

impl BetaSchedule {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            BetaSchedule::Zero => true,
            BetaSchedule::Geometric { c, r } => c >= 0.0 && r >= 0.0 && c.is_finite() && r.is_finite(),
            BetaSchedule::InversePower { c, p } => c >= 0.0 && p >= 0.0 && c.is_finite() && p.is_finite(),
            BetaSchedule::Constant { c } => c >= 0.0 && c.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid("beta_schedule", format!("parameters must be finite and nonnegative: {self:?}")))
        }
    }

    pub fn beta(&self, k: usize) -> f64 {
        match *self {
            BetaSchedule::Zero => 0.0,
            BetaSchedule::Geometric { c, r } => c * r.powi(k.min(i32::MAX as usize) as i32),
            BetaSchedule::InversePower { c, p } => c * (k.max(1) as f64).powf(-p),
            BetaSchedule::Constant { c } => c,
        }
    }

    /// Whether `Σ_k β_k < ∞`, the condition under which convergence is preserved.
    pub fn is_summable(&self) -> bool {
        match *self {
            BetaSchedule::Zero => true,
            BetaSchedule::Geometric { c, r } => c == 0.0 || r < 1.0,
            BetaSchedule::InversePower { c, p } => c == 0.0 || p > 1.0,
            BetaSchedule::Constant { c } => c == 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuperiorizationPolicy {
    pub schedule: BetaSchedule,
}

/// `ω_n^(l) ∝ (|x_n − a^(l)| + δ)⁻¹`, normalized over `l`.
///
/// Weights are indexed like the alphabet's seed: by point for real alphabets,
/// by axis level for QAM, and per `(Re, Im)` pair with complex distances for PSK.
pub fn reweight(x: &RealVector, alphabet: &Alphabet, delta: f64) -> Result<Vec<WeightVector>> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::invalid("delta", format!("must be positive, got {delta}")));
    }
    let symbols = alphabet.symbol_count(x.dim())?;
    let distances: Vec<Vec<f64>> = match alphabet.modulation() {
        Modulation::Real => {
            let pts: Vec<f64> = alphabet.points().iter().map(|p| p.re).collect();
            pts.iter().map(|a| x.iter().map(|xn| (xn - a).abs()).collect()).collect()
        }
        Modulation::Qam { .. } => alphabet
            .axis_levels()
            .iter()
            .map(|a| x.iter().map(|xn| (xn - a).abs()).collect())
            .collect(),
        Modulation::Psk { .. } => alphabet
            .points()
            .iter()
            .map(|a| (0..symbols).map(|k| (x[k] - a.re).hypot(x[symbols + k] - a.im)).collect())
            .collect(),
    };
    let width = distances[0].len();
    let mut weights = vec![vec![0.0; width]; distances.len()];
    for n in 0..width {
        let total: f64 = distances.iter().map(|d| 1.0 / (d[n] + delta)).sum();
        for (w, d) in weights.iter_mut().zip(&distances) {
            w[n] = 1.0 / (d[n] + delta) / total;
        }
    }
    weights.into_iter().map(WeightVector::new).collect()
}

/// `x + β(P(x) − x)` with `P` the nearest-point map onto the alphabet.
pub fn superiorize(x: &RealVector, alphabet: &Alphabet, beta: f64) -> Result<RealVector> {
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::invalid("beta", format!("must be finite and nonnegative, got {beta}")));
    }
    let (q, _) = quantize_to_alphabet(x, alphabet)?;
    let mut out = x.clone();
    out.axpy(beta, &q.sub(x));
    Ok(out)
}

/// [`crate::solver::solve`] with the optional modifications applied at the top of each iteration.
pub fn solve_modified(
    problem: &RealizedProblem,
    steps: &StepSizes,
    init: SolverState,
    stop: StopCriteria,
    reweighting: Option<&ReweightingPolicy>,
    superiorization: Option<&SuperiorizationPolicy>,
) -> Result<SolveReport> {
    if let Some(rw) = reweighting {
        rw.validate()?;
    }
    if let Some(sp) = superiorization {
        sp.schedule.validate()?;
    }
    let heuristic = reweighting.is_some() || superiorization.is_some_and(|sp| !sp.schedule.is_summable());
    let alphabet = problem.alphabet().clone();
    let mut hook = |k: usize, state: &mut SolverState, seed: &mut crate::regularizer::SeedRegularizer| -> Result<()> {
        if let Some(rw) = reweighting {
            if k % rw.period == 0 {
                seed.set_weights(reweight(&state.x, &alphabet, rw.delta)?)?;
            }
        }
        if let Some(sp) = superiorization {
            let beta = sp.schedule.beta(k);
            if beta != 0.0 {
                state.x = superiorize(&state.x, &alphabet, beta)?;
            }
        }
        Ok(())
    };
    let prestep: Option<&mut Prestep<'_>> = if reweighting.is_some() || superiorization.is_some() {
        Some(&mut hook)
    } else {
        None
    };
    iterate(problem, steps, init, stop, prestep, heuristic)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{RealMatrix, SensingMatrix};
    use crate::regularizer::{build_gme_scaled_sensing, LigmeRegularizer, SeedRegularizer};
    use crate::solver::{default_step_sizes, solve, DEFAULT_KAPPA};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn random_problem(rng: &mut ChaCha8Rng, m: usize, n: usize) -> RealizedProblem {
        let a = RealMatrix::new(m, n, (0..m * n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let sensing = Arc::new(SensingMatrix::new(a).unwrap());
        let alphabet = Alphabet::real(vec![-1.0, 0.0, 1.0]).unwrap();
        let seed = SeedRegularizer::for_alphabet(&alphabet, n).unwrap();
        let mu = 0.1;
        let gme = build_gme_scaled_sensing(Arc::clone(&sensing), mu, 3, 0.99).unwrap();
        let reg = LigmeRegularizer::new(seed, gme, mu).unwrap();
        let y = RealVector::new((0..m).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let hull = alphabet.hull(n).unwrap();
        RealizedProblem::new(y, sensing, hull, reg, alphabet).unwrap()
    }

    #[test]
    fn reweight_examples() {
        let bin = Alphabet::real(vec![-1.0, 1.0]).unwrap();
        let w = reweight(&RealVector::new(vec![0.5]).unwrap(), &bin, 1e-300).unwrap();
        assert!((w[0][0] - 0.25).abs() < 1e-12 && (w[1][0] - 0.75).abs() < 1e-12);

        let w = reweight(&RealVector::new(vec![0.0]).unwrap(), &bin, 0.1).unwrap();
        assert_eq!(w[0][0], 0.5);

        let tri = Alphabet::real(vec![-1.0, 0.0, 1.0]).unwrap();
        let w = reweight(&RealVector::new(vec![-1.0]).unwrap(), &tri, f64::EPSILON).unwrap();
        assert!(w[0][0] > 1.0 - 1e-12);
        assert!(w[1][0] < 1e-12 && w[2][0] < 1e-12);

        assert!(reweight(&RealVector::zeros(1), &bin, 0.0).is_err());
        assert!(reweight(&RealVector::zeros(1), &bin, -1.0).is_err());
    }

    #[test]
    fn reweight_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        for alphabet in [
            Alphabet::real(vec![-1.0, 0.0, 1.0]).unwrap(),
            Alphabet::qam(4).unwrap(),
            Alphabet::psk(8).unwrap(),
        ] {
            let dim = alphabet.ambient_dim(5);
            for _ in 0..50 {
                let x = RealVector::new((0..dim).map(|_| rng.random_range(-4.0..4.0)).collect()).unwrap();
                let w = reweight(&x, &alphabet, 1e-3).unwrap();
                let seed = SeedRegularizer::for_alphabet(&alphabet, 5).unwrap();
                assert_eq!(w.len(), seed.len());
                assert_eq!(w[0].dim(), seed.weights()[0].dim());
                for n in 0..w[0].dim() {
                    let total: f64 = w.iter().map(|wl| wl[n]).sum();
                    assert!((total - 1.0).abs() < 1e-12);
                    assert!(w.iter().all(|wl| wl[n] > 0.0 && wl[n] < 1.0));
                    // nearer shift, larger weight
                    let dist = |l: usize| {
                        let s = &seed.shifts()[l];
                        if seed.kind() == crate::regularizer::SeedKind::WeightedL21 {
                            (x[n] - s[n]).hypot(x[5 + n] - s[5 + n])
                        } else {
                            (x[n] - s[n]).abs()
                        }
                    };
                    for a in 0..w.len() {
                        for b in 0..w.len() {
                            if dist(a) < dist(b) {
                                assert!(w[a][n] > w[b][n]);
                            }
                        }
                    }
                }
                let mut seed = seed;
                seed.set_weights(w).unwrap();
            }
        }
    }

    #[test]
    fn superiorize_examples() {
        let bin = Alphabet::real(vec![-1.0, 1.0]).unwrap();
        let x = RealVector::new(vec![0.5]).unwrap();
        assert_eq!(superiorize(&x, &bin, 0.0).unwrap(), x);
        assert_eq!(superiorize(&x, &bin, 1.0).unwrap().as_slice(), &[1.0]);
        assert_eq!(superiorize(&x, &bin, 0.5).unwrap().as_slice(), &[0.75]);
        assert!(superiorize(&x, &bin, -0.1).is_err());
    }

    #[test]
    fn superiorize_contracts_toward_quantization() {
        let mut rng = ChaCha8Rng::seed_from_u64(62);
        let alphabet = Alphabet::psk(8).unwrap();
        for _ in 0..100 {
            let x = RealVector::new((0..8).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap();
            let beta = rng.random_range(0.0..1.0);
            let (q, idx) = quantize_to_alphabet(&x, &alphabet).unwrap();
            let moved = superiorize(&x, &alphabet, beta).unwrap();
            let ratio = moved.sub(&q).norm() / x.sub(&q).norm();
            assert!((ratio - (1.0 - beta)).abs() < 1e-12);
            assert_eq!(quantize_to_alphabet(&moved, &alphabet).unwrap().1, idx);
        }
    }

    #[test]
    fn schedules() {
        assert_eq!(BetaSchedule::Geometric { c: 0.1, r: 0.99 }.beta(0), 0.1);
        assert!((BetaSchedule::Geometric { c: 0.1, r: 0.99 }.beta(2) - 0.1 * 0.9801).abs() < 1e-16);
        assert_eq!(BetaSchedule::InversePower { c: 0.1, p: 0.5 }.beta(0), 0.1);
        assert_eq!(BetaSchedule::InversePower { c: 0.1, p: 0.5 }.beta(4), 0.05);
        assert_eq!(BetaSchedule::Constant { c: 0.01 }.beta(1000), 0.01);
        assert!(BetaSchedule::Geometric { c: 0.1, r: 0.99 }.is_summable());
        assert!(!BetaSchedule::InversePower { c: 0.1, p: 0.5 }.is_summable());
        assert!(!BetaSchedule::Constant { c: 0.01 }.is_summable());
        assert!(BetaSchedule::Constant { c: -1.0 }.validate().is_err());
        let json = r#"{"kind":"inverse_power","c":0.1,"p":0.5}"#;
        let s: BetaSchedule = serde_json::from_str(json).unwrap();
        assert_eq!(s, BetaSchedule::InversePower { c: 0.1, p: 0.5 });
        assert!(serde_json::from_str::<BetaSchedule>(r#"{"kind":"constant","c":1,"x":2}"#).is_err());
        assert!(ReweightingPolicy::new(0, 1e-3).is_err());
    }

    #[test]
    fn zero_modifications_match_plain_solve_bitwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(63);
        for _ in 0..3 {
            let p = random_problem(&mut rng, 4, 5);
            let s = default_step_sizes(&p, DEFAULT_KAPPA).unwrap();
            let stop = StopCriteria {
                max_iter: 200,
                residual_tol: 0.0,
                record_objective: false,
            };
            let plain = solve(&p, &s, SolverState::zeros(5, 3), stop).unwrap();
            let zero = SuperiorizationPolicy { schedule: BetaSchedule::Zero };
            let modified = solve_modified(&p, &s, SolverState::zeros(5, 3), stop, None, Some(&zero)).unwrap();
            assert_eq!(plain, modified);
            assert!(!modified.heuristic);
        }
    }

    #[test]
    fn summable_superiorization_still_converges() {
        let mut rng = ChaCha8Rng::seed_from_u64(64);
        let p = random_problem(&mut rng, 5, 4);
        let s = default_step_sizes(&p, DEFAULT_KAPPA).unwrap();
        let sp = SuperiorizationPolicy {
            schedule: BetaSchedule::Geometric { c: 0.1, r: 0.99 },
        };
        let stop = StopCriteria {
            max_iter: 20_000,
            residual_tol: 1e-8,
            record_objective: false,
        };
        let report = solve_modified(&p, &s, SolverState::zeros(4, 3), stop, None, Some(&sp)).unwrap();
        assert!(*report.residual_history.last().unwrap() < 1e-8);
        assert!(!report.heuristic);
    }

    #[test]
    fn heuristic_flag() {
        let mut rng = ChaCha8Rng::seed_from_u64(65);
        let p = random_problem(&mut rng, 3, 3);
        let s = default_step_sizes(&p, DEFAULT_KAPPA).unwrap();
        let stop = StopCriteria::max_iter(20);
        let rw = ReweightingPolicy::new(5, f64::EPSILON).unwrap();
        let r = solve_modified(&p, &s, SolverState::zeros(3, 3), stop, Some(&rw), None).unwrap();
        assert!(r.heuristic);
        let sp = SuperiorizationPolicy {
            schedule: BetaSchedule::Constant { c: 0.01 },
        };
        let r = solve_modified(&p, &s, SolverState::zeros(3, 3), stop, None, Some(&sp)).unwrap();
        assert!(r.heuristic);
        assert!(r.x_final.iter().all(|v| (-1.0..=1.0).contains(v)));
    }
}
