//! SOAV and LiGME regularizers.
//!
//! The LiGME regularizer is a sum over alphabet points `a^(l)` of the
//! Generalized Moreau Enhancement of a weighted seed norm,
//!
//! ```text
//! Θ(x) = Σ_l [ ψ_l(x − s_l) − min_v { ψ_l(v) + ½‖B_l (x − s_l − v)‖² } ]
//! ```
//!
//! where `ψ_l` is a weighted ℓ1 norm (real and QAM alphabets) or weighted
//! ℓ2,1 norm over `(Re, Im)` pairs (PSK), and `s_l` is the stacked shift
//! `a^(l)·1`. With every `B_l = O` it reduces to SOAV.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::constellation::{complex_to_real_stack, Alphabet, Modulation};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{min_eigenvalue_psd_check, spectral_norm, Certification, RealMatrix, RealVector, SensingMatrix};
use crate::prox::{prox_weighted_l1, prox_weighted_l21, WeightVector};

/// Tolerance on the smallest eigenvalue when certifying overall convexity.
pub const CONVEXITY_TOL: f64 = 1e-10;
/// Iteration cap of the inner proximal-gradient evaluation.
pub const ITERATIVE_EVAL_MAX_ITER: usize = 100_000;

const WEIGHT_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedKind {
    /// `Σ_n ω_n |u_n|`
    WeightedL1,
    /// `Σ_n ω_n ‖(u_n, u_{N+n})‖₂` on the stacked layout
    WeightedL21,
}

/// The shifted weighted seed norms `ψ_l(· − s_l)`, one per alphabet point.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedRegularizer {
    kind: SeedKind,
    shifts: Vec<RealVector>,
    weights: Vec<WeightVector>,
}

impl SeedRegularizer {
    pub fn new(kind: SeedKind, shifts: Vec<RealVector>, weights: Vec<WeightVector>) -> Result<Self> {
        if shifts.is_empty() {
            return Err(Error::invalid("shifts", "need at least one alphabet point"));
        }
        check_dim("seed weight families", shifts.len(), weights.len())?;
        let dim = shifts[0].dim();
        if kind == SeedKind::WeightedL21 && dim % 2 != 0 {
            return Err(Error::invalid("shifts", "the ℓ2,1 seed needs an even (stacked) dimension"));
        }
        for s in &shifts {
            check_dim("seed shift", dim, s.dim())?;
        }
        let seed = SeedRegularizer { kind, shifts, weights };
        seed.check_weights(&seed.weights)?;
        Ok(seed)
    }

    /// Uniform weights `1/L` and shifts at the alphabet points, for `symbols` symbols.
    ///
    /// QAM alphabets use the per-axis levels as points on all `2N`
    /// coordinates; PSK alphabets use the ℓ2,1 seed on `(Re, Im)` pairs.
    pub fn for_alphabet(alphabet: &Alphabet, symbols: usize) -> Result<Self> {
        let dim = alphabet.ambient_dim(symbols);
        let (kind, shifts): (SeedKind, Vec<RealVector>) = match alphabet.modulation() {
            Modulation::Real | Modulation::Qam { .. } => (
                SeedKind::WeightedL1,
                alphabet
                    .axis_levels()
                    .iter()
                    .map(|&a| RealVector::filled(dim, a))
                    .collect(),
            ),
            Modulation::Psk { .. } => (
                SeedKind::WeightedL21,
                alphabet
                    .points()
                    .iter()
                    .map(|&a| complex_to_real_stack(&vec![a; symbols]))
                    .collect(),
            ),
        };
        // for real alphabets keep the caller's point order rather than sorted levels
        let shifts = if alphabet.modulation() == Modulation::Real {
            alphabet.points().iter().map(|a| RealVector::filled(dim, a.re)).collect()
        } else {
            shifts
        };
        let count = shifts.len();
        let weight_dim = if kind == SeedKind::WeightedL21 { dim / 2 } else { dim };
        let weights = vec![WeightVector::uniform(weight_dim, 1.0 / count as f64)?; count];
        SeedRegularizer::new(kind, shifts, weights)
    }

    fn weight_dim(&self) -> usize {
        match self.kind {
            SeedKind::WeightedL1 => self.dim(),
            SeedKind::WeightedL21 => self.dim() / 2,
        }
    }

    fn check_weights(&self, weights: &[WeightVector]) -> Result<()> {
        check_dim("seed weight families", self.shifts.len(), weights.len())?;
        let wd = self.weight_dim();
        for w in weights {
            check_dim("seed weights", wd, w.dim())?;
        }
        for n in 0..wd {
            let total: f64 = weights.iter().map(|w| w[n]).sum();
            if (total - 1.0).abs() > WEIGHT_SUM_TOL {
                return Err(Error::invalid(
                    "weights",
                    format!("weights at coordinate {n} sum to {total}, expected 1"),
                ));
            }
        }
        Ok(())
    }

    pub fn kind(&self) -> SeedKind {
        self.kind
    }

    /// Number of alphabet points `L`.
    pub fn len(&self) -> usize {
        self.shifts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shifts.is_empty()
    }

    /// Ambient (real) dimension.
    pub fn dim(&self) -> usize {
        self.shifts[0].dim()
    }

    pub fn shifts(&self) -> &[RealVector] {
        &self.shifts
    }

    pub fn weights(&self) -> &[WeightVector] {
        &self.weights
    }

    pub fn set_weights(&mut self, weights: Vec<WeightVector>) -> Result<()> {
        self.check_weights(&weights)?;
        self.weights = weights;
        Ok(())
    }

    /// `ψ_l(u)` (unshifted).
    pub fn norm(&self, l: usize, u: &[f64]) -> f64 {
        seed_norm(self.kind, &self.weights[l], u)
    }

    /// `Prox_{γ ψ_l}(u)` (unshifted).
    pub fn prox(&self, l: usize, u: &RealVector, gamma: f64) -> Result<RealVector> {
        seed_prox(self.kind, &self.weights[l], u, gamma)
    }
}

pub(crate) fn seed_norm(kind: SeedKind, w: &WeightVector, u: &[f64]) -> f64 {
    match kind {
        SeedKind::WeightedL1 => u.iter().zip(w.iter()).map(|(a, b)| b * a.abs()).sum(),
        SeedKind::WeightedL21 => {
            let n = w.dim();
            (0..n).map(|k| w[k] * u[k].hypot(u[n + k])).sum()
        }
    }
}

pub(crate) fn seed_prox(kind: SeedKind, w: &WeightVector, u: &RealVector, gamma: f64) -> Result<RealVector> {
    match kind {
        SeedKind::WeightedL1 => prox_weighted_l1(u, gamma, w),
        SeedKind::WeightedL21 => prox_weighted_l21(u, gamma, w),
    }
}

/// Serializable GME matrix family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GmeDesign {
    /// `B_l = O`: the SOAV regularizer.
    Zero,
    /// `B_l = b·I` for every `l`.
    ScaledIdentity { b: f64 },
    /// `B_l = √(γ_l/μ)·A` with `Σ γ_l ≤ 1`.
    ScaledSensing { gammas: Vec<f64> },
    /// Arbitrary `B_l`, one matrix per alphabet point.
    Explicit { matrices: Vec<RealMatrix> },
}

/// A GME design with its sensing matrix (when needed) and certification state.
#[derive(Debug, Clone, PartialEq)]
pub struct GmeSpec {
    design: GmeDesign,
    sensing: Option<Arc<SensingMatrix>>,
    certification: Option<Certification>,
}

impl GmeSpec {
    pub fn zero() -> Self {
        GmeSpec {
            design: GmeDesign::Zero,
            sensing: None,
            certification: None,
        }
    }

    pub fn scaled_identity(b: f64) -> Result<Self> {
        if !(b >= 0.0) || !b.is_finite() {
            return Err(Error::invalid("b", "must be finite and nonnegative"));
        }
        Ok(GmeSpec {
            design: GmeDesign::ScaledIdentity { b },
            sensing: None,
            certification: None,
        })
    }

    pub fn explicit(matrices: Vec<RealMatrix>) -> Result<Self> {
        if matrices.is_empty() {
            return Err(Error::invalid("matrices", "need one matrix per alphabet point"));
        }
        Ok(GmeSpec {
            design: GmeDesign::Explicit { matrices },
            sensing: None,
            certification: None,
        })
    }

    pub fn scaled_sensing(sensing: Arc<SensingMatrix>, gammas: Vec<f64>) -> Result<Self> {
        if gammas.iter().any(|g| !(*g >= 0.0) || !g.is_finite()) {
            return Err(Error::invalid("gammas", "must be finite and nonnegative"));
        }
        Ok(GmeSpec {
            design: GmeDesign::ScaledSensing { gammas },
            sensing: Some(sensing),
            certification: None,
        })
    }

    /// Realizes a serialized design; `ScaledSensing` needs the sensing matrix.
    pub fn from_design(design: GmeDesign, sensing: Option<Arc<SensingMatrix>>) -> Result<Self> {
        match design {
            GmeDesign::Zero => Ok(GmeSpec::zero()),
            GmeDesign::ScaledIdentity { b } => GmeSpec::scaled_identity(b),
            GmeDesign::Explicit { matrices } => GmeSpec::explicit(matrices),
            GmeDesign::ScaledSensing { gammas } => GmeSpec::scaled_sensing(
                sensing.ok_or_else(|| Error::invalid("gme", "scaled_sensing design needs a sensing matrix"))?,
                gammas,
            ),
        }
    }

    pub fn design(&self) -> &GmeDesign {
        &self.design
    }

    pub fn certification(&self) -> Option<Certification> {
        self.certification
    }

    pub fn is_certified(&self) -> bool {
        self.certification.is_some_and(|c| c.is_psd())
    }

    fn check_compatible(&self, dim: usize, count: usize) -> Result<()> {
        match &self.design {
            GmeDesign::Zero => Ok(()),
            GmeDesign::ScaledIdentity { .. } => Ok(()),
            GmeDesign::ScaledSensing { gammas } => {
                check_dim("GME coefficient count", count, gammas.len())?;
                let sensing = self.sensing.as_ref().expect("scaled sensing carries its matrix");
                check_dim("GME sensing columns", dim, sensing.cols())
            }
            GmeDesign::Explicit { matrices } => {
                check_dim("GME matrix count", count, matrices.len())?;
                for m in matrices {
                    check_dim("GME matrix columns", dim, m.cols())?;
                }
                Ok(())
            }
        }
    }

    /// Materializes the Gram operators `B_lᵀB_l` for weight `mu`.
    pub(crate) fn operator(&self, mu: f64, dim: usize, count: usize) -> Result<GmeOperator> {
        self.check_compatible(dim, count)?;
        Ok(match &self.design {
            GmeDesign::Zero => GmeOperator::Zero { count },
            GmeDesign::ScaledIdentity { b } if *b == 0.0 => GmeOperator::Zero { count },
            GmeDesign::ScaledIdentity { b } => GmeOperator::ScaledIdentity { b2: b * b, count },
            GmeDesign::ScaledSensing { gammas } => GmeOperator::SharedGram {
                sensing: Arc::clone(self.sensing.as_ref().expect("checked above")),
                coeffs: gammas.iter().map(|g| g / mu).collect(),
            },
            GmeDesign::Explicit { matrices } => {
                let mut grams = Vec::with_capacity(count);
                let mut norms_sq = Vec::with_capacity(count);
                for m in matrices {
                    grams.push(m.gram());
                    norms_sq.push(spectral_norm(m)?.powi(2));
                }
                GmeOperator::Dense { grams, norms_sq }
            }
        })
    }
}

/// The Gram operators `B_lᵀB_l` of a GME design.
#[derive(Debug, Clone)]
pub(crate) enum GmeOperator {
    Zero { count: usize },
    ScaledIdentity { b2: f64, count: usize },
    /// `B_lᵀB_l = coeffs[l]·AᵀA`
    SharedGram {
        sensing: Arc<SensingMatrix>,
        coeffs: Vec<f64>,
    },
    Dense {
        grams: Vec<RealMatrix>,
        norms_sq: Vec<f64>,
    },
}

impl GmeOperator {
    pub(crate) fn count(&self) -> usize {
        match self {
            GmeOperator::Zero { count } | GmeOperator::ScaledIdentity { count, .. } => *count,
            GmeOperator::SharedGram { coeffs, .. } => coeffs.len(),
            GmeOperator::Dense { grams, .. } => grams.len(),
        }
    }

    pub(crate) fn is_zero(&self) -> bool {
        matches!(self, GmeOperator::Zero { .. })
    }

    pub(crate) fn block_is_zero(&self, l: usize) -> bool {
        match self {
            GmeOperator::Zero { .. } => true,
            GmeOperator::SharedGram { coeffs, .. } => coeffs[l] == 0.0,
            _ => self.norm_sq(l) == 0.0,
        }
    }

    /// `B_lᵀB_l x`
    pub(crate) fn gram_apply(&self, l: usize, x: &RealVector) -> RealVector {
        match self {
            GmeOperator::Zero { .. } => RealVector::zeros(x.dim()),
            GmeOperator::ScaledIdentity { b2, .. } => x.scale(*b2),
            GmeOperator::SharedGram { sensing, coeffs } => {
                let mut out = sensing.gram().apply(x);
                out.as_mut_slice().iter_mut().for_each(|v| *v *= coeffs[l]);
                out
            }
            GmeOperator::Dense { grams, .. } => grams[l].apply(x),
        }
    }

    /// `Σ_l B_lᵀB_l d_l`, using a single product when the Gram is shared.
    pub(crate) fn gram_sum(&self, dim: usize, d: impl Fn(usize) -> RealVector) -> RealVector {
        match self {
            GmeOperator::Zero { .. } => RealVector::zeros(dim),
            GmeOperator::ScaledIdentity { b2, count } => {
                let mut acc = RealVector::zeros(dim);
                for l in 0..*count {
                    acc.axpy(*b2, &d(l));
                }
                acc
            }
            GmeOperator::SharedGram { sensing, coeffs } => {
                let mut acc = RealVector::zeros(dim);
                for (l, c) in coeffs.iter().enumerate() {
                    if *c != 0.0 {
                        acc.axpy(*c, &d(l));
                    }
                }
                sensing.gram().apply(&acc)
            }
            GmeOperator::Dense { grams, .. } => {
                let mut acc = RealVector::zeros(dim);
                for (l, g) in grams.iter().enumerate() {
                    acc.axpy(1.0, &g.apply(&d(l)));
                }
                acc
            }
        }
    }

    /// `‖B_l‖²`
    pub(crate) fn norm_sq(&self, l: usize) -> f64 {
        match self {
            GmeOperator::Zero { .. } => 0.0,
            GmeOperator::ScaledIdentity { b2, .. } => *b2,
            GmeOperator::SharedGram { sensing, coeffs } => coeffs[l] * sensing.norm().powi(2),
            GmeOperator::Dense { norms_sq, .. } => norms_sq[l],
        }
    }

    pub(crate) fn max_norm_sq(&self) -> f64 {
        (0..self.count()).map(|l| self.norm_sq(l)).fold(0.0, f64::max)
    }

    /// Dense `B_lᵀB_l`.
    pub(crate) fn gram_matrix(&self, l: usize, dim: usize) -> RealMatrix {
        match self {
            GmeOperator::Zero { .. } => RealMatrix::zeros(dim, dim),
            GmeOperator::ScaledIdentity { b2, .. } => RealMatrix::identity(dim).scale(*b2),
            GmeOperator::SharedGram { sensing, coeffs } => sensing.gram().scale(coeffs[l]),
            GmeOperator::Dense { grams, .. } => grams[l].clone(),
        }
    }
}

/// A LiGME regularizer: seed norms, GME design and regularization weight `μ`.
#[derive(Debug, Clone, PartialEq)]
pub struct LigmeRegularizer {
    seed: SeedRegularizer,
    gme: GmeSpec,
    mu: f64,
}

impl LigmeRegularizer {
    pub fn new(seed: SeedRegularizer, gme: GmeSpec, mu: f64) -> Result<Self> {
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(Error::invalid("mu", format!("must be positive, got {mu}")));
        }
        gme.check_compatible(seed.dim(), seed.len())?;
        Ok(LigmeRegularizer { seed, gme, mu })
    }

    pub fn seed(&self) -> &SeedRegularizer {
        &self.seed
    }

    pub fn seed_mut(&mut self) -> &mut SeedRegularizer {
        &mut self.seed
    }

    pub fn gme(&self) -> &GmeSpec {
        &self.gme
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn dim(&self) -> usize {
        self.seed.dim()
    }

    pub(crate) fn operator(&self) -> Result<GmeOperator> {
        self.gme.operator(self.mu, self.seed.dim(), self.seed.len())
    }

    /// Certifies `AᵀA − μ Σ B_lᵀB_l ⪰ O` and records the verdict.
    pub fn certify(&mut self, a: &RealMatrix) -> Result<Certification> {
        let (mu, count) = (self.mu, self.seed.len());
        certify_overall_convexity(a, &mut self.gme, mu, count)
    }

    pub fn descriptor(&self) -> RegularizerDescriptor {
        RegularizerDescriptor {
            seed: self.seed.kind,
            shifts: self.seed.shifts.clone(),
            weights: self.seed.weights.clone(),
            gme: self.gme.design.clone(),
            mu: self.mu,
        }
    }

    pub fn from_descriptor(desc: RegularizerDescriptor, sensing: Option<Arc<SensingMatrix>>) -> Result<Self> {
        let seed = SeedRegularizer::new(desc.seed, desc.shifts, desc.weights)?;
        let gme = GmeSpec::from_design(desc.gme, sensing)?;
        LigmeRegularizer::new(seed, gme, desc.mu)
    }
}

/// JSON form of a [`LigmeRegularizer`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegularizerDescriptor {
    pub seed: SeedKind,
    pub shifts: Vec<RealVector>,
    pub weights: Vec<WeightVector>,
    pub gme: GmeDesign,
    pub mu: f64,
}

/// The design `B_l = √(γ/μ)·A` with `γ = total_gamma / L` for every `l`.
pub fn build_gme_scaled_sensing(
    sensing: Arc<SensingMatrix>,
    mu: f64,
    count: usize,
    total_gamma: f64,
) -> Result<GmeSpec> {
    if !(total_gamma > 0.0 && total_gamma <= 1.0) {
        return Err(Error::invalid("total_gamma", format!("must lie in (0, 1], got {total_gamma}")));
    }
    if count == 0 {
        return Err(Error::invalid("count", "need at least one alphabet point"));
    }
    let mut spec = GmeSpec::scaled_sensing(Arc::clone(&sensing), vec![total_gamma / count as f64; count])?;
    certify_overall_convexity(sensing.matrix(), &mut spec, mu, count)?;
    Ok(spec)
}

/// Checks `AᵀA − μ Σ_l B_lᵀB_l ⪰ O` and stores the verdict in `gme`.
pub fn certify_overall_convexity(a: &RealMatrix, gme: &mut GmeSpec, mu: f64, count: usize) -> Result<Certification> {
    if !(mu > 0.0) {
        return Err(Error::invalid("mu", "must be positive"));
    }
    let dim = a.cols();
    let op = gme.operator(mu, dim, count)?;
    let mut s = a.gram();
    if !op.is_zero() {
        let mut total = RealMatrix::zeros(dim, dim);
        for l in 0..count {
            total = total.add(&op.gram_matrix(l, dim))?;
        }
        s = s.sub(&total.scale(mu))?;
    }
    let verdict = min_eigenvalue_psd_check(&s, CONVEXITY_TOL)?;
    gme.certification = Some(verdict);
    Ok(verdict)
}

/// `Θ_SOAV(x) = Σ_l ψ_l(x − s_l)`.
pub fn eval_soav(x: &RealVector, seed: &SeedRegularizer) -> Result<f64> {
    check_dim("eval_soav", seed.dim(), x.dim())?;
    Ok((0..seed.len()).map(|l| seed.norm(l, &x.sub(&seed.shifts[l]))).sum())
}

/// Minimax concave penalty: `|x| − (γ/2)x²` for `|x| ≤ 1/γ`, `1/(2γ)` beyond.
///
/// `γ = 0` gives `|x|`, the limit of the first branch.
pub fn eval_mcp(x: f64, gamma_mcp: f64) -> f64 {
    debug_assert!(gamma_mcp >= 0.0);
    let a = x.abs();
    if gamma_mcp == 0.0 {
        a
    } else if a * gamma_mcp <= 1.0 {
        a - 0.5 * gamma_mcp * a * a
    } else {
        0.5 / gamma_mcp
    }
}

fn closed_form_b(reg: &LigmeRegularizer) -> Result<f64> {
    match reg.gme.design {
        GmeDesign::ScaledIdentity { b } => Ok(b),
        GmeDesign::Zero => Ok(0.0),
        _ => Err(Error::Unsupported(
            "closed-form evaluation needs a scaled-identity (or zero) GME design".into(),
        )),
    }
}

/// Separable closed form for `B_l = b·I`: each coordinate (or `(Re, Im)` pair)
/// contributes `ω MCP_{b²/ω}(|u|)`.
pub fn eval_ligme_closed_form(x: &RealVector, reg: &LigmeRegularizer) -> Result<f64> {
    let b = closed_form_b(reg)?;
    let seed = &reg.seed;
    check_dim("eval_ligme_closed_form", seed.dim(), x.dim())?;
    let b2 = b * b;
    let mut total = 0.0;
    for l in 0..seed.len() {
        let w = &seed.weights[l];
        let s = &seed.shifts[l];
        total += match seed.kind {
            SeedKind::WeightedL1 => (0..x.dim()).map(|k| w[k] * eval_mcp(x[k] - s[k], b2 / w[k])).sum::<f64>(),
            SeedKind::WeightedL21 => {
                let n = w.dim();
                (0..n)
                    .map(|k| w[k] * eval_mcp((x[k] - s[k]).hypot(x[n + k] - s[n + k]), b2 / w[k]))
                    .sum()
            }
        };
    }
    Ok(total)
}

/// Evaluates `Θ_LiGME(x)` by solving each inner minimization with
/// proximal-gradient steps of length `1/‖B_l‖²`, stopping once a plain step
/// from the current point decreases the inner objective by less than `tol`.
///
/// Each iteration also takes an extrapolated step and keeps whichever of the
/// two lands lower, which speeds up ill-conditioned `B_l` without giving up
/// monotonicity.
pub fn eval_ligme_iterative(x: &RealVector, reg: &LigmeRegularizer, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::invalid("tol", "must be positive"));
    }
    let seed = &reg.seed;
    check_dim("eval_ligme_iterative", seed.dim(), x.dim())?;
    let op = reg.operator()?;
    let mut total = 0.0;
    for l in 0..seed.len() {
        let z = x.sub(&seed.shifts[l]);
        let outer = seed.norm(l, &z);
        if op.block_is_zero(l) {
            total += outer;
            continue;
        }
        let step = 1.0 / op.norm_sq(l);
        let forward_backward = |p: &RealVector| -> Result<(RealVector, f64)> {
            let mut trial = p.clone();
            trial.axpy(-step, &op.gram_apply(l, &p.sub(&z)));
            let next = seed.prox(l, &trial, step)?;
            let value = seed.norm(l, &next) + 0.5 * next.sub(&z).dot(&op.gram_apply(l, &next.sub(&z)));
            Ok((next, value))
        };
        // start at v = z, where the quadratic term vanishes
        let mut v = z.clone();
        let mut value = outer;
        let mut extrapolated = z.clone();
        let mut momentum = 1.0f64;
        let mut converged = false;
        for _ in 0..ITERATIVE_EVAL_MAX_ITER {
            let (plain, plain_value) = forward_backward(&v)?;
            if value - plain_value < tol {
                value = value.min(plain_value);
                converged = true;
                break;
            }
            let (fast, fast_value) = if momentum > 1.0 {
                forward_backward(&extrapolated)?
            } else {
                (plain.clone(), plain_value)
            };
            let (next, next_value) = if fast_value <= plain_value {
                (fast, fast_value)
            } else {
                momentum = 1.0;
                (plain, plain_value)
            };
            let t = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
            extrapolated = next.add(&next.sub(&v).scale((momentum - 1.0) / t));
            momentum = t;
            v = next;
            value = next_value;
        }
        if !converged {
            return Err(Error::NotConverged {
                method: "eval_ligme_iterative",
                iterations: ITERATIVE_EVAL_MAX_ITER,
                estimate: total + outer - value,
            });
        }
        total += outer - value;
    }
    Ok(total)
}

/// `√(2 ω_max / d_min)`: above this `b`, the scaled-identity design makes every
/// point of `𝔄^N` an isolated local minimizer.
pub fn isolated_minimizer_threshold(alphabet: &Alphabet, weights: &[WeightVector]) -> Result<f64> {
    if alphabet.is_complex() {
        return Err(Error::Unsupported("isolated-minimizer threshold is defined for real alphabets".into()));
    }
    if alphabet.len() < 2 {
        return Err(Error::invalid("alphabet", "d_min needs at least two points"));
    }
    let omega_max = weights.iter().map(WeightVector::max).fold(f64::NEG_INFINITY, f64::max);
    if !(omega_max > 0.0) {
        return Err(Error::invalid("weights", "need at least one positive weight"));
    }
    Ok((2.0 * omega_max / alphabet.d_min()).sqrt())
}

/// Uniform 1-D grid `lo, lo + step, …, ≤ hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl Grid {
    pub fn points(&self) -> Result<Vec<f64>> {
        if !(self.step > 0.0) || !(self.hi > self.lo) || !self.lo.is_finite() || !self.hi.is_finite() {
            return Err(Error::invalid("grid", format!("degenerate grid {:?}", self)));
        }
        let count = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize + 1;
        if count < 3 {
            return Err(Error::invalid("grid", "need at least three grid points"));
        }
        Ok((0..count).map(|i| self.lo + i as f64 * self.step).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalMinimizer {
    pub location: f64,
    pub value: f64,
}

/// `ψ_n(t) = Σ_l ω_n^(l) MCP_{b²/ω_n^(l)}(t − a^(l))` for a scaled-identity design.
pub fn coordinate_profile(reg: &LigmeRegularizer, coordinate: usize, t: f64) -> Result<f64> {
    let b = closed_form_b(reg)?;
    let seed = &reg.seed;
    if seed.kind != SeedKind::WeightedL1 {
        return Err(Error::Unsupported("coordinate profiles need the weighted ℓ1 seed".into()));
    }
    if coordinate >= seed.dim() {
        return Err(Error::invalid("coordinate", format!("{coordinate} out of range")));
    }
    Ok((0..seed.len())
        .map(|l| {
            let w = seed.weights[l][coordinate];
            w * eval_mcp(t - seed.shifts[l][coordinate], b * b / w)
        })
        .sum())
}

/// Strict grid-local minimizers of `ψ_n`, in ascending order of location.
pub fn scan_local_minimizers(reg: &LigmeRegularizer, coordinate: usize, grid: Grid) -> Result<Vec<LocalMinimizer>> {
    let ts = grid.points()?;
    let values = ts
        .iter()
        .map(|&t| coordinate_profile(reg, coordinate, t))
        .collect::<Result<Vec<f64>>>()?;
    Ok((1..ts.len() - 1)
        .filter(|&i| values[i] < values[i - 1] && values[i] < values[i + 1])
        .map(|i| LocalMinimizer {
            location: ts[i],
            value: values[i],
        })
        .collect())
}
