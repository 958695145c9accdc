//! The constrained LiGME fixed-point iteration.
//!
//! One step maps `(x, v_1..v_L, w_1..w_L)` to
//!
//! ```text
//! x⁺   = P_C[ x − (1/σ)Aᵀ(Ax − y) + (μ/σ) Σ_l (B_lᵀB_l(x − v_l) − w_l) ]
//! v_l⁺ = s_l + Prox_{(μ/τ)ψ_l}[ (μ/τ)B_lᵀB_l(2x⁺ − x − v_l) + v_l − s_l ]
//! w_l⁺ = (Id − Prox_{ψ_l})[ 2x⁺ − x + w_l − s_l ]
//! ```
//!
//! and the iterates converge to a minimizer of `½‖y − Ax‖² + μΘ(x)` over `C`
//! whenever `AᵀA − μ Σ_l B_lᵀB_l ⪰ O`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::constellation::{quantize_to_alphabet, Alphabet, HullDescriptor};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{Certification, ProductVector, RealMatrix, RealVector, SensingMatrix};
use crate::prox::{project_constellation_hull, prox_conjugate};
use crate::regularizer::{
    eval_ligme_closed_form, eval_ligme_iterative, GmeDesign, GmeOperator, LigmeRegularizer, SeedRegularizer,
};

/// Inner tolerance when the objective needs the iterative regularizer value.
pub const OBJECTIVE_EVAL_TOL: f64 = 1e-12;
pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-10;
pub const DEFAULT_KAPPA: f64 = 1.001;

/// A detection problem with its regularizer, ready to iterate.
#[derive(Debug, Clone)]
pub struct RealizedProblem {
    y: RealVector,
    sensing: Arc<SensingMatrix>,
    hull: HullDescriptor,
    reg: LigmeRegularizer,
    alphabet: Alphabet,
    certification: Certification,
    allow_uncertified: bool,
    aty: RealVector,
    gme: GmeOperator,
}

impl RealizedProblem {
    /// Checks dimensions and certifies overall convexity.
    ///
    /// An uncertified problem is still constructed but refuses to iterate
    /// until [`RealizedProblem::allow_uncertified`] is called.
    pub fn new(
        y: RealVector,
        sensing: Arc<SensingMatrix>,
        hull: HullDescriptor,
        mut reg: LigmeRegularizer,
        alphabet: Alphabet,
    ) -> Result<Self> {
        check_dim("observation", sensing.rows(), y.dim())?;
        let dim = sensing.cols();
        check_dim("regularizer", dim, reg.dim())?;
        check_dim("hull", dim, hull.dim)?;
        let symbols = alphabet.symbol_count(dim)?;
        check_dim("alphabet layout", dim, alphabet.ambient_dim(symbols))?;
        let certification = reg.certify(sensing.matrix())?;
        let gme = reg.operator()?;
        let aty = sensing.matrix().apply_transpose(&y);
        Ok(RealizedProblem {
            y,
            sensing,
            hull,
            reg,
            alphabet,
            certification,
            allow_uncertified: false,
            aty,
            gme,
        })
    }

    /// Permits iterating even when overall convexity could not be certified.
    pub fn allow_uncertified(mut self) -> Self {
        self.allow_uncertified = true;
        self
    }

    pub fn y(&self) -> &RealVector {
        &self.y
    }

    pub fn sensing(&self) -> &Arc<SensingMatrix> {
        &self.sensing
    }

    pub fn hull(&self) -> &HullDescriptor {
        &self.hull
    }

    pub fn regularizer(&self) -> &LigmeRegularizer {
        &self.reg
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn certification(&self) -> Certification {
        self.certification
    }

    pub fn dim(&self) -> usize {
        self.sensing.cols()
    }

    /// Number of alphabet points `L`.
    pub fn blocks(&self) -> usize {
        self.reg.seed().len()
    }

    pub fn mu(&self) -> f64 {
        self.reg.mu()
    }

    fn ensure_solvable(&self) -> Result<()> {
        if self.certification.is_psd() || self.allow_uncertified {
            Ok(())
        } else {
            Err(Error::Uncertified {
                min_eigenvalue: self.certification.min_eigenvalue(),
            })
        }
    }

    /// `‖B_l‖²` of the realized design.
    pub fn gme_norm_sq(&self, l: usize) -> f64 {
        self.gme.norm_sq(l)
    }

    /// Dense `B_lᵀB_l`.
    pub fn gme_gram(&self, l: usize) -> RealMatrix {
        self.gme.gram_matrix(l, self.dim())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepSizes {
    pub sigma: f64,
    pub tau: f64,
    pub kappa: f64,
}

/// `σ = (κ/2)‖A‖² + μL + (κ − 1)` and `τ = (κ/2 + 2/κ)μ max_l ‖B_l‖² + (κ − 1)`.
pub fn default_step_sizes(problem: &RealizedProblem, kappa: f64) -> Result<StepSizes> {
    if !(kappa > 1.0) || !kappa.is_finite() {
        return Err(Error::invalid("kappa", format!("must exceed 1, got {kappa}")));
    }
    let mu = problem.mu();
    let a2 = problem.sensing.norm().powi(2);
    Ok(StepSizes {
        sigma: 0.5 * kappa * a2 + mu * problem.blocks() as f64 + (kappa - 1.0),
        tau: (0.5 * kappa + 2.0 / kappa) * mu * problem.gme.max_norm_sq() + (kappa - 1.0),
        kappa,
    })
}

/// One iterate `(x, v, w)` of the fixed-point iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverState {
    pub x: RealVector,
    pub v: ProductVector,
    pub w: ProductVector,
    pub iteration: usize,
    /// `‖u_k − u_{k−1}‖` in the plain product norm; zero before the first step.
    pub residual: f64,
}

impl SolverState {
    pub fn new(x: RealVector, v: ProductVector, w: ProductVector) -> Result<Self> {
        check_dim("dual block count", v.block_count(), w.block_count())?;
        for block in v.blocks().iter().chain(w.blocks()) {
            check_dim("dual block", x.dim(), block.dim())?;
        }
        Ok(SolverState {
            x,
            v,
            w,
            iteration: 0,
            residual: 0.0,
        })
    }

    pub fn zeros(dim: usize, blocks: usize) -> Self {
        SolverState {
            x: RealVector::zeros(dim),
            v: ProductVector::zeros(blocks, dim),
            w: ProductVector::zeros(blocks, dim),
            iteration: 0,
            residual: 0.0,
        }
    }

    fn check_against(&self, problem: &RealizedProblem) -> Result<()> {
        check_dim("state x", problem.dim(), self.x.dim())?;
        check_dim("state v blocks", problem.blocks(), self.v.block_count())?;
        check_dim("state w blocks", problem.blocks(), self.w.block_count())?;
        for block in self.v.blocks().iter().chain(self.w.blocks()) {
            check_dim("state block", problem.dim(), block.dim())?;
        }
        Ok(())
    }

    /// Squared plain product distance to `other`.
    pub fn distance_sq(&self, other: &SolverState) -> f64 {
        self.x.sub(&other.x).norm_sq() + self.v.sub(&other.v).norm_sq() + self.w.sub(&other.w).norm_sq()
    }
}

/// One application of the fixed-point operator.
pub fn apply_t(state: &SolverState, problem: &RealizedProblem, steps: &StepSizes) -> Result<SolverState> {
    problem.ensure_solvable()?;
    state.check_against(problem)?;
    step_with(state, problem, problem.reg.seed(), steps)
}

pub(crate) fn step_with(
    state: &SolverState,
    problem: &RealizedProblem,
    seed: &SeedRegularizer,
    steps: &StepSizes,
) -> Result<SolverState> {
    let dim = problem.dim();
    let count = seed.len();
    let mu = problem.mu();
    let gme = &problem.gme;
    let (x, v, w) = (&state.x, &state.v, &state.w);

    let mut forward = problem.sensing.gram().apply(x);
    forward.axpy(-1.0, &problem.aty);
    let mut pull = gme.gram_sum(dim, |l| x.sub(&v[l]));
    for l in 0..count {
        pull.axpy(-1.0, &w[l]);
    }
    let mut arg = x.clone();
    arg.axpy(-1.0 / steps.sigma, &forward);
    arg.axpy(mu / steps.sigma, &pull);
    let x_next = project_constellation_hull(&arg, &problem.hull)?;

    let mut extrapolated = x_next.scale(2.0);
    extrapolated.axpy(-1.0, x);
    let ratio = mu / steps.tau;
    let mut v_next = Vec::with_capacity(count);
    let mut w_next = Vec::with_capacity(count);
    for l in 0..count {
        let shift = &seed.shifts()[l];
        let mut inner = v[l].sub(shift);
        if !gme.block_is_zero(l) {
            inner.axpy(ratio, &gme.gram_apply(l, &extrapolated.sub(&v[l])));
        }
        let mut vl = seed.prox(l, &inner, ratio)?;
        vl.axpy(1.0, shift);
        v_next.push(vl);

        let mut dual = extrapolated.add(&w[l]);
        dual.axpy(-1.0, shift);
        w_next.push(prox_conjugate(|u| seed.prox(l, u, 1.0), &dual)?);
    }

    let mut next = SolverState {
        x: x_next,
        v: ProductVector::new(v_next),
        w: ProductVector::new(w_next),
        iteration: state.iteration + 1,
        residual: 0.0,
    };
    next.residual = next.distance_sq(state).sqrt();
    Ok(next)
}

/// `‖a − b‖²_𝔓` for the metric in which the iteration is averaged nonexpansive.
pub fn p_distance_sq(a: &SolverState, b: &SolverState, problem: &RealizedProblem, steps: &StepSizes) -> f64 {
    let mu = problem.mu();
    let dx = a.x.sub(&b.x);
    let dv = a.v.sub(&b.v);
    let dw = a.w.sub(&b.w);
    let mut cross = 0.0;
    for l in 0..problem.blocks() {
        cross += problem.gme.gram_apply(l, &dx).dot(&dv[l]) + dx.dot(&dw[l]);
    }
    steps.sigma * dx.norm_sq() - 2.0 * mu * cross + steps.tau * dv.norm_sq() + mu * dw.norm_sq()
}

/// Dense metric matrix on `(x, v_1..v_L, w_1..w_L)`.
pub fn assemble_p_matrix(problem: &RealizedProblem, steps: &StepSizes) -> RealMatrix {
    let (d, count, mu) = (problem.dim(), problem.blocks(), problem.mu());
    let size = d * (1 + 2 * count);
    let mut p = RealMatrix::zeros(size, size);
    for i in 0..d {
        p.set(i, i, steps.sigma);
    }
    for l in 0..count {
        let vo = d * (1 + l);
        let wo = d * (1 + count + l);
        let g = problem.gme.gram_matrix(l, d);
        for i in 0..d {
            for j in 0..d {
                let entry = -mu * g[(i, j)];
                p.set(i, vo + j, entry);
                p.set(vo + j, i, entry);
            }
            p.set(vo + i, vo + i, steps.tau);
            p.set(i, wo + i, -mu);
            p.set(wo + i, i, -mu);
            p.set(wo + i, wo + i, mu);
        }
    }
    p
}

/// `½‖y − Ax‖² + μΘ(x)`.
pub fn objective_value(x: &RealVector, problem: &RealizedProblem) -> Result<f64> {
    check_dim("objective", problem.dim(), x.dim())?;
    let residual = problem.sensing.matrix().apply(x).sub(&problem.y);
    let theta = match problem.reg.gme().design() {
        GmeDesign::Zero | GmeDesign::ScaledIdentity { .. } => eval_ligme_closed_form(x, &problem.reg)?,
        _ => eval_ligme_iterative(x, &problem.reg, OBJECTIVE_EVAL_TOL)?,
    };
    Ok(0.5 * residual.norm_sq() + problem.mu() * theta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StopCriteria {
    pub max_iter: usize,
    /// Stop once the plain product-norm residual drops below this.
    pub residual_tol: f64,
    /// Record the objective at every iterate (costly with iterative evaluation).
    #[serde(default)]
    pub record_objective: bool,
}

impl StopCriteria {
    pub fn max_iter(max_iter: usize) -> Self {
        StopCriteria {
            max_iter,
            residual_tol: DEFAULT_RESIDUAL_TOL,
            record_objective: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum Termination {
    MaxIter,
    ResidualBelow { tol: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub x_final: RealVector,
    pub x_quantized: RealVector,
    pub symbols: Vec<usize>,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective_history: Option<Vec<f64>>,
    pub termination: Termination,
    /// Set when a modification without convergence guarantees was active.
    pub heuristic: bool,
    pub final_state: SolverState,
}

impl SolveReport {
    /// Keeps every `stride`-th history entry plus the last one.
    pub fn downsampled(&self, stride: usize) -> SolveReport {
        let keep = |h: &[f64]| -> Vec<f64> {
            let stride = stride.max(1);
            let mut out: Vec<f64> = h.iter().step_by(stride).copied().collect();
            if !h.is_empty() && (h.len() - 1) % stride != 0 {
                out.push(h[h.len() - 1]);
            }
            out
        };
        SolveReport {
            residual_history: keep(&self.residual_history),
            objective_history: self.objective_history.as_deref().map(keep),
            ..self.clone()
        }
    }
}

/// Hook run at the top of every iteration, before the operator is applied.
pub(crate) type Prestep<'a> = dyn FnMut(usize, &mut SolverState, &mut SeedRegularizer) -> Result<()> + 'a;

/// Iterates the operator from `init` until the stop criteria fire.
pub fn solve(problem: &RealizedProblem, steps: &StepSizes, init: SolverState, stop: StopCriteria) -> Result<SolveReport> {
    iterate(problem, steps, init, stop, None, false)
}

pub(crate) fn iterate(
    problem: &RealizedProblem,
    steps: &StepSizes,
    init: SolverState,
    stop: StopCriteria,
    mut prestep: Option<&mut Prestep<'_>>,
    heuristic: bool,
) -> Result<SolveReport> {
    problem.ensure_solvable()?;
    init.check_against(problem)?;
    let mut seed = problem.reg.seed().clone();
    let mut state = init;
    let mut residual_history = Vec::with_capacity(stop.max_iter);
    let mut objective_history = stop.record_objective.then(Vec::new);
    let mut termination = Termination::MaxIter;
    for k in 0..stop.max_iter {
        if let Some(hook) = prestep.as_deref_mut() {
            hook(k, &mut state, &mut seed)?;
        }
        state = step_with(&state, problem, &seed, steps)?;
        residual_history.push(state.residual);
        if let Some(h) = objective_history.as_mut() {
            h.push(objective_value(&state.x, problem)?);
        }
        if state.residual < stop.residual_tol {
            termination = Termination::ResidualBelow { tol: stop.residual_tol };
            break;
        }
    }
    let (x_quantized, symbols) = quantize_to_alphabet(&state.x, &problem.alphabet)?;
    Ok(SolveReport {
        x_final: state.x.clone(),
        x_quantized,
        symbols,
        iterations: state.iteration,
        residual_history,
        objective_history,
        termination,
        heuristic,
        final_state: state,
    })
}
