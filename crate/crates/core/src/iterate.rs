//! Basic and superiorized Landweber iterations.
//!
//! One superiorized step is
//!
//! ```text
//! x_half = x_k + t_k · Φ(x_k)
//! x_next = x_half − λ A*(A x_half − y)
//! ```
//!
//! where `Φ` is a [`PerturbationMap`] and `(t_k)` a summable [`StepSequence`].
//! With `t_k ≡ 0` (or no perturbation) this is the plain Landweber update.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::linalg::{self, estimate_norm, LinearOperator, DEFAULT_NORM_SEED};
use crate::record::{ExperimentRecord, RecordRow, StopMetadata, StopStatus};
use crate::regularizer::PerturbationMap;
use crate::stopping::{RuleKind, StoppingRule, CONVERGENCE_BUDGET_TOL, CONVERGENCE_STEP_TOL};

/// Fraction of the admissible range `(0, 1/L²)` used for the default step size.
pub const LAMBDA_FACTOR: f64 = 0.9;

/// Summable, non-negative perturbation step sizes `t_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StepSequence {
    Zero,
    /// `t_k = t0 · ratio^k`
    Geometric {
        t0: f64,
        ratio: f64,
    },
}

impl StepSequence {
    pub fn geometric(t0: f64, ratio: f64) -> Result<Self> {
        let s = StepSequence::Geometric { t0, ratio };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            StepSequence::Zero => Ok(()),
            StepSequence::Geometric { t0, ratio } => {
                if !(t0 >= 0.0 && t0.is_finite()) {
                    return Err(Error::invalid(format!("t0 must be non-negative, got {t0}")));
                }
                if !(0.0..1.0).contains(&ratio) {
                    return Err(Error::invalid(format!(
                        "ratio must lie in [0, 1), got {ratio}"
                    )));
                }
                Ok(())
            }
        }
    }

    fn ratio_pow(ratio: f64, k: usize) -> f64 {
        ratio.powi(k.min(i32::MAX as usize) as i32)
    }

    pub fn step(&self, k: usize) -> f64 {
        match *self {
            StepSequence::Zero => 0.0,
            StepSequence::Geometric { t0, ratio } => t0 * Self::ratio_pow(ratio, k),
        }
    }

    /// `Σ_{j>k} t_j`
    pub fn tail_after(&self, k: usize) -> f64 {
        match *self {
            StepSequence::Zero => 0.0,
            StepSequence::Geometric { t0, ratio } => {
                t0 * Self::ratio_pow(ratio, k.saturating_add(1)) / (1.0 - ratio)
            }
        }
    }

    pub fn total(&self) -> f64 {
        match *self {
            StepSequence::Zero => 0.0,
            StepSequence::Geometric { t0, ratio } => t0 / (1.0 - ratio),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationConfig {
    pub lambda: f64,
    pub steps: StepSequence,
    pub perturbation: Option<PerturbationMap>,
    pub max_iter: usize,
    pub record_every: usize,
}

/// `LAMBDA_FACTOR / L²` for an (already inflated) operator-norm bound `L`.
pub fn default_lambda(inflated_norm: f64) -> Result<f64> {
    if !(inflated_norm > 0.0 && inflated_norm.is_finite()) {
        return Err(Error::invalid(format!(
            "operator norm must be positive to choose a step size, got {inflated_norm}"
        )));
    }
    Ok(LAMBDA_FACTOR / (inflated_norm * inflated_norm))
}

/// Checks `0 < λ < 1/L²`.
pub fn check_lambda(lambda: f64, inflated_norm: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda * inflated_norm * inflated_norm < 1.0) {
        return Err(Error::invalid(format!(
            "lambda = {lambda} is outside (0, 1/L²) for L = {inflated_norm}"
        )));
    }
    Ok(())
}

impl IterationConfig {
    /// Builds a config with the default step size for `op`, estimated by
    /// seeded power iteration and inflated before use.
    pub fn for_operator<A: LinearOperator + ?Sized>(
        op: &A,
        steps: StepSequence,
        perturbation: Option<PerturbationMap>,
        max_iter: usize,
    ) -> Result<Self> {
        let estimate = estimate_norm(op, 1e-8, 100_000, DEFAULT_NORM_SEED)?;
        let config = Self {
            lambda: default_lambda(estimate.inflated())?,
            steps,
            perturbation,
            max_iter,
            record_every: 1,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn with_record_every(mut self, every: usize) -> Self {
        self.record_every = every;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::invalid(format!(
                "lambda must be positive, got {}",
                self.lambda
            )));
        }
        self.steps.validate()?;
        if let Some(p) = &self.perturbation {
            p.validate()?;
        }
        if self.max_iter == 0 || self.record_every == 0 {
            return Err(Error::invalid("max_iter and record_every must be positive"));
        }
        Ok(())
    }

    fn reg_value(&self, x: &[f64]) -> f64 {
        self.perturbation
            .as_ref()
            .map_or(0.0, |p| p.regularizer.value(x))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationState {
    pub k: usize,
    pub x: Vec<f64>,
    /// Half-step that produced `x`; equals `x` before the first step.
    pub x_half: Vec<f64>,
    pub residual_norm: f64,
    /// `r(x)`, or 0 when no regularizer is configured.
    pub reg_value: f64,
}

/// `x − λ A*(A x − y)`
pub fn landweber_step<A: LinearOperator + ?Sized>(
    op: &A,
    y_data: &[f64],
    x: &[f64],
    lambda: f64,
) -> Result<Vec<f64>> {
    check_len("landweber_step data", op.range_dim(), y_data.len())?;
    let residual = linalg::sub(&op.apply(x)?, y_data);
    let grad = op.apply_adjoint(&residual)?;
    Ok(x.iter()
        .zip(&grad)
        .map(|(xi, gi)| xi - lambda * gi)
        .collect())
}

/// Runs the superiorized recurrence one step at a time.
///
/// The data residual `A x_k − y` is kept current, so a step costs two
/// operator applications when the half-step leaves `x_k` untouched and three
/// otherwise.
pub struct Landweber<'a, A: ?Sized> {
    op: &'a A,
    y: &'a [f64],
    config: &'a IterationConfig,
    state: IterationState,
    residual: Vec<f64>,
    last_step_norm: f64,
    previous_norm: f64,
}

impl<'a, A: LinearOperator + ?Sized> Landweber<'a, A> {
    /// Starts from `x0 = 0`.
    pub fn new(op: &'a A, y: &'a [f64], config: &'a IterationConfig) -> Result<Self> {
        Self::from_start(op, y, config, vec![0.0; op.domain_dim()])
    }

    pub fn from_start(
        op: &'a A,
        y: &'a [f64],
        config: &'a IterationConfig,
        x0: Vec<f64>,
    ) -> Result<Self> {
        config.validate()?;
        check_len("initial iterate", op.domain_dim(), x0.len())?;
        check_len("data", op.range_dim(), y.len())?;
        Self::resume(
            op,
            y,
            config,
            IterationState {
                k: 0,
                x_half: x0.clone(),
                x: x0,
                residual_norm: 0.0,
                reg_value: 0.0,
            },
        )
    }

    fn resume(
        op: &'a A,
        y: &'a [f64],
        config: &'a IterationConfig,
        mut state: IterationState,
    ) -> Result<Self> {
        let residual = linalg::sub(&op.apply(&state.x)?, y);
        state.residual_norm = linalg::norm(&residual);
        state.reg_value = config.reg_value(&state.x);
        Ok(Self {
            op,
            y,
            config,
            state,
            residual,
            last_step_norm: f64::NAN,
            previous_norm: f64::NAN,
        })
    }

    pub fn state(&self) -> &IterationState {
        &self.state
    }

    pub fn into_state(self) -> IterationState {
        self.state
    }

    /// `‖x_k − x_{k−1}‖` for the most recent step (NaN before the first).
    pub fn last_step_norm(&self) -> f64 {
        self.last_step_norm
    }

    /// True once `‖x_k − x_{k−1}‖ ≤ 1e-10 (1 + ‖x_{k−1}‖)` and the remaining
    /// perturbation budget `Σ_{j≥k} t_j` is below 1e-10.
    pub fn has_converged(&self) -> bool {
        let k = self.state.k;
        k > 0
            && self.last_step_norm <= CONVERGENCE_STEP_TOL * (1.0 + self.previous_norm)
            && self.config.steps.tail_after(k - 1) <= CONVERGENCE_BUDGET_TOL
    }

    pub fn step(&mut self) -> Result<()> {
        let k = self.state.k;
        let t = self.config.steps.step(k);
        let x_half = match &self.config.perturbation {
            Some(p) if t > 0.0 => p.perturb(&self.state.x, t),
            _ => self.state.x.clone(),
        };
        let half_residual = if x_half == self.state.x {
            std::mem::take(&mut self.residual)
        } else {
            linalg::sub(&self.op.apply(&x_half)?, self.y)
        };
        let grad = self.op.apply_adjoint(&half_residual)?;
        let lambda = self.config.lambda;
        let x_next: Vec<f64> = x_half
            .iter()
            .zip(&grad)
            .map(|(xi, gi)| xi - lambda * gi)
            .collect();

        self.last_step_norm = linalg::distance(&x_next, &self.state.x);
        self.previous_norm = linalg::norm(&self.state.x);
        self.residual = linalg::sub(&self.op.apply(&x_next)?, self.y);
        self.state = IterationState {
            k: k + 1,
            residual_norm: linalg::norm(&self.residual),
            reg_value: self.config.reg_value(&x_next),
            x: x_next,
            x_half,
        };
        if !(self.state.residual_norm.is_finite() && linalg::all_finite(&self.state.x)) {
            return Err(Error::NonFinite { k: k + 1 });
        }
        Ok(())
    }
}

/// One step of the superiorized iteration from `state`.
pub fn superiorized_step<A: LinearOperator + ?Sized>(
    op: &A,
    y_data: &[f64],
    state: &IterationState,
    config: &IterationConfig,
) -> Result<IterationState> {
    config.validate()?;
    check_len("state", op.domain_dim(), state.x.len())?;
    check_len("data", op.range_dim(), y_data.len())?;
    let mut it = Landweber::resume(op, y_data, config, state.clone())?;
    it.step()?;
    Ok(it.into_state())
}

/// Reference solutions to measure recorded iterates against.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct References {
    pub pinv: Option<Vec<f64>>,
    pub rmin: Option<Vec<f64>>,
    pub exact_limit: Option<Vec<f64>>,
}

impl References {
    fn row(&self, state: &IterationState) -> RecordRow {
        let err = |r: &Option<Vec<f64>>| r.as_deref().map(|r| linalg::distance(&state.x, r));
        RecordRow {
            k: state.k,
            residual_norm: state.residual_norm,
            reg_value: state.reg_value,
            error_to_pinv: err(&self.pinv),
            error_to_rmin: err(&self.rmin),
            error_to_exact_limit: err(&self.exact_limit),
        }
    }
}

/// Iterates from `x0 = 0` until `stop` fires or the budget runs out.
pub fn run_iteration<A: LinearOperator + ?Sized>(
    op: &A,
    y_data: &[f64],
    config: &IterationConfig,
    stop: &StoppingRule,
    refs: &References,
) -> Result<(IterationState, ExperimentRecord)> {
    run_iteration_from(op, y_data, vec![0.0; op.domain_dim()], config, stop, refs)
}

/// Like [`run_iteration`] but from an arbitrary start.
///
/// The budget is `min(config.max_iter, stop.cap)`. A rule that has not fired
/// when the budget is spent yields [`StopStatus::BudgetExhausted`]; the
/// `max-iter` rule fires when it reaches its own cap.
pub fn run_iteration_from<A: LinearOperator + ?Sized>(
    op: &A,
    y_data: &[f64],
    x0: Vec<f64>,
    config: &IterationConfig,
    stop: &StoppingRule,
    refs: &References,
) -> Result<(IterationState, ExperimentRecord)> {
    stop.validate()?;
    let budget = config.max_iter.min(stop.cap);
    let apriori_target = match stop.kind {
        RuleKind::APriori { .. } => Some(stop.apriori_index(stop.delta)?),
        _ => None,
    };

    let mut it = Landweber::from_start(op, y_data, config, x0)?;
    let mut rows = vec![refs.row(it.state())];
    let mut fired = None;
    loop {
        let k = it.state().k;
        let fires_now = match stop.kind {
            RuleKind::APriori { .. } => apriori_target == Some(k),
            RuleKind::Discrepancy { .. } => stop.discrepancy_fired(it.state().residual_norm)?,
            RuleKind::MaxIter => k == stop.cap,
            RuleKind::Convergence => it.has_converged(),
        };
        if fires_now {
            fired = Some(k);
            break;
        }
        if k >= budget {
            break;
        }
        it.step()?;
        if it.state().k % config.record_every == 0 {
            rows.push(refs.row(it.state()));
        }
    }

    let state = it.into_state();
    if rows.last().map(|r| r.k) != Some(state.k) {
        rows.push(refs.row(&state));
    }
    let record = ExperimentRecord {
        rows,
        stop: StopMetadata {
            rule: *stop,
            fired_index: fired,
            final_k: state.k,
            status: if fired.is_some() {
                StopStatus::Fired
            } else {
                StopStatus::BudgetExhausted
            },
        },
        config: None,
    };
    if record.stop.is_flagged() {
        log::warn!(
            "{} rule did not fire within {budget} iterations",
            stop.name()
        );
    }
    Ok((state, record))
}
