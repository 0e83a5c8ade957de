//! Problem generation, noise injection and the δ-sweep driver.

mod noise;
mod problem;
mod sweep;

pub use noise::{inject_noise, NoiseSpec};
pub use problem::{generate_problem, Problem, ProblemSpec, Profile};
pub use sweep::{
    config_hash, read_summary, run_delta_sweep, run_single, write_sweep, ExactLimit, Prepared,
    Summary, SummaryRow, SweepEntry, SUMMARY_FILE,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::iterate::StepSequence;
use crate::linalg::DEFAULT_NORM_SEED;
use crate::regularizer::{PerturbationMap, PerturbationMode, Regularizer, RegularizerKind};
use crate::stopping::{self, StoppingRule};

/// Stopping rules selectable by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleName {
    Apriori,
    Discrepancy,
    MaxIter,
}

impl std::str::FromStr for RuleName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "apriori" | "a-priori" => Ok(RuleName::Apriori),
            "discrepancy" => Ok(RuleName::Discrepancy),
            "max-iter" => Ok(RuleName::MaxIter),
            other => Err(Error::invalid(format!(
                "unknown rule '{other}' (expected apriori, discrepancy or max-iter)"
            ))),
        }
    }
}

/// Everything needed to run an experiment on a problem, as read from a
/// JSON config file. Missing fields take the [`Default`] values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub regularizer: Regularizer,
    pub mode: PerturbationMode,
    pub smoothing_eps: f64,
    pub steps: StepSequence,
    /// Explicit step size; when absent, `0.9 / L²` with `L` the inflated norm estimate.
    pub lambda: Option<f64>,
    /// Iteration budget for noisy runs.
    pub max_iter: usize,
    pub record_every: usize,
    /// Iteration budget for the exact-data reference run.
    pub exact_max_iter: usize,
    pub apriori_c: f64,
    pub apriori_p: f64,
    pub tau: f64,
    pub cap: usize,
    /// When set, the r-minimizing oracle is computed with this budget.
    pub rmin_budget: Option<usize>,
    pub norm_seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            regularizer: Regularizer::new(RegularizerKind::Tv1d),
            mode: PerturbationMode::Unconditional,
            smoothing_eps: crate::regularizer::DEFAULT_SMOOTHING_EPS,
            steps: StepSequence::Geometric {
                t0: 0.1,
                ratio: 0.9,
            },
            lambda: None,
            max_iter: 100_000,
            record_every: 10,
            exact_max_iter: 200_000,
            apriori_c: stopping::DEFAULT_APRIORI_C,
            apriori_p: stopping::DEFAULT_APRIORI_P,
            tau: stopping::DEFAULT_TAU,
            cap: 100_000,
            rmin_budget: None,
            norm_seed: DEFAULT_NORM_SEED,
        }
    }
}

impl ExperimentConfig {
    pub fn perturbation(&self) -> PerturbationMap {
        PerturbationMap {
            regularizer: self.regularizer,
            smoothing_eps: self.smoothing_eps,
            mode: self.mode,
        }
    }

    pub fn rule(&self, name: RuleName, delta: f64) -> Result<StoppingRule> {
        match name {
            RuleName::Apriori => {
                StoppingRule::a_priori(self.apriori_c, self.apriori_p, delta, self.cap)
            }
            RuleName::Discrepancy => StoppingRule::discrepancy(self.tau, delta, self.cap),
            RuleName::MaxIter => {
                let mut rule = StoppingRule::max_iter(self.cap)?;
                rule.delta = delta;
                Ok(rule)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.perturbation().validate()?;
        self.steps.validate()?;
        if self.max_iter == 0 || self.record_every == 0 || self.exact_max_iter == 0 || self.cap == 0
        {
            return Err(Error::invalid(
                "iteration budgets and record_every must be positive",
            ));
        }
        if let Some(l) = self.lambda {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::invalid(format!("lambda must be positive, got {l}")));
            }
        }
        Ok(())
    }
}

/// Inputs of one run, echoed into its JSON record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEcho {
    pub problem: ProblemSpec,
    pub noise: NoiseSpec,
    pub config: ExperimentConfig,
    pub rule: StoppingRule,
}
