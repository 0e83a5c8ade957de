use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{inject_noise, ExperimentConfig, NoiseSpec, Problem, RuleName, RunEcho};
use crate::error::{Error, Result};
use crate::iterate::{default_lambda, run_iteration, IterationConfig, References};
use crate::linalg::{estimate_norm, LinearOperator};
use crate::oracle::{self, DEFAULT_RANK_TOL};
use crate::record::{self, ExperimentRecord, Format, StopStatus};
use crate::stopping::StoppingRule;

pub const SUMMARY_FILE: &str = "summary.json";

/// High-accuracy exact-data run of the configured iteration, the reference
/// that noisy stopped iterates should approach as δ → 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactLimit {
    pub config_hash: String,
    pub iterations: usize,
    pub converged: bool,
    pub residual_norm: f64,
    pub x: Vec<f64>,
}

/// A problem with its step size and reference solutions computed once.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub problem: Problem,
    pub config: ExperimentConfig,
    pub iteration: IterationConfig,
    pub refs: References,
    pub exact: ExactLimit,
}

/// SHA-256 over the canonical JSON of everything that determines the exact-data limit.
pub fn config_hash(problem: &Problem, config: &ExperimentConfig) -> String {
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(&problem.spec).expect("specs serialize"));
    h.update(b"\n");
    h.update(serde_json::to_vec(config).expect("configs serialize"));
    hex::encode(h.finalize())
}

impl Prepared {
    pub fn new(problem: Problem, config: ExperimentConfig) -> Result<Self> {
        Self::with_cache(problem, config, None)
    }

    /// Like [`Prepared::new`], reusing `exact_limit_<hash>.json` from
    /// `cache_dir` when present and writing it otherwise.
    pub fn with_cache(
        problem: Problem,
        config: ExperimentConfig,
        cache_dir: Option<&Path>,
    ) -> Result<Self> {
        config.validate()?;
        let op = &problem.operator;
        let lambda = match config.lambda {
            Some(l) => l,
            None => {
                let est = estimate_norm(op, 1e-8, 100_000, config.norm_seed)?;
                default_lambda(est.inflated())?
            }
        };
        let iteration = IterationConfig {
            lambda,
            steps: config.steps,
            perturbation: Some(config.perturbation()),
            max_iter: config.max_iter,
            record_every: config.record_every,
        };
        iteration.validate()?;

        let dense = op.to_dense();
        let pinv = oracle::pseudoinverse_solve(&dense, &problem.y, DEFAULT_RANK_TOL)?;
        let rmin = match config.rmin_budget {
            Some(budget) => {
                Some(oracle::r_min_solve(&dense, &problem.y, &config.regularizer, budget)?.x)
            }
            None => None,
        };

        let hash = config_hash(&problem, &config);
        let cache_path = cache_dir.map(|d| d.join(format!("exact_limit_{}.json", &hash[..16])));
        let cached = match &cache_path {
            Some(p) if p.exists() => {
                let e: ExactLimit = record::read_json(p)?;
                (e.config_hash == hash).then_some(e)
            }
            _ => None,
        };
        let exact = match cached {
            Some(e) => e,
            None => {
                let e = exact_limit(&problem, &iteration, config.exact_max_iter, hash)?;
                if let Some(p) = &cache_path {
                    let mut text = serde_json::to_string(&e).expect("serializes");
                    text.push('\n');
                    record::write_file(p, &text)?;
                }
                e
            }
        };

        Ok(Self {
            refs: References {
                pinv: Some(pinv),
                rmin,
                exact_limit: Some(exact.x.clone()),
            },
            problem,
            config,
            iteration,
            exact,
        })
    }
}

fn exact_limit(
    problem: &Problem,
    iteration: &IterationConfig,
    budget: usize,
    config_hash: String,
) -> Result<ExactLimit> {
    let cfg = IterationConfig {
        max_iter: budget,
        record_every: budget,
        ..iteration.clone()
    };
    let rule = StoppingRule::convergence(budget)?;
    let (state, rec) = run_iteration(
        &problem.operator,
        &problem.y,
        &cfg,
        &rule,
        &References::default(),
    )?;
    if rec.stop.is_flagged() {
        log::warn!(
            "exact-data reference did not converge within {budget} iterations; using the last iterate"
        );
    }
    Ok(ExactLimit {
        config_hash,
        iterations: state.k,
        converged: !rec.stop.is_flagged(),
        residual_norm: state.residual_norm,
        x: state.x,
    })
}

/// One noisy run under `rule`, with the inputs echoed into the record.
pub fn run_single(prep: &Prepared, rule: RuleName, noise: NoiseSpec) -> Result<ExperimentRecord> {
    let stop = prep.config.rule(rule, noise.delta)?;
    let y_noisy = inject_noise(&prep.problem.y, &noise)?;
    let (_, mut record) = run_iteration(
        &prep.problem.operator,
        &y_noisy,
        &prep.iteration,
        &stop,
        &prep.refs,
    )?;
    record.config = Some(RunEcho {
        problem: prep.problem.spec.clone(),
        noise,
        config: prep.config.clone(),
        rule: stop,
    });
    Ok(record)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepEntry {
    pub delta: f64,
    pub rule: RuleName,
    pub record: ExperimentRecord,
}

/// Runs every rule at every noise level. All levels share the noise
/// direction drawn from `noise_seed`. Entries come back ordered by δ, then
/// by rule; budget-exhausted runs are kept.
pub fn run_delta_sweep(
    prep: &Prepared,
    rules: &[RuleName],
    deltas: &[f64],
    noise_seed: u64,
) -> Result<Vec<SweepEntry>> {
    if deltas.is_empty() || rules.is_empty() {
        return Err(Error::invalid(
            "sweep needs at least one noise level and one rule",
        ));
    }
    if deltas.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
        return Err(Error::invalid("noise levels must be positive"));
    }
    if deltas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::invalid("noise levels must be strictly decreasing"));
    }
    let jobs: Vec<(f64, RuleName)> = deltas
        .iter()
        .flat_map(|&d| rules.iter().map(move |&r| (d, r)))
        .collect();
    jobs.into_par_iter()
        .map(|(delta, rule)| {
            let record = run_single(
                prep,
                rule,
                NoiseSpec {
                    delta,
                    seed: noise_seed,
                },
            )?;
            Ok(SweepEntry {
                delta,
                rule,
                record,
            })
        })
        .collect()
}

/// Per-entry outcome at the stopping index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub file: String,
    pub rule: RuleName,
    pub delta: f64,
    pub fired_index: Option<usize>,
    pub final_k: usize,
    pub status: StopStatus,
    pub residual_norm: f64,
    pub reg_value: f64,
    pub error_to_pinv: Option<f64>,
    pub error_to_rmin: Option<f64>,
    pub error_to_exact_limit: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub config_hash: String,
    pub exact_iterations: usize,
    pub exact_converged: bool,
    pub rows: Vec<SummaryRow>,
}

fn rule_label(rule: RuleName) -> &'static str {
    match rule {
        RuleName::Apriori => "apriori",
        RuleName::Discrepancy => "discrepancy",
        RuleName::MaxIter => "max-iter",
    }
}

/// Writes one record file per entry plus [`SUMMARY_FILE`] into `dir`.
pub fn write_sweep(
    prep: &Prepared,
    entries: &[SweepEntry],
    dir: &Path,
    format: Format,
) -> Result<Summary> {
    let mut index_of_delta: Vec<f64> = Vec::new();
    let mut rows = Vec::with_capacity(entries.len());
    for entry in entries {
        let idx = match index_of_delta.iter().position(|d| *d == entry.delta) {
            Some(i) => i,
            None => {
                index_of_delta.push(entry.delta);
                index_of_delta.len() - 1
            }
        };
        let file = format!(
            "{}_d{idx:02}.{}",
            rule_label(entry.rule),
            format.extension()
        );
        record::emit(&entry.record, format, &dir.join(&file))?;
        let last = entry
            .record
            .rows
            .last()
            .expect("records hold at least the start row");
        rows.push(SummaryRow {
            file,
            rule: entry.rule,
            delta: entry.delta,
            fired_index: entry.record.stop.fired_index,
            final_k: entry.record.stop.final_k,
            status: entry.record.stop.status,
            residual_norm: last.residual_norm,
            reg_value: last.reg_value,
            error_to_pinv: last.error_to_pinv,
            error_to_rmin: last.error_to_rmin,
            error_to_exact_limit: last.error_to_exact_limit,
        });
    }
    let summary = Summary {
        config_hash: prep.exact.config_hash.clone(),
        exact_iterations: prep.exact.iterations,
        exact_converged: prep.exact.converged,
        rows,
    };
    let mut text = serde_json::to_string_pretty(&summary).expect("serializes");
    text.push('\n');
    record::write_file(&dir.join(SUMMARY_FILE), &text)?;
    Ok(summary)
}

pub fn read_summary(dir: &Path) -> Result<Summary> {
    record::read_json(&dir.join(SUMMARY_FILE))
}
