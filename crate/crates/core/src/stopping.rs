//! Parameter-choice rules that turn the truncated iterates into a
//! regularization method.
//!
//! The a-priori rule `κ(δ) = ceil(c δ^(−p))` is a heuristic power law; the
//! discrepancy principle stops at the first iterate whose residual drops to
//! `τ δ`. For superiorized runs the discrepancy rule is experimental: no
//! admissibility result is known for it. Every rule is wrapped by a hard cap.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_APRIORI_C: f64 = 1.0;
pub const DEFAULT_APRIORI_P: f64 = 0.5;
pub const DEFAULT_TAU: f64 = 1.5;

/// Step-size threshold for declaring an exact-data run converged, relative to `1 + ‖x_k‖`.
pub const CONVERGENCE_STEP_TOL: f64 = 1e-10;
/// Remaining perturbation budget `Σ_{j>k} t_j` below which the tail is considered spent.
pub const CONVERGENCE_BUDGET_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum RuleKind {
    #[serde(rename = "a-priori")]
    APriori {
        c: f64,
        p: f64,
    },
    Discrepancy {
        tau: f64,
    },
    MaxIter,
    /// Exact-data run to numerical convergence.
    Convergence,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StoppingRule {
    #[serde(flatten)]
    pub kind: RuleKind,
    pub delta: f64,
    pub cap: usize,
}

fn check_cap(cap: usize) -> Result<()> {
    if cap == 0 {
        return Err(Error::invalid("iteration cap must be positive"));
    }
    Ok(())
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::invalid(format!(
            "noise level must be positive for this rule, got {delta}"
        )));
    }
    Ok(())
}

impl StoppingRule {
    pub fn a_priori(c: f64, p: f64, delta: f64, cap: usize) -> Result<Self> {
        let rule = Self {
            kind: RuleKind::APriori { c, p },
            delta,
            cap,
        };
        rule.validate()?;
        Ok(rule)
    }

    pub fn discrepancy(tau: f64, delta: f64, cap: usize) -> Result<Self> {
        let rule = Self {
            kind: RuleKind::Discrepancy { tau },
            delta,
            cap,
        };
        rule.validate()?;
        Ok(rule)
    }

    pub fn max_iter(cap: usize) -> Result<Self> {
        check_cap(cap)?;
        Ok(Self {
            kind: RuleKind::MaxIter,
            delta: 0.0,
            cap,
        })
    }

    pub fn convergence(cap: usize) -> Result<Self> {
        check_cap(cap)?;
        Ok(Self {
            kind: RuleKind::Convergence,
            delta: 0.0,
            cap,
        })
    }

    pub fn validate(&self) -> Result<()> {
        check_cap(self.cap)?;
        match self.kind {
            RuleKind::APriori { c, p } => {
                if !(c > 0.0 && p > 0.0) {
                    return Err(Error::invalid(format!(
                        "a-priori rule needs c > 0 and p > 0, got c={c}, p={p}"
                    )));
                }
                check_delta(self.delta)
            }
            RuleKind::Discrepancy { tau } => {
                if !(tau > 1.0) {
                    return Err(Error::invalid(format!(
                        "discrepancy needs tau > 1, got {tau}"
                    )));
                }
                check_delta(self.delta)
            }
            RuleKind::MaxIter | RuleKind::Convergence => {
                if !(self.delta >= 0.0) {
                    return Err(Error::invalid("noise level must be non-negative"));
                }
                Ok(())
            }
        }
    }

    /// Short name used in file names and reports.
    pub fn name(&self) -> &'static str {
        match self.kind {
            RuleKind::APriori { .. } => "apriori",
            RuleKind::Discrepancy { .. } => "discrepancy",
            RuleKind::MaxIter => "max-iter",
            RuleKind::Convergence => "convergence",
        }
    }

    /// `min(ceil(c δ^(−p)), cap)`; only meaningful for the a-priori rule.
    pub fn apriori_index(&self, delta: f64) -> Result<usize> {
        let RuleKind::APriori { c, p } = self.kind else {
            return Err(Error::invalid(format!(
                "{} rule has no a-priori index",
                self.name()
            )));
        };
        if delta == 0.0 {
            return Err(Error::invalid(
                "a-priori index is undefined for exact data; run to convergence instead",
            ));
        }
        check_delta(delta)?;
        let raw = c * delta.powf(-p);
        // Absorb last-ulp noise from powf so that e.g. 0.01^-0.5 maps to 10, not 11.
        let index = (raw * (1.0 - 1e-12)).ceil();
        if index >= self.cap as f64 {
            Ok(self.cap)
        } else {
            Ok((index as usize).max(1))
        }
    }

    /// `residual_norm ≤ τ δ`; only meaningful for the discrepancy rule.
    pub fn discrepancy_fired(&self, residual_norm: f64) -> Result<bool> {
        let RuleKind::Discrepancy { tau } = self.kind else {
            return Err(Error::invalid(format!(
                "{} rule has no discrepancy test",
                self.name()
            )));
        };
        check_delta(self.delta)?;
        if !(tau > 1.0) {
            return Err(Error::invalid(format!(
                "discrepancy needs tau > 1, got {tau}"
            )));
        }
        Ok(residual_norm <= tau * self.delta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn apriori(cap: usize) -> StoppingRule {
        StoppingRule::a_priori(1.0, 0.5, 0.01, cap).unwrap()
    }

    #[test]
    fn apriori_examples() {
        let r = apriori(1_000_000);
        assert_eq!(r.apriori_index(0.01).unwrap(), 10);
        assert_eq!(r.apriori_index(1e-4).unwrap(), 100);
        assert_eq!(apriori(50).apriori_index(1e-6).unwrap(), 50);
        assert!(r.apriori_index(0.0).is_err());
        assert!(r.apriori_index(-1.0).is_err());
    }

    #[test]
    fn apriori_is_monotone() {
        let r = apriori(usize::MAX);
        let deltas: Vec<f64> = (0..200).map(|i| 10f64.powf(-(i as f64) / 25.0)).collect();
        for w in deltas.windows(2) {
            // w[1] < w[0]
            let (big, small) = (
                r.apriori_index(w[0]).unwrap(),
                r.apriori_index(w[1]).unwrap(),
            );
            assert!(small >= big);
        }
        assert!(r.apriori_index(1e-12).unwrap() >= 1_000_000);
    }

    #[test]
    fn discrepancy_examples() {
        let r = StoppingRule::discrepancy(1.5, 0.1, 100).unwrap();
        assert!(r.discrepancy_fired(0.14).unwrap());
        assert!(!r.discrepancy_fired(0.16).unwrap());
        assert!(StoppingRule::discrepancy(1.5, 0.0, 100).is_err());
        assert!(StoppingRule::discrepancy(1.0, 0.1, 100).is_err());
        let forged = StoppingRule {
            kind: RuleKind::Discrepancy { tau: 1.5 },
            delta: 0.0,
            cap: 10,
        };
        assert!(forged.discrepancy_fired(0.0).is_err());
    }

    #[test]
    fn wrong_kind_is_rejected() {
        assert!(StoppingRule::max_iter(10)
            .unwrap()
            .apriori_index(0.1)
            .is_err());
        assert!(apriori(10).discrepancy_fired(0.1).is_err());
        assert!(StoppingRule::max_iter(0).is_err());
        assert!(StoppingRule::a_priori(0.0, 0.5, 0.1, 10).is_err());
    }

    #[test]
    fn json_shape() {
        let r = StoppingRule::discrepancy(1.5, 0.1, 100).unwrap();
        let s = serde_json::to_string(&r).unwrap();
        assert_eq!(
            s,
            r#"{"rule":"discrepancy","tau":1.5,"delta":0.1,"cap":100}"#
        );
        let back: StoppingRule = serde_json::from_str(&s).unwrap();
        assert_eq!(back, r);
    }
}
