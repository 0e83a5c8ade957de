//! Convex penalties with deterministic subgradient selections, and the
//! bounded perturbation map built from the normalized negative subgradient.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegularizerKind {
    /// `w ‖x‖²`
    SquaredNorm,
    /// `w Σ |x_i|`
    L1,
    /// `w Σ |x_{i+1} − x_i|`, anisotropic 1-D total variation.
    #[serde(rename = "tv-1d")]
    Tv1d,
}

impl std::str::FromStr for RegularizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "squared-norm" => Ok(Self::SquaredNorm),
            "l1" => Ok(Self::L1),
            "tv-1d" => Ok(Self::Tv1d),
            other => Err(Error::invalid(format!("unknown regularizer '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawRegularizer")]
pub struct Regularizer {
    kind: RegularizerKind,
    weight: f64,
}

#[derive(Deserialize)]
struct RawRegularizer {
    kind: RegularizerKind,
    #[serde(default = "unit_weight")]
    weight: f64,
}

fn unit_weight() -> f64 {
    1.0
}

impl TryFrom<RawRegularizer> for Regularizer {
    type Error = Error;

    fn try_from(raw: RawRegularizer) -> Result<Self> {
        Self::weighted(raw.kind, raw.weight)
    }
}

/// `sign` with `sign(0) = 0`.
fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

impl Regularizer {
    pub fn new(kind: RegularizerKind) -> Self {
        Self { kind, weight: 1.0 }
    }

    pub fn weighted(kind: RegularizerKind, weight: f64) -> Result<Self> {
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(Error::invalid(format!(
                "regularizer weight must be positive and finite, got {weight}"
            )));
        }
        Ok(Self { kind, weight })
    }

    pub fn kind(&self) -> RegularizerKind {
        self.kind
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let raw = match self.kind {
            RegularizerKind::SquaredNorm => linalg::dot(x, x),
            RegularizerKind::L1 => x.iter().map(|v| v.abs()).sum(),
            RegularizerKind::Tv1d => x.windows(2).map(|p| (p[1] - p[0]).abs()).sum(),
        };
        self.weight * raw
    }

    /// A fixed element of the subdifferential at `x`.
    pub fn subgradient(&self, x: &[f64]) -> Vec<f64> {
        let w = self.weight;
        match self.kind {
            RegularizerKind::SquaredNorm => x.iter().map(|v| 2.0 * w * v).collect(),
            RegularizerKind::L1 => x.iter().map(|&v| w * sign(v)).collect(),
            RegularizerKind::Tv1d => {
                // -Dᵀ s with s_i = sign(x_{i+1} - x_i): entry j gets s_{j-1} - s_j.
                let mut d = vec![0.0; x.len()];
                for (i, p) in x.windows(2).enumerate() {
                    let s = w * sign(p[1] - p[0]);
                    d[i] -= s;
                    d[i + 1] += s;
                }
                d
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PerturbationMode {
    /// Always take the perturbed half-step.
    #[default]
    Unconditional,
    /// Keep the half-step only if it does not increase the regularizer.
    Monotone,
}

pub const DEFAULT_SMOOTHING_EPS: f64 = 1e-8;

/// Continuous, 1-bounded perturbation `x ↦ −D(x) / max(‖D(x)‖, ε)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationMap {
    pub regularizer: Regularizer,
    pub smoothing_eps: f64,
    pub mode: PerturbationMode,
}

impl PerturbationMap {
    pub fn new(regularizer: Regularizer) -> Self {
        Self {
            regularizer,
            smoothing_eps: DEFAULT_SMOOTHING_EPS,
            mode: PerturbationMode::Unconditional,
        }
    }

    pub fn with_mode(mut self, mode: PerturbationMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_smoothing(mut self, eps: f64) -> Self {
        self.smoothing_eps = eps;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.smoothing_eps > 0.0 && self.smoothing_eps.is_finite()) {
            return Err(Error::invalid(format!(
                "smoothing_eps must be positive, got {}",
                self.smoothing_eps
            )));
        }
        Ok(())
    }

    pub fn direction(&self, x: &[f64]) -> Vec<f64> {
        let mut d = self.regularizer.subgradient(x);
        let denom = linalg::norm(&d).max(self.smoothing_eps);
        d.iter_mut().for_each(|v| *v = -*v / denom);
        d
    }

    /// Half-step `x + t · direction(x)`, subject to the mode's acceptance test.
    pub fn perturb(&self, x: &[f64], t: f64) -> Vec<f64> {
        debug_assert!(t >= 0.0);
        if t == 0.0 {
            return x.to_vec();
        }
        let mut candidate = x.to_vec();
        linalg::axpy(t, &self.direction(x), &mut candidate);
        match self.mode {
            PerturbationMode::Unconditional => candidate,
            PerturbationMode::Monotone => {
                if self.regularizer.value(&candidate) <= self.regularizer.value(x) {
                    candidate
                } else {
                    x.to_vec()
                }
            }
        }
    }
}
