use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::linalg::{self, Convolution1d, DenseMatrix, LinearOperator, Operator};

/// Ground-truth signal shapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Profile {
    PiecewiseConstant,
    SmoothBump,
    SparseSpikes,
}

/// Recipe for a test problem. Generated problems are deterministic in `seed`
/// and always have attainable exact data `y = A x_true`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "kebab-case")]
pub enum ProblemSpec {
    /// Gaussian blur with `kernel_width` taps on a length-`n` signal.
    #[serde(rename = "deconvolution-1d")]
    Deconvolution1d {
        n: usize,
        kernel_width: usize,
        profile: Profile,
        seed: u64,
    },
    /// `A = U diag(i^(−decay)) Vᵀ` with seeded random orthogonal `U`, `V`.
    DecaySpectrum {
        m: usize,
        n: usize,
        decay: f64,
        profile: Profile,
        seed: u64,
    },
    /// Externally supplied operator and truth.
    ExplicitMatrix {
        matrix: DenseMatrix,
        x_true: Vec<f64>,
    },
}

/// A concrete problem instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    pub spec: ProblemSpec,
    pub operator: Operator,
    pub x_true: Vec<f64>,
    /// Exact data `A x_true`.
    pub y: Vec<f64>,
}

const TRUTH_STREAM: u64 = 0x9e37_79b9_7f4a_7c15;

pub fn generate_problem(spec: &ProblemSpec) -> Result<Problem> {
    let (operator, x_true) = match spec {
        ProblemSpec::Deconvolution1d {
            n,
            kernel_width,
            profile,
            seed,
        } => {
            let op = Convolution1d::gaussian(*n, *kernel_width)?;
            (Operator::Convolution1d(op), truth(*profile, *n, *seed)?)
        }
        ProblemSpec::DecaySpectrum {
            m,
            n,
            decay,
            profile,
            seed,
        } => {
            if !(decay.is_finite() && *decay >= 0.0) {
                return Err(Error::invalid(format!(
                    "decay exponent must be >= 0, got {decay}"
                )));
            }
            let matrix = decay_spectrum_matrix(*m, *n, *decay, *seed)?;
            (Operator::dense(matrix), truth(*profile, *n, *seed)?)
        }
        ProblemSpec::ExplicitMatrix { matrix, x_true } => {
            check_len("explicit x_true", matrix.cols(), x_true.len())?;
            if !linalg::all_finite(x_true) {
                return Err(Error::invalid("x_true must be finite"));
            }
            (Operator::dense(matrix.clone()), x_true.clone())
        }
    };
    let y = operator.apply(&x_true)?;
    Ok(Problem {
        spec: spec.clone(),
        operator,
        x_true,
        y,
    })
}

fn truth(profile: Profile, n: usize, seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::invalid("signal length must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ TRUTH_STREAM);
    let nf = n as f64;
    let x = match profile {
        Profile::PiecewiseConstant => {
            let mut cuts: Vec<usize> = (0..4)
                .map(|_| rng.random_range(n / 8..=(7 * n / 8).max(n / 8)))
                .collect();
            cuts.sort_unstable();
            let levels: Vec<f64> = (0..=cuts.len())
                .map(|_| rng.random_range(-1.0..1.0))
                .collect();
            (0..n)
                .map(|i| levels[cuts.iter().filter(|&&c| c <= i).count()])
                .collect()
        }
        Profile::SmoothBump => {
            let bumps: Vec<(f64, f64, f64)> = (0..2)
                .map(|_| {
                    let center = rng.random_range(0.3..0.7) * nf;
                    let width = nf / 8.0 * rng.random_range(0.8..1.2);
                    let height = rng.random_range(0.5..1.0);
                    (center, width, height)
                })
                .collect();
            (0..n)
                .map(|i| {
                    bumps
                        .iter()
                        .map(|&(c, w, h)| h * (-((i as f64 - c) / w).powi(2)).exp())
                        .sum()
                })
                .collect()
        }
        Profile::SparseSpikes => {
            let mut x = vec![0.0; n];
            let count = (n / 10).max(1);
            let mut placed = 0;
            while placed < count {
                let i = rng.random_range(0..n);
                if x[i] == 0.0 {
                    let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                    x[i] = sign * rng.random_range(0.5..1.5);
                    placed += 1;
                }
            }
            x
        }
    };
    Ok(x)
}

/// Columns of a seeded `k × k` orthogonal matrix (Gram-Schmidt, applied twice).
fn random_orthogonal(k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(k);
    while cols.len() < k {
        let mut v: Vec<f64> = (0..k).map(|_| StandardNormal.sample(rng)).collect();
        for _ in 0..2 {
            for q in &cols {
                let c = linalg::dot(q, &v);
                linalg::axpy(-c, q, &mut v);
            }
        }
        let nv = linalg::norm(&v);
        if nv > 1e-8 {
            cols.push(linalg::scale(1.0 / nv, &v));
        }
    }
    cols
}

fn decay_spectrum_matrix(m: usize, n: usize, decay: f64, seed: u64) -> Result<DenseMatrix> {
    if m == 0 || n == 0 {
        return Err(Error::invalid("matrix dimensions must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = random_orthogonal(m, &mut rng);
    let v = random_orthogonal(n, &mut rng);
    let mut data = vec![0.0; m * n];
    for l in 0..m.min(n) {
        let sigma = ((l + 1) as f64).powf(-decay);
        for i in 0..m {
            let us = u[l][i] * sigma;
            for j in 0..n {
                data[i * n + j] += us * v[l][j];
            }
        }
    }
    DenseMatrix::from_row_major(m, n, data)
}
