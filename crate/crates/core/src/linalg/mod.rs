//! Euclidean vectors and linear operators with adjoints.
//!
//! Vectors are plain `[f64]` slices; `X = R^n` and `Y = R^m` carry the
//! standard inner product. Every downstream module touches the forward
//! operator only through [`LinearOperator`].

mod conv;
mod dense;
mod norm;

pub use conv::Convolution1d;
pub use dense::DenseMatrix;
pub use norm::{estimate_norm, NormEstimate, DEFAULT_NORM_SEED, NORM_INFLATION};

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Result};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `‖a − b‖`.
pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scale(alpha: f64, x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| alpha * v).collect()
}

pub fn all_finite(x: &[f64]) -> bool {
    x.iter().all(|v| v.is_finite())
}

/// A bounded linear map `A: R^n -> R^m` together with its adjoint.
///
/// Implementors provide the unchecked kernels; the checked `apply` and
/// `apply_adjoint` reject mismatched input lengths.
pub trait LinearOperator {
    fn domain_dim(&self) -> usize;

    fn range_dim(&self) -> usize;

    /// Writes `A x` into `out`. Lengths are already validated.
    fn forward_into(&self, x: &[f64], out: &mut [f64]);

    /// Writes `A* y` into `out`. Lengths are already validated.
    fn adjoint_into(&self, y: &[f64], out: &mut [f64]);

    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("apply", self.domain_dim(), x.len())?;
        let mut out = vec![0.0; self.range_dim()];
        self.forward_into(x, &mut out);
        Ok(out)
    }

    fn apply_adjoint(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_len("apply_adjoint", self.range_dim(), y.len())?;
        let mut out = vec![0.0; self.domain_dim()];
        self.adjoint_into(y, &mut out);
        Ok(out)
    }

    /// Materializes the operator column by column.
    fn to_dense(&self) -> DenseMatrix {
        let (m, n) = (self.range_dim(), self.domain_dim());
        let mut data = vec![0.0; m * n];
        let mut e = vec![0.0; n];
        let mut col = vec![0.0; m];
        for j in 0..n {
            e[j] = 1.0;
            self.forward_into(&e, &mut col);
            for i in 0..m {
                data[i * n + j] = col[i];
            }
            e[j] = 0.0;
        }
        DenseMatrix::from_row_major(m, n, data).expect("dimensions are consistent")
    }
}

/// The operators shipped with the crate, in serializable form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Operator {
    DenseMatrix {
        matrix: DenseMatrix,
    },
    #[serde(rename = "convolution-1d")]
    Convolution1d(Convolution1d),
}

impl Operator {
    pub fn dense(matrix: DenseMatrix) -> Self {
        Operator::DenseMatrix { matrix }
    }

    fn inner(&self) -> &dyn LinearOperator {
        match self {
            Operator::DenseMatrix { matrix } => matrix,
            Operator::Convolution1d(c) => c,
        }
    }
}

impl LinearOperator for Operator {
    fn domain_dim(&self) -> usize {
        self.inner().domain_dim()
    }

    fn range_dim(&self) -> usize {
        self.inner().range_dim()
    }

    fn forward_into(&self, x: &[f64], out: &mut [f64]) {
        self.inner().forward_into(x, out)
    }

    fn adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        self.inner().adjoint_into(y, out)
    }

    fn to_dense(&self) -> DenseMatrix {
        match self {
            Operator::DenseMatrix { matrix } => matrix.clone(),
            Operator::Convolution1d(c) => c.to_dense(),
        }
    }
}

impl<T: LinearOperator + ?Sized> LinearOperator for &T {
    fn domain_dim(&self) -> usize {
        (**self).domain_dim()
    }

    fn range_dim(&self) -> usize {
        (**self).range_dim()
    }

    fn forward_into(&self, x: &[f64], out: &mut [f64]) {
        (**self).forward_into(x, out)
    }

    fn adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        (**self).adjoint_into(y, out)
    }
}
