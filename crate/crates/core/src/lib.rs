//! Superiorized Landweber iteration for linear ill-posed problems `A x = y`.
//!
//! The basic Landweber update `x ← x − λ A*(A x − y)` is interleaved with
//! small, summable steps along the normalized negative subgradient of a
//! convex regularizer `r`. For exact data the perturbed iteration still
//! converges to a solution of `A x = y`, though generally not to the
//! minimal-norm one; with noisy data, stopping early yields a
//! regularization method for that solution concept.
//!
//! Modules:
//! - [`linalg`]: vectors, operators with adjoints, norm estimation
//! - [`regularizer`]: penalties, subgradients, the perturbation map
//! - [`iterate`]: the iterations and run driver
//! - [`stopping`]: a-priori, discrepancy and budget rules
//! - [`oracle`]: SVD pseudoinverse and r-minimizing reference solvers
//! - [`experiment`] / [`record`]: problem generators, δ-sweeps, CSV/JSON output

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiment;
pub mod iterate;
pub mod linalg;
pub mod oracle;
pub mod record;
pub mod regularizer;
pub mod stopping;

pub use error::{Error, Result};
pub use iterate::{
    landweber_step, run_iteration, run_iteration_from, superiorized_step, IterationConfig,
    IterationState, Landweber, References, StepSequence,
};
pub use linalg::{estimate_norm, Convolution1d, DenseMatrix, LinearOperator, Operator};
pub use record::{ExperimentRecord, Format, RecordRow, StopMetadata, StopStatus};
pub use regularizer::{PerturbationMap, PerturbationMode, Regularizer, RegularizerKind};
pub use stopping::{RuleKind, StoppingRule};
