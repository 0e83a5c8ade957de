use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::LinearOperator;
use crate::error::{Error, Result};

pub const DEFAULT_NORM_SEED: u64 = 42;

/// Safety factor applied to a norm estimate before it is used to pick a step size.
pub const NORM_INFLATION: f64 = 1.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormEstimate {
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl NormEstimate {
    /// The estimate scaled by [`NORM_INFLATION`].
    pub fn inflated(&self) -> f64 {
        self.value * NORM_INFLATION
    }
}

/// Estimates `‖A‖` by power iteration on `A*A` from a seeded Gaussian start.
///
/// Stops once successive estimates agree to `0.1 * tol` relative. When
/// `max_iter` runs out first, the best estimate seen is returned with
/// `converged = false`.
pub fn estimate_norm<A: LinearOperator + ?Sized>(
    op: &A,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<NormEstimate> {
    if !(tol > 0.0) {
        return Err(Error::invalid(format!(
            "norm tolerance must be positive, got {tol}"
        )));
    }
    if max_iter == 0 {
        return Err(Error::invalid("max_iter must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..op.domain_dim())
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    let mut av = vec![0.0; op.range_dim()];
    let mut w = vec![0.0; op.domain_dim()];

    let mut best = 0.0_f64;
    let mut previous = f64::NAN;
    for it in 1..=max_iter {
        let vn = super::norm(&v);
        if vn == 0.0 {
            // Everything in the Krylov space got annihilated: null operator.
            return Ok(NormEstimate {
                value: 0.0,
                iterations: it,
                converged: true,
            });
        }
        v.iter_mut().for_each(|e| *e /= vn);
        op.forward_into(&v, &mut av);
        let sigma = super::norm(&av);
        best = best.max(sigma);
        if (sigma - previous).abs() <= 0.1 * tol * sigma {
            return Ok(NormEstimate {
                value: best,
                iterations: it,
                converged: true,
            });
        }
        previous = sigma;
        op.adjoint_into(&av, &mut w);
        std::mem::swap(&mut v, &mut w);
    }
    log::warn!("power iteration did not converge within {max_iter} iterations");
    Ok(NormEstimate {
        value: best,
        iterations: max_iter,
        converged: false,
    })
}
