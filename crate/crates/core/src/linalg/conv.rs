use serde::{Deserialize, Serialize};

use super::LinearOperator;
use crate::error::{Error, Result};

/// Centered 1-D convolution with zero padding, `R^n -> R^n`.
///
/// `(A x)_i = Σ_j k_j x_{i+j-h}` with `h = (len(k) - 1) / 2` and
/// out-of-range samples treated as zero. The adjoint is correlation with
/// the same kernel under the same padding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawConvolution")]
pub struct Convolution1d {
    n: usize,
    kernel: Vec<f64>,
}

#[derive(Deserialize)]
struct RawConvolution {
    n: usize,
    kernel: Vec<f64>,
}

impl TryFrom<RawConvolution> for Convolution1d {
    type Error = Error;

    fn try_from(raw: RawConvolution) -> Result<Self> {
        Self::new(raw.n, raw.kernel)
    }
}

impl Convolution1d {
    pub fn new(n: usize, kernel: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("signal length must be positive"));
        }
        if kernel.len().is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "convolution kernel must have odd length, got {}",
                kernel.len()
            )));
        }
        if !super::all_finite(&kernel) {
            return Err(Error::invalid("kernel entries must be finite"));
        }
        Ok(Self { n, kernel })
    }

    /// Sampled Gaussian of `width` taps (odd), standard deviation `width / 6`,
    /// normalized to unit sum.
    pub fn gaussian(n: usize, width: usize) -> Result<Self> {
        if width.is_multiple_of(2) {
            return Err(Error::invalid("kernel width must be odd"));
        }
        if width >= n {
            return Err(Error::invalid(format!(
                "kernel width {width} must be smaller than signal length {n}"
            )));
        }
        let h = (width / 2) as f64;
        let sigma = width as f64 / 6.0;
        let mut kernel: Vec<f64> = (0..width)
            .map(|j| {
                let d = j as f64 - h;
                (-d * d / (2.0 * sigma * sigma)).exp()
            })
            .collect();
        let total: f64 = kernel.iter().sum();
        kernel.iter_mut().for_each(|k| *k /= total);
        Self::new(n, kernel)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn kernel(&self) -> &[f64] {
        &self.kernel
    }

    fn half(&self) -> isize {
        (self.kernel.len() / 2) as isize
    }
}

impl LinearOperator for Convolution1d {
    fn domain_dim(&self) -> usize {
        self.n
    }

    fn range_dim(&self) -> usize {
        self.n
    }

    fn forward_into(&self, x: &[f64], out: &mut [f64]) {
        let (n, h) = (self.n as isize, self.half());
        for (i, o) in out.iter_mut().enumerate() {
            let i = i as isize;
            *o = self
                .kernel
                .iter()
                .enumerate()
                .filter_map(|(j, &k)| {
                    let src = i + j as isize - h;
                    (0..n).contains(&src).then(|| k * x[src as usize])
                })
                .sum();
        }
    }

    fn adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        let (n, h) = (self.n as isize, self.half());
        for (l, o) in out.iter_mut().enumerate() {
            let l = l as isize;
            *o = self
                .kernel
                .iter()
                .enumerate()
                .filter_map(|(j, &k)| {
                    let dst = l - j as isize + h;
                    (0..n).contains(&dst).then(|| k * y[dst as usize])
                })
                .sum();
        }
    }
}
