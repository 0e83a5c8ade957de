#![allow(dead_code)]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use superlandweber::experiment::{generate_problem, Problem, ProblemSpec, Profile};
use superlandweber::DenseMatrix;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

pub fn random_matrix(rng: &mut ChaCha8Rng, m: usize, n: usize) -> DenseMatrix {
    DenseMatrix::from_row_major(m, n, gaussian(rng, m * n)).unwrap()
}

pub fn deconvolution(n: usize, profile: Profile, seed: u64) -> Problem {
    generate_problem(&ProblemSpec::Deconvolution1d {
        n,
        kernel_width: 5,
        profile,
        seed,
    })
    .unwrap()
}

pub fn decay(m: usize, n: usize, s: f64, seed: u64) -> Problem {
    generate_problem(&ProblemSpec::DecaySpectrum {
        m,
        n,
        decay: s,
        profile: Profile::SmoothBump,
        seed,
    })
    .unwrap()
}
