//! Independent reference solvers.
//!
//! The SVD is a one-sided (Hestenes) Jacobi iteration: it keeps high
//! relative accuracy for small singular values, which the ill-conditioned
//! test problems depend on. The r-minimizing solver works on the affine
//! solution set `{x | Ax = y}` parametrized through the SVD null space.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{check_len, Error, Result};
use crate::linalg::{self, DenseMatrix, LinearOperator};
use crate::regularizer::Regularizer;

/// Relative cutoff below which singular values count as zero.
pub const DEFAULT_RANK_TOL: f64 = 1e-12;
pub const DEFAULT_RMIN_BUDGET: usize = 1_000_000;
pub const RMIN_RESTARTS: usize = 3;
pub const RMIN_FEASIBILITY_TOL: f64 = 1e-8;
pub const RMIN_AGREEMENT_TOL: f64 = 1e-4;

const JACOBI_MAX_SWEEPS: usize = 100;

/// `A = U Σ Vᵀ` with singular values sorted descending.
///
/// `u` holds `min(m, n)` left vectors; `v` holds all `n` right vectors, so
/// the trailing columns of `v` span the null space of `A`.
#[derive(Debug, Clone)]
pub struct Svd {
    rows: usize,
    cols: usize,
    pub singular_values: Vec<f64>,
    pub u: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
}

pub fn svd(a: &DenseMatrix) -> Svd {
    let (m, n) = (a.rows(), a.cols());
    let mut w: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..m).map(|i| a.get(i, j)).collect())
        .collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();

    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = linalg::dot(&w[p], &w[p]);
                let beta = linalg::dot(&w[q], &w[q]);
                let gamma = linalg::dot(&w[p], &w[q]);
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut w, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = w.iter().map(|c| linalg::norm(c)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let k = m.min(n);
    let singular_values: Vec<f64> = order[..k].iter().map(|&j| norms[j]).collect();
    let u = order[..k]
        .iter()
        .map(|&j| {
            if norms[j] > 0.0 {
                linalg::scale(1.0 / norms[j], &w[j])
            } else {
                vec![0.0; m]
            }
        })
        .collect();
    let v = order.iter().map(|&j| v[j].clone()).collect();
    Svd {
        rows: m,
        cols: n,
        singular_values,
        u,
        v,
    }
}

fn rotate(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (head, tail) = cols.split_at_mut(q);
    for (a, b) in head[p].iter_mut().zip(tail[0].iter_mut()) {
        let (x, y) = (*a, *b);
        *a = c * x - s * y;
        *b = s * x + c * y;
    }
}

impl Svd {
    /// Number of singular values above `rank_tol · σ_1`.
    pub fn rank(&self, rank_tol: f64) -> usize {
        let cutoff = rank_tol * self.singular_values.first().copied().unwrap_or(0.0);
        self.singular_values
            .iter()
            .take_while(|&&s| s > cutoff && s > 0.0)
            .count()
    }

    pub fn reconstruct(&self) -> DenseMatrix {
        let (m, n) = (self.rows, self.cols);
        let mut data = vec![0.0; m * n];
        for (l, &sigma) in self.singular_values.iter().enumerate() {
            for i in 0..m {
                let us = self.u[l][i] * sigma;
                for j in 0..n {
                    data[i * n + j] += us * self.v[l][j];
                }
            }
        }
        DenseMatrix::from_row_major(m, n, data).expect("dimensions are consistent")
    }

    /// `Σ_{σ_i > tol·σ_1} (u_iᵀ y / σ_i) v_i`
    pub fn solve_pinv(&self, y: &[f64], rank_tol: f64) -> Vec<f64> {
        let mut x = vec![0.0; self.cols];
        for l in 0..self.rank(rank_tol) {
            let coef = linalg::dot(&self.u[l], y) / self.singular_values[l];
            linalg::axpy(coef, &self.v[l], &mut x);
        }
        x
    }

    /// Orthonormal basis of the numerical null space.
    pub fn null_space(&self, rank_tol: f64) -> &[Vec<f64>] {
        &self.v[self.rank(rank_tol)..]
    }
}

/// Minimal-norm least-squares solution `A⁺ y`.
pub fn pseudoinverse_solve(matrix: &DenseMatrix, y: &[f64], rank_tol: f64) -> Result<Vec<f64>> {
    check_len("pseudoinverse data", matrix.rows(), y.len())?;
    if !(rank_tol > 0.0) {
        return Err(Error::invalid(format!(
            "rank_tol must be positive, got {rank_tol}"
        )));
    }
    Ok(svd(matrix).solve_pinv(y, rank_tol))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RMinSolution {
    pub x: Vec<f64>,
    pub value: f64,
    /// `‖A x − y‖`
    pub feasibility: f64,
    /// Final r-value of each restart.
    pub restart_values: Vec<f64>,
    /// Set when feasibility or restart agreement misses its target.
    pub flagged: bool,
}

/// Approximates `argmin { r(x) | A x = y }` on a small instance.
///
/// Each of [`RMIN_RESTARTS`] restarts runs normalized subgradient descent on
/// `r` restricted to the solution set: the subgradient is projected onto the
/// null space of `A`, and the iterate is projected back onto the affine set
/// at the end of every epoch. Step sizes decay geometrically over the budget
/// and each epoch restarts from the best point seen.
pub fn r_min_solve(
    matrix: &DenseMatrix,
    y: &[f64],
    r: &Regularizer,
    budget: usize,
) -> Result<RMinSolution> {
    check_len("r_min_solve data", matrix.rows(), y.len())?;
    if budget < RMIN_RESTARTS {
        return Err(Error::invalid(
            "budget must cover at least one step per restart",
        ));
    }
    let factor = svd(matrix);
    let x_p = factor.solve_pinv(y, DEFAULT_RANK_TOL);
    let null = factor.null_space(DEFAULT_RANK_TOL);
    let scale = linalg::norm(&x_p).max(1.0);

    let starts: Vec<Vec<f64>> = (0..RMIN_RESTARTS as u64)
        .map(|seed| {
            let mut x = x_p.clone();
            if seed > 0 {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                for basis in null {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    linalg::axpy(z * scale, basis, &mut x);
                }
            }
            x
        })
        .collect();

    let per_restart = budget / RMIN_RESTARTS;
    let runs: Vec<Vec<f64>> = starts
        .into_par_iter()
        .map(|x0| descend(matrix, y, &factor, null, r, x0, scale, per_restart))
        .collect();

    let restart_values: Vec<f64> = runs.iter().map(|x| r.value(x)).collect();
    let best = (0..runs.len())
        .min_by(|&i, &j| restart_values[i].total_cmp(&restart_values[j]))
        .expect("at least one restart");
    let x = runs[best].clone();
    let value = restart_values[best];
    let feasibility = linalg::distance(&matrix.apply(&x)?, y);
    let spread = restart_values.iter().fold(0.0_f64, |m, v| m.max(v - value));
    let flagged = !(feasibility <= RMIN_FEASIBILITY_TOL) || spread > RMIN_AGREEMENT_TOL;
    if flagged {
        log::warn!(
            "r_min_solve missed its targets: feasibility {feasibility:e}, restart spread {spread:e}"
        );
    }
    Ok(RMinSolution {
        x,
        value,
        feasibility,
        restart_values,
        flagged,
    })
}

#[allow(clippy::too_many_arguments)]
fn descend(
    matrix: &DenseMatrix,
    y: &[f64],
    factor: &Svd,
    null: &[Vec<f64>],
    r: &Regularizer,
    mut x: Vec<f64>,
    scale: f64,
    steps: usize,
) -> Vec<f64> {
    const EPOCH: usize = 100;
    if null.is_empty() {
        return x;
    }
    let epochs = (steps / EPOCH).max(1);
    let decay = 1e-12_f64.powf(1.0 / epochs as f64);
    let mut alpha = 0.5 * scale;
    let mut best = x.clone();
    let mut best_value = r.value(&x);

    for _ in 0..epochs {
        for _ in 0..EPOCH {
            let g = r.subgradient(&x);
            let mut h = vec![0.0; x.len()];
            for basis in null {
                linalg::axpy(linalg::dot(basis, &g), basis, &mut h);
            }
            let hn = linalg::norm(&h);
            if hn == 0.0 {
                // 0 ∈ ∂r(x) + range(Aᵀ): x is optimal on the solution set.
                return x;
            }
            linalg::axpy(-alpha / hn, &h, &mut x);
            let value = r.value(&x);
            if value < best_value {
                best_value = value;
                best.copy_from_slice(&x);
            }
        }
        // Restart from the best point, pulled back onto {Ax = y}.
        let drift = linalg::sub(y, &matrix.apply(&best).expect("dimensions checked"));
        let correction = factor.solve_pinv(&drift, DEFAULT_RANK_TOL);
        linalg::axpy(1.0, &correction, &mut best);
        best_value = r.value(&best);
        x.copy_from_slice(&best);
        alpha *= decay;
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regularizer::RegularizerKind;
    use rand::Rng;

    fn random_matrix(m: usize, n: usize, seed: u64) -> DenseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..m * n).map(|_| rng.random_range(-1.0..1.0)).collect();
        DenseMatrix::from_row_major(m, n, data).unwrap()
    }

    fn max_abs_diff(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
        a.as_row_major()
            .iter()
            .zip(b.as_row_major())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn svd_reconstructs_and_sorts() {
        for (m, n, seed) in [(5, 3, 1), (3, 5, 2), (8, 8, 3), (1, 4, 4)] {
            let a = random_matrix(m, n, seed);
            let f = svd(&a);
            assert_eq!(f.singular_values.len(), m.min(n));
            assert!(f.singular_values.windows(2).all(|w| w[0] >= w[1]));
            assert!(f.singular_values.iter().all(|&s| s >= 0.0));
            assert!(max_abs_diff(&f.reconstruct(), &a) <= 1e-9 * a.frobenius_norm());
            for i in 0..n {
                for j in 0..n {
                    let d = linalg::dot(&f.v[i], &f.v[j]);
                    assert!((d - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn svd_of_known_matrices() {
        let f = svd(&DenseMatrix::diag(&[1.0, 3.0]));
        assert!((f.singular_values[0] - 3.0).abs() < 1e-15);
        assert!((f.singular_values[1] - 1.0).abs() < 1e-15);

        let f = svd(&DenseMatrix::from_rows(&[vec![1.0, 2.0]]).unwrap());
        assert!((f.singular_values[0] - 5f64.sqrt()).abs() < 1e-15);
        assert_eq!(f.rank(DEFAULT_RANK_TOL), 1);
        let null = f.null_space(DEFAULT_RANK_TOL);
        assert_eq!(null.len(), 1);
        assert!(linalg::dot(&null[0], &[1.0, 2.0]).abs() < 1e-15);

        // Graded singular values keep their relative accuracy.
        let f = svd(&DenseMatrix::diag(&[1.0, 1e-8, 1e-15]));
        assert!((f.singular_values[2] - 1e-15).abs() <= 1e-28);
    }

    #[test]
    fn zero_matrix_has_rank_zero() {
        let f = svd(&DenseMatrix::zeros(2, 3));
        assert_eq!(f.rank(DEFAULT_RANK_TOL), 0);
        assert_eq!(f.solve_pinv(&[1.0, 1.0], DEFAULT_RANK_TOL), vec![0.0; 3]);
    }

    #[test]
    fn pseudoinverse_examples() {
        let x = pseudoinverse_solve(&DenseMatrix::diag(&[2.0, 1.0]), &[2.0, 1.0], 1e-12).unwrap();
        assert!(linalg::distance(&x, &[1.0, 1.0]) < 1e-15);
        let row = DenseMatrix::from_rows(&[vec![1.0, 2.0]]).unwrap();
        let x = pseudoinverse_solve(&row, &[2.0], 1e-12).unwrap();
        assert!(linalg::distance(&x, &[0.4, 0.8]) < 1e-15);
        let ones = DenseMatrix::from_rows(&[vec![1.0, 1.0]]).unwrap();
        let x = pseudoinverse_solve(&ones, &[2.0], 1e-12).unwrap();
        assert!(linalg::distance(&x, &[1.0, 1.0]) < 1e-15);
        assert!(pseudoinverse_solve(&ones, &[2.0, 1.0], 1e-12).is_err());
        assert!(pseudoinverse_solve(&ones, &[2.0], 0.0).is_err());
    }

    #[test]
    fn pseudoinverse_is_minimal_norm_least_squares() {
        // Normal-equation oracle on a full-row-rank matrix: A⁺y = Aᵀ(AAᵀ)⁻¹y.
        let a = random_matrix(2, 4, 9);
        let y = [0.3, -1.2];
        let x = pseudoinverse_solve(&a, &y, 1e-12).unwrap();
        let (r0, r1) = (a.row(0), a.row(1));
        let (g00, g01, g11) = (
            linalg::dot(r0, r0),
            linalg::dot(r0, r1),
            linalg::dot(r1, r1),
        );
        let det = g00 * g11 - g01 * g01;
        let c0 = (g11 * y[0] - g01 * y[1]) / det;
        let c1 = (-g01 * y[0] + g00 * y[1]) / det;
        let expected: Vec<f64> = (0..4).map(|j| c0 * r0[j] + c1 * r1[j]).collect();
        assert!(linalg::distance(&x, &expected) < 1e-12);
    }

    #[test]
    fn rmin_examples() {
        let row = DenseMatrix::from_rows(&[vec![1.0, 2.0]]).unwrap();
        let l1 = Regularizer::new(RegularizerKind::L1);
        let sol = r_min_solve(&row, &[2.0], &l1, 30_000).unwrap();
        assert!(!sol.flagged, "{sol:?}");
        assert!(linalg::distance(&sol.x, &[0.0, 1.0]) < 1e-6, "{sol:?}");
        assert!((sol.value - 1.0).abs() < 1e-6);

        let sq = Regularizer::new(RegularizerKind::SquaredNorm);
        let sol = r_min_solve(&row, &[2.0], &sq, 30_000).unwrap();
        assert!(linalg::distance(&sol.x, &[0.4, 0.8]) < 1e-6, "{sol:?}");

        let ones = DenseMatrix::from_rows(&[vec![1.0, 1.0]]).unwrap();
        let tv = Regularizer::new(RegularizerKind::Tv1d);
        let sol = r_min_solve(&ones, &[2.0], &tv, 30_000).unwrap();
        assert!(linalg::distance(&sol.x, &[1.0, 1.0]) < 1e-6, "{sol:?}");
        assert!(sol.feasibility <= RMIN_FEASIBILITY_TOL);
    }

    #[test]
    fn l1_oracle_matches_vertex_enumeration() {
        // A = [1 2], y = 2: the solution line is (2 − 2s, s); ℓ1 is piecewise
        // linear in s with kinks at s ∈ {0, 1}, so the minimum sits at a kink.
        let l1 = Regularizer::new(RegularizerKind::L1);
        let best = [0.0, 1.0]
            .iter()
            .map(|&s| l1.value(&[2.0 - 2.0 * s, s]))
            .fold(f64::INFINITY, f64::min);
        assert_eq!(best, 1.0);
        let row = DenseMatrix::from_rows(&[vec![1.0, 2.0]]).unwrap();
        let sol = r_min_solve(&row, &[2.0], &l1, 30_000).unwrap();
        assert!((sol.value - best).abs() < 1e-6);
    }

    #[test]
    fn rmin_never_loses_to_pinv() {
        for seed in 0..3 {
            let a = random_matrix(4, 10, 100 + seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let truth: Vec<f64> = (0..10).map(|_| rng.random_range(-1.0..1.0)).collect();
            let y = a.apply(&truth).unwrap();
            let pinv = pseudoinverse_solve(&a, &y, DEFAULT_RANK_TOL).unwrap();
            for kind in [
                RegularizerKind::SquaredNorm,
                RegularizerKind::L1,
                RegularizerKind::Tv1d,
            ] {
                let r = Regularizer::new(kind);
                let sol = r_min_solve(&a, &y, &r, 60_000).unwrap();
                assert!(sol.feasibility <= RMIN_FEASIBILITY_TOL || sol.flagged);
                assert!(
                    sol.value <= r.value(&pinv) + 1e-6,
                    "{kind:?}: {} vs {}",
                    sol.value,
                    r.value(&pinv)
                );
            }
        }
    }

    #[test]
    fn unique_solution_returns_pinv() {
        let a = DenseMatrix::diag(&[2.0, 1.0]);
        let sol = r_min_solve(&a, &[2.0, 1.0], &Regularizer::new(RegularizerKind::L1), 10).unwrap();
        assert!(linalg::distance(&sol.x, &[1.0, 1.0]) < 1e-15);
        assert!(!sol.flagged);
    }
}
