use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub delta: f64,
    pub seed: u64,
}

/// Returns `y + δ u` with `u` a seeded Gaussian direction of unit norm.
///
/// The sum is rounded entrywise, so the realized `‖y^δ − y‖` is then nudged
/// one coordinate at a time until it matches `δ` to about machine precision
/// relative to `δ` itself. The attainable sharpness is bounded by the float
/// spacing of `y`: roughly `ulp(max|y_i|) / n` in absolute terms.
pub fn inject_noise(y: &[f64], spec: &NoiseSpec) -> Result<Vec<f64>> {
    let delta = spec.delta;
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::invalid(format!(
            "noise level must be >= 0, got {delta}"
        )));
    }
    if delta == 0.0 {
        return Ok(y.to_vec());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut u: Vec<f64> = y.iter().map(|_| StandardNormal.sample(&mut rng)).collect();
    let un = linalg::norm(&u);
    u.iter_mut().for_each(|v| *v /= un);

    let mut noisy: Vec<f64> = y.iter().zip(&u).map(|(a, b)| a + delta * b).collect();
    refine_noise_norm(y, &mut noisy, delta);
    Ok(noisy)
}

fn ulp(v: f64) -> f64 {
    let a = v.abs();
    if a == 0.0 {
        f64::from_bits(1)
    } else {
        f64::from_bits(a.to_bits() + 1) - a
    }
}

fn refine_noise_norm(y: &[f64], noisy: &mut [f64], delta: f64) {
    for _ in 0..200 {
        let nu = linalg::distance(noisy, y);
        let err = nu - delta;
        if err.abs() <= 1e-16 * delta {
            return;
        }
        // d‖ξ‖/dξ_i = ξ_i / ‖ξ‖: move the coordinate whose achievable
        // resolution ulp_i · |ξ_i| / ‖ξ‖ is finest among those that can move.
        let pick = noisy
            .iter()
            .zip(y)
            .enumerate()
            .filter_map(|(i, (&a, &b))| {
                let xi = a - b;
                if xi == 0.0 {
                    return None;
                }
                let shift = err * nu / xi;
                (shift.abs() >= ulp(a)).then_some((i, shift, ulp(a) * xi.abs()))
            })
            .min_by(|p, q| p.2.total_cmp(&q.2));
        match pick {
            Some((i, shift, _)) => noisy[i] -= shift,
            None => break,
        }
    }
    refine_with_ulp_pairs(y, noisy, delta);
}

fn ulp_step(v: f64, up: bool) -> f64 {
    if up {
        v.next_up()
    } else {
        v.next_down()
    }
}

type UlpMove = (usize, bool);

/// Single-coordinate moves bottom out at `ulp_i · |u_i|`; opposite one-ulp
/// moves on two coordinates reach finer net changes.
fn refine_with_ulp_pairs(y: &[f64], noisy: &mut [f64], delta: f64) {
    let n = noisy.len();
    for _ in 0..50 {
        let nu = linalg::distance(noisy, y);
        let err = nu - delta;
        if err.abs() <= 1e-16 * delta {
            return;
        }
        // First-order prediction of the norm change for each one-ulp move.
        let moves: Vec<(usize, bool, f64)> = (0..n)
            .flat_map(|i| [true, false].map(|up| (i, up)))
            .map(|(i, up)| {
                let d = ulp_step(noisy[i], up) - noisy[i];
                (i, up, (noisy[i] - y[i]) / nu * d)
            })
            .collect();
        let mut best: Option<(f64, usize, bool, Option<UlpMove>)> = None;
        for (a, &(i, ui, di)) in moves.iter().enumerate() {
            let single = (err + di).abs();
            if best.is_none_or(|b| single < b.0) {
                best = Some((single, i, ui, None));
            }
            for &(j, uj, dj) in &moves[a + 1..] {
                if j == i {
                    continue;
                }
                let pair = (err + di + dj).abs();
                if best.is_none_or(|b| pair < b.0) {
                    best = Some((pair, i, ui, Some((j, uj))));
                }
            }
        }
        let Some((_, i, ui, second)) = best else {
            return;
        };
        let saved: Vec<f64> = noisy.to_vec();
        noisy[i] = ulp_step(noisy[i], ui);
        if let Some((j, uj)) = second {
            noisy[j] = ulp_step(noisy[j], uj);
        }
        if (linalg::distance(noisy, y) - delta).abs() >= err.abs() {
            noisy.copy_from_slice(&saved);
            return;
        }
    }
}
