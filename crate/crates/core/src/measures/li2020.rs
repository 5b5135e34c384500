//! Maximum-likelihood fit of the Li2020 Gaussian rating model
//! u_ij ~ N(ψ_j + Δ_i, υ_i²) by coordinate ascent, and the `l` measure.

use serde::{Deserialize, Serialize};

use super::{averaged_estimate, MeasureEstimate, MeasureKind};
use crate::error::{Error, Result};
use crate::matrix::RatingMatrix;

/// Floor on the per-subject inconsistency υ.
pub const EPSILON: f64 = 1e-3;
const TOLERANCE: f64 = 1e-6;
const MAX_SWEEPS: usize = 5000;
const LN_2PI: f64 = 1.837_877_066_409_345_3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Li2020Fit {
    /// Per-stimulus true quality.
    pub psi: Vec<f64>,
    /// Per-subject bias, summing to zero.
    pub delta: Vec<f64>,
    /// Per-subject inconsistency, at least [`EPSILON`].
    pub upsilon: Vec<f64>,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Subjects whose inconsistency hit the floor.
    pub floored: Vec<usize>,
    /// Log-likelihood at the starting point and after every sweep.
    pub ll_trace: Vec<f64>,
}

pub fn fit_li2020(m: &RatingMatrix) -> Result<Li2020Fit> {
    fit_li2020_values(m.n_subjects(), m.n_stimuli(), &m.values())
}

/// Fits the model to an `n` by `k` subject-major grid of real-valued
/// observations (`None` = absent).
pub fn fit_li2020_values(n: usize, k: usize, values: &[Option<f64>]) -> Result<Li2020Fit> {
    if n < 3 || k < 3 {
        return Err(Error::Domain(format!(
            "the Li2020 fit needs at least 3 subjects and 3 stimuli, got {n} x {k}"
        )));
    }
    if values.len() != n * k {
        return Err(Error::InvalidMatrix(format!(
            "expected {} observations, got {}",
            n * k,
            values.len()
        )));
    }
    if values.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidMatrix("observations must be finite".into()));
    }
    let at = |i: usize, j: usize| values[i * k + j];
    let row_count: Vec<usize> = (0..n).map(|i| (0..k).filter(|&j| at(i, j).is_some()).count()).collect();
    if let Some(i) = row_count.iter().position(|&c| c == 0) {
        return Err(Error::InvalidMatrix(format!("subject {i} has no ratings")));
    }
    if let Some(j) = (0..k).find(|&j| (0..n).all(|i| at(i, j).is_none())) {
        return Err(Error::InvalidMatrix(format!("stimulus {j} has no ratings")));
    }

    let grand = {
        let present: Vec<f64> = values.iter().flatten().copied().collect();
        present.iter().sum::<f64>() / present.len() as f64
    };
    let mut psi: Vec<f64> = (0..k)
        .map(|j| {
            let col: Vec<f64> = (0..n).filter_map(|i| at(i, j)).collect();
            col.iter().sum::<f64>() / col.len() as f64
        })
        .collect();
    let mut delta: Vec<f64> = (0..n)
        .map(|i| (0..k).filter_map(|j| at(i, j)).sum::<f64>() / row_count[i] as f64 - grand)
        .collect();
    let mut upsilon = vec![1.0; n];

    let log_lik = |psi: &[f64], delta: &[f64], upsilon: &[f64]| -> f64 {
        let mut ll = 0.0;
        for i in 0..n {
            let mut ss = 0.0;
            for (j, pj) in psi.iter().enumerate() {
                if let Some(u) = at(i, j) {
                    let r = u - pj - delta[i];
                    ss += r * r;
                }
            }
            let c = row_count[i] as f64;
            ll -= c * (0.5 * LN_2PI + upsilon[i].ln()) + ss / (2.0 * upsilon[i] * upsilon[i]);
        }
        ll
    };

    let mut ll = log_lik(&psi, &delta, &upsilon);
    let mut ll_trace = vec![ll];
    let mut converged = false;
    let mut iterations = 0;
    let mut floored = Vec::new();

    while iterations < MAX_SWEEPS {
        iterations += 1;
        let (old_psi, old_delta, old_upsilon) = (psi.clone(), delta.clone(), upsilon.clone());

        for (j, p) in psi.iter_mut().enumerate() {
            let (mut num, mut den) = (0.0, 0.0);
            for i in 0..n {
                if let Some(u) = at(i, j) {
                    let w = 1.0 / (upsilon[i] * upsilon[i]);
                    num += w * (u - delta[i]);
                    den += w;
                }
            }
            *p = num / den;
        }
        for (i, d) in delta.iter_mut().enumerate() {
            let s: f64 = (0..k).filter_map(|j| at(i, j).map(|u| u - psi[j])).sum();
            *d = s / row_count[i] as f64;
        }
        floored.clear();
        for (i, ups) in upsilon.iter_mut().enumerate() {
            let ss: f64 = (0..k)
                .filter_map(|j| at(i, j).map(|u| (u - psi[j] - delta[i]).powi(2)))
                .sum();
            let var = ss / row_count[i] as f64;
            if var < EPSILON * EPSILON {
                floored.push(i);
            }
            *ups = var.max(EPSILON * EPSILON).sqrt();
        }
        let shift = delta.iter().sum::<f64>() / n as f64;
        delta.iter_mut().for_each(|d| *d -= shift);
        psi.iter_mut().for_each(|p| *p += shift);

        let next = log_lik(&psi, &delta, &upsilon);
        debug_assert!(
            next >= ll - 1e-9 * (1.0 + ll.abs()),
            "log-likelihood decreased from {ll} to {next}"
        );
        ll = next;
        ll_trace.push(ll);

        let change = max_abs_diff(&psi, &old_psi)
            .max(max_abs_diff(&delta, &old_delta))
            .max(max_abs_diff(&upsilon, &old_upsilon));
        if change < TOLERANCE {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("Li2020 fit did not converge within {MAX_SWEEPS} sweeps");
    }
    Ok(Li2020Fit {
        psi,
        delta,
        upsilon,
        log_likelihood: ll,
        iterations,
        converged,
        floored,
        ll_trace,
    })
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn l_measure_from_fit(fit: &Li2020Fit) -> Result<MeasureEstimate> {
    averaged_estimate(MeasureKind::L, fit.upsilon.clone())
}

/// Mean υ̂ over subjects; `se = std(υ̂) / sqrt(N - 1)`.
pub fn l_measure(m: &RatingMatrix) -> Result<MeasureEstimate> {
    l_measure_from_fit(&fit_li2020(m)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;
    use approx::assert_abs_diff_eq;

    #[test]
    fn zero_residual_fit() {
        let psi = [2.0, 3.0, 4.0, 3.0];
        let delta = [-1.0, 0.0, 1.0, 0.0];
        let cells: Vec<u8> = delta
            .iter()
            .flat_map(|d| psi.iter().map(move |p| (p + d) as u8))
            .collect();
        let fit = fit_li2020(&RatingMatrix::from_full(4, 4, cells).unwrap()).unwrap();
        assert!(fit.converged);
        for (got, want) in fit.delta.iter().zip(&delta) {
            assert_abs_diff_eq!(got, want, epsilon = 1e-9);
        }
        for (got, want) in fit.psi.iter().zip(&psi) {
            assert_abs_diff_eq!(got, want, epsilon = 1e-9);
        }
        assert!(fit.upsilon.iter().all(|&u| u == EPSILON));
        assert_eq!(fit.floored, vec![0, 1, 2, 3]);
    }

    #[test]
    fn identical_ratings_floor_l() {
        let m = RatingMatrix::from_full(3, 3, vec![2, 4, 5, 2, 4, 5, 2, 4, 5]).unwrap();
        let l = l_measure(&m).unwrap();
        assert_eq!(l.value, EPSILON);
        assert_eq!(l.basis_size, 3);
    }

    #[test]
    fn too_small() {
        let m = RatingMatrix::from_full(2, 3, vec![1, 2, 3, 2, 3, 4]).unwrap();
        assert!(fit_li2020(&m).is_err());
    }

    fn random_matrix(rng: &mut Stream, n: usize, k: usize) -> RatingMatrix {
        let cells = (0..n * k).map(|_| 1 + rng.index(5) as u8).collect();
        RatingMatrix::from_full(n, k, cells).unwrap()
    }

    #[test]
    fn centred_and_monotone_on_random_matrices() {
        let mut rng = Stream::new(11);
        for _ in 0..100 {
            let (n, k) = (3 + rng.index(10), 3 + rng.index(10));
            let m = random_matrix(&mut rng, n, k);
            let fit = fit_li2020(&m).unwrap();
            assert!(fit.delta.iter().sum::<f64>().abs() < 1e-9);
            assert!(fit.ll_trace.windows(2).all(|w| w[1] >= w[0] - 1e-9 * w[0].abs()));
            assert!(fit.upsilon.iter().all(|&u| u >= EPSILON));
            assert_eq!(fit.ll_trace.len(), fit.iterations + 1);
        }
    }

    #[test]
    fn missing_cells() {
        let mut rng = Stream::new(3);
        let (n, k) = (8, 6);
        let mut cells: Vec<Option<u8>> = (0..n * k).map(|_| Some(1 + rng.index(5) as u8)).collect();
        cells[0] = None;
        cells[13] = None;
        let m = RatingMatrix::new(
            (0..n).map(|i| format!("s{i}")).collect(),
            (0..k).map(|j| format!("x{j}")).collect(),
            cells,
        )
        .unwrap();
        let fit = fit_li2020(&m).unwrap();
        assert!(fit.converged);
        assert!(fit.delta.iter().sum::<f64>().abs() < 1e-9);
    }

    #[test]
    fn recovers_bias_on_continuous_data() {
        let (n, k) = (30, 21);
        let mut rng = Stream::new(2020);
        let psi: Vec<f64> = (0..k).map(|_| 1.0 + 4.0 * rng.uniform()).collect();
        let delta: Vec<f64> = (0..n).map(|_| 2.0 * rng.uniform() - 1.0).collect();
        let ups: Vec<f64> = (0..n).map(|_| 0.3 + 0.9 * rng.uniform()).collect();
        let mut values = Vec::with_capacity(n * k);
        for i in 0..n {
            for p in &psi {
                values.push(Some(p + delta[i] + ups[i] * rng.standard_normal()));
            }
        }
        let fit = fit_li2020_values(n, k, &values).unwrap();
        assert!(fit.converged);
        let centre = delta.iter().sum::<f64>() / n as f64;
        let hits = (0..n)
            .filter(|&i| (fit.delta[i] - (delta[i] - centre)).abs() <= 3.0 * ups[i] / (k as f64).sqrt())
            .count();
        assert!(hits as f64 >= 0.95 * n as f64, "{hits}/{n}");
    }

    #[test]
    fn subject_shift_moves_only_bias() {
        let mut rng = Stream::new(9);
        let (n, k) = (10, 8);
        let mut cells: Vec<u8> = (0..n * k).map(|_| 1 + rng.index(5) as u8).collect();
        for c in cells.iter_mut().take(k) {
            *c = 1 + rng.index(4) as u8;
        }
        let base = fit_li2020(&RatingMatrix::from_full(n, k, cells.clone()).unwrap()).unwrap();
        for c in cells.iter_mut().take(k) {
            *c += 1;
        }
        let shifted = fit_li2020(&RatingMatrix::from_full(n, k, cells).unwrap()).unwrap();
        let nf = n as f64;
        assert_abs_diff_eq!(shifted.delta[0] - base.delta[0], 1.0 - 1.0 / nf, epsilon = 1e-6);
        for i in 1..n {
            assert_abs_diff_eq!(shifted.delta[i] - base.delta[i], -1.0 / nf, epsilon = 1e-6);
        }
        for i in 0..n {
            assert_abs_diff_eq!(shifted.upsilon[i], base.upsilon[i], epsilon = 1e-6);
        }
    }
}
