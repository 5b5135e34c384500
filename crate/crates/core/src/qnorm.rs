//! The QNorm (ordered probit) rating distribution: a normal variate censored
//! to [1, 5] and rounded to the nearest category.

use serde::{Deserialize, Serialize};

use crate::config::{default_mu_grid, BiasScenario};
use crate::error::{Error, Result};
use crate::measures::sos_a_from_pairs;
use crate::rng::Stream;
use crate::stats::normal_cdf;

/// Category boundaries between consecutive ratings.
pub const CUT_POINTS: [f64; 4] = [1.5, 2.5, 3.5, 4.5];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QNormParams {
    mu: f64,
    sigma: f64,
}

impl QNormParams {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        if !mu.is_finite() {
            return Err(Error::Domain(format!("QNorm mean must be finite, got {mu}")));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::Domain(format!(
                "QNorm sigma must be positive, got {sigma}"
            )));
        }
        Ok(QNormParams { mu, sigma })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// P(Q = 1..5).
    pub fn pmf(&self) -> [f64; 5] {
        pmf_at(self.mu, self.sigma)
    }

    /// (E[Q], STD[Q]).
    pub fn moments(&self) -> (f64, f64) {
        let (e, v) = pmf_moments(&self.pmf());
        (e, v.sqrt())
    }

    /// One rating: normal draw, censored to [1, 5], rounded half up.
    pub fn sample(&self, rng: &mut Stream) -> u8 {
        let latent = self.mu + self.sigma * rng.standard_normal();
        (latent.clamp(1.0, 5.0) + 0.5).floor() as u8
    }
}

// sigma == 0 is the point-mass limit on the rounded, censored mean
fn pmf_at(mu: f64, sigma: f64) -> [f64; 5] {
    let mut p = [0.0; 5];
    if sigma == 0.0 {
        let cat = (mu.clamp(1.0, 5.0) + 0.5).floor() as usize;
        p[cat - 1] = 1.0;
        return p;
    }
    let z: Vec<f64> = CUT_POINTS.iter().map(|c| (c - mu) / sigma).collect();
    // probabilities of intervals above the mean come from upper tails, which
    // is more accurate there and makes the pmf exactly mirror-symmetric
    let mass = |lo: f64, hi: f64| {
        if lo >= 0.0 {
            normal_cdf(-lo) - normal_cdf(-hi)
        } else {
            normal_cdf(hi) - normal_cdf(lo)
        }
        .max(0.0)
    };
    p[0] = normal_cdf(z[0]);
    for i in 1..4 {
        p[i] = mass(z[i - 1], z[i]);
    }
    p[4] = normal_cdf(-z[3]);
    p
}

/// Mean and (population) variance of a distribution over the 1..5 scale.
pub fn pmf_moments(p: &[f64; 5]) -> (f64, f64) {
    // centred on the scale midpoint so that a symmetric pmf gives exactly 3
    let e = 3.0 + p.iter().enumerate().map(|(i, q)| (i as f64 - 2.0) * q).sum::<f64>();
    let v = p
        .iter()
        .enumerate()
        .map(|(i, q)| ((i + 1) as f64 - e).powi(2) * q)
        .sum::<f64>();
    (e, v.max(0.0))
}

fn check_sigma_limit(sigma: f64) -> Result<()> {
    if sigma >= 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("sigma must be >= 0, got {sigma}")))
    }
}

/// Mean over the stimuli of the exact rating standard deviation STD[Q_x]
/// for an unbiased user with uncertainty `sigma`.
pub fn mean_generated_std(sigma: f64, mu_grid: &[f64]) -> Result<f64> {
    mean_generated_std_with_bias(sigma, mu_grid, BiasScenario::NoBias, 1.0)
}

/// As [`mean_generated_std`], for a user drawn from a bias scenario: the
/// rating distribution per stimulus is the bias mixture of QNorm pmfs.
pub fn mean_generated_std_with_bias(
    sigma: f64,
    mu_grid: &[f64],
    scenario: BiasScenario,
    p: f64,
) -> Result<f64> {
    check_sigma_limit(sigma)?;
    if mu_grid.is_empty() {
        return Err(Error::Domain("mu grid is empty".into()));
    }
    let mixture = scenario.bias_distribution(p)?;
    let total: f64 = mu_grid
        .iter()
        .map(|&mu| {
            let mut pmf = [0.0; 5];
            for &(beta, weight) in &mixture {
                let q = pmf_at(mu + beta, sigma);
                for i in 0..5 {
                    pmf[i] += weight * q[i];
                }
            }
            pmf_moments(&pmf).1.sqrt()
        })
        .sum();
    Ok(total / mu_grid.len() as f64)
}

/// SOS parameter `a` implied by uncertainty `sigma` on the default 21-point
/// equidistant grid without bias, from exact moments (no sampling).
pub fn sigma_to_sos_a(sigma: f64) -> Result<f64> {
    sigma_to_sos_a_on(sigma, &default_mu_grid(21))
}

pub fn sigma_to_sos_a_on(sigma: f64, mu_grid: &[f64]) -> Result<f64> {
    check_sigma_limit(sigma)?;
    let pairs: Vec<(f64, f64)> = mu_grid
        .iter()
        .map(|&mu| pmf_moments(&pmf_at(mu, sigma)))
        .collect();
    match sos_a_from_pairs(pairs.iter().copied()) {
        Some((a, _)) => Ok(a),
        None if sigma == 0.0 => Ok(0.0),
        None => Err(Error::UndefinedEstimator(
            "every expected rating sits on a scale endpoint".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn pmf_centre_unit_sigma() {
        let p = QNormParams::new(3.0, 1.0).unwrap().pmf();
        let want = [0.0668, 0.2417, 0.3829, 0.2417, 0.0668];
        for i in 0..5 {
            assert_abs_diff_eq!(p[i], want[i], epsilon = 1e-4);
        }
    }

    #[test]
    fn pmf_centre_half_sigma() {
        let p = QNormParams::new(3.0, 0.5).unwrap().pmf();
        let want = [0.00135, 0.15731, 0.68269, 0.15731, 0.00135];
        for i in 0..5 {
            assert_abs_diff_eq!(p[i], want[i], epsilon = 1e-4);
        }
    }

    #[test]
    fn pmf_point_mass() {
        let p = QNormParams::new(1.0, 1e-6).unwrap().pmf();
        assert_abs_diff_eq!(p[0], 1.0, epsilon = 1e-12);
        assert!(p[1..].iter().all(|&q| q < 1e-12));
    }

    #[test]
    fn invalid_sigma() {
        assert!(QNormParams::new(3.0, 0.0).is_err());
        assert!(QNormParams::new(3.0, -1.0).is_err());
        assert!(QNormParams::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn moments_examples() {
        for &s in &[0.1, 0.4, 1.0, 2.5] {
            let (e, _) = QNormParams::new(3.0, s).unwrap().moments();
            assert_eq!(e, 3.0);
        }
        let (_, sd) = QNormParams::new(3.0, 1.0).unwrap().moments();
        assert_abs_diff_eq!(sd, 1.0084, epsilon = 1e-3);
        let (e, sd) = QNormParams::new(5.0, 1.0).unwrap().moments();
        assert!(e < 5.0 && sd < 1.0);
    }

    #[test]
    fn sample_deterministic_limit() {
        let q = QNormParams::new(2.0, 1e-9).unwrap();
        let mut rng = Stream::new(5);
        assert!((0..1000).all(|_| q.sample(&mut rng) == 2));
    }

    #[test]
    fn sample_reproducible() {
        let q = QNormParams::new(3.3, 0.9).unwrap();
        let draw = |seed| {
            let mut rng = Stream::new(seed);
            (0..500).map(|_| q.sample(&mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(17), draw(17));
    }

    #[test]
    fn sample_frequencies_match_pmf() {
        let q = QNormParams::new(3.0, 1.0).unwrap();
        let pmf = q.pmf();
        let mut rng = Stream::new(2024);
        let n = 1_000_000;
        let mut counts = [0usize; 5];
        for _ in 0..n {
            counts[(q.sample(&mut rng) - 1) as usize] += 1;
        }
        for i in 0..5 {
            assert_abs_diff_eq!(counts[i] as f64 / n as f64, pmf[i], epsilon = 0.002);
        }
    }

    #[test]
    fn sigma_bar_limits() {
        let grid = default_mu_grid(21);
        assert_eq!(mean_generated_std(0.0, &grid).unwrap(), 0.0);
        let mixed0 = mean_generated_std_with_bias(
            0.7,
            &grid,
            BiasScenario::mixed(),
            0.0,
        )
        .unwrap();
        let mixed1 = mean_generated_std_with_bias(0.7, &grid, BiasScenario::mixed(), 1.0).unwrap();
        assert!(mixed0 > mixed1);
        assert_abs_diff_eq!(mixed1, mean_generated_std(0.7, &grid).unwrap(), epsilon = 1e-15);
    }

    #[test]
    fn sigma_bar_nearly_linear() {
        let grid = default_mu_grid(21);
        let xs: Vec<f64> = (0..16).map(|i| 0.5 + 0.05 * i as f64).collect();
        let ys: Vec<f64> = xs
            .iter()
            .map(|&s| mean_generated_std(s, &grid).unwrap())
            .collect();
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
        let r2 = sxy * sxy / (sxx * syy);
        assert!(r2 > 0.99, "R^2 = {r2}");
    }

    #[test]
    fn sos_mapping_shape() {
        assert_eq!(sigma_to_sos_a(0.0).unwrap(), 0.0);
        assert!(sigma_to_sos_a(1e-3).unwrap() < 1e-6);
        let mut prev = 0.0;
        for i in 0..=17 {
            let a = sigma_to_sos_a(0.4 + 0.05 * i as f64).unwrap();
            assert!(a > prev && a < 1.0);
            prev = a;
        }
    }

    proptest! {
        #[test]
        fn pmf_is_distribution(mu in -2.0f64..8.0, sigma in 0.01f64..4.0) {
            let p = QNormParams::new(mu, sigma).unwrap().pmf();
            prop_assert!(p.iter().all(|&q| q >= 0.0));
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let (e, sd) = QNormParams::new(mu, sigma).unwrap().moments();
            prop_assert!((1.0..=5.0).contains(&e));
            prop_assert!((0.0..=2.0).contains(&sd));
        }

        #[test]
        fn expectation_monotone_in_mu(a in 0.0f64..6.0, b in 0.0f64..6.0, sigma in 0.05f64..3.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let el = QNormParams::new(lo, sigma).unwrap().moments().0;
            let eh = QNormParams::new(hi, sigma).unwrap().moments().0;
            prop_assert!(el <= eh + 1e-12);
        }

        #[test]
        fn centre_has_largest_spread(sigma in 0.05f64..3.0) {
            let s3 = QNormParams::new(3.0, sigma).unwrap().moments().1;
            let s1 = QNormParams::new(1.0, sigma).unwrap().moments().1;
            let s5 = QNormParams::new(5.0, sigma).unwrap().moments().1;
            prop_assert!(s3 >= s1 && s3 >= s5);
        }
    }
}
