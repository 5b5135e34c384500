//! Simulated-experiment recipes and the default parameter grid.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Stream;

pub const DEFAULT_STIMULI: usize = 21;
pub const DEFAULT_SUBJECTS: usize = 30;
pub const DEFAULT_REPETITIONS: usize = 200;
pub const MIXED_MAGNITUDE: f64 = 0.5;
pub const EXTREME_MAGNITUDE: f64 = 1.0;

/// No-bias probabilities of the mixed symmetric scenario.
pub const P_GRID: [f64; 12] = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.98, 1.0];

/// 0.40, 0.45, ..., 1.25 (18 values).
pub fn sigma_grid() -> Vec<f64> {
    sigma_range(0.4, 1.25, 0.05)
}

/// Inclusive grid `start, start + step, ..., end`, rounded to 1e-9 so that
/// values print and compare cleanly.
pub fn sigma_range(start: f64, end: f64, step: f64) -> Vec<f64> {
    let n = ((end - start) / step + 1e-9).floor() as usize;
    (0..=n)
        .map(|i| ((start + step * i as f64) * 1e9).round() / 1e9)
        .collect()
}

/// `k` equidistant true mean ratings from 1 to 5.
pub fn default_mu_grid(k: usize) -> Vec<f64> {
    if k == 1 {
        return vec![3.0];
    }
    (0..k)
        .map(|x| 1.0 + x as f64 * 4.0 / (k - 1) as f64)
        .collect()
}

/// How user biases are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BiasScenario {
    NoBias,
    /// `0` with probability p, `±magnitude` with probability (1 - p) / 2 each.
    MixedSymmetric { magnitude: f64 },
    /// `±magnitude` with probability 1/2 each; p is ignored.
    ExtremeSymmetric { magnitude: f64 },
}

impl BiasScenario {
    pub fn mixed() -> Self {
        BiasScenario::MixedSymmetric {
            magnitude: MIXED_MAGNITUDE,
        }
    }

    pub fn extreme() -> Self {
        BiasScenario::ExtremeSymmetric {
            magnitude: EXTREME_MAGNITUDE,
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            BiasScenario::NoBias => "none",
            BiasScenario::MixedSymmetric { .. } => "mixed",
            BiasScenario::ExtremeSymmetric { .. } => "extreme",
        }
    }

    pub(crate) fn code(&self) -> u64 {
        match self {
            BiasScenario::NoBias => 0,
            BiasScenario::MixedSymmetric { .. } => 1,
            BiasScenario::ExtremeSymmetric { .. } => 2,
        }
    }

    /// The no-bias probabilities swept for this scenario.
    pub fn p_grid(&self) -> Vec<f64> {
        match self {
            BiasScenario::NoBias => vec![1.0],
            BiasScenario::MixedSymmetric { .. } => P_GRID.to_vec(),
            BiasScenario::ExtremeSymmetric { .. } => vec![0.0],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let m = match *self {
            BiasScenario::NoBias => return Ok(()),
            BiasScenario::MixedSymmetric { magnitude } => magnitude,
            BiasScenario::ExtremeSymmetric { magnitude } => magnitude,
        };
        if m > 0.0 && m.is_finite() {
            Ok(())
        } else {
            Err(Error::Domain(format!("bias magnitude must be positive, got {m}")))
        }
    }

    /// Support of β with probabilities.
    pub fn bias_distribution(&self, p: f64) -> Result<Vec<(f64, f64)>> {
        check_probability(p)?;
        self.validate()?;
        Ok(match *self {
            BiasScenario::NoBias => vec![(0.0, 1.0)],
            BiasScenario::MixedSymmetric { magnitude } => vec![
                (-magnitude, (1.0 - p) / 2.0),
                (0.0, p),
                (magnitude, (1.0 - p) / 2.0),
            ],
            BiasScenario::ExtremeSymmetric { magnitude } => {
                vec![(-magnitude, 0.5), (magnitude, 0.5)]
            }
        })
    }

    /// Draws one user bias. Always consumes exactly two uniforms, so streams
    /// stay aligned across scenarios and no-bias probabilities.
    pub fn draw(&self, p: f64, rng: &mut Stream) -> f64 {
        let keep = rng.uniform();
        let sign = if rng.uniform() < 0.5 { -1.0 } else { 1.0 };
        match *self {
            BiasScenario::NoBias => 0.0,
            BiasScenario::MixedSymmetric { magnitude } => {
                if keep < p {
                    0.0
                } else {
                    sign * magnitude
                }
            }
            BiasScenario::ExtremeSymmetric { magnitude } => sign * magnitude,
        }
    }
}

impl fmt::Display for BiasScenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for BiasScenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" | "no-bias" | "nobias" => Ok(BiasScenario::NoBias),
            "mixed" => Ok(BiasScenario::mixed()),
            "extreme" => Ok(BiasScenario::extreme()),
            other => Err(Error::Domain(format!(
                "unknown bias scenario '{other}' (expected none, mixed or extreme)"
            ))),
        }
    }
}

fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::Domain(format!("probability must be in [0, 1], got {p}")))
    }
}

/// One simulated-experiment recipe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub k: usize,
    pub n: usize,
    pub mu: Vec<f64>,
    pub sigma: f64,
    pub scenario: BiasScenario,
    pub p: f64,
    pub seed: u64,
}

impl ExperimentConfig {
    /// Default grid geometry (21 stimuli, 30 subjects, equidistant means).
    pub fn with_defaults(sigma: f64, scenario: BiasScenario, p: f64, seed: u64) -> Self {
        ExperimentConfig {
            k: DEFAULT_STIMULI,
            n: DEFAULT_SUBJECTS,
            mu: default_mu_grid(DEFAULT_STIMULI),
            sigma,
            scenario,
            p,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.k < 1 {
            return Err(Error::Domain(format!(
                "need n >= 2 subjects and k >= 1 stimuli, got n = {}, k = {}",
                self.n, self.k
            )));
        }
        if self.mu.len() != self.k {
            return Err(Error::Domain(format!(
                "mu has {} entries but k = {}",
                self.mu.len(),
                self.k
            )));
        }
        if let Some(m) = self.mu.iter().find(|m| !(1.0..=5.0).contains(*m)) {
            return Err(Error::Domain(format!("true mean {m} is outside [1, 5]")));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::Domain(format!(
                "sigma must be positive, got {}",
                self.sigma
            )));
        }
        check_probability(self.p)?;
        self.scenario.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grids() {
        let s = sigma_grid();
        assert_eq!(s.len(), 18);
        assert_eq!(s[0], 0.4);
        assert_eq!(s[1], 0.45);
        assert_eq!(s[17], 1.25);
        let mu = default_mu_grid(21);
        assert_eq!(mu.len(), 21);
        assert_eq!(mu[0], 1.0);
        assert!((mu[1] - 1.2).abs() < 1e-12);
        assert_eq!(mu[20], 5.0);
        assert_eq!(P_GRID.len(), 12);
        assert_eq!(sigma_range(0.4, 1.2, 0.1).len(), 9);
    }

    #[test]
    fn mixed_with_p_one_is_unbiased() {
        let mut rng = Stream::new(1);
        assert!((0..10_000).all(|_| BiasScenario::mixed().draw(1.0, &mut rng) == 0.0));
    }

    #[test]
    fn mixed_with_p_zero_is_balanced() {
        let mut rng = Stream::new(2);
        let n = 100_000;
        let draws: Vec<f64> = (0..n).map(|_| BiasScenario::mixed().draw(0.0, &mut rng)).collect();
        let pos = draws.iter().filter(|&&b| b == 0.5).count() as f64 / n as f64;
        let neg = draws.iter().filter(|&&b| b == -0.5).count() as f64 / n as f64;
        assert!((pos - 0.5).abs() < 0.01);
        assert!((neg - 0.5).abs() < 0.01);
    }

    #[test]
    fn extreme_ignores_p() {
        for &p in &[0.0, 0.5, 1.0] {
            let mut rng = Stream::new(3);
            let n = 100_000;
            let draws: Vec<f64> =
                (0..n).map(|_| BiasScenario::extreme().draw(p, &mut rng)).collect();
            assert!(draws.iter().all(|&b| b == 1.0 || b == -1.0));
            let pos = draws.iter().filter(|&&b| b == 1.0).count() as f64 / n as f64;
            assert!((pos - 0.5).abs() < 0.01);
        }
    }

    #[test]
    fn config_validation() {
        let mut c = ExperimentConfig::with_defaults(0.5, BiasScenario::NoBias, 1.0, 1);
        assert!(c.validate().is_ok());
        c.sigma = 0.0;
        assert!(c.validate().is_err());
        c.sigma = 0.5;
        c.p = 1.5;
        assert!(c.validate().is_err());
        c.p = 0.5;
        c.mu[3] = 5.5;
        assert!(c.validate().is_err());
    }

    #[test]
    fn scenario_parse() {
        assert_eq!("none".parse::<BiasScenario>().unwrap(), BiasScenario::NoBias);
        assert_eq!("mixed".parse::<BiasScenario>().unwrap(), BiasScenario::mixed());
        assert!("sideways".parse::<BiasScenario>().is_err());
    }
}
