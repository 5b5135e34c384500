//! Confidence intervals for a measure repeated over simulation runs.

use serde::{Deserialize, Serialize};

use super::MeasureEstimate;
use crate::error::{Error, Result};
use crate::stats::student_t_quantile;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub center: f64,
    pub half_width: f64,
    pub alpha: f64,
}

impl ConfidenceInterval {
    pub fn lower(&self) -> f64 {
        self.center - self.half_width
    }

    pub fn upper(&self) -> f64 {
        self.center + self.half_width
    }
}

/// Interval centred on the mean value over runs, with half-width
/// `t(1 - alpha/2, K - 1)` times the run-averaged standard error.
///
/// Because the dispersion is averaged rather than pooled, the width reflects
/// a single experiment of K units and does not shrink with more runs.
pub fn measure_ci(runs: &[MeasureEstimate], alpha: f64) -> Result<ConfidenceInterval> {
    let first = runs
        .first()
        .ok_or_else(|| Error::Contract("no estimates to build an interval from".into()))?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha must be in (0, 1), got {alpha}")));
    }
    if let Some(e) = runs
        .iter()
        .find(|e| e.kind != first.kind || e.basis_size != first.basis_size)
    {
        return Err(Error::Contract(format!(
            "estimates mix {} (K = {}) with {} (K = {})",
            first.kind, first.basis_size, e.kind, e.basis_size
        )));
    }
    if first.basis_size < 2 {
        return Err(Error::Domain("an interval needs K >= 2".into()));
    }
    let r = runs.len() as f64;
    let center = runs.iter().map(|e| e.value).sum::<f64>() / r;
    let mean_se = runs.iter().map(|e| e.se).sum::<f64>() / r;
    let t = student_t_quantile(1.0 - alpha / 2.0, (first.basis_size - 1) as f64)?;
    Ok(ConfidenceInterval {
        center,
        half_width: t * mean_se,
        alpha,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::MeasureKind;
    use approx::assert_abs_diff_eq;

    fn g(value: f64, std: f64) -> MeasureEstimate {
        MeasureEstimate {
            kind: MeasureKind::G,
            value,
            se: std / 20f64.sqrt(),
            basis_size: 21,
            unit_vector: Vec::new(),
            estimator_variance: None,
        }
    }

    #[test]
    fn t_table_example() {
        let ci = measure_ci(&[g(0.8, 0.08), g(0.9, 0.12)], 0.05).unwrap();
        assert_abs_diff_eq!(ci.center, 0.85, epsilon = 1e-12);
        assert_abs_diff_eq!(ci.half_width, 2.086 * 0.10 / 20f64.sqrt(), epsilon = 1e-4);
        assert_abs_diff_eq!(ci.half_width, 0.04665, epsilon = 1e-4);
    }

    #[test]
    fn independent_of_repetitions() {
        let runs = vec![g(0.8, 0.08), g(0.7, 0.11), g(0.75, 0.09)];
        let doubled: Vec<_> = runs.iter().chain(&runs).cloned().collect();
        let a = measure_ci(&runs, 0.05).unwrap();
        let b = measure_ci(&doubled, 0.05).unwrap();
        assert_abs_diff_eq!(a.half_width, b.half_width, epsilon = 1e-15);
    }

    #[test]
    fn single_run() {
        let ci = measure_ci(&[g(0.8, 0.1)], 0.05).unwrap();
        let t = student_t_quantile(0.975, 20.0).unwrap();
        assert_abs_diff_eq!(ci.half_width, t * 0.1 / 20f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn mixed_kinds_rejected() {
        let mut other = g(0.1, 0.1);
        other.kind = MeasureKind::L;
        assert!(matches!(
            measure_ci(&[g(0.8, 0.1), other], 0.05),
            Err(Error::Contract(_))
        ));
        assert!(measure_ci(&[], 0.05).is_err());
    }
}
