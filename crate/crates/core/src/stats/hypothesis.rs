use serde::{Deserialize, Serialize};

use super::dist::student_t_two_sided_p;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub df: f64,
    pub p_value: f64,
}

/// Two-sided Welch t-test from summary statistics (unbiased variances).
///
/// When both variances are zero the test degenerates: equal means give
/// t = 0, p = 1 and different means give p = 0 with an infinite t.
pub fn welch_t_test(
    mean1: f64,
    var1: f64,
    n1: usize,
    mean2: f64,
    var2: f64,
    n2: usize,
) -> Result<TestResult> {
    if n1 < 2 || n2 < 2 {
        return Err(Error::Domain(format!(
            "Welch test needs at least 2 observations per sample, got {n1} and {n2}"
        )));
    }
    if !(var1 >= 0.0 && var2 >= 0.0) {
        return Err(Error::Domain(format!(
            "variances must be non-negative, got {var1} and {var2}"
        )));
    }
    let s1 = var1 / n1 as f64;
    let s2 = var2 / n2 as f64;
    let se2 = s1 + s2;
    let diff = mean1 - mean2;
    if se2 == 0.0 {
        let df = (n1 + n2 - 2) as f64;
        return Ok(if diff == 0.0 {
            TestResult {
                statistic: 0.0,
                df,
                p_value: 1.0,
            }
        } else {
            TestResult {
                statistic: diff.signum() * f64::INFINITY,
                df,
                p_value: 0.0,
            }
        });
    }
    let t = diff / se2.sqrt();
    let df = se2 * se2 / (s1 * s1 / (n1 - 1) as f64 + s2 * s2 / (n2 - 1) as f64);
    let p_value = student_t_two_sided_p(t, df)?;
    Ok(TestResult {
        statistic: t,
        df,
        p_value,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Correction {
    #[default]
    Holm,
    Bonferroni,
}

fn check_probabilities(p: &[f64]) -> Result<()> {
    match p.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        Some(bad) => Err(Error::Domain(format!(
            "p-value {bad} is outside [0, 1]"
        ))),
        None => Ok(()),
    }
}

/// Holm step-down adjustment. Output is in input order.
pub fn holm_adjust(p: &[f64]) -> Result<Vec<f64>> {
    check_probabilities(p)?;
    let m = p.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p[a].total_cmp(&p[b]).then(a.cmp(&b)));
    let mut out = vec![0.0; m];
    let mut running = 0.0f64;
    for (rank, &idx) in order.iter().enumerate() {
        let adj = ((m - rank) as f64 * p[idx]).min(1.0);
        running = running.max(adj);
        out[idx] = running;
    }
    Ok(out)
}

pub fn bonferroni_adjust(p: &[f64]) -> Result<Vec<f64>> {
    check_probabilities(p)?;
    let m = p.len() as f64;
    Ok(p.iter().map(|v| (v * m).min(1.0)).collect())
}

pub fn adjust(p: &[f64], correction: Correction) -> Result<Vec<f64>> {
    match correction {
        Correction::Holm => holm_adjust(p),
        Correction::Bonferroni => bonferroni_adjust(p),
    }
}
