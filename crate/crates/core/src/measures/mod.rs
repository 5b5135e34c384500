//! The experiment-precision measures `g`, `a` and `l`, their standard errors
//! and confidence intervals.

mod ci;
mod gsd;
mod li2020;
mod sos;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use ci::{measure_ci, ConfidenceInterval};
pub use gsd::{g_measure, g_measure_from_moments, gsd_rho_hat};
pub use li2020::{fit_li2020, fit_li2020_values, l_measure, l_measure_from_fit, Li2020Fit, EPSILON};
pub use sos::{sos_a, sos_a_from_moments, sos_a_from_pairs};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MeasureKind {
    #[serde(rename = "g")]
    G,
    #[serde(rename = "a")]
    A,
    #[serde(rename = "l")]
    L,
}

impl MeasureKind {
    pub const ALL: [MeasureKind; 3] = [MeasureKind::G, MeasureKind::A, MeasureKind::L];

    pub fn tag(&self) -> &'static str {
        match self {
            MeasureKind::G => "g",
            MeasureKind::A => "a",
            MeasureKind::L => "l",
        }
    }
}

impl fmt::Display for MeasureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for MeasureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "g" => Ok(MeasureKind::G),
            "a" => Ok(MeasureKind::A),
            "l" | "ℓ" => Ok(MeasureKind::L),
            other => Err(Error::Domain(format!("unknown measure '{other}'"))),
        }
    }
}

/// A precision measure with its standard error.
///
/// `unit_vector` holds the per-stimulus ρ̂ (g) or per-subject υ̂ (l) that
/// `value` averages; it is empty for `a`, which instead carries the
/// estimator variance ν.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureEstimate {
    pub kind: MeasureKind,
    pub value: f64,
    pub se: f64,
    pub basis_size: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub unit_vector: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimator_variance: Option<f64>,
}

// mean and standard error of a unit vector, population std over sqrt(len - 1)
pub(crate) fn mean_and_se(units: &[f64]) -> (f64, f64) {
    let n = units.len() as f64;
    let mean = units.iter().sum::<f64>() / n;
    let pop_var = units.iter().map(|u| (u - mean) * (u - mean)).sum::<f64>() / n;
    (mean, (pop_var / (n - 1.0)).sqrt())
}

pub(crate) fn averaged_estimate(kind: MeasureKind, units: Vec<f64>) -> Result<MeasureEstimate> {
    if units.len() < 2 {
        return Err(Error::Domain(format!(
            "measure {kind} needs at least 2 units, got {}",
            units.len()
        )));
    }
    let (value, se) = mean_and_se(&units);
    Ok(MeasureEstimate {
        kind,
        value,
        se,
        basis_size: units.len(),
        unit_vector: units,
        estimator_variance: None,
    })
}
