//! SOS-hypothesis parameter `a`: rating variance modelled as a(5 - m)(m - 1).

use super::{MeasureEstimate, MeasureKind};
use crate::error::{Error, Result};
use crate::matrix::{RatingMatrix, StimulusMoments};

/// Least-squares `a` and its estimator variance ν from (MOS, variance) pairs.
///
/// Returns `None` when every MOS sits on a scale endpoint (all weights vanish).
pub fn sos_a_from_pairs(pairs: impl IntoIterator<Item = (f64, f64)>) -> Option<(f64, f64)> {
    let mut swv = 0.0;
    let mut sww = 0.0;
    for (m, v) in pairs {
        let w = (5.0 - m) * (m - 1.0);
        swv += w * v;
        sww += w * w;
    }
    if sww > 0.0 {
        Some((swv / sww, 1.0 / sww))
    } else {
        None
    }
}

/// `a` from per-stimulus moments; `se = sqrt(ν)` with ν carried unscaled.
pub fn sos_a_from_moments(moments: &[StimulusMoments]) -> Result<MeasureEstimate> {
    let (a, nu) = sos_a_from_pairs(moments.iter().map(|s| (s.mos, s.variance))).ok_or_else(
        || Error::UndefinedEstimator("every MOS lies on a scale endpoint (1 or 5)".into()),
    )?;
    Ok(MeasureEstimate {
        kind: MeasureKind::A,
        value: a,
        se: nu.sqrt(),
        basis_size: moments.len(),
        unit_vector: Vec::new(),
        estimator_variance: Some(nu),
    })
}

pub fn sos_a(m: &RatingMatrix) -> Result<MeasureEstimate> {
    sos_a_from_moments(&m.all_moments()?)
}
