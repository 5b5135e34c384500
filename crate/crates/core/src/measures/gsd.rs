//! Moment-based GSD confidence parameter ρ̂ and the `g` measure.

use super::{averaged_estimate, MeasureEstimate, MeasureKind};
use crate::error::Result;
use crate::matrix::{RatingMatrix, StimulusMoments};

const ENDPOINT_TOLERANCE: f64 = 1e-12;

/// ρ̂ from a stimulus' MOS and population variance.
///
/// The GSD variance interpolates between the largest variance reachable on
/// the 1..5 scale at this mean, (5 - m)(m - 1), at ρ = 0 and the smallest,
/// (⌈m⌉ - m)(m - ⌊m⌋), at ρ = 1; ρ̂ inverts that interpolation.
pub fn gsd_rho_hat(mos: f64, variance: f64) -> f64 {
    let v_max = (5.0 - mos) * (mos - 1.0);
    let v_min = (mos.ceil() - mos) * (mos - mos.floor());
    if v_max - v_min <= ENDPOINT_TOLERANCE {
        return if variance <= ENDPOINT_TOLERANCE { 1.0 } else { 0.0 };
    }
    ((v_max - variance) / (v_max - v_min)).clamp(0.0, 1.0)
}

pub fn g_measure_from_moments(moments: &[StimulusMoments]) -> Result<MeasureEstimate> {
    let rho = moments
        .iter()
        .map(|s| gsd_rho_hat(s.mos, s.population_variance()))
        .collect();
    averaged_estimate(MeasureKind::G, rho)
}

/// Mean ρ̂ over stimuli; `se = std(ρ̂) / sqrt(K - 1)`.
pub fn g_measure(m: &RatingMatrix) -> Result<MeasureEstimate> {
    g_measure_from_moments(&m.all_moments()?)
}
