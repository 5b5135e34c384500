//! Pairwise comparison of two experiments' precision.
//!
//! * `a`: Welch-type t-test on the SOS parameters and their estimator variances,
//! * `g`, `l`: Welch t-tests on the per-stimulus ρ̂ and per-subject υ̂ vectors,
//! * paired variance: F-tests between the response variances of matching MOS
//!   regions, Holm- or Bonferroni-adjusted.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{RatingMatrix, StimulusMoments};
use crate::measures::{
    g_measure, l_measure, sos_a, sos_a_from_pairs, MeasureEstimate, MeasureKind,
};
use crate::stats::{adjust, f_sf, student_t_two_sided_p, welch_t_test, Correction};

pub const DEFAULT_ALPHA: f64 = 0.05;
/// Largest MOS difference pooled into, or matched across, a region.
pub const REGION_THRESHOLD: f64 = 0.2;
/// Regions whose other side has zero variance are rejected only above this.
pub const ZERO_VARIANCE_LIMIT: f64 = 0.1;
// absorbs representation error in MOS differences such as 3.15 - 3.0
const THRESHOLD_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "a")]
    A,
    #[serde(rename = "g")]
    G,
    #[serde(rename = "l")]
    L,
    #[serde(rename = "pv")]
    PairedVariance,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::L, Method::G, Method::A, Method::PairedVariance];

    pub fn tag(&self) -> &'static str {
        match self {
            Method::A => "a",
            Method::G => "g",
            Method::L => "l",
            Method::PairedVariance => "pv",
        }
    }

    /// The measure a method tests, if it is measure-based.
    pub fn measure(&self) -> Option<MeasureKind> {
        match self {
            Method::A => Some(MeasureKind::A),
            Method::G => Some(MeasureKind::G),
            Method::L => Some(MeasureKind::L),
            Method::PairedVariance => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "a" => Ok(Method::A),
            "g" => Ok(Method::G),
            "l" | "ℓ" => Ok(Method::L),
            "pv" | "paired-variance" => Ok(Method::PairedVariance),
            other => Err(Error::Domain(format!(
                "unknown method '{other}' (expected l, g, a or pv)"
            ))),
        }
    }
}

/// A MOS region shared by two experiments. A side that has no stimuli in the
/// region carries a variance synthesized from its fitted SOS curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MosRegion {
    pub center: f64,
    pub variance_1: f64,
    pub variance_2: f64,
    pub count_1: usize,
    pub count_2: usize,
    pub synthesized_1: bool,
    pub synthesized_2: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionTest {
    pub region: MosRegion,
    /// Larger over smaller variance; absent under the zero-variance rule.
    pub f_statistic: Option<f64>,
    pub df: Option<(f64, f64)>,
    pub p_raw: f64,
    pub p_adjusted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonOutcome {
    pub method: Method,
    /// The t statistic, or the smallest adjusted p-value for paired variance.
    pub statistic: f64,
    /// Welch degrees of freedom, or the number of regions for paired variance.
    pub df: f64,
    pub p_value: f64,
    pub significant: bool,
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_region_detail: Option<Vec<RegionTest>>,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("alpha must be in (0, 1), got {alpha}")))
    }
}

fn outcome(method: Method, statistic: f64, df: f64, p: f64, alpha: f64) -> ComparisonOutcome {
    let p_value = p.clamp(0.0, 1.0);
    ComparisonOutcome {
        method,
        statistic,
        df,
        p_value,
        significant: p_value <= alpha,
        alpha,
        per_region_detail: None,
    }
}

fn expect_kind(e: &MeasureEstimate, kind: MeasureKind) -> Result<()> {
    if e.kind == kind {
        Ok(())
    } else {
        Err(Error::Contract(format!(
            "expected a {kind} estimate, got {}",
            e.kind
        )))
    }
}

/// t-test on two SOS parameters: t = (a1 - a2) / sqrt(ν1/K1 + ν2/K2) with
/// Welch-Satterthwaite degrees of freedom.
pub fn compare_a_estimates(
    e1: &MeasureEstimate,
    e2: &MeasureEstimate,
    alpha: f64,
) -> Result<ComparisonOutcome> {
    check_alpha(alpha)?;
    expect_kind(e1, MeasureKind::A)?;
    expect_kind(e2, MeasureKind::A)?;
    let nu = |e: &MeasureEstimate| {
        e.estimator_variance
            .ok_or_else(|| Error::Contract("a estimate lacks its estimator variance".into()))
    };
    let (k1, k2) = (e1.basis_size, e2.basis_size);
    if k1 < 2 || k2 < 2 {
        return Err(Error::Domain(format!(
            "the a-test needs at least 2 stimuli per experiment, got {k1} and {k2}"
        )));
    }
    let s1 = nu(e1)? / k1 as f64;
    let s2 = nu(e2)? / k2 as f64;
    let diff = e1.value - e2.value;
    let se2 = s1 + s2;
    let df = se2 * se2 / (s1 * s1 / (k1 - 1) as f64 + s2 * s2 / (k2 - 1) as f64);
    if diff == 0.0 {
        return Ok(outcome(Method::A, 0.0, df, 1.0, alpha));
    }
    let t = diff / se2.sqrt();
    Ok(outcome(Method::A, t, df, student_t_two_sided_p(t, df)?, alpha))
}

fn welch_on_units(
    method: Method,
    e1: &MeasureEstimate,
    e2: &MeasureEstimate,
    alpha: f64,
) -> Result<ComparisonOutcome> {
    check_alpha(alpha)?;
    let kind = method.measure().expect("measure-based method");
    expect_kind(e1, kind)?;
    expect_kind(e2, kind)?;
    let summary = |u: &[f64]| {
        let n = u.len();
        let mean = u.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            u.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        (mean, var, n)
    };
    let (m1, v1, n1) = summary(&e1.unit_vector);
    let (m2, v2, n2) = summary(&e2.unit_vector);
    let r = welch_t_test(m1, v1, n1, m2, v2, n2)?;
    Ok(outcome(method, r.statistic, r.df, r.p_value, alpha))
}

/// Welch test on the two ρ̂ vectors.
pub fn compare_g_estimates(
    e1: &MeasureEstimate,
    e2: &MeasureEstimate,
    alpha: f64,
) -> Result<ComparisonOutcome> {
    welch_on_units(Method::G, e1, e2, alpha)
}

/// Welch test on the two υ̂ vectors.
pub fn compare_l_estimates(
    e1: &MeasureEstimate,
    e2: &MeasureEstimate,
    alpha: f64,
) -> Result<ComparisonOutcome> {
    welch_on_units(Method::L, e1, e2, alpha)
}

/// Dispatches on the estimates' kind.
pub fn compare_estimates(
    e1: &MeasureEstimate,
    e2: &MeasureEstimate,
    alpha: f64,
) -> Result<ComparisonOutcome> {
    match e1.kind {
        MeasureKind::A => compare_a_estimates(e1, e2, alpha),
        MeasureKind::G => compare_g_estimates(e1, e2, alpha),
        MeasureKind::L => compare_l_estimates(e1, e2, alpha),
    }
}

pub fn compare_a(m1: &RatingMatrix, m2: &RatingMatrix, alpha: f64) -> Result<ComparisonOutcome> {
    compare_a_estimates(&sos_a(m1)?, &sos_a(m2)?, alpha)
}

pub fn compare_g(m1: &RatingMatrix, m2: &RatingMatrix, alpha: f64) -> Result<ComparisonOutcome> {
    compare_g_estimates(&g_measure(m1)?, &g_measure(m2)?, alpha)
}

pub fn compare_l(m1: &RatingMatrix, m2: &RatingMatrix, alpha: f64) -> Result<ComparisonOutcome> {
    compare_l_estimates(&l_measure(m1)?, &l_measure(m2)?, alpha)
}

/// Runs one method on two matrices.
pub fn compare(
    m1: &RatingMatrix,
    m2: &RatingMatrix,
    method: Method,
    alpha: f64,
    correction: Correction,
) -> Result<ComparisonOutcome> {
    match method {
        Method::A => compare_a(m1, m2, alpha),
        Method::G => compare_g(m1, m2, alpha),
        Method::L => compare_l(m1, m2, alpha),
        Method::PairedVariance => paired_variance_compare(m1, m2, alpha, correction),
    }
}

#[derive(Debug, Clone, Copy)]
struct Cluster {
    center: f64,
    variance: f64,
    count: usize,
}

// single-linkage over MOS-sorted stimuli; responses of a cluster are pooled
fn cluster(moments: &[StimulusMoments]) -> Vec<Cluster> {
    let mut sorted: Vec<&StimulusMoments> = moments.iter().collect();
    sorted.sort_by(|a, b| a.mos.total_cmp(&b.mos));
    let mut groups: Vec<Vec<&StimulusMoments>> = Vec::new();
    for s in sorted {
        match groups.last_mut() {
            Some(g) if s.mos - g.last().unwrap().mos <= REGION_THRESHOLD + THRESHOLD_SLACK => {
                g.push(s)
            }
            _ => groups.push(vec![s]),
        }
    }
    groups
        .into_iter()
        .map(|g| {
            let count: usize = g.iter().map(|s| s.count).sum();
            let n = count as f64;
            let center = g.iter().map(|s| s.count as f64 * s.mos).sum::<f64>() / n;
            let ss: f64 = g
                .iter()
                .map(|s| {
                    (s.count as f64 - 1.0) * s.variance
                        + s.count as f64 * (s.mos - center).powi(2)
                })
                .sum();
            Cluster {
                center,
                variance: if count > 1 { ss / (n - 1.0) } else { 0.0 },
                count,
            }
        })
        .collect()
}

struct SosCurve {
    a: Option<f64>,
    count: usize,
}

impl SosCurve {
    fn new(moments: &[StimulusMoments]) -> Self {
        let total: usize = moments.iter().map(|s| s.count).sum();
        SosCurve {
            a: sos_a_from_pairs(moments.iter().map(|s| (s.mos, s.variance))).map(|(a, _)| a),
            count: total / moments.len().max(1),
        }
    }

    fn synthesize(&self, center: f64, which: usize) -> Result<(f64, usize)> {
        let a = self.a.ok_or_else(|| {
            Error::MethodUnavailable(format!(
                "experiment {which} has no MOS strictly inside (1, 5); its SOS curve cannot be fitted"
            ))
        })?;
        Ok((a * (5.0 - center) * (center - 1.0), self.count))
    }
}

/// Pools each experiment's stimuli into MOS regions and matches the regions
/// across experiments; unmatched regions get the other side synthesized.
pub fn build_mos_regions_from_moments(
    m1: &[StimulusMoments],
    m2: &[StimulusMoments],
) -> Result<Vec<MosRegion>> {
    if m1.is_empty() || m2.is_empty() {
        return Err(Error::Domain("both experiments need at least one stimulus".into()));
    }
    let c1 = cluster(m1);
    let c2 = cluster(m2);

    // greedy matching by distance; the midpoint breaks ties symmetrically
    let mut candidates: Vec<(f64, f64, usize, usize)> = Vec::new();
    for (i, a) in c1.iter().enumerate() {
        for (j, b) in c2.iter().enumerate() {
            let d = (a.center - b.center).abs();
            if d <= REGION_THRESHOLD + THRESHOLD_SLACK {
                candidates.push((d, (a.center + b.center) / 2.0, i, j));
            }
        }
    }
    candidates.sort_by(|x, y| {
        x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1))
    });
    let mut used1 = vec![false; c1.len()];
    let mut used2 = vec![false; c2.len()];
    let mut regions = Vec::new();
    for (_, mid, i, j) in candidates {
        if used1[i] || used2[j] {
            continue;
        }
        used1[i] = true;
        used2[j] = true;
        regions.push(MosRegion {
            center: mid,
            variance_1: c1[i].variance,
            variance_2: c2[j].variance,
            count_1: c1[i].count,
            count_2: c2[j].count,
            synthesized_1: false,
            synthesized_2: false,
        });
    }

    let curve1 = SosCurve::new(m1);
    let curve2 = SosCurve::new(m2);
    for c in c1.iter().zip(&used1).filter(|(_, u)| !**u).map(|(c, _)| c) {
        let (v, n) = curve2.synthesize(c.center, 2)?;
        regions.push(MosRegion {
            center: c.center,
            variance_1: c.variance,
            variance_2: v,
            count_1: c.count,
            count_2: n,
            synthesized_1: false,
            synthesized_2: true,
        });
    }
    for c in c2.iter().zip(&used2).filter(|(_, u)| !**u).map(|(c, _)| c) {
        let (v, n) = curve1.synthesize(c.center, 1)?;
        regions.push(MosRegion {
            center: c.center,
            variance_1: v,
            variance_2: c.variance,
            count_1: n,
            count_2: c.count,
            synthesized_1: true,
            synthesized_2: false,
        });
    }
    regions.sort_by(|a, b| a.center.total_cmp(&b.center));
    Ok(regions)
}

pub fn build_mos_regions(m1: &RatingMatrix, m2: &RatingMatrix) -> Result<Vec<MosRegion>> {
    build_mos_regions_from_moments(&m1.all_moments()?, &m2.all_moments()?)
}

// F statistic, its degrees of freedom and the raw p-value of one region
type RegionF = (Option<f64>, Option<(f64, f64)>, f64);

// two-sided F-test on one region, larger variance in the numerator
fn region_p(r: &MosRegion) -> Result<RegionF> {
    let (v1, v2) = (r.variance_1, r.variance_2);
    let (lo, hi) = (v1.min(v2), v1.max(v2));
    if lo <= 0.0 {
        let p = if hi > ZERO_VARIANCE_LIMIT { 0.0 } else { 1.0 };
        return Ok((None, None, p));
    }
    if r.count_1 < 2 || r.count_2 < 2 {
        return Err(Error::Domain(format!(
            "region at MOS {:.3} has fewer than 2 responses on one side",
            r.center
        )));
    }
    let d1 = (r.count_1 - 1) as f64;
    let d2 = (r.count_2 - 1) as f64;
    let f = hi / lo;
    let (df, tail) = match v1.partial_cmp(&v2) {
        Some(Ordering::Greater) => ((d1, d2), f_sf(f, d1, d2)?),
        Some(Ordering::Less) => ((d2, d1), f_sf(f, d2, d1)?),
        // equal variances: the two orientations' tails sum to one, so the
        // larger is at least 1/2 and the doubled p-value is exactly 1
        _ => ((d1, d2), 0.5),
    };
    Ok((Some(f), Some(df), (2.0 * tail).min(1.0)))
}

pub fn paired_variance_from_moments(
    m1: &[StimulusMoments],
    m2: &[StimulusMoments],
    alpha: f64,
    correction: Correction,
) -> Result<ComparisonOutcome> {
    check_alpha(alpha)?;
    let regions = build_mos_regions_from_moments(m1, m2)?;
    let mut raw = Vec::with_capacity(regions.len());
    let mut parts = Vec::with_capacity(regions.len());
    for r in &regions {
        let (f, df, p) = region_p(r)?;
        raw.push(p);
        parts.push((f, df));
    }
    let adjusted = adjust(&raw, correction)?;
    let global = adjusted.iter().copied().fold(1.0, f64::min);
    let detail = regions
        .into_iter()
        .zip(parts)
        .zip(raw.iter().zip(&adjusted))
        .map(|((region, (f_statistic, df)), (&p_raw, &p_adjusted))| RegionTest {
            region,
            f_statistic,
            df,
            p_raw,
            p_adjusted,
        })
        .collect::<Vec<_>>();
    let mut out = outcome(
        Method::PairedVariance,
        global,
        detail.len() as f64,
        global,
        alpha,
    );
    out.per_region_detail = Some(detail);
    Ok(out)
}

pub fn paired_variance_compare(
    m1: &RatingMatrix,
    m2: &RatingMatrix,
    alpha: f64,
    correction: Correction,
) -> Result<ComparisonOutcome> {
    paired_variance_from_moments(&m1.all_moments()?, &m2.all_moments()?, alpha, correction)
}
