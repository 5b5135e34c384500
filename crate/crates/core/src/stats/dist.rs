use std::f64::consts::PI;

use super::special::regularized_beta;
use crate::error::{Error, Result};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z - LN_SQRT_2PI).exp()
}

/// Standard normal CDF Φ(z).
///
/// Taylor series around 0 for |z| < 3, Laplace continued fraction for the
/// Mills ratio beyond, so both the central region and the tails are accurate.
pub fn normal_cdf(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    if z.abs() < 3.0 {
        let q = z * z;
        let mut sum = z;
        let mut term = z;
        let mut i = 1.0;
        loop {
            i += 2.0;
            term *= q / i;
            let next = sum + term;
            if next == sum {
                break;
            }
            sum = next;
        }
        return 0.5 + sum * (-0.5 * q - LN_SQRT_2PI).exp();
    }
    let tail = normal_pdf(z) * mills_ratio(z.abs());
    if z < 0.0 {
        tail
    } else {
        1.0 - tail
    }
}

// R(x) = 1 / (x + 1 / (x + 2 / (x + 3 / ...))), x >= 3
fn mills_ratio(x: f64) -> f64 {
    if x.is_infinite() {
        return 0.0;
    }
    const TINY: f64 = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for k in 1..5000 {
        let a = k as f64;
        d = x + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = x + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    1.0 / f
}

/// Inverse of [`normal_cdf`] for p in (0, 1).
///
/// Acklam's rational approximation followed by one Halley step.
pub fn normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    if p > 0.5 {
        return -normal_quantile(1.0 - p);
    }
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.024_25;
    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    };
    let e = normal_cdf(x) - p;
    let u = e * (2.0 * PI).sqrt() * (0.5 * x * x).exp();
    x - u / (1.0 + 0.5 * x * u)
}

fn check_df(df: f64, what: &str) -> Result<()> {
    if df > 0.0 && !df.is_nan() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "{what} degrees of freedom must be positive, got {df}"
        )))
    }
}

/// Student-t CDF F_T(t; df).
pub fn student_t_cdf(t: f64, df: f64) -> Result<f64> {
    check_df(df, "t")?;
    if t == 0.0 {
        return Ok(0.5);
    }
    if t.is_infinite() {
        return Ok(if t > 0.0 { 1.0 } else { 0.0 });
    }
    let tail = 0.5 * student_t_two_sided_p(t, df)?;
    Ok(if t > 0.0 { 1.0 - tail } else { tail })
}

/// P(|T| ≥ |t|), computed directly so very small p-values keep their
/// relative accuracy.
pub fn student_t_two_sided_p(t: f64, df: f64) -> Result<f64> {
    check_df(df, "t")?;
    if t.is_nan() {
        return Err(Error::Domain("t statistic is NaN".into()));
    }
    if t.is_infinite() {
        return Ok(0.0);
    }
    let x = df / (df + t * t);
    Ok(regularized_beta(x, 0.5 * df, 0.5).clamp(0.0, 1.0))
}

/// Quantile of the Student-t distribution (bisection on the CDF).
pub fn student_t_quantile(p: f64, df: f64) -> Result<f64> {
    check_df(df, "t")?;
    if !(0.0 < p && p < 1.0) {
        return Err(Error::Domain(format!("probability must be in (0, 1), got {p}")));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    let mut lo = -1.0;
    let mut hi = 1.0;
    while student_t_cdf(lo, df)? > p {
        lo *= 2.0;
    }
    while student_t_cdf(hi, df)? < p {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if student_t_cdf(mid, df)? < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi.abs().max(1.0) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// F(d1, d2) CDF.
pub fn f_cdf(x: f64, d1: f64, d2: f64) -> Result<f64> {
    check_df(d1, "numerator")?;
    check_df(d2, "denominator")?;
    if x <= 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    Ok(regularized_beta(d1 * x / (d1 * x + d2), 0.5 * d1, 0.5 * d2))
}

/// Upper tail P(F(d1, d2) ≥ x).
pub fn f_sf(x: f64, d1: f64, d2: f64) -> Result<f64> {
    check_df(d1, "numerator")?;
    check_df(d2, "denominator")?;
    if x <= 0.0 {
        return Ok(1.0);
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    Ok(regularized_beta(d2 / (d2 + d1 * x), 0.5 * d2, 0.5 * d1))
}
