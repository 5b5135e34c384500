//! Statistical kernels: normal, Student-t and F distributions, Welch's
//! t-test and multiplicity adjustment.

mod dist;
mod special;
mod hypothesis;

pub use dist::{
    f_cdf, f_sf, normal_cdf, normal_pdf, normal_quantile, student_t_cdf, student_t_quantile,
    student_t_two_sided_p,
};
pub use special::{ln_gamma, regularized_beta};
pub use hypothesis::{adjust, bonferroni_adjust, holm_adjust, welch_t_test, Correction, TestResult};

/// Arithmetic mean. `NaN` for an empty slice.
pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Variance with `len - ddof` in the denominator.
pub fn variance(values: &[f64], ddof: usize) -> f64 {
    let m = mean(values);
    values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (values.len() - ddof) as f64
}
