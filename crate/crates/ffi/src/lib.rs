//! C ABI for the `expprec` library.
//!
//! Conventions:
//!
//! * Every fallible function returns an [`EpStatus`]; results go through out
//!   pointers, which are left untouched on failure.
//! * On failure a message is stored per thread and can be read with
//!   [`ep_last_error`] until the next failing call on the same thread.
//! * Matrices are opaque [`EpMatrix`] handles owned by the caller and released
//!   with [`ep_matrix_free`].
//! * Panics never cross the boundary; they are reported as
//!   [`EpStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use expprec::compare::{compare, Method};
use expprec::dataio::read_ratings_csv;
use expprec::generator::simulate_experiment;
use expprec::measures::{g_measure, l_measure, sos_a, MeasureKind};
use expprec::qnorm::{sigma_to_sos_a, QNormParams};
use expprec::stats::Correction;
use expprec::{BiasScenario, Error, ExperimentConfig, RatingMatrix};

/// Status code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidMatrix = 3,
    InsufficientData = 4,
    Domain = 5,
    UndefinedEstimator = 6,
    Contract = 7,
    MethodUnavailable = 8,
    Parse = 9,
    Io = 10,
    Archive = 11,
    Panic = 99,
}

/// Precision measure selector.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpMeasureKind {
    L = 0,
    G = 1,
    A = 2,
}

/// Comparison method selector.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpMethod {
    L = 0,
    G = 1,
    A = 2,
    PairedVariance = 3,
}

/// Bias scenario selector for `ep_matrix_simulate`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpScenario {
    None = 0,
    Mixed = 1,
    Extreme = 2,
}

/// A measure value with its standard error.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpMeasure {
    pub value: f64,
    pub se: f64,
    /// Stimuli (g, a) or subjects (l) behind the estimate.
    pub basis_size: usize,
}

/// Outcome of comparing two experiments.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpComparison {
    /// t statistic, or the smallest adjusted p-value for paired variance.
    pub statistic: f64,
    /// Welch degrees of freedom, or the number of MOS regions.
    pub df: f64,
    pub p_value: f64,
    /// 1 when `p_value <= alpha`.
    pub significant: i32,
}

/// Opaque rating matrix.
pub struct EpMatrix(RatingMatrix);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> EpStatus {
    match e {
        Error::InvalidMatrix(_) => EpStatus::InvalidMatrix,
        Error::InsufficientData { .. } => EpStatus::InsufficientData,
        Error::Domain(_) => EpStatus::Domain,
        Error::UndefinedEstimator(_) => EpStatus::UndefinedEstimator,
        Error::Contract(_) => EpStatus::Contract,
        Error::MethodUnavailable(_) => EpStatus::MethodUnavailable,
        Error::Parse { .. } => EpStatus::Parse,
        Error::Io { .. } => EpStatus::Io,
        Error::Archive { .. } | Error::SchemaVersion { .. } => EpStatus::Archive,
    }
}

struct Failure(EpStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(EpStatus::NullPointer, format!("{what} is NULL"))
}

fn invalid(msg: String) -> Failure {
    Failure(EpStatus::InvalidArgument, msg)
}

/// Runs `f`, translating errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> EpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => EpStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            EpStatus::Panic
        }
    }
}

unsafe fn matrix<'a>(m: *const EpMatrix, what: &str) -> Result<&'a RatingMatrix, Failure> {
    m.as_ref().map(|m| &m.0).ok_or_else(|| null(what))
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(value);
    Ok(())
}

fn measure_kind(kind: i32) -> Result<MeasureKind, Failure> {
    match kind {
        k if k == EpMeasureKind::L as i32 => Ok(MeasureKind::L),
        k if k == EpMeasureKind::G as i32 => Ok(MeasureKind::G),
        k if k == EpMeasureKind::A as i32 => Ok(MeasureKind::A),
        k => Err(invalid(format!("unknown measure kind {k}"))),
    }
}

fn method(m: i32) -> Result<Method, Failure> {
    match m {
        k if k == EpMethod::L as i32 => Ok(Method::L),
        k if k == EpMethod::G as i32 => Ok(Method::G),
        k if k == EpMethod::A as i32 => Ok(Method::A),
        k if k == EpMethod::PairedVariance as i32 => Ok(Method::PairedVariance),
        k => Err(invalid(format!("unknown comparison method {k}"))),
    }
}

fn scenario(s: i32) -> Result<BiasScenario, Failure> {
    match s {
        k if k == EpScenario::None as i32 => Ok(BiasScenario::NoBias),
        k if k == EpScenario::Mixed as i32 => Ok(BiasScenario::mixed()),
        k if k == EpScenario::Extreme as i32 => Ok(BiasScenario::extreme()),
        k => Err(invalid(format!("unknown bias scenario {k}"))),
    }
}

/// Message of the last failure on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ep_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ep_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a matrix from `n_subjects * n_stimuli` subject-major ratings;
/// 0 marks an absent rating.
///
/// # Safety
/// `ratings` must point to `n_subjects * n_stimuli` readable bytes and `out`
/// must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ep_matrix_new(
    n_subjects: usize,
    n_stimuli: usize,
    ratings: *const u8,
    out: *mut *mut EpMatrix,
) -> EpStatus {
    guard(|| {
        if ratings.is_null() {
            return Err(null("ratings"));
        }
        let len = n_subjects
            .checked_mul(n_stimuli)
            .ok_or_else(|| invalid("matrix size overflows".into()))?;
        let raw = std::slice::from_raw_parts(ratings, len);
        let cells = raw.iter().map(|&r| (r != 0).then_some(r)).collect();
        let subjects = (1..=n_subjects).map(|i| format!("s{i}")).collect();
        let stimuli = (1..=n_stimuli).map(|i| format!("x{i}")).collect();
        let m = RatingMatrix::new(subjects, stimuli, cells)?;
        write_out(out, Box::into_raw(Box::new(EpMatrix(m))))
    })
}

/// Reads a `subject_id,stimulus_id,rating` CSV file.
///
/// # Safety
/// `path` must be a NUL-terminated UTF-8 string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ep_matrix_from_csv(path: *const c_char, out: *mut *mut EpMatrix) -> EpStatus {
    guard(|| {
        if path.is_null() {
            return Err(null("path"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| invalid("path is not valid UTF-8".into()))?;
        let m = read_ratings_csv(Path::new(path))?;
        write_out(out, Box::into_raw(Box::new(EpMatrix(m))))
    })
}

/// Simulates one experiment with 30 subjects and 21 equidistant stimuli.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ep_matrix_simulate(
    sigma: f64,
    bias_scenario: i32,
    p: f64,
    seed: u64,
    out: *mut *mut EpMatrix,
) -> EpStatus {
    guard(|| {
        let config = ExperimentConfig::with_defaults(sigma, scenario(bias_scenario)?, p, seed);
        let m = simulate_experiment(&config)?.ratings;
        write_out(out, Box::into_raw(Box::new(EpMatrix(m))))
    })
}

/// Releases a matrix. NULL is ignored.
///
/// # Safety
/// `m` must come from this library and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ep_matrix_free(m: *mut EpMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Number of subjects and stimuli.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ep_matrix_shape(
    m: *const EpMatrix,
    n_subjects: *mut usize,
    n_stimuli: *mut usize,
) -> EpStatus {
    guard(|| {
        let m = matrix(m, "matrix")?;
        if n_subjects.is_null() || n_stimuli.is_null() {
            return Err(null("output pointer"));
        }
        write_out(n_subjects, m.n_subjects())?;
        write_out(n_stimuli, m.n_stimuli())
    })
}

/// Rating of one cell; 0 when absent.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ep_matrix_rating(
    m: *const EpMatrix,
    subject: usize,
    stimulus: usize,
    out: *mut u8,
) -> EpStatus {
    guard(|| {
        let m = matrix(m, "matrix")?;
        if subject >= m.n_subjects() || stimulus >= m.n_stimuli() {
            return Err(invalid(format!(
                "cell ({subject}, {stimulus}) is outside the {} x {} matrix",
                m.n_subjects(),
                m.n_stimuli()
            )));
        }
        write_out(out, m.rating(subject, stimulus).unwrap_or(0))
    })
}

/// One precision measure (`EpMeasureKind` value).
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ep_measure(m: *const EpMatrix, kind: i32, out: *mut EpMeasure) -> EpStatus {
    guard(|| {
        let m = matrix(m, "matrix")?;
        let e = match measure_kind(kind)? {
            MeasureKind::L => l_measure(m)?,
            MeasureKind::G => g_measure(m)?,
            MeasureKind::A => sos_a(m)?,
        };
        write_out(
            out,
            EpMeasure {
                value: e.value,
                se: e.se,
                basis_size: e.basis_size,
            },
        )
    })
}

/// Compares two experiments with one method (`EpMethod` value). The
/// paired-variance method uses the Holm correction.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ep_compare(
    a: *const EpMatrix,
    b: *const EpMatrix,
    comparison_method: i32,
    alpha: f64,
    out: *mut EpComparison,
) -> EpStatus {
    guard(|| {
        let (a, b) = (matrix(a, "first matrix")?, matrix(b, "second matrix")?);
        let o = compare(a, b, method(comparison_method)?, alpha, Correction::Holm)?;
        write_out(
            out,
            EpComparison {
                statistic: o.statistic,
                df: o.df,
                p_value: o.p_value,
                significant: i32::from(o.significant),
            },
        )
    })
}

/// Probabilities of the ratings 1..5 under QNorm(mu, sigma).
///
/// # Safety
/// `out` must point to 5 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn ep_qnorm_pmf(mu: f64, sigma: f64, out: *mut f64) -> EpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("output pointer"));
        }
        let pmf = QNormParams::new(mu, sigma)?.pmf();
        std::ptr::copy_nonoverlapping(pmf.as_ptr(), out, 5);
        Ok(())
    })
}

/// SOS parameter implied by uncertainty `sigma` (21 equidistant stimuli, no
/// bias).
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ep_sigma_to_sos_a(sigma: f64, out: *mut f64) -> EpStatus {
    guard(|| write_out(out, sigma_to_sos_a(sigma)?))
}
