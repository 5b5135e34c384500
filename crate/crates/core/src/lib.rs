//! Experiment precision for subjective quality-assessment ratings.
//!
//! Three precision measures are provided for an N-subjects by K-stimuli matrix
//! of 1..5 ratings:
//!
//! * `g`, the mean per-stimulus GSD confidence parameter (moment estimate),
//! * `a`, the SOS-hypothesis parameter fitted by least squares,
//! * `l`, the mean per-subject inconsistency of the Li2020 Gaussian model.
//!
//! Pairs of experiments are compared with Welch tests on these measures or with
//! the paired-variance F-test method. The [`sim`] module reproduces the
//! ordered-probit simulation study (measure curves, rejection-ratio heat maps
//! and their distance to the ideal map).

pub mod cli;
pub mod compare;
pub mod config;
pub mod dataio;
pub mod error;
pub mod generator;
pub mod matrix;
pub mod measures;
pub mod qnorm;
pub mod rng;
pub mod sim;
pub mod stats;

pub use compare::{ComparisonOutcome, Method, MosRegion};
pub use config::{BiasScenario, ExperimentConfig};
pub use error::{Error, Result};
pub use matrix::{RatingMatrix, StimulusMoments};
pub use measures::{MeasureEstimate, MeasureKind};
pub use qnorm::QNormParams;
pub use sim::{HeatMap, StudyArchive};
