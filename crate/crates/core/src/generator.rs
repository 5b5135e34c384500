//! Simulated experiments: per-user bias draws and rating synthesis.

use serde::{Deserialize, Serialize};

use crate::config::{default_mu_grid, BiasScenario, ExperimentConfig, DEFAULT_STIMULI, DEFAULT_SUBJECTS};
use crate::error::Result;
use crate::matrix::RatingMatrix;
use crate::qnorm::QNormParams;
use crate::rng::{derive_seed, Stream};

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedExperiment {
    pub config: ExperimentConfig,
    pub ratings: RatingMatrix,
    pub biases: Vec<f64>,
    pub repetition_index: usize,
}

/// Draws one user bias (see [`BiasScenario::draw`]).
pub fn draw_bias(scenario: BiasScenario, p: f64, rng: &mut Stream) -> f64 {
    scenario.draw(p, rng)
}

/// Simulates one experiment from `config.seed`.
pub fn simulate_experiment(config: &ExperimentConfig) -> Result<SimulatedExperiment> {
    let mut rng = Stream::new(config.seed);
    simulate_with(config, &mut rng, 0)
}

/// Simulates one experiment from an explicit stream.
///
/// All `n` biases are drawn first, then the ratings subject by subject; each
/// rating is an independent draw from QNorm(mu_x + beta_u, sigma).
pub fn simulate_with(
    config: &ExperimentConfig,
    rng: &mut Stream,
    repetition_index: usize,
) -> Result<SimulatedExperiment> {
    config.validate()?;
    let biases: Vec<f64> = (0..config.n)
        .map(|_| config.scenario.draw(config.p, rng))
        .collect();
    let mut cells = Vec::with_capacity(config.n * config.k);
    for &beta in &biases {
        for &mu in &config.mu {
            let q = QNormParams::new(mu + beta, config.sigma)?;
            cells.push(q.sample(rng));
        }
    }
    let ratings = RatingMatrix::from_full(config.n, config.k, cells)?;
    Ok(SimulatedExperiment {
        config: config.clone(),
        ratings,
        biases,
        repetition_index,
    })
}

/// Geometry and extent of a simulation study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub k: usize,
    pub n: usize,
    pub sigmas: Vec<f64>,
    /// Overrides the scenario's default no-bias probabilities.
    pub ps: Option<Vec<f64>>,
    pub reps: usize,
    pub master_seed: u64,
}

impl GridSpec {
    pub fn new(sigmas: Vec<f64>, reps: usize, master_seed: u64) -> Self {
        GridSpec {
            k: DEFAULT_STIMULI,
            n: DEFAULT_SUBJECTS,
            sigmas,
            ps: None,
            reps,
            master_seed,
        }
    }

    pub fn p_values(&self, scenario: BiasScenario) -> Vec<f64> {
        self.ps.clone().unwrap_or_else(|| scenario.p_grid())
    }
}

/// One planned run of the study grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannedRun {
    pub sigma_index: usize,
    pub p_index: usize,
    pub repetition: usize,
    pub config: ExperimentConfig,
}

/// Child seed of repetition `rep` at uncertainty level `sigma_index`.
///
/// The no-bias probability is deliberately not part of the seed: runs that
/// differ only in p share their random stream (common random numbers), so a
/// change in p only flips which users are biased.
pub fn run_seed(master: u64, scenario: BiasScenario, sigma_index: usize, rep: usize) -> u64 {
    derive_seed(master, &[scenario.code(), sigma_index as u64, rep as u64])
}

/// Full cross product sigma x p x repetition, sigma-major.
pub fn study_grid(scenario: BiasScenario, spec: &GridSpec) -> Vec<PlannedRun> {
    let mu = default_mu_grid(spec.k);
    let ps = spec.p_values(scenario);
    let mut out = Vec::with_capacity(spec.sigmas.len() * ps.len() * spec.reps);
    for (si, &sigma) in spec.sigmas.iter().enumerate() {
        for (pi, &p) in ps.iter().enumerate() {
            for rep in 0..spec.reps {
                out.push(PlannedRun {
                    sigma_index: si,
                    p_index: pi,
                    repetition: rep,
                    config: ExperimentConfig {
                        k: spec.k,
                        n: spec.n,
                        mu: mu.clone(),
                        sigma,
                        scenario,
                        p,
                        seed: run_seed(spec.master_seed, scenario, si, rep),
                    },
                });
            }
        }
    }
    out
}
