//! The simulation study: archived runs over a (σ, p) grid, measure curves,
//! bootstrap rejection-ratio heat maps and their distance to the ideal map.

use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::compare::{compare_estimates, paired_variance_from_moments, Method, DEFAULT_ALPHA};
use crate::config::{sigma_grid, sigma_range, BiasScenario, DEFAULT_REPETITIONS};
use crate::error::{Error, Result};
use crate::generator::{simulate_experiment, study_grid, GridSpec, PlannedRun};
use crate::matrix::StimulusMoments;
use crate::measures::{
    fit_li2020, g_measure_from_moments, l_measure_from_fit, measure_ci, sos_a_from_moments,
    MeasureEstimate, MeasureKind,
};
use crate::rng::{derive_seed, Stream};
use crate::stats::Correction;

pub const DEFAULT_PAIRS: usize = 2000;
/// Rejection ratio of the ideal method on same-σ pairs.
pub const IDEAL_DIAGONAL: f64 = 0.05;

/// Named study scales.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// 18 σ levels, 200 repetitions, 2000 bootstrap pairs per cell.
    Full,
    /// σ 0.4..1.2 in steps of 0.1, 50 repetitions, 500 pairs per cell.
    Reduced,
}

impl Preset {
    pub fn sigmas(&self) -> Vec<f64> {
        match self {
            Preset::Full => sigma_grid(),
            Preset::Reduced => sigma_range(0.4, 1.2, 0.1),
        }
    }

    pub fn reps(&self) -> usize {
        match self {
            Preset::Full => DEFAULT_REPETITIONS,
            Preset::Reduced => 50,
        }
    }

    pub fn pairs(&self) -> usize {
        match self {
            Preset::Full => DEFAULT_PAIRS,
            Preset::Reduced => 500,
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Preset::Full),
            "reduced" => Ok(Preset::Reduced),
            other => Err(Error::Domain(format!(
                "unknown preset '{other}' (expected full or reduced)"
            ))),
        }
    }
}

/// One simulated experiment's fitted measures and per-stimulus moments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub repetition: usize,
    pub seed: u64,
    pub g: Option<MeasureEstimate>,
    pub a: Option<MeasureEstimate>,
    pub l: Option<MeasureEstimate>,
    /// Kept so that the paired-variance method needs no refit.
    pub moments: Vec<StimulusMoments>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub errors: Vec<String>,
}

impl RunRecord {
    pub fn estimate(&self, kind: MeasureKind) -> Option<&MeasureEstimate> {
        match kind {
            MeasureKind::G => self.g.as_ref(),
            MeasureKind::A => self.a.as_ref(),
            MeasureKind::L => self.l.as_ref(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchiveCell {
    pub sigma_index: usize,
    pub p_index: usize,
    pub sigma: f64,
    pub p: f64,
    pub runs: Vec<RunRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyArchive {
    pub scenario: BiasScenario,
    pub grid: GridSpec,
    /// Resolved no-bias probabilities.
    pub ps: Vec<f64>,
    /// σ-major, then p.
    pub cells: Vec<ArchiveCell>,
}

impl StudyArchive {
    pub fn cell(&self, sigma_index: usize, p_index: usize) -> Option<&ArchiveCell> {
        self.cells.get(sigma_index * self.ps.len() + p_index)
    }

    pub fn n_runs(&self) -> usize {
        self.cells.iter().map(|c| c.runs.len()).sum()
    }

    /// Checks grid coverage and ordering.
    pub fn validate(&self) -> Result<()> {
        let (ns, np) = (self.grid.sigmas.len(), self.ps.len());
        if self.grid.reps == 0 {
            return Err(Error::Contract("archive has zero repetitions".into()));
        }
        if self.cells.len() != ns * np {
            return Err(Error::Contract(format!(
                "archive has {} cells, expected {}",
                self.cells.len(),
                ns * np
            )));
        }
        for (idx, c) in self.cells.iter().enumerate() {
            if c.sigma_index != idx / np || c.p_index != idx % np {
                return Err(Error::Contract(format!(
                    "cell {idx} is out of order ({}, {})",
                    c.sigma_index, c.p_index
                )));
            }
            if c.runs.len() != self.grid.reps {
                return Err(Error::Contract(format!(
                    "cell (sigma = {}, p = {}) has {} runs, expected {}",
                    c.sigma, c.p, c.runs.len(), self.grid.reps
                )));
            }
        }
        Ok(())
    }
}

/// Runs `f` on a pool of `jobs` threads, or the global pool when `None`.
pub(crate) fn with_pool<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match jobs {
        None => Ok(f()),
        Some(j) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(j.max(1))
                .build()
                .map_err(|e| Error::Domain(format!("cannot start worker pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

fn run_one(plan: &PlannedRun) -> RunRecord {
    let mut rec = RunRecord {
        repetition: plan.repetition,
        seed: plan.config.seed,
        g: None,
        a: None,
        l: None,
        moments: Vec::new(),
        errors: Vec::new(),
    };
    let exp = match simulate_experiment(&plan.config) {
        Ok(e) => e,
        Err(e) => {
            rec.errors.push(format!("simulate: {e}"));
            return rec;
        }
    };
    match exp.ratings.all_moments() {
        Ok(m) => rec.moments = m,
        Err(e) => rec.errors.push(format!("moments: {e}")),
    }
    match g_measure_from_moments(&rec.moments) {
        Ok(g) => rec.g = Some(g),
        Err(e) => rec.errors.push(format!("g: {e}")),
    }
    match sos_a_from_moments(&rec.moments) {
        Ok(a) => rec.a = Some(a),
        Err(e) => rec.errors.push(format!("a: {e}")),
    }
    match fit_li2020(&exp.ratings) {
        Ok(fit) => {
            if !fit.converged {
                rec.errors
                    .push(format!("l: fit did not converge in {} sweeps", fit.iterations));
            }
            match l_measure_from_fit(&fit) {
                Ok(l) => rec.l = Some(l),
                Err(e) => rec.errors.push(format!("l: {e}")),
            }
        }
        Err(e) => rec.errors.push(format!("l: {e}")),
    }
    rec
}

fn validate_grid(scenario: BiasScenario, grid: &GridSpec) -> Result<()> {
    scenario.validate()?;
    if grid.sigmas.is_empty() {
        return Err(Error::Domain("sigma grid is empty".into()));
    }
    if let Some(s) = grid.sigmas.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
        return Err(Error::Domain(format!("sigma must be positive, got {s}")));
    }
    if grid.reps == 0 {
        return Err(Error::Domain("at least one repetition is required".into()));
    }
    let ps = grid.p_values(scenario);
    if ps.is_empty() {
        return Err(Error::Domain("p grid is empty".into()));
    }
    if let Some(p) = ps.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::Domain(format!("probability must be in [0, 1], got {p}")));
    }
    if grid.n < 3 || grid.k < 3 {
        return Err(Error::Domain(format!(
            "simulated experiments need at least 3 subjects and 3 stimuli, got {} x {}",
            grid.n, grid.k
        )));
    }
    Ok(())
}

/// Simulates and fits every (σ, p, repetition) of the grid.
///
/// Runs are independent and seeded from the master seed by grid position, so
/// the archive does not depend on `jobs`. Fit failures are recorded in the
/// run, never abort the study.
pub fn run_study(
    scenario: BiasScenario,
    grid: &GridSpec,
    jobs: Option<usize>,
) -> Result<StudyArchive> {
    validate_grid(scenario, grid)?;
    let plan = study_grid(scenario, grid);
    let records: Vec<RunRecord> = with_pool(jobs, || plan.par_iter().map(run_one).collect())?;
    let ps = grid.p_values(scenario);
    let mut records = records.into_iter();
    let mut cells = Vec::with_capacity(grid.sigmas.len() * ps.len());
    for (si, &sigma) in grid.sigmas.iter().enumerate() {
        for (pi, &p) in ps.iter().enumerate() {
            cells.push(ArchiveCell {
                sigma_index: si,
                p_index: pi,
                sigma,
                p,
                runs: records.by_ref().take(grid.reps).collect(),
            });
        }
    }
    let archive = StudyArchive {
        scenario,
        grid: grid.clone(),
        ps,
        cells,
    };
    archive.validate()?;
    Ok(archive)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub measure: MeasureKind,
    pub sigma: f64,
    pub p: f64,
    pub mean: f64,
    pub ci_half_width: f64,
    pub runs: usize,
}

/// Mean measure and mean-dispersion CI half-width per (measure, σ, p).
pub fn curves(archive: &StudyArchive, alpha: f64) -> Result<Vec<CurveRow>> {
    let mut rows = Vec::new();
    for kind in MeasureKind::ALL {
        for cell in &archive.cells {
            let est: Vec<MeasureEstimate> = cell
                .runs
                .iter()
                .filter_map(|r| r.estimate(kind).cloned())
                .collect();
            if est.is_empty() {
                continue;
            }
            let ci = measure_ci(&est, alpha)?;
            rows.push(CurveRow {
                measure: kind,
                sigma: cell.sigma,
                p: cell.p,
                mean: ci.center,
                ci_half_width: ci.half_width,
                runs: est.len(),
            });
        }
    }
    Ok(rows)
}

/// σ-by-σ matrix of rejection ratios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatMap {
    pub method: Method,
    pub scenario: BiasScenario,
    pub sigma_grid: Vec<f64>,
    /// `ratios[i][j]`: share of significant comparisons of σ_i against σ_j.
    pub ratios: Vec<Vec<f64>>,
    pub pairs_per_cell: usize,
    pub seed: u64,
    pub alpha: f64,
}

impl HeatMap {
    pub fn diagonal_mean(&self) -> f64 {
        let n = self.ratios.len();
        (0..n).map(|i| self.ratios[i][i]).sum::<f64>() / n as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatmapOptions {
    pub pairs_per_cell: usize,
    pub seed: u64,
    pub alpha: f64,
    /// Multiplicity correction of the paired-variance method.
    pub correction: Correction,
    pub jobs: Option<usize>,
}

impl HeatmapOptions {
    pub fn new(pairs_per_cell: usize, seed: u64) -> Self {
        HeatmapOptions {
            pairs_per_cell,
            seed,
            alpha: DEFAULT_ALPHA,
            correction: Correction::Holm,
            jobs: None,
        }
    }
}

fn usable(run: &RunRecord, method: Method) -> bool {
    match method.measure() {
        Some(kind) => run.estimate(kind).is_some(),
        None => !run.moments.is_empty(),
    }
}

fn compare_runs(x: &RunRecord, y: &RunRecord, method: Method, opts: &HeatmapOptions) -> Result<f64> {
    let o = match method.measure() {
        Some(kind) => compare_estimates(
            x.estimate(kind).expect("filtered"),
            y.estimate(kind).expect("filtered"),
            opts.alpha,
        )?,
        None => paired_variance_from_moments(&x.moments, &y.moments, opts.alpha, opts.correction)?,
    };
    Ok(o.p_value)
}

/// Bootstrap heat map. For each σ pair, `pairs_per_cell` archived runs are
/// drawn with replacement from each σ level (pooling every p of the
/// scenario) and compared; the entry is the share with p <= alpha.
pub fn heatmap(archive: &StudyArchive, method: Method, opts: &HeatmapOptions) -> Result<HeatMap> {
    if opts.pairs_per_cell == 0 {
        return Err(Error::Domain("pairs per cell must be positive".into()));
    }
    if !(opts.alpha > 0.0 && opts.alpha < 1.0) {
        return Err(Error::Domain(format!("alpha must be in (0, 1), got {}", opts.alpha)));
    }
    archive.validate()?;
    let ns = archive.grid.sigmas.len();
    let np = archive.ps.len();
    let pools: Vec<Vec<&RunRecord>> = (0..ns)
        .map(|si| {
            archive.cells[si * np..(si + 1) * np]
                .iter()
                .flat_map(|c| c.runs.iter())
                .filter(|r| usable(r, method))
                .collect()
        })
        .collect();
    if let Some(si) = pools.iter().position(|p| p.is_empty()) {
        return Err(Error::Contract(format!(
            "no usable {method} runs at sigma = {}",
            archive.grid.sigmas[si]
        )));
    }
    let cells: Vec<(usize, usize)> = (0..ns).flat_map(|i| (0..ns).map(move |j| (i, j))).collect();
    let ratios: Vec<f64> = with_pool(opts.jobs, || {
        cells
            .par_iter()
            .map(|&(i, j)| {
                let mut rng = Stream::new(derive_seed(opts.seed, &[i as u64, j as u64]));
                let mut hits = 0usize;
                for _ in 0..opts.pairs_per_cell {
                    let x = pools[i][rng.index(pools[i].len())];
                    let y = pools[j][rng.index(pools[j].len())];
                    if compare_runs(x, y, method, opts)? <= opts.alpha {
                        hits += 1;
                    }
                }
                Ok(hits as f64 / opts.pairs_per_cell as f64)
            })
            .collect::<Result<Vec<f64>>>()
    })??;
    Ok(HeatMap {
        method,
        scenario: archive.scenario,
        sigma_grid: archive.grid.sigmas.clone(),
        ratios: ratios.chunks(ns).map(|r| r.to_vec()).collect(),
        pairs_per_cell: opts.pairs_per_cell,
        seed: opts.seed,
        alpha: opts.alpha,
    })
}

/// Mean absolute distance to the ideal map (0.05 on the diagonal, 1 elsewhere).
pub fn mae_vs_ideal(h: &HeatMap) -> Result<f64> {
    let n = h.ratios.len();
    if n == 0 || h.ratios.iter().any(|r| r.len() != n) {
        return Err(Error::Domain("heat map must be square and non-empty".into()));
    }
    let mut total = 0.0;
    for (i, row) in h.ratios.iter().enumerate() {
        for (j, &r) in row.iter().enumerate() {
            let ideal = if i == j { IDEAL_DIAGONAL } else { 1.0 };
            total += (r - ideal).abs();
        }
    }
    Ok(total / (n * n) as f64)
}
