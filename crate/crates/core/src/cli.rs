//! Command-line front end.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};

use crate::compare::{compare, Method, DEFAULT_ALPHA};
use crate::config::{BiasScenario, DEFAULT_STIMULI, DEFAULT_SUBJECTS};
use crate::dataio::{
    curves_csv, format_p, heatmap_csv, precision_report, read_archive, read_ratings_csv,
    write_archive, write_text, DatasetDescriptor,
};
use crate::error::{Error, Result};
use crate::generator::GridSpec;
use crate::measures::{g_measure, l_measure, sos_a};
use crate::rng::derive_seed;
use crate::sim::{curves, heatmap, mae_vs_ideal, run_study, HeatmapOptions, Preset};
use crate::stats::Correction;

#[derive(Debug, Parser)]
#[command(
    name = "expprec",
    version,
    about = "Experiment precision measures (g, a, l) for subjective quality ratings"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a study over a (sigma, p) grid and write its archive
    Simulate(SimulateArgs),
    /// Mean measure and CI half-width per (measure, sigma, p) as CSV
    Curves(CurvesArgs),
    /// Bootstrap rejection-ratio heat map as CSV
    Heatmap(HeatmapArgs),
    /// Mean absolute distance of a heat map to the ideal map
    Mae(HeatmapArgs),
    /// Precision measures of one ratings CSV
    Measure(MeasureArgs),
    /// Compare the precision of two ratings CSVs
    Compare(CompareArgs),
    /// Measures and pairwise comparisons for a list of datasets
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Bias scenario: none, mixed or extreme
    #[arg(long, default_value = "none", value_parser = parse_scenario)]
    pub scenario: BiasScenario,
    /// Study scale: full or reduced
    #[arg(long, default_value = "full", value_parser = parse_preset)]
    pub preset: Preset,
    /// Comma-separated sigma levels [default: from preset]
    #[arg(long, value_delimiter = ',')]
    pub sigmas: Option<Vec<f64>>,
    /// Comma-separated no-bias probabilities [default: scenario grid]
    #[arg(long, value_delimiter = ',')]
    pub ps: Option<Vec<f64>>,
    /// Repetitions per grid cell [default: from preset]
    #[arg(long)]
    pub reps: Option<usize>,
    /// Stimuli per experiment
    #[arg(long, default_value_t = DEFAULT_STIMULI)]
    pub stimuli: usize,
    /// Subjects per experiment
    #[arg(long, default_value_t = DEFAULT_SUBJECTS)]
    pub subjects: usize,
    /// Master seed [default: random, printed to stderr]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads [default: all cores]
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Archive directory
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CurvesArgs {
    /// Archive directory written by `simulate`
    #[arg(long)]
    pub archive: PathBuf,
    /// Significance level of the confidence intervals
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    pub alpha: f64,
    /// Output CSV [default: stdout]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct HeatmapArgs {
    /// Archive directory written by `simulate`
    #[arg(long)]
    pub archive: PathBuf,
    /// Comparison method: l, g, a or pv
    #[arg(long, default_value = "l", value_parser = parse_method)]
    pub method: Method,
    /// Study scale used for the default number of pairs: full or reduced
    #[arg(long, default_value = "full", value_parser = parse_preset)]
    pub preset: Preset,
    /// Bootstrap comparisons per cell [default: from preset]
    #[arg(long)]
    pub pairs: Option<usize>,
    /// Bootstrap seed [default: random, printed to stderr]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Significance level of each comparison
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    pub alpha: f64,
    /// Multiplicity correction of the pv method: holm or bonferroni
    #[arg(long, default_value = "holm", value_parser = parse_correction)]
    pub correction: Correction,
    /// Worker threads [default: all cores]
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Output CSV [default: stdout for heatmap, none for mae]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MeasureArgs {
    /// Ratings CSV (subject_id,stimulus_id,rating)
    #[arg(long)]
    pub input: PathBuf,
    /// Also write the measures as CSV [default: none]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// First ratings CSV
    #[arg(long)]
    pub a: PathBuf,
    /// Second ratings CSV
    #[arg(long)]
    pub b: PathBuf,
    /// Method: l, g, a, pv or all
    #[arg(long, default_value = "all")]
    pub method: String,
    /// Significance level
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    pub alpha: f64,
    /// Multiplicity correction of the pv method: holm or bonferroni
    #[arg(long, default_value = "holm", value_parser = parse_correction)]
    pub correction: Correction,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Dataset as NAME=PATH (repeatable)
    #[arg(long = "dataset", required = true, value_parser = parse_dataset)]
    pub datasets: Vec<DatasetDescriptor>,
    /// Significance level
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    pub alpha: f64,
    /// Directory for measures.csv, comparisons.csv and report.txt [default: stdout only]
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

fn parse_scenario(s: &str) -> std::result::Result<BiasScenario, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_preset(s: &str) -> std::result::Result<Preset, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_correction(s: &str) -> std::result::Result<Correction, String> {
    match s {
        "holm" => Ok(Correction::Holm),
        "bonferroni" => Ok(Correction::Bonferroni),
        other => Err(format!("unknown correction '{other}' (expected holm or bonferroni)")),
    }
}

fn parse_dataset(s: &str) -> std::result::Result<DatasetDescriptor, String> {
    match s.split_once('=') {
        Some((name, path)) if !name.is_empty() && !path.is_empty() => {
            Ok(DatasetDescriptor::new(name, path))
        }
        _ => Err(format!("expected NAME=PATH, got '{s}'")),
    }
}

fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let nanos = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_nanos() as u64)
            .unwrap_or(0);
        let s = derive_seed(nanos, &[std::process::id() as u64]);
        eprintln!("seed: {s}");
        s
    })
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("alpha must be in (0, 1), got {alpha}")))
    }
}

fn io_err(e: std::io::Error) -> Error {
    Error::io("<stdout>", e)
}

fn emit(out: &mut dyn Write, path: Option<&PathBuf>, text: &str) -> Result<()> {
    match path {
        Some(p) => write_text(p, text),
        None => out.write_all(text.as_bytes()).map_err(io_err),
    }
}

fn heatmap_from(args: &HeatmapArgs) -> Result<crate::sim::HeatMap> {
    check_alpha(args.alpha)?;
    let archive = read_archive(&args.archive)?;
    let opts = HeatmapOptions {
        pairs_per_cell: args.pairs.unwrap_or_else(|| args.preset.pairs()),
        seed: resolve_seed(args.seed),
        alpha: args.alpha,
        correction: args.correction,
        jobs: args.jobs,
    };
    heatmap(&archive, args.method, &opts)
}

/// Executes a parsed command, writing human-readable output to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Simulate(a) => {
            let mut grid = GridSpec::new(
                a.sigmas.unwrap_or_else(|| a.preset.sigmas()),
                a.reps.unwrap_or_else(|| a.preset.reps()),
                resolve_seed(a.seed),
            );
            grid.k = a.stimuli;
            grid.n = a.subjects;
            grid.ps = a.ps;
            let archive = run_study(a.scenario, &grid, a.jobs)?;
            write_archive(&archive, &a.out)?;
            let failed = archive
                .cells
                .iter()
                .flat_map(|c| &c.runs)
                .filter(|r| !r.errors.is_empty())
                .count();
            writeln!(
                out,
                "simulated {} experiments ({} with fit problems) into {}",
                archive.n_runs(),
                failed,
                a.out.display()
            )
            .map_err(io_err)
        }
        Command::Curves(a) => {
            check_alpha(a.alpha)?;
            let rows = curves(&read_archive(&a.archive)?, a.alpha)?;
            emit(out, a.out.as_ref(), &curves_csv(&rows))
        }
        Command::Heatmap(a) => {
            let h = heatmap_from(&a)?;
            emit(out, a.out.as_ref(), &heatmap_csv(&h))
        }
        Command::Mae(a) => {
            let h = heatmap_from(&a)?;
            if let Some(p) = &a.out {
                write_text(p, &heatmap_csv(&h))?;
            }
            writeln!(out, "{:.4}", mae_vs_ideal(&h)?).map_err(io_err)
        }
        Command::Measure(a) => {
            let m = read_ratings_csv(&a.input)?;
            let (l, g, s) = (l_measure(&m)?, g_measure(&m)?, sos_a(&m)?);
            let mut text = format!("subjects = {}, stimuli = {}\n", m.n_subjects(), m.n_stimuli());
            for e in [&l, &g, &s] {
                text.push_str(&format!("{} = {:.3} (se {:.4})\n", e.kind, e.value, e.se));
            }
            out.write_all(text.as_bytes()).map_err(io_err)?;
            if let Some(p) = &a.out {
                let csv = format!(
                    "l,se_l,g,se_g,a,se_a\n{},{},{},{},{},{}\n",
                    l.value, l.se, g.value, g.se, s.value, s.se
                );
                write_text(p, &csv)?;
            }
            Ok(())
        }
        Command::Compare(a) => {
            check_alpha(a.alpha)?;
            let methods: Vec<Method> = if a.method == "all" {
                Method::ALL.to_vec()
            } else {
                vec![a.method.parse()?]
            };
            let m1 = read_ratings_csv(&a.a)?;
            let m2 = read_ratings_csv(&a.b)?;
            for method in methods {
                let o = compare(&m1, &m2, method, a.alpha, a.correction)?;
                writeln!(
                    out,
                    "{}: statistic = {:.4}, df = {:.2}, p = {}, {}",
                    method,
                    o.statistic,
                    o.df,
                    format_p(o.p_value),
                    if o.significant { "significant" } else { "not significant" }
                )
                .map_err(io_err)?;
            }
            Ok(())
        }
        Command::Report(a) => {
            check_alpha(a.alpha)?;
            let report = precision_report(&a.datasets, a.alpha)?;
            let text = report.to_text();
            if let Some(dir) = &a.out_dir {
                write_text(dir.join("measures.csv"), &report.measures_csv())?;
                write_text(dir.join("comparisons.csv"), &report.comparisons_csv())?;
                write_text(dir.join("report.txt"), &text)?;
            }
            out.write_all(text.as_bytes()).map_err(io_err)
        }
    }
}

/// Parses `args`, runs, and maps the outcome to an exit status: 0 on
/// success, 2 on usage errors, 1 on runtime failures.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let stdout = std::io::stdout();
    match run(cli, &mut stdout.lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
