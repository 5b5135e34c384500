//! Rating CSV ingestion, study-archive persistence, plot-ready CSV output and
//! the precision report.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::compare::{compare_estimates, Method};
use crate::config::BiasScenario;
use crate::error::{Error, Result};
use crate::generator::GridSpec;
use crate::matrix::{RatingMatrix, MAX_RATING, MIN_RATING};
use crate::measures::{g_measure, l_measure, sos_a, MeasureEstimate, MeasureKind};
use crate::sim::{ArchiveCell, CurveRow, HeatMap, StudyArchive};

pub const ARCHIVE_SCHEMA_VERSION: u32 = 1;
const HEADER: [&str; 3] = ["subject_id", "stimulus_id", "rating"];
const MANIFEST: &str = "manifest.json";

/// Reads a long-format `subject_id,stimulus_id,rating` file. Subjects and
/// stimuli are ordered by first appearance.
pub fn read_ratings_csv(path: impl AsRef<Path>) -> Result<RatingMatrix> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_ratings(file, path)
}

/// As [`read_ratings_csv`] from any reader; `origin` labels error messages.
pub fn read_ratings(reader: impl Read, origin: &Path) -> Result<RatingMatrix> {
    let parse_err = |line: u64, message: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();
    if header.iter().collect::<Vec<_>>() != HEADER {
        return Err(parse_err(
            1,
            format!("expected header '{}'", HEADER.join(",")),
        ));
    }

    let mut subjects: Vec<String> = Vec::new();
    let mut stimuli: Vec<String> = Vec::new();
    let mut subject_idx: HashMap<String, usize> = HashMap::new();
    let mut stimulus_idx: HashMap<String, usize> = HashMap::new();
    let mut seen: HashMap<(usize, usize), u64> = HashMap::new();
    let mut entries: Vec<(usize, usize, u8)> = Vec::new();

    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 3 {
            return Err(parse_err(
                line,
                format!("expected 3 fields, found {}", record.len()),
            ));
        }
        let (subject, stimulus, raw) = (&record[0], &record[1], &record[2]);
        if subject.is_empty() || stimulus.is_empty() {
            return Err(parse_err(line, "empty subject or stimulus id".into()));
        }
        let rating: u8 = raw
            .parse()
            .map_err(|_| parse_err(line, format!("rating '{raw}' is not an integer 1..5")))?;
        if !(MIN_RATING..=MAX_RATING).contains(&rating) {
            return Err(parse_err(line, format!("rating {rating} is outside 1..5")));
        }
        let u = *subject_idx.entry(subject.to_string()).or_insert_with(|| {
            subjects.push(subject.to_string());
            subjects.len() - 1
        });
        let x = *stimulus_idx.entry(stimulus.to_string()).or_insert_with(|| {
            stimuli.push(stimulus.to_string());
            stimuli.len() - 1
        });
        if let Some(first) = seen.insert((u, x), line) {
            return Err(parse_err(
                line,
                format!("duplicate rating of '{stimulus}' by '{subject}' (first on line {first})"),
            ));
        }
        entries.push((u, x, rating));
    }
    if entries.is_empty() {
        return Err(parse_err(1, "no ratings".into()));
    }
    let k = stimuli.len();
    let mut cells = vec![None; subjects.len() * k];
    for (u, x, r) in entries {
        cells[u * k + x] = Some(r);
    }
    RatingMatrix::new(subjects, stimuli, cells)
}

/// Writes the present cells, subject-major.
pub fn write_ratings_csv(m: &RatingMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(HEADER).map_err(|e| csv_error(path, e))?;
    for (u, subject) in m.subject_labels().iter().enumerate() {
        for (x, stimulus) in m.stimulus_labels().iter().enumerate() {
            if let Some(r) = m.rating(u, x) {
                w.write_record([subject.as_str(), stimulus.as_str(), &r.to_string()])
                    .map_err(|e| csv_error(path, e))?;
            }
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    Error::Archive {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    schema_version: u32,
    master_seed: u64,
    scenario: BiasScenario,
    grid: GridSpec,
    ps: Vec<f64>,
    cells: Vec<String>,
}

fn cell_file(c: &ArchiveCell) -> String {
    format!("cell_s{:03}_p{:03}.json", c.sigma_index, c.p_index)
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Archive {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes `manifest.json` plus one JSON file per grid cell.
pub fn write_archive(archive: &StudyArchive, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    archive.validate()?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let manifest = Manifest {
        schema_version: ARCHIVE_SCHEMA_VERSION,
        master_seed: archive.grid.master_seed,
        scenario: archive.scenario,
        grid: archive.grid.clone(),
        ps: archive.ps.clone(),
        cells: archive.cells.iter().map(cell_file).collect(),
    };
    for cell in &archive.cells {
        write_json(&dir.join(cell_file(cell)), cell)?;
    }
    write_json(&dir.join(MANIFEST), &manifest)
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Archive {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn read_archive(dir: impl AsRef<Path>) -> Result<StudyArchive> {
    let dir = dir.as_ref();
    let path = dir.join(MANIFEST);
    let raw: serde_json::Value = read_json(&path)?;
    let found = raw
        .get("schema_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| Error::Archive {
            path: path.clone(),
            message: "missing schema_version".into(),
        })?;
    if found != ARCHIVE_SCHEMA_VERSION as u64 {
        return Err(Error::SchemaVersion {
            found: found as u32,
            expected: ARCHIVE_SCHEMA_VERSION,
        });
    }
    let manifest: Manifest = serde_json::from_value(raw).map_err(|e| Error::Archive {
        path: path.clone(),
        message: e.to_string(),
    })?;
    let cells = manifest
        .cells
        .iter()
        .map(|name| read_json::<ArchiveCell>(&dir.join(name)))
        .collect::<Result<Vec<_>>>()?;
    let archive = StudyArchive {
        scenario: manifest.scenario,
        grid: manifest.grid,
        ps: manifest.ps,
        cells,
    };
    archive.validate().map_err(|e| Error::Archive {
        path,
        message: e.to_string(),
    })?;
    Ok(archive)
}

/// Heat map as CSV: σ labels in the first row and column.
pub fn heatmap_csv(h: &HeatMap) -> String {
    let mut out = String::from("sigma");
    for s in &h.sigma_grid {
        let _ = write!(out, ",{s}");
    }
    out.push('\n');
    for (s, row) in h.sigma_grid.iter().zip(&h.ratios) {
        let _ = write!(out, "{s}");
        for r in row {
            let _ = write!(out, ",{r}");
        }
        out.push('\n');
    }
    out
}

pub fn curves_csv(rows: &[CurveRow]) -> String {
    let mut out = String::from("measure,sigma,p,mean,ci_half_width,runs\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.measure, r.sigma, r.p, r.mean, r.ci_half_width, r.runs
        );
    }
    out
}

pub fn write_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    let path = path.as_ref();
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}

/// p-value in the `4.44E-05` style.
pub fn format_p(p: f64) -> String {
    let s = format!("{p:.2e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    format!(
        "{mantissa}E{}{:02}",
        if exp < 0 { '-' } else { '+' },
        exp.abs()
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetDescriptor {
    pub name: String,
    pub path: PathBuf,
    pub expected_subjects: Option<usize>,
    pub expected_stimuli: Option<usize>,
}

impl DatasetDescriptor {
    pub fn new(name: impl Into<String>, path: impl Into<PathBuf>) -> Self {
        DatasetDescriptor {
            name: name.into(),
            path: path.into(),
            expected_subjects: None,
            expected_stimuli: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub name: String,
    pub n_subjects: usize,
    pub n_stimuli: usize,
    pub l: MeasureEstimate,
    pub g: MeasureEstimate,
    pub a: MeasureEstimate,
}

impl ReportRow {
    pub fn estimate(&self, kind: MeasureKind) -> &MeasureEstimate {
        match kind {
            MeasureKind::L => &self.l,
            MeasureKind::G => &self.g,
            MeasureKind::A => &self.a,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairRow {
    pub first: String,
    pub second: String,
    pub method: Method,
    pub p_value: f64,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrecisionReport {
    /// Sorted by ascending `l` (most precise first).
    pub rows: Vec<ReportRow>,
    pub comparisons: Vec<PairRow>,
    /// Datasets that could not be ingested or measured, with the reason.
    pub failures: Vec<(String, String)>,
    pub alpha: f64,
}

fn measure_dataset(d: &DatasetDescriptor) -> Result<ReportRow> {
    let m = read_ratings_csv(&d.path)?;
    let check = |what: &str, want: Option<usize>, got: usize| match want {
        Some(w) if w != got => Err(Error::InvalidMatrix(format!(
            "expected {w} {what}, found {got}"
        ))),
        _ => Ok(()),
    };
    check("subjects", d.expected_subjects, m.n_subjects())?;
    check("stimuli", d.expected_stimuli, m.n_stimuli())?;
    Ok(ReportRow {
        name: d.name.clone(),
        n_subjects: m.n_subjects(),
        n_stimuli: m.n_stimuli(),
        l: l_measure(&m)?,
        g: g_measure(&m)?,
        a: sos_a(&m)?,
    })
}

/// Measures every dataset and compares every pair with the l, g and a tests.
/// A dataset that fails is listed in `failures`; the others are still
/// processed.
pub fn precision_report(datasets: &[DatasetDescriptor], alpha: f64) -> Result<PrecisionReport> {
    let mut names = HashSet::new();
    for d in datasets {
        if d.name.trim().is_empty() {
            return Err(Error::Contract("dataset names must be non-empty".into()));
        }
        if !names.insert(d.name.as_str()) {
            return Err(Error::Contract(format!("duplicate dataset name '{}'", d.name)));
        }
    }
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for d in datasets {
        match measure_dataset(d) {
            Ok(r) => rows.push(r),
            Err(e) => failures.push((d.name.clone(), e.to_string())),
        }
    }
    rows.sort_by(|x, y| x.l.value.total_cmp(&y.l.value));
    let mut comparisons = Vec::new();
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            for method in [Method::L, Method::G, Method::A] {
                let kind = method.measure().expect("measure-based");
                let o = compare_estimates(rows[i].estimate(kind), rows[j].estimate(kind), alpha)?;
                comparisons.push(PairRow {
                    first: rows[i].name.clone(),
                    second: rows[j].name.clone(),
                    method,
                    p_value: o.p_value,
                    significant: o.significant,
                });
            }
        }
    }
    Ok(PrecisionReport {
        rows,
        comparisons,
        failures,
        alpha,
    })
}

const SE_A_NOTE: &str = "SE(a) = sqrt(nu) with nu = 1 / sum((5-m)^2 (m-1)^2), not scaled by the residual variance";

impl PrecisionReport {
    pub fn measures_csv(&self) -> String {
        let mut out = String::from("dataset,subjects,stimuli,l,se_l,g,se_g,a,se_a\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{:.3},{:.4},{:.3},{:.4},{:.3},{:.4}",
                r.name, r.n_subjects, r.n_stimuli, r.l.value, r.l.se, r.g.value, r.g.se,
                r.a.value, r.a.se
            );
        }
        out
    }

    pub fn comparisons_csv(&self) -> String {
        let mut out = String::from("first,second,method,p_value,significant\n");
        for c in &self.comparisons {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                c.first,
                c.second,
                c.method,
                format_p(c.p_value),
                c.significant
            );
        }
        out
    }

    /// Both tables as aligned plain text.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let head = ["dataset", "N", "K", "l", "SE(l)", "g", "SE(g)", "a", "SE(a)"];
        let body: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.name.clone(),
                    r.n_subjects.to_string(),
                    r.n_stimuli.to_string(),
                    format!("{:.3}", r.l.value),
                    format!("{:.4}", r.l.se),
                    format!("{:.3}", r.g.value),
                    format!("{:.4}", r.g.se),
                    format!("{:.3}", r.a.value),
                    format!("{:.4}", r.a.se),
                ]
            })
            .collect();
        out.push_str("Precision measures (sorted by l)\n");
        out.push_str(&align(&head, &body));
        let _ = writeln!(out, "note: {SE_A_NOTE}");

        let head = ["first", "second", "method", "p-value", "significant"];
        let body: Vec<Vec<String>> = self
            .comparisons
            .iter()
            .map(|c| {
                vec![
                    c.first.clone(),
                    c.second.clone(),
                    c.method.to_string(),
                    format_p(c.p_value),
                    if c.significant { "yes" } else { "no" }.to_string(),
                ]
            })
            .collect();
        let _ = writeln!(out, "\nPairwise comparisons (alpha = {})", self.alpha);
        out.push_str(&align(&head, &body));
        for (name, why) in &self.failures {
            let _ = writeln!(out, "failed: {name}: {why}");
        }
        out
    }
}

fn align(head: &[&str], body: &[Vec<String>]) -> String {
    let mut width: Vec<usize> = head.iter().map(|h| h.chars().count()).collect();
    for row in body {
        for (w, cell) in width.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let mut line = |cells: Vec<&str>| {
        let parts: Vec<String> = cells
            .iter()
            .zip(&width)
            .enumerate()
            .map(|(i, (c, w))| {
                if i == 0 {
                    format!("{c:<w$}")
                } else {
                    format!("{c:>w$}")
                }
            })
            .collect();
        out.push_str(parts.join("  ").trim_end());
        out.push('\n');
    };
    line(head.to_vec());
    for row in body {
        line(row.iter().map(String::as_str).collect());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentConfig;
    use crate::generator::simulate_experiment;
    use std::io::Cursor;

    fn parse(text: &str) -> Result<RatingMatrix> {
        read_ratings(Cursor::new(text.as_bytes()), Path::new("mem.csv"))
    }

    #[test]
    fn three_rows() {
        let m = parse("subject_id,stimulus_id,rating\na,x,3\nb,x,4\nc,x,5\n").unwrap();
        assert_eq!((m.n_subjects(), m.n_stimuli()), (3, 1));
        assert_eq!(m.rating(2, 0), Some(5));
    }

    #[test]
    fn out_of_range_names_line() {
        let err = parse("subject_id,stimulus_id,rating\na,x,3\nb,x,6\n").unwrap_err();
        match err {
            Error::Parse { line, message, .. } => {
                assert_eq!(line, 3);
                assert!(message.contains('6'));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_rows() {
        assert!(matches!(
            parse("subject_id,stimulus_id,rating\na,x,3\nb,x\n"),
            Err(Error::Parse { line: 3, .. })
        ));
        assert!(matches!(
            parse("subject_id,stimulus_id,rating\na,x,3.5\nb,x,1\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse("subject,stimulus,score\na,x,3\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(parse("subject_id,stimulus_id,rating\n").is_err());
    }

    #[test]
    fn duplicate_rejected() {
        let err = parse("subject_id,stimulus_id,rating\na,x,3\nb,x,4\na,x,2\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }));
    }

    #[test]
    fn missing_cells_allowed() {
        let m = parse("subject_id,stimulus_id,rating\na,x,3\nb,x,4\na,y,2\nc,y,2\n").unwrap();
        assert_eq!(m.rating(1, 1), None);
        assert_eq!(m.present_count(), 4);
    }

    #[test]
    fn simulated_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        let cfg = ExperimentConfig::with_defaults(0.8, BiasScenario::mixed(), 0.5, 12);
        let m = simulate_experiment(&cfg).unwrap().ratings;
        write_ratings_csv(&m, &path).unwrap();
        assert_eq!(read_ratings_csv(&path).unwrap(), m);
    }

    #[test]
    fn p_format() {
        assert_eq!(format_p(4.44e-5), "4.44E-05");
        assert_eq!(format_p(0.354), "3.54E-01");
        assert_eq!(format_p(1.0), "1.00E+00");
        assert_eq!(format_p(0.0), "0.00E+00");
        assert_eq!(format_p(3.29e-45), "3.29E-45");
        assert_eq!(format_p(9.996e-3), "1.00E-02");
    }

    #[test]
    fn aligned_columns() {
        let t = align(&["a", "bb"], &[vec!["long".into(), "1".into()]]);
        assert_eq!(t, "a     bb\nlong   1\n");
    }
}
