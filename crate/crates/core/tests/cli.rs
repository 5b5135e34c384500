use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_expprec"))
}

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn simulate(dir: &Path, scenario: &str, jobs: &str) {
    let o = run(&[
        "simulate",
        "--scenario",
        scenario,
        "--sigmas",
        "0.5,0.9",
        "--ps",
        "0.3,0.8",
        "--reps",
        "6",
        "--seed",
        "11",
        "--jobs",
        jobs,
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn help_matches_golden_files() {
    for cmd in ["", "simulate", "curves", "heatmap", "mae", "measure", "compare", "report"] {
        let args: Vec<&str> = [cmd, "--help"].into_iter().filter(|a| !a.is_empty()).collect();
        let o = run(&args);
        assert!(o.status.success());
        let golden = fs::read_to_string(data(&format!(
            "help/{}.txt",
            if cmd.is_empty() { "expprec" } else { cmd }
        )))
        .unwrap();
        assert_eq!(stdout(&o), golden, "help of '{cmd}'");
    }
}

#[test]
fn every_flag_documents_its_default() {
    for cmd in ["simulate", "heatmap", "compare", "report", "curves", "measure"] {
        let text = stdout(&run(&[cmd, "--help"]));
        for line in text.lines().filter(|l| l.trim_start().starts_with("--")) {
            let required = ["--archive", "--out <OUT>", "--a <A>", "--b <B>", "--input", "--dataset"]
                .iter()
                .any(|r| line.contains(r));
            assert!(
                line.contains("[default") || required,
                "{cmd}: optional flag without a default: {line}"
            );
        }
    }
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        vec!["simulate"],
        vec!["simulate", "--out", "x", "--scenario", "sideways"],
        vec!["heatmap", "--archive", "x", "--method", "zz"],
        vec!["compare", "--a", "x"],
        vec!["report", "--dataset", "broken"],
        vec!["measure", "--input", "x", "--bogus"],
        vec!["nonsense"],
    ] {
        let o = run(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn runtime_errors_exit_1_with_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "subject_id,stimulus_id,rating\ns1,x1,3\ns2,x1,9\n").unwrap();
    let o = run(&["measure", "--input", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.starts_with("error: ") && err.contains(":3:"), "{err}");

    let o = run(&["curves", "--archive", dir.path().join("missing").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["compare", "--a", bad.to_str().unwrap(), "--b", bad.to_str().unwrap(), "--alpha", "2"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn self_comparison_is_not_significant() {
    let f = data("sim_sigma050_nobias.csv");
    let f = f.to_str().unwrap();
    let o = run(&["compare", "--a", f, "--b", f]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 4);
    for line in text.lines() {
        assert!(line.ends_with("p = 1.00E+00, not significant"), "{line}");
    }
}

#[test]
fn compare_distinct_fixtures() {
    let o = run(&[
        "compare",
        "--a",
        data("sim_sigma050_nobias.csv").to_str().unwrap(),
        "--b",
        data("sim_sigma080_mixed.csv").to_str().unwrap(),
        "--method",
        "l",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("l: ") && text.trim_end().ends_with(", significant"), "{text}");
}

#[test]
fn measure_prints_and_writes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m.csv");
    let o = run(&[
        "measure",
        "--input",
        data("sim_sigma050_nobias.csv").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("subjects = 30, stimuli = 21"));
    assert!(text.contains("l = 0.515"), "{text}");
    assert!(text.contains("g = 0.961"), "{text}");
    assert!(text.contains("a = 0.108"), "{text}");
    let csv = fs::read_to_string(out).unwrap();
    assert!(csv.starts_with("l,se_l,g,se_g,a,se_a\n"));
}

#[test]
fn report_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let a = format!("A={}", data("sim_sigma050_nobias.csv").display());
    let b = format!("B={}", data("sim_sigma080_mixed.csv").display());
    let o = run(&["report", "--dataset", &a, "--dataset", &b, "--out-dir", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["measures.csv", "comparisons.csv", "report.txt"] {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
    let measures = fs::read_to_string(dir.path().join("measures.csv")).unwrap();
    assert_eq!(measures.lines().count(), 3);
}

#[test]
fn simulate_curves_heatmap_mae_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let arch = dir.path().join("arch");
    simulate(&arch, "mixed", "2");
    let arch = arch.to_str().unwrap();

    let o = run(&["curves", "--archive", arch]);
    assert!(o.status.success());
    let curves = stdout(&o);
    // header + 3 measures x 2 sigmas x 2 ps
    assert_eq!(curves.lines().count(), 1 + 12);

    for method in ["l", "g", "a", "pv"] {
        let o = run(&["heatmap", "--archive", arch, "--method", method, "--pairs", "40", "--seed", "3"]);
        assert!(o.status.success(), "{method}: {}", stderr(&o));
        assert_eq!(stdout(&o).lines().count(), 3);
    }
    let o = run(&["mae", "--archive", arch, "--pairs", "40", "--seed", "3"]);
    assert!(o.status.success());
    let mae: f64 = stdout(&o).trim().parse().unwrap();
    assert!((0.0..=1.0).contains(&mae));
}

#[test]
fn missing_seed_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "simulate",
        "--sigmas",
        "0.6",
        "--reps",
        "3",
        "--out",
        dir.path().join("a").to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(stderr(&o).starts_with("seed: "));
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn artifacts_do_not_depend_on_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("j1"), dir.path().join("j4"));
    simulate(&a, "mixed", "1");
    simulate(&b, "mixed", "4");
    assert_eq!(read_dir_sorted(&a), read_dir_sorted(&b));

    let maps: Vec<String> = ["1", "3"]
        .iter()
        .map(|jobs| {
            let o = run(&[
                "heatmap", "--archive", a.to_str().unwrap(), "--method", "pv", "--pairs", "50",
                "--seed", "8", "--jobs", jobs,
            ]);
            assert!(o.status.success());
            stdout(&o)
        })
        .collect();
    assert_eq!(maps[0], maps[1]);
}
