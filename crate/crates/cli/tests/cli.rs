//! End-to-end checks of the command-line surface: exit codes, validation
//! messages, output headers, and override precedence.

use std::fs;
use std::process::{Command, Output};

use xpv_core::protocols::EstimateReport;

fn xpv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_xpv"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("utf-8 stderr")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

#[test]
fn missing_experiment_exits_with_config_error() {
    let out = xpv(&[]);
    assert_eq!(code(&out), 2);
    let err = stderr(&out);
    assert!(err.contains("experiment"), "{err}");
    assert!(err.contains("required"), "{err}");
}

#[test]
fn unknown_experiment_name_is_reported() {
    let out = xpv(&["frobnicate"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("frobnicate"));
}

#[test]
fn out_of_range_probability_names_the_key() {
    let out = xpv(&["budget", "--set", "p_2q=1.5"]);
    assert_eq!(code(&out), 2);
    let err = stderr(&out);
    assert!(err.contains("p_2q"), "{err}");
    assert!(err.contains("outside [0, 1]"), "{err}");
}

#[test]
fn unphysical_coherence_times_are_rejected() {
    let out = xpv(&["budget", "--set", "t1_us=10", "--set", "t2_us=25"]);
    assert_eq!(code(&out), 2);
    let err = stderr(&out);
    assert!(err.contains("t2_us"), "{err}");
    assert!(err.contains("unphysical"), "{err}");
}

#[test]
fn pipeline_failures_name_the_stage_and_exit_3() {
    let out = xpv(&["budget", "--n", "1", "--out", "/dev/null/nested"]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("pipeline error at stage"), "{}", stderr(&out));
}

#[test]
fn budget_table_prints_three_lines_with_measurement_largest() {
    let dir = tempfile::tempdir().unwrap();
    let out = xpv(&["budget", "--n", "1", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3, "{text}");
    let fraction = |line: &str| -> f64 {
        line.rsplit_once('=').unwrap().1.parse().unwrap()
    };
    assert!(lines[0].contains("source=measurement"));
    let meas = fraction(lines[0]);
    assert!(meas > fraction(lines[1]) && meas > fraction(lines[2]), "{text}");

    let csv = fs::read_to_string(dir.path().join("budget.csv")).unwrap();
    assert!(csv.contains("# experiment = \"budget\""));
    assert!(csv.contains("# seed = 7"));
    assert!(csv.contains("n,source,fraction"));
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 4);
}

#[test]
fn ghz_fidelity_example_lands_in_the_expected_band() {
    let dir = tempfile::tempdir().unwrap();
    let out = xpv(&["ghz-fidelity", "--n", "3", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    let fidelity: f64 = text
        .trim()
        .rsplit_once('=')
        .expect("fidelity field")
        .1
        .parse()
        .unwrap();
    assert!((0.948..=0.968).contains(&fidelity), "{text}");
}

#[test]
fn config_file_applies_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    fs::write(
        &path,
        "experiment = \"ghz-fidelity\"\nn = 1\nnoiseless = true\n",
    )
    .unwrap();
    let out = xpv(&[
        "--config",
        path.to_str().unwrap(),
        "--n",
        "2",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let csv = fs::read_to_string(dir.path().join("ghz_fidelity.csv")).unwrap();
    let rows: Vec<&str> = csv
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("n,"))
        .collect();
    assert_eq!(rows.len(), 1, "{csv}");
    let (n, fidelity) = rows[0].split_once(',').unwrap();
    assert_eq!(n, "2", "flag must override the file's n = 1");
    assert!((fidelity.parse::<f64>().unwrap() - 1.0).abs() < 1e-9, "{csv}");
}

#[test]
fn sweep_reports_roundtrip_with_headers_intact() {
    let dir = tempfile::tempdir().unwrap();
    let out = xpv(&[
        "phase-sweep",
        "--protocol",
        "bbm",
        "--n",
        "1",
        "--noiseless",
        "--shots",
        "2000",
        "--phases",
        "5",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let path = dir.path().join("sweep_bbm_n1.jsonl");
    let text = fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("# experiment = \"phase-sweep\""));
    let reports =
        EstimateReport::read_jsonl(std::io::BufReader::new(fs::File::open(&path).unwrap()))
            .unwrap();
    assert_eq!(reports.len(), 5);
    assert!((reports[0].overlap - 1.0).abs() < 0.05);
}

#[test]
fn budget_alias_covers_all_sizes() {
    let dir = tempfile::tempdir().unwrap();
    let out = xpv(&["tableA2", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(stdout(&out).lines().count(), 9);
    let csv = fs::read_to_string(dir.path().join("budget.csv")).unwrap();
    let rows: Vec<&str> = csv
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("n,"))
        .collect();
    assert_eq!(rows.len(), 9);
    for n in 1..=3 {
        assert_eq!(rows.iter().filter(|r| r.starts_with(&format!("{n},"))).count(), 3);
    }
}

#[test]
fn identical_invocations_are_byte_identical() {
    let run = |dir: &std::path::Path| {
        let out = xpv(&[
            "phase-sweep",
            "--protocol",
            "bbm",
            "--n",
            "1",
            "--shots",
            "3000",
            "--phases",
            "3",
            "--out",
            dir.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        stdout(&out)
    };
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(run(a.path()), run(b.path()));
    let fa = fs::read(a.path().join("sweep_bbm_n1.jsonl")).unwrap();
    let fb = fs::read(b.path().join("sweep_bbm_n1.jsonl")).unwrap();
    assert_eq!(fa, fb);
}
