//! End-to-end tests against the compiled binary.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hitenrich"))
}

fn temp_path(name: &str) -> PathBuf {
    let mut path = std::env::temp_dir();
    path.push(format!("hitenrich_cli_{}_{name}", std::process::id()));
    path
}

// 60 ligands, 12 actives; algorithm `good` ranks actives high, `bad` is
// the reverse of `good`, `tied` has heavy ties.
fn write_dataset(tag: &str) -> PathBuf {
    let path = temp_path(&format!("{tag}_data.csv"));
    let mut rows = String::from("id,activity,good,bad,tied\n");
    for i in 0..60 {
        let active = i % 5 == 0;
        let good = if active { 100.0 + i as f64 } else { i as f64 };
        let bad = -good;
        let tied = (good / 25.0).floor();
        rows.push_str(&format!(
            "m{i},{},{good},{bad},{tied}\n",
            if active { 1 } else { 0 }
        ));
    }
    std::fs::write(&path, rows).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

#[test]
fn curve_csv_has_header_and_reference_curves() {
    let data = write_dataset("curvecsv");
    let out = run(&[
        "curve",
        "--in",
        data.to_str().unwrap(),
        "--algos",
        "good,bad",
        "--grid",
        "0.1,0.5,1.0",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("# hitenrich "));
    assert!(text.contains("# config "));
    assert!(text.contains("algorithm,kind,r,n_tested,value"));
    assert!(text.contains("ideal,"));
    assert!(text.contains("random,"));
    // perfect ranking reaches full recall at r = 0.5
    assert!(text.contains("good,recall,0.5,30,1"));
    std::fs::remove_file(data).ok();
}

#[test]
fn negate_recovers_reversed_ranking() {
    let data = write_dataset("negate");
    let plain = run(&[
        "curve",
        "--in",
        data.to_str().unwrap(),
        "--algos",
        "good",
        "--grid",
        "0.2",
    ]);
    let negated = run(&[
        "curve",
        "--in",
        data.to_str().unwrap(),
        "--algos",
        "bad",
        "--negate",
        "bad",
        "--grid",
        "0.2",
    ]);
    let value = |o: &Output| {
        String::from_utf8_lossy(&o.stdout)
            .lines()
            .last()
            .unwrap()
            .rsplit(',')
            .next()
            .unwrap()
            .to_string()
    };
    assert_eq!(value(&plain), value(&negated));
    std::fs::remove_file(data).ok();
}

#[test]
fn missing_column_exits_with_data_error() {
    let data = write_dataset("missing");
    let out = run(&["curve", "--in", data.to_str().unwrap(), "--algos", "nope"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope"));
    std::fs::remove_file(data).ok();
}

#[test]
fn invalid_rho_exits_with_validation_error() {
    let out = run(&[
        "simulate", "power", "--rho", "1.5", "--n", "200", "--reps", "5",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn compare_identical_columns_never_rejects() {
    let path = temp_path("same.csv");
    let mut rows = String::from("activity,a,b\n");
    for i in 0..50 {
        rows.push_str(&format!("{},{},{}\n", if i % 4 == 0 { 1 } else { 0 }, i, i));
    }
    std::fs::write(&path, rows).unwrap();
    let out = run(&[
        "compare",
        "--in",
        path.to_str().unwrap(),
        "--algos",
        "a,b",
        "--grid",
        "0.1,0.3",
        "--methods",
        "emproc,mcnemar,indjz,corrbinom",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for line in text.lines().skip(3) {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[7], "0", "diff must be zero: {line}");
        assert_eq!(fields[10], "1", "p must be one: {line}");
    }
    std::fs::remove_file(path).ok();
}

#[test]
fn bands_rerun_with_same_seed_is_bit_identical() {
    let data = write_dataset("sameppair");
    let out = temp_path("band.json");
    let mut captures: Vec<Vec<u8>> = Vec::new();
    for _ in 0..2 {
        let status = bin()
            .args([
                "bands",
                "--in",
                data.to_str().unwrap(),
                "--algos",
                "good",
                "--single",
                "--grid",
                "0.1,0.3,0.6",
                "--method",
                "supt",
                "--plus",
                "--draws",
                "20000",
                "--seed",
                "99",
                "--format",
                "json",
                "--out",
                out.to_str().unwrap(),
            ])
            .status()
            .unwrap();
        assert!(status.success());
        captures.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(captures[0], captures[1]);
    std::fs::remove_file(data).ok();
    std::fs::remove_file(out).ok();
}

#[test]
fn simulate_rerun_with_same_seed_is_bit_identical() {
    let out = temp_path("study.csv");
    let mut captures: Vec<Vec<u8>> = Vec::new();
    for _ in 0..2 {
        let status = bin()
            .args([
                "simulate",
                "power",
                "--family",
                "bibeta",
                "--rho",
                "0.9",
                "--n",
                "500",
                "--pi-plus",
                "0.1",
                "--reps",
                "50",
                "--seed",
                "7",
                "--grid-counts",
                "10,25",
                "--out",
                out.to_str().unwrap(),
            ])
            .status()
            .unwrap();
        assert!(status.success());
        captures.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(captures[0], captures[1]);
    std::fs::remove_file(out).ok();
}

#[test]
fn svg_output_is_wellformed() {
    let data = write_dataset("bandsdet");
    let out = temp_path("curve.svg");
    let status = bin()
        .args([
            "curve",
            "--in",
            data.to_str().unwrap(),
            "--algos",
            "good,tied",
            "--format",
            "svg",
            "--out",
            out.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("<svg"));
    assert!(text.trim_end().ends_with("</svg>"));
    assert!(text.contains("hitenrich"));
    assert!(text.contains("ideal"));
    std::fs::remove_file(data).ok();
    std::fs::remove_file(out).ok();
}

#[test]
fn bands_toggle_orders_widths() {
    let data = write_dataset("svg");
    let run_method = |method: &str| -> f64 {
        let out = run(&[
            "bands",
            "--in",
            data.to_str().unwrap(),
            "--algos",
            "good",
            "--single",
            "--grid",
            "0.1,0.3,0.6",
            "--method",
            method,
            "--draws",
            "20000",
            "--seed",
            "5",
        ]);
        assert!(out.status.success());
        let text = String::from_utf8(out.stdout).unwrap();
        // q column of the first data row
        text.lines()
            .nth(3)
            .unwrap()
            .split(',')
            .nth(5)
            .unwrap()
            .parse()
            .unwrap()
    };
    let supt = run_method("supt");
    let bonf = run_method("bonferroni");
    assert!(supt <= bonf * 1.005, "{supt} vs {bonf}");
    std::fs::remove_file(data).ok();
}

#[test]
fn coverage_band_single_needs_case() {
    let out = run(&[
        "simulate",
        "coverage",
        "--target",
        "band-single",
        "--n",
        "300",
        "--reps",
        "5",
    ]);
    assert_eq!(out.status.code(), Some(2));
}
