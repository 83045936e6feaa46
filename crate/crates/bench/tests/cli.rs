//! The `fann-bench` binary end to end on small synthetic networks.

use std::path::Path;
use std::process::{Command, Output};

fn bench(work: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fann-bench"))
        .arg("--data-dir")
        .arg(work)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn csv_rows(text: &str) -> Vec<csv::StringRecord> {
    let body: String = text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
    csv::Reader::from_reader(body.as_bytes()).records().map(|r| r.unwrap()).collect()
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&bench(dir.path(), &["--no-such-flag"])), 1);
    assert_eq!(code(&bench(dir.path(), &["sweep", "--dataset", "grid:6", "--agg", "median"])), 1);
    assert_eq!(code(&bench(dir.path(), &["query", "--dataset", "NY"])), 1, "missing DIMACS files");
    assert_eq!(code(&bench(dir.path(), &["--help"])), 0);
}

#[test]
fn verify_passes_and_catches_planted_faults() {
    let dir = tempfile::tempdir().unwrap();
    let base = ["verify", "--dataset", "grid:12", "--capacity", "4", "--label-pairs", "500", "--differential", "5"];
    let ok = bench(dir.path(), &base);
    let stdout = String::from_utf8_lossy(&ok.stdout);
    assert_eq!(code(&ok), 0, "{stdout}");
    assert!(stdout.contains("verify: all audits passed"));

    for (fault, audit) in [("radius", "mtree-covering-radii"), ("parent-dist", "mtree-parent-dist")] {
        let args: Vec<&str> = base.iter().copied().chain(["--plant-fault", fault]).collect();
        let bad = bench(dir.path(), &args);
        let stdout = String::from_utf8_lossy(&bad.stdout);
        assert_eq!(code(&bad), 2, "{stdout}");
        let line = stdout.lines().find(|l| l.contains(audit)).unwrap();
        assert!(line.starts_with("FAIL"), "{line}");
    }
}

#[test]
fn sweep_row_counts_follow_the_grid() {
    let dir = tempfile::tempdir().unwrap();
    let args =
        ["sweep", "--dataset", "grid:8", "--capacity", "4", "--trials", "2", "--m", "4", "--phi", "0.5,1.0"];
    let out = bench(dir.path(), &args);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(&String::from_utf8(out.stdout).unwrap());
    let trials = rows.iter().filter(|r| &r[0] == "trial").count();
    let means = rows.iter().filter(|r| &r[0] == "mean").count();
    // per cell: trials x engines x kinds
    assert_eq!(trials, 2 * (2 * 2 * 2));
    assert_eq!(means, 2 * (2 * 2));
    // engines agree trial by trial
    for pair in rows.iter().filter(|r| &r[0] == "trial").collect::<Vec<_>>().chunks(2) {
        assert_eq!(pair[0][11], pair[1][11]);
    }
}

#[test]
fn sweeps_are_deterministic_apart_from_timing() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["sweep", "--dataset", "rgg:300", "--capacity", "8", "--trials", "3", "--m", "8,16"];
    let strip = |o: Output| -> Vec<String> {
        assert_eq!(code(&o), 0);
        String::from_utf8(o.stdout)
            .unwrap()
            .lines()
            .map(|l| if l.starts_with('#') { l.to_string() } else { l.rsplit_once(',').unwrap().0.to_string() })
            .collect()
    };
    let a = strip(bench(dir.path(), &args));
    // second run reads the cached artifacts
    let b = strip(bench(dir.path(), &args));
    assert_eq!(a, b);
    let other = tempfile::tempdir().unwrap();
    assert_eq!(a, strip(bench(other.path(), &args)), "fresh build gives the same CSV");
}

#[test]
fn query_prints_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = bench(
        dir.path(),
        &["query", "--dataset", "grid:10", "--capacity", "4", "--queries", "0,9,90,99", "--phi", "0.5", "--k", "3"],
    );
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["m"], 2);
    let results = v["results"].as_array().unwrap();
    assert_eq!(results.len(), 3);
    let values: Vec<u64> = results.iter().map(|r| r["g_phi"].as_u64().unwrap()).collect();
    assert!(values.windows(2).all(|w| w[0] <= w[1]));
    for r in results {
        assert_eq!(r["subset"].as_array().unwrap().len(), 2);
    }

    let brute = bench(
        dir.path(),
        &["query", "--dataset", "grid:10", "--capacity", "4", "--queries", "0,9,90,99", "--phi", "0.5", "--k", "3", "--engine", "brute"],
    );
    let w: serde_json::Value = serde_json::from_slice(&brute.stdout).unwrap();
    let brute_values: Vec<u64> = w["results"].as_array().unwrap().iter().map(|r| r["g_phi"].as_u64().unwrap()).collect();
    assert_eq!(values, brute_values);
}
