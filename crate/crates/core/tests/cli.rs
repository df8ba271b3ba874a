use std::path::Path;
use std::process::{Command, Output};

fn gapsched(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gapsched"))
        .args(args)
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

#[test]
fn validate_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = gapsched(&["validate"], dir.path());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{stdout}");
    assert!(stdout.lines().all(|l| l.starts_with("PASS")));
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "bad.json", r#"{"output_dir": "o", "learning": {"n": 4}}"#);
    write(dir.path(), "empty.json", r#"{"output_dir": "o"}"#);
    for args in [
        vec!["learn", "--config", "missing.json"],
        vec!["learn", "--config", "bad.json"],
        vec!["learn", "--config", "empty.json"],
        vec!["bench", "--config", "empty.json", "--curves", "."],
        vec!["angles", "--curve", "missing.json", "--p", "3", "--kappa", "1", "--q", "1"],
        vec!["gaps", "--instance", "empty.json"],
    ] {
        assert_eq!(gapsched(&args, dir.path()).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn learn_writes_declared_formats() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "exp.json",
        r#"{"learning": {"n": 4, "instances": 5, "grid_points": 21, "seed": 9}, "output_dir": "results"}"#,
    );
    let sub = dir.path().join("elsewhere");
    std::fs::create_dir(&sub).unwrap();
    // relative output_dir resolves against the config, not the working directory
    let out = gapsched(&["learn", "--config", "../exp.json"], &sub);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let res = dir.path().join("results");
    let head = |f: &str| std::fs::read_to_string(res.join(f)).unwrap().lines().next().unwrap().to_string();
    assert_eq!(head("gap_profiles.csv"), "instance_id,s,gap");
    assert_eq!(head("gap_aggregates.csv"), "s,mean,median");
    assert_eq!(head("final_gaps.csv"), "instance_id,final_gap");
    assert_eq!(head("fit_report.csv"), "curve,degree,rms_residual,min_value,min_at");
    let curve: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(res.join("curve_median.json")).unwrap()).unwrap();
    let keys: Vec<&str> = curve.as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(keys.len(), 4);
    for k in ["degree", "y", "source_profile_id", "rms_residual"] {
        assert!(keys.contains(&k));
    }
    assert_eq!(curve["degree"], 7);
    let manifest: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(res.join("learn_manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
    assert_eq!(manifest["outputs"].as_object().unwrap().len(), 6);

    let angles = gapsched(&["angles", "--curve", "results/curve_mean.json", "--p", "4", "--kappa", "2", "--q", "1"], dir.path());
    assert!(angles.status.success());
    let text = String::from_utf8(angles.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "k,s_k,gamma,beta");
    assert_eq!(lines.len(), 5);
    assert!(lines[4].starts_with("4,1,") && lines[4].ends_with(",0"));
}

#[test]
fn bench_writes_records_summary_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "exp.json",
        r#"{"learning": {"n": 4, "instances": 5, "grid_points": 21, "seed": 9},
            "benchmark": {"problem_class": "maxcut_3reg_unweighted", "n": 6, "instances": 2, "p_range": [1, 2], "budget": 20, "seed": 1},
            "output_dir": "out", "workers": 2}"#,
    );
    assert!(gapsched(&["learn", "--config", "exp.json"], dir.path()).status.success());
    let out = gapsched(&["bench", "--config", "exp.json", "--curves", "out"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let records = std::fs::read_to_string(dir.path().join("out/records.csv")).unwrap();
    assert_eq!(records.lines().count(), 1 + 2 * 3 * 2);
    assert!(records.starts_with("problem_class,instance_id,method,p,ratio,best_value,evaluations_used,params,error\n"));
    let summary = std::fs::read_to_string(dir.path().join("out/summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1 + 3 * 2);
    let diff = std::fs::read_to_string(dir.path().join("out/ratio_difference.csv")).unwrap();
    assert_eq!(diff.lines().count(), 1 + 2 * 2);
    assert!(dir.path().join("out/bench_manifest.json").exists());
}

#[test]
fn gaps_for_qubo_and_graph_documents() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "q.json", r#"{"n": 1, "coeffs": [[0, 0, 2.0]], "bounds_hint": [-2.0, 2.0]}"#);
    write(dir.path(), "g.json", r#"{"n": 4, "edges": [[0,1,1.0],[0,2,1.0],[0,3,1.0],[1,2,1.0],[1,3,1.0],[2,3,1.0]]}"#);
    let q = gapsched(&["gaps", "--instance", "q.json", "--grid", "3"], dir.path());
    assert!(q.status.success());
    let text = String::from_utf8(q.stdout).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "s,gap");
    assert_eq!(rows.len(), 4);
    // h = -1 at s = 1: levels -1 and +1
    let last: f64 = rows[3].split(',').nth(1).unwrap().parse().unwrap();
    assert!((last - 2.0).abs() < 1e-9);
    let g = gapsched(&["gaps", "--instance", "g.json", "--grid", "5", "--out", "k4.csv"], dir.path());
    assert!(g.status.success());
    let csv = std::fs::read_to_string(dir.path().join("k4.csv")).unwrap();
    // K4 has six degenerate maximum cuts
    let last: f64 = csv.lines().last().unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!(last.abs() < 1e-9);
}
