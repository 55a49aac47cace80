use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use atlas_metrics::MetricsReport;
use atlas_sim::{run_scenario, Scenario};
use serde_json::Value;

fn atlas(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_atlas"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn repo_file(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .join(rel)
}

fn small_scenario(dir: &Path) -> PathBuf {
    let s = Scenario {
        name: "small".into(),
        nodes: 10,
        width: 600.0,
        duration: 0.4,
        ..Scenario::default()
    };
    let path = dir.join("small.toml");
    fs::write(&path, s.to_toml()).unwrap();
    path
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn run_writes_reproducible_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let scenario = small_scenario(tmp.path());
    let o = atlas(&[
        "run",
        scenario.to_str().unwrap(),
        "--seed",
        "7",
        "--replicates",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let csv = fs::read_to_string(out.join("results.csv")).unwrap();
    assert!(csv.starts_with(&format!(
        "# atlas {}\n# scenario {{",
        env!("CARGO_PKG_VERSION")
    )));
    let reports = MetricsReport::from_csv(&csv).unwrap();
    assert_eq!(
        reports.iter().map(|r| r.seed).collect::<Vec<_>>(),
        [7, 8, 9]
    );

    let summary = json(&out.join("summary.json"));
    assert_eq!(
        summary["version"],
        format!("atlas {}", env!("CARGO_PKG_VERSION"))
    );
    let resolved: Scenario = serde_json::from_value(summary["scenario"].clone()).unwrap();
    assert_eq!(resolved.seed, 7);
    // The embedded scenario alone reproduces the second replicate.
    let again = run_scenario(&Scenario {
        seed: 8,
        ..resolved
    })
    .unwrap();
    assert_eq!(again.report, reports[1]);
}

#[test]
fn schema_errors_exit_nonzero_without_output() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    for (name, body) in [
        ("unknown.toml", "nodes = 5\ncolour = \"blue\"\n"),
        ("range.toml", "[node]\np_min = 0.3\np_default = 0.05\n"),
        ("syntax.toml", "nodes = = 5\n"),
    ] {
        let path = tmp.path().join(name);
        fs::write(&path, body).unwrap();
        let o = atlas(&[
            "run",
            path.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(2), "{name}");
        assert!(!String::from_utf8_lossy(&o.stderr).is_empty());
        assert!(!out.exists(), "{name} produced output");
    }
    let o = atlas(&["run", tmp.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweep_covers_the_grid_and_ignores_worker_count() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = small_scenario(tmp.path());
    let mut summaries = Vec::new();
    for jobs in ["1", "3"] {
        let out = tmp.path().join(format!("sweep{jobs}"));
        let o = atlas(&[
            "sweep",
            scenario.to_str().unwrap(),
            "--axis",
            "p_default=0.02,0.1",
            "--axis",
            "t_lost_nbr=0.5,2",
            "--replicates",
            "2",
            "--jobs",
            jobs,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
        let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
        assert!(rows[0].starts_with("p_default,t_lost_nbr,seed,"));
        assert_eq!(rows.len(), 1 + 4 * 2);
        assert!(rows[1].starts_with("0.02,0.5,1,"));
        assert!(rows[8].starts_with("0.1,2,2,"));
        summaries.push(fs::read_to_string(out.join("summary.json")).unwrap());
    }
    assert_eq!(summaries[0], summaries[1]);
    let v: Value = serde_json::from_str(&summaries[0]).unwrap();
    assert_eq!(v["points"][3]["scenario"]["node"]["t_lost_nbr"], 2.0);
}

#[test]
fn sweep_rejects_bad_axes_and_points() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = small_scenario(tmp.path());
    let s = scenario.to_str().unwrap();
    assert_eq!(
        atlas(&["sweep", s, "--axis", "colour=1"]).status.code(),
        Some(2)
    );
    // p_default below the default p_min fails validation before anything runs.
    let out = tmp.path().join("out");
    let o = atlas(&[
        "sweep",
        s,
        "--axis",
        "p_default=0.001",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn oracle_solves_the_worked_example() {
    let problem = repo_file("scenarios/fig2-problem.toml");
    let o = atlas(&["oracle", problem.to_str().unwrap(), "--engine"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["lex_max_min"], true);
    let got: Vec<f64> = (1..=7)
        .map(|i| v["allocation"][i.to_string()].as_f64().unwrap())
        .collect();
    let want = [0.20, 0.20, 0.20, 0.20, 0.55, 0.05, 0.20];
    for (g, w) in got.iter().zip(want) {
        assert!((g - w).abs() < 1e-12, "{got:?}");
    }
    assert_eq!(v["engine"]["fixed_point"], true);
    assert!(v["engine"]["max_abs_diff"].as_f64().unwrap() <= 2.0 / 255.0);
}

#[test]
fn presets_round_trip_through_run() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("preset.toml");
    let o = atlas(&[
        "presets",
        "demand-change",
        "--config",
        "physical",
        "--load",
        "small20",
        "--change",
        "remove",
        "--nodes",
        "8",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = Scenario::from_toml(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(s.nodes, 8);
    assert_eq!(s.name, "demand-remove-large-physical-small20");

    let full = atlas(&["presets", "init-convergence", "--full"]);
    let text = String::from_utf8(full.stdout).unwrap();
    assert_eq!(Scenario::from_toml(&text).unwrap().nodes, 50);
    for file in [
        "fig2.toml",
        "init-nominal-large20.toml",
        "link-add-small80.toml",
    ] {
        let text = fs::read_to_string(repo_file(&format!("scenarios/{file}"))).unwrap();
        Scenario::from_toml(&text).unwrap();
    }
}

#[test]
fn trace_files_carry_the_scenario() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let fig2 = repo_file("scenarios/fig2.toml");
    let o = atlas(&[
        "run",
        fig2.to_str().unwrap(),
        "--trace",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let trace = fs::read_to_string(out.join("trace-1.txt")).unwrap();
    let mut lines = trace.lines();
    assert!(lines.next().unwrap().starts_with("# atlas "));
    assert!(lines.next().unwrap().contains("\"fig2\""));
    assert!(lines.any(|l| l.contains("outcome=")));
    let summary = json(&out.join("summary.json"));
    assert!(summary["replicates"][0]["claims"].as_array().unwrap().len() > 10);
    assert_eq!(
        atlas(&["run", fig2.to_str().unwrap(), "--trace"])
            .status
            .code(),
        Some(2)
    );
}
