use std::path::Path;
use std::process::{Command, Output};

fn tikflow(args: &[&str], env_out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_tikflow"));
    cmd.args(args).env_remove("TIKFLOW_OUT");
    if let Some(p) = env_out {
        cmd.env("TIKFLOW_OUT", p);
    }
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn only_flag_selects_one_criterion() {
    let o = tikflow(&["accept", "--only", "weak_rates"], None);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 1, "{out}");
    assert!(lines[0].starts_with("A1") && lines[0].contains("PASS"), "{out}");
}

#[test]
fn unknown_criterion_is_an_error() {
    let o = tikflow(&["accept", "--only", "A99"], None);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("A99"));
}

#[test]
fn corrupted_corpus_names_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken_corpus.json");
    std::fs::write(&path, "{\"schema_version\": 1, \"members\": [").unwrap();
    let o = tikflow(&["--corpus", path.to_str().unwrap(), "accept", "--only", "A7"], None);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("broken_corpus.json"), "{}", stderr(&o));

    let missing = dir.path().join("missing.json");
    let o = tikflow(&["--corpus", missing.to_str().unwrap(), "run"], None);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("missing.json"));
}

#[test]
fn custom_corpus_file_is_used() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("corpus.json");
    std::fs::write(
        &path,
        r#"{"schema_version": 1, "members": [
            {"id": "bowl", "kind": "quadratic", "a": [[1.0, 0.0], [0.0, 2.0]], "b": [1.0, 2.0]}
        ]}"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = tikflow(
        &["--corpus", path.to_str().unwrap(), "run", "--objective", "bowl", "--regime", "strong", "--out", out.to_str().unwrap()],
        None,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(out.join("summary.json").exists());
}

#[test]
fn reruns_are_bitwise_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        let o = tikflow(
            &["run", "--objective", "lse_5", "--regime", "strong", "--out", d.to_str().unwrap()],
            None,
        );
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for f in ["trajectory.csv", "summary.json"] {
        let x = std::fs::read(a.join(f)).unwrap();
        let y = std::fs::read(b.join(f)).unwrap();
        assert!(!x.is_empty());
        assert_eq!(x, y, "{f} differs");
    }
}

#[test]
fn csv_has_full_precision_and_all_columns() {
    let dir = tempfile::tempdir().unwrap();
    let o = tikflow(&["run", "--objective", "quad_line_2", "--regime", "weak", "--out", dir.path().to_str().unwrap()], None);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(&header[..5], ["t", "x0", "x1", "v0", "v1"]);
    assert!(header.contains(&"gap_shifted") && header.contains(&"E_strong") && header.contains(&"W"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 200);
    for row in &rows {
        let cells: Vec<&str> = row.split(',').collect();
        assert_eq!(cells.len(), header.len());
        for c in cells {
            let v: f64 = c.parse().unwrap();
            // 17 significant digits round-trip exactly
            assert_eq!(format!("{v:.16e}"), c);
        }
    }
}

#[test]
fn out_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("from_env");
    let o = tikflow(&["discrete", "--objective", "quad_line_2"], Some(&target));
    assert!(o.status.success(), "{}", stderr(&o));
    let hist = std::fs::read_to_string(target.join("history.csv")).unwrap();
    assert!(hist.starts_with("n,gap,dist_to_xstar\n"));

    // an explicit --out wins over the environment
    let explicit = dir.path().join("explicit");
    let o = tikflow(&["discrete", "--objective", "quad_line_2", "--out", explicit.to_str().unwrap()], Some(&target));
    assert!(o.status.success());
    assert!(explicit.join("history.csv").exists());
}

#[test]
fn config_errors_report_field_paths() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(
        &cfg,
        r#"{"objective_id": "quad_line_2",
            "dynamics": {"alpha": 2.0, "q": 0.5, "gamma": 1.0, "beta": 0.0},
            "schedule": {"a": 1.0, "p": -0.9}}"#,
    )
    .unwrap();
    let o = tikflow(&["run", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()], None);
    assert!(!o.status.success());
    let err = stderr(&o);
    assert!(err.contains("run.json") && err.contains("schedule"), "{err}");
}

#[test]
fn sweep_with_empty_grid_fails() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg: serde_json::Value =
        serde_json::to_value(tikflow::experiments::SweepConfig::default()).unwrap();
    cfg["p_values"] = serde_json::json!([]);
    let path = dir.path().join("sweep.json");
    std::fs::write(&path, cfg.to_string()).unwrap();
    let o = tikflow(&["sweep", "--config", path.to_str().unwrap(), "--out", dir.path().to_str().unwrap()], None);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("empty"), "{}", stderr(&o));
}

#[test]
fn sweep_prints_regime_map() {
    let dir = tempfile::tempdir().unwrap();
    let o = tikflow(&["sweep", "--workers", "2", "--tail-fraction", "0.25", "--out", dir.path().to_str().unwrap()], None);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("C 2."), "{out}");
    assert!(dir.path().join("regime_map.csv").exists());
    assert!(dir.path().join("q0.5_p1.5").join("summary.json").exists());
    let map = std::fs::read_to_string(dir.path().join("regime_map.csv")).unwrap();
    assert_eq!(map.lines().count(), 19);
}
