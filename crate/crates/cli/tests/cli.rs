use std::process::{Command, Output};

use serde_json::Value;

fn ptwalk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ptwalk"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Data rows of a CSV output, split into cells.
fn rows(o: &Output) -> Vec<Vec<String>> {
    stdout(o)
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn column(o: &Output, name: &str) -> Vec<String> {
    let text = stdout(o);
    let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
    let idx = header.split(',').position(|c| c == name).unwrap();
    rows(o).into_iter().map(|r| r[idx].clone()).collect()
}

fn floats(o: &Output, name: &str) -> Vec<f64> {
    column(o, name).iter().map(|v| v.parse().unwrap()).collect()
}

#[test]
fn ep_grid_single_cell() {
    let o = ptwalk(&["ep-grid", "--theta1-range", "pi/4:pi/4", "--theta2-range", "-pi/7:-pi/7", "--resolution", "1"]);
    assert!(o.status.success());
    let g = floats(&o, "gamma_pt");
    assert_eq!(g.len(), 1);
    assert!((g[0] - 0.29798).abs() < 1e-5);
    assert!((floats(&o, "exp_gamma_pt")[0] - 1.34714).abs() < 1e-5);
}

#[test]
fn ep_grid_full_lattice() {
    let o = ptwalk(&["ep-grid"]);
    assert!(o.status.success());
    let status = column(&o, "status");
    assert_eq!(status.len(), 100 * 100);
    assert!(status.iter().any(|s| s == "ok"));
    // cells without a transition carry the sentinel: empty value and a status
    for (s, g) in status.iter().zip(column(&o, "gamma_pt")) {
        assert_eq!(s == "no_transition", g.is_empty());
    }
}

#[test]
fn metric_trace_column_is_constant() {
    let o = ptwalk(&["trace", "--formalism", "metric", "--gamma", "0.35", "--theta1", "pi/4", "--theta2", "-pi/7", "--T", "50"]);
    assert!(o.status.success());
    let tr = floats(&o, "trace");
    assert_eq!(tr.len(), 51);
    assert!(tr.iter().all(|v| (v - tr[0]).abs() < 1e-8));
    assert!(column(&o, "beyond_ep").iter().all(|b| b == "true"));
}

#[test]
fn blp_with_zero_steps_is_a_single_zero_row() {
    let o = ptwalk(&["blp", "--gamma", "0", "--T", "0"]);
    assert!(o.status.success());
    assert_eq!(floats(&o, "blp"), vec![0.0]);
}

#[test]
fn header_records_config_and_version() {
    let o = ptwalk(&["tracedist", "--gamma", "0.1", "--steps", "2", "--theta1", "0.5"]);
    let text = stdout(&o);
    assert!(text.contains(&format!("# version: {}", env!("CARGO_PKG_VERSION"))));
    let config = text.lines().find_map(|l| l.strip_prefix("# config: ")).unwrap();
    let v: Value = serde_json::from_str(config).unwrap();
    assert_eq!(v["theta1"], 0.5);
    assert_eq!(v["theta2"], -std::f64::consts::PI / 7.0);
    assert_eq!(v["steps"], 2);
    assert_eq!(v["grid"], 512);
    assert_eq!(v["formalism"], "metric");
}

#[test]
fn json_mirrors_csv() {
    let args = ["entanglement", "--gamma", "0.1", "--steps", "5", "--state", "plus"];
    let csv = ptwalk(&args);
    let mut json_args = args.to_vec();
    json_args.extend(["--format", "json"]);
    let json = ptwalk(&json_args);
    let doc: Value = serde_json::from_slice(&json.stdout).unwrap();
    let records = doc["records"].as_array().unwrap();
    let ee = floats(&csv, "entanglement_entropy");
    assert_eq!(records.len(), ee.len());
    for (r, v) in records.iter().zip(ee) {
        assert_eq!(r["entanglement_entropy"].as_f64().unwrap(), v);
    }
    assert_eq!(doc["command"], "entanglement");
}

#[test]
fn output_is_deterministic_across_runs_and_pools() {
    let args = ["blp-scan", "--exp-gamma-range", "1.0:1.5:0.1", "--steps", "20", "--grid", "64"];
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_ptwalk"))
            .args(args)
            .env("PTWALK_THREADS", threads)
            .output()
            .unwrap()
            .stdout
    };
    let one = run("1");
    assert_eq!(one, run("1"));
    assert_eq!(one, run("3"));
}

#[test]
fn sweep_rows_follow_sweep_order() {
    let o = ptwalk(&["blp-scan", "--gamma-range", "0:0.4:0.1", "--steps", "10", "--grid", "32"]);
    let g = floats(&o, "gamma");
    assert_eq!(g.len(), 5);
    assert!(g.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn rhp_reports_flags_and_clamped_g() {
    let o = ptwalk(&["rhp", "--gamma", "0", "--steps", "5", "--grid", "64"]);
    assert!(o.status.success());
    let g = floats(&o, "g");
    let clamped = floats(&o, "g_clamped");
    assert_eq!(g.len(), 6);
    for (a, b) in g.iter().zip(&clamped) {
        assert_eq!(*b, a.max(0.0));
    }
    assert!(floats(&o, "choi_trace_x2").iter().all(|v| (v - 2.0).abs() < 1e-9));
    assert!(column(&o, "pseudo_inverted").iter().all(|f| f == "false"));
    assert_eq!(floats(&o, "rhp")[0], 0.0);
}

#[test]
fn rhp_needs_one_step() {
    assert_eq!(ptwalk(&["rhp", "--steps", "0"]).status.code(), Some(2));
}

#[test]
fn validate_flags_collisions_on_unshifted_grid() {
    let gpt = "0.29798438132181837";
    let o = ptwalk(&["validate", "--gamma", gpt, "--no-shift"]);
    assert!(o.status.success());
    let err = String::from_utf8(o.stderr.clone()).unwrap();
    assert!(err.contains("warning") && err.contains("k = 0"));
    assert!(err.contains("shifted grid"));
    assert_ne!(column(&o, "collisions")[0], "0");
}

#[test]
fn validate_is_clean_on_default_grid() {
    let o = ptwalk(&["validate", "--gamma-range", "0:0.6:0.05"]);
    assert!(o.status.success());
    assert!(o.stderr.is_empty());
    assert!(column(&o, "collisions").iter().all(|c| c == "0"));
}

#[test]
fn validate_labels_regimes_across_the_ep() {
    let o = ptwalk(&["validate", "--gamma-range", "0:0.6:0.05"]);
    let gpt = floats(&o, "gamma_pt")[0];
    for (g, label) in floats(&o, "gamma").iter().zip(column(&o, "regime")) {
        let expected = if *g < gpt { "unbroken" } else { "broken" };
        assert_eq!(label, expected, "gamma = {g}");
    }
}

#[test]
fn exceptional_point_is_a_compute_error() {
    let o = ptwalk(&["trace", "--gamma", "0.29798438132181837", "--no-shift", "--steps", "2"]);
    assert_eq!(o.status.code(), Some(3));
    let err = String::from_utf8(o.stderr.clone()).unwrap();
    assert!(err.contains("gamma = 0.29798438132181837") && err.contains("k = "));
}

#[test]
fn config_errors_exit_with_two() {
    for args in [
        vec!["trace", "--grid", "8"],
        vec!["trace", "--gamma-range", "0:1:0"],
        vec!["trace", "--theta1", "pi/x"],
        vec!["trace", "--state", "1,0,0,1"],
        vec!["trace", "--formalism", "other"],
        vec!["blp", "--state", "up", "--state2", "up"],
        vec!["purity", "--sites", "0"],
    ] {
        assert_eq!(ptwalk(&args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn purity_on_lattice_is_conserved_below_ep() {
    let o = ptwalk(&["purity", "--gamma", "0.2", "--sites", "16", "--steps", "5", "--state", "plus"]);
    assert!(o.status.success());
    assert!(floats(&o, "purity").iter().all(|p| (p - 1.0).abs() < 1e-6));
}

#[test]
fn writes_to_file() {
    let dir = std::env::temp_dir().join(format!("ptwalk-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("trace.csv");
    let o = ptwalk(&["trace", "--steps", "1", "--out", path.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("# command: trace"));
    std::fs::remove_dir_all(&dir).unwrap();
}
