use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tvopt::scenario::{builtin, builtin_names, load_config, parse_config, resolve};

fn scenario_file(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.toml"))
}

fn tvopt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tvopt"))
        .args(args)
        .env_remove(tvopt::cli::OUT_DIR_ENV)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn shipped_scenario_files_match_builtins() {
    for name in builtin_names() {
        let shipped = load_config(scenario_file(name)).unwrap();
        assert_eq!(shipped, builtin(name).unwrap(), "{name}");
    }
}

#[test]
fn normalized_dump_round_trips() {
    for name in builtin_names() {
        let cfg = builtin(name).unwrap();
        let dumped = cfg.normalized_dump().unwrap();
        assert_eq!(parse_config(&dumped).unwrap(), cfg, "{name}");
        assert_eq!(resolve(&format!("builtin:{name}")).unwrap(), cfg);
    }
}

#[test]
fn list_names_every_builtin() {
    let o = tvopt(&["list"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for name in builtin_names() {
        assert!(text.contains(&format!("builtin:{name}")));
    }
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(tvopt(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(tvopt(&["oracle"]).status.code(), Some(2));
    assert_eq!(tvopt(&["run", "builtin:nope"]).status.code(), Some(2));
}

#[test]
fn empty_and_malformed_files_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.toml");
    std::fs::write(&empty, "").unwrap();
    assert_eq!(tvopt(&["validate", empty.to_str().unwrap()]).status.code(), Some(2));

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "name = \"x\"\ncontroller = \"centralized_si\"\n\nbogus = 1\n").unwrap();
    let o = tvopt(&["validate", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 4"));
}

#[test]
fn disconnected_topology_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("split.toml");
    let mut cfg = builtin("source_seek").unwrap();
    // two components: {0,1,2} and {3,4}
    let mut adj = vec![vec![0.0; 5]; 5];
    for (i, j) in [(0, 1), (1, 2), (3, 4)] {
        adj[i][j] = 1.0;
        adj[j][i] = 1.0;
    }
    cfg.topology = Some(tvopt::graph::TopologySpec::Explicit { adjacency: adj });
    let text = cfg.normalized_dump().unwrap();
    std::fs::write(&path, text).unwrap();
    let o = tvopt(&["validate", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("connected"));
}

#[test]
fn validate_reports_gain_condition() {
    let o = tvopt(&["validate", "builtin:source_seek", "--dump"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("source_seek: valid"));
    assert!(text.contains("k1 = 3.12"));
}

#[test]
fn oracle_prints_closed_form_optimum() {
    let o = tvopt(&["oracle", "builtin:source_seek", "--t", "0"]);
    assert_eq!(o.status.code(), Some(0));
    let x: Vec<f64> = stdout(&o).split_whitespace().map(|s| s.parse().unwrap()).collect();
    // (2/a)/(2/a + 0.4) · (1.9 sin 0, 2.1 cos 0) with a = 0.9
    let scale = (2.0 / 0.9) / (2.0 / 0.9 + 0.4);
    assert!(x[0].abs() < 1e-15);
    assert!((x[1] - scale * 2.1).abs() < 1e-14);
}

#[test]
fn run_writes_identical_artifacts_and_plots() {
    let dir = tempfile::tempdir().unwrap();
    let mut csvs = Vec::new();
    for sub in ["a", "b"] {
        let out = dir.path().join(sub);
        let o = tvopt(&[
            "run",
            "builtin:quad_si_dist",
            "--t-end",
            "2",
            "--binary",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(stdout(&o).contains("max tracking error"));
        assert!(out.join("quad_si_dist.toml").exists());
        assert!(out.join("quad_si_dist.trace").exists());
        csvs.push(std::fs::read(out.join("quad_si_dist.csv")).unwrap());
    }
    assert_eq!(csvs[0], csvs[1]);

    let csv = dir.path().join("a/quad_si_dist.csv");
    let svg = dir.path().join("plot.svg");
    let o = tvopt(&["plot", csv.to_str().unwrap(), "--out", svg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(std::fs::read_to_string(svg).unwrap().starts_with("<svg"));
}

#[test]
fn out_dir_env_var_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_tvopt"))
        .args(["run", "builtin:quad_si_central", "--t-end", "1"])
        .env(tvopt::cli::OUT_DIR_ENV, dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(dir.path().join("quad_si_central.csv").exists());
}

#[test]
fn divergent_run_leaves_abort_trace() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = builtin("quad_newton_baseline").unwrap();
    cfg.gains.baseline.as_mut().unwrap().omega = vec![vec![-1e-3]];
    let path = dir.path().join("blowup.toml");
    std::fs::write(&path, cfg.normalized_dump().unwrap()).unwrap();
    let out = dir.path().join("out");
    let o = tvopt(&["run", path.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
    assert!(out.join(format!("{}.abort.csv", cfg.name)).exists());
}
