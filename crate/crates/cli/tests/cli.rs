use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn wzm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wzm")).args(args).output().unwrap()
}

fn scenario(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("scenario.toml");
    fs::write(&p, text).unwrap();
    p
}

fn run_in(dir: &Path, config: &Path, out: &str, extra: &[&str]) -> (Output, PathBuf) {
    let out = dir.join(out);
    let mut args = vec!["run", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    (wzm(&args), out)
}

fn summary(out: &Path) -> Value {
    serde_json::from_slice(&fs::read(out.join("summary.json")).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn list_names_every_experiment_and_schema() {
    let a = wzm(&["list"]);
    assert!(a.status.success());
    let text = String::from_utf8(a.stdout.clone()).unwrap();
    for name in ["trajectory", "master", "fp-analytic-check", "ratchet-spacetime", "seebeck", "localization"] {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name} missing");
    }
    assert!(text.contains("trajectories.csv: trajectory,step,t,x,pi,outcome,alpha,delta"));
    assert_eq!(wzm(&["list"]).stdout, a.stdout);
}

#[test]
fn empty_config_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let (o, _) = run_in(dir.path(), &scenario(dir.path(), ""), "out", &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("experiment"), "{}", stderr(&o));
}

#[test]
fn unknown_and_unused_keys_are_named() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario(dir.path(), "experiment = \"master\"\n[numerics]\nstep_count = 3\n");
    let (o, _) = run_in(dir.path(), &cfg, "out", &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("step_count"), "{}", stderr(&o));

    let cfg = scenario(dir.path(), "experiment = \"master\"\n[numerics]\nt_end = 3.0\n");
    let (o, _) = run_in(dir.path(), &cfg, "out", &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("numerics.t_end"), "{}", stderr(&o));

    let cfg = scenario(dir.path(), "experiment = \"nope\"\n");
    let (o, _) = run_in(dir.path(), &cfg, "out", &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nope"));

    let cfg = scenario(dir.path(), "experiment = \"trajectory\"\n[numerics]\nn_traj = 0\n");
    let (o, _) = run_in(dir.path(), &cfg, "out", &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("n_traj"));
}

#[test]
fn trajectory_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario(
        dir.path(),
        "experiment = \"trajectory\"\nseed = 5\n[profile]\nname = \"sinusoid\"\nmean = 1.0\namplitude = 0.5\nwavenumber = 1.0\n[numerics]\nn_steps = 200\nn_traj = 50\n",
    );
    let (a, out_a) = run_in(dir.path(), &cfg, "a", &[]);
    let (b, out_b) = run_in(dir.path(), &cfg, "b", &[]);
    assert!(a.status.success() && b.status.success(), "{}", stderr(&a));
    for f in ["trajectories.csv", "summary.json"] {
        assert_eq!(fs::read(out_a.join(f)).unwrap(), fs::read(out_b.join(f)).unwrap(), "{f}");
    }
    let s = summary(&out_a);
    assert_eq!(s["seed"], 5);
    assert_eq!(s["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(s["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(s["outputs"][0], "trajectories.csv");

    let csv = fs::read_to_string(out_a.join("trajectories.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("trajectory,step,t,x,pi,outcome,alpha,delta"));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[0..2], ["0", "0"]);
    assert_eq!(first[5], "-1");
    assert_eq!(csv.lines().count(), 1 + 50 * 201);

    // a different seed changes the data and the hash
    let (c, out_c) = run_in(dir.path(), &cfg, "c", &["--seed", "6"]);
    assert!(c.status.success());
    assert_ne!(fs::read(out_a.join("trajectories.csv")).unwrap(), fs::read(out_c.join("trajectories.csv")).unwrap());
    assert_ne!(summary(&out_c)["config_hash"], s["config_hash"]);
}

#[test]
fn overrides_reach_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario(dir.path(), "experiment = \"master\"\n[numerics]\ncells = 2000\nn_steps = 10\n");
    let (o, out) = run_in(dir.path(), &cfg, "out", &["--override", "numerics.n_steps=25", "--override", "numerics.x0=0.5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = summary(&out);
    assert_eq!(s["parameters"]["n_steps"], 25);
    assert_eq!(s["parameters"]["x0"], 0.5);
    assert!(s["checks"].as_array().unwrap().iter().all(|c| c["pass"] == true));
    let rows = fs::read_to_string(out.join("pi_average.csv")).unwrap();
    assert_eq!(rows.lines().count(), 1 + 26);
    assert_eq!(fs::read_to_string(out.join("density.csv")).unwrap().lines().next(), Some("x,density"));
}

#[test]
fn fp_analytic_check_reports_error_and_flag() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario(dir.path(), "experiment = \"fp-analytic-check\"\n[numerics]\ncells = 1024\n");
    let (o, out) = run_in(dir.path(), &cfg, "out", &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = summary(&out);
    let l2 = s["results"]["l2_error"].as_f64().unwrap();
    assert!(l2 > 0.0 && l2 < 1e-3);
    assert_eq!(s["checks"][0]["name"], "l2_error");
    assert_eq!(s["checks"][0]["pass"], true);
    assert!(fs::read_to_string(out.join("field.csv")).unwrap().starts_with("# chart=x"));
}

#[test]
fn failed_checks_exit_with_4() {
    let dir = tempfile::tempdir().unwrap();
    // flat profile: no ratchet, current stays at -1
    let cfg = scenario(
        dir.path(),
        "experiment = \"ratchet-spacetime\"\n[profile]\nname = \"on-off\"\na = 0.0\nb = 0.0\n[numerics]\ncells = 32\nt_end = 6.283185307179586\n",
    );
    let (o, out) = run_in(dir.path(), &cfg, "out", &[]);
    assert_eq!(o.status.code(), Some(4));
    let s = summary(&out);
    assert_eq!(s["passed"], false);
    assert!((s["results"]["final_moving_average"].as_f64().unwrap() + 1.0).abs() < 1e-9);
    let current = fs::read_to_string(out.join("current.csv")).unwrap();
    assert_eq!(current.lines().next(), Some("t,current,moving_average"));
}

#[test]
fn numeric_failures_exit_with_3() {
    let dir = tempfile::tempdir().unwrap();
    // big steps right next to the grid edge push mass off the grid
    let cfg = scenario(
        dir.path(),
        "experiment = \"master\"\n[numerics]\nx0 = 24.9\ndelta_scale = 0.5\nn_steps = 5\ncells = 2000\n",
    );
    let (o, _) = run_in(dir.path(), &cfg, "out", &[]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("boundary mass"), "{}", stderr(&o));
}

#[test]
fn seebeck_and_localization_small_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario(dir.path(), "experiment = \"seebeck\"\n[numerics]\ncells = 64\nt_end = 5.0\n");
    let (o, out) = run_in(dir.path(), &cfg, "seebeck", &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = summary(&out);
    assert!((s["results"]["closed_form_current"].as_f64().unwrap() + 0.163636).abs() < 1e-5);

    let cfg = scenario(
        dir.path(),
        "experiment = \"localization\"\n[numerics]\nn_traj = 200\ncells = 100\nt_end = 1.0\ndelta_scale = 0.1\n",
    );
    let (o, out) = run_in(dir.path(), &cfg, "loc", &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = summary(&out);
    assert_eq!(s["results"]["crossings"], 0);
    let fates = fs::read_to_string(out.join("fates.csv")).unwrap();
    assert_eq!(fates.lines().count(), 201);

    let cfg = scenario(dir.path(), "experiment = \"localization\"\n[numerics]\ncells = 99\n");
    let (o, _) = run_in(dir.path(), &cfg, "bad", &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("numerics.cells"));
}
