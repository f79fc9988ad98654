use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn twinfock(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_twinfock")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = twinfock(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn rows(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path).unwrap().records().map(|r| r.unwrap()).collect()
}

fn train_tiny(dir: &Path, extra: &[&str]) {
    let d = dir.to_str().unwrap();
    let mut args = vec!["train", "--system", "quantum", "--n-atoms", "4", "--steps", "30", "--epochs", "3", "--seed", "7", "--out", d];
    args.extend_from_slice(extra);
    ok(&args);
}

#[test]
fn train_writes_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("run");
    train_tiny(&dir, &[]);
    for f in ["checkpoint.json", "learning_curve.csv", "config.toml", "manifest.json"] {
        assert!(dir.join(f).exists(), "{f} missing");
    }
    let curve = rows(&dir.join("learning_curve.csv"));
    assert_eq!(curve.len(), 3);
    let m = json(&dir.join("manifest.json"));
    assert_eq!(m["command"], "train");
    assert_eq!(m["seed"], 7);
    let cfg = fs::read_to_string(dir.join("config.toml")).unwrap();
    assert!(cfg.contains("n_atoms = 4"));
}

#[test]
fn same_seed_gives_identical_curves() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    train_tiny(&a, &[]);
    train_tiny(&b, &[]);
    assert_eq!(fs::read(a.join("learning_curve.csv")).unwrap(), fs::read(b.join("learning_curve.csv")).unwrap());
    assert_eq!(fs::read(a.join("checkpoint.json")).unwrap(), fs::read(b.join("checkpoint.json")).unwrap());
}

#[test]
fn config_file_and_flag_override() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.toml");
    fs::write(&cfg, "system = \"meanfield\"\nsteps = 20\ntotal_epochs = 2\nseed = 3\n").unwrap();
    let dir = tmp.path().join("run");
    ok(&["train", "--config", cfg.to_str().unwrap(), "--total-epochs", "1", "--out", dir.to_str().unwrap()]);
    assert_eq!(rows(&dir.join("learning_curve.csv")).len(), 1);
    let echoed = fs::read_to_string(dir.join("config.toml")).unwrap();
    assert!(echoed.contains("steps = 20"));
    assert!(echoed.contains("seed = 3"));
}

#[test]
fn invalid_config_names_field_and_writes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("never");
    let out = twinfock(&["train", "--system", "quantum", "--n-atoms", "4", "--gamma", "1.5", "--out", dir.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("gamma"));
    assert!(!dir.exists());

    let out = twinfock(&["train", "--system", "quantum", "--n-atoms", "5", "--out", dir.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("n_atoms"));
    assert!(!dir.exists());

    let cfg = tmp.path().join("bad.toml");
    fs::write(&cfg, "system = \"meanfield\"\nlearning_rate = 0.1\n").unwrap();
    let out = twinfock(&["train", "--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("learning_rate"));
    assert!(!dir.exists());
}

#[test]
fn eval_modes() {
    let tmp = tempfile::tempdir().unwrap();
    let run = tmp.path().join("run");
    train_tiny(&run, &[]);
    let ck = run.join("checkpoint.json");
    let ck = ck.to_str().unwrap();

    let e = tmp.path().join("rollout");
    ok(&["eval", "--checkpoint", ck, "--mode", "rollout", "--out", e.to_str().unwrap()]);
    let r = rows(&e.join("rollout.csv"));
    assert_eq!(r.len(), 31);
    assert_eq!(&r[0][0], "0.0");

    let e = tmp.path().join("map");
    ok(&["eval", "--checkpoint", ck, "--mode", "map", "--out", e.to_str().unwrap()]);
    let r = rows(&e.join("policy_map.csv"));
    assert_eq!(r.len(), 101);
    assert!(r.iter().all(|row| row.len() == 102));
    for row in &r {
        for v in row.iter().skip(1) {
            let q: f64 = v.parse().unwrap();
            assert!((-6.0..=6.0).contains(&q));
        }
    }

    let e = tmp.path().join("noise");
    ok(&["eval", "--checkpoint", ck, "--mode", "noise", "--samples", "8", "--out", e.to_str().unwrap()]);
    let r = rows(&e.join("noise.csv"));
    assert_eq!(r.len(), 31);
    let s = json(&e.join("summary.json"));
    assert_eq!(s["samples"], 8);
    assert!((s["sigma"].as_f64().unwrap() - 0.1).abs() < 1e-15);

    let e = tmp.path().join("gen");
    ok(&["eval", "--checkpoint", ck, "--mode", "generalize", "--n-list", "2,4,6,8,10", "--out", e.to_str().unwrap()]);
    let r = rows(&e.join("generalize.csv"));
    assert_eq!(r.len(), 5);
    assert_eq!(&r[4][0], "10");

    let out = twinfock(&["eval", "--checkpoint", ck, "--mode", "generalize", "--n-list", "3", "--out", e.to_str().unwrap()]);
    assert!(!out.status.success());
}

#[test]
fn generalize_rejects_meanfield_checkpoint() {
    let tmp = tempfile::tempdir().unwrap();
    let run = tmp.path().join("run");
    ok(&["train", "--system", "meanfield", "--steps", "10", "--epochs", "1", "--out", run.to_str().unwrap()]);
    let out = twinfock(&[
        "eval",
        "--checkpoint",
        run.join("checkpoint.json").to_str().unwrap(),
        "--mode",
        "generalize",
        "--out",
        tmp.path().join("gen").to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("quantum"));
}

#[test]
fn constant_baseline_two_atoms() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("c");
    ok(&["baseline", "--which", "constant", "--q", "-0.25", "--system", "quantum", "--n-atoms", "2", "--steps", "40", "--out", dir.to_str().unwrap()]);
    let r = rows(&dir.join("record.csv"));
    let (t_best, f_best) = r
        .iter()
        .map(|row| (row[0].parse::<f64>().unwrap(), row[4].parse::<f64>().unwrap()))
        .fold((0.0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    assert!(f_best > 0.999);
    assert!((t_best - 2.2214).abs() <= 0.1);
    for f in ["summary.json", "config.toml", "manifest.json"] {
        assert!(dir.join(f).exists());
    }
}

#[test]
fn ramp_and_greedy_baselines() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("ramp");
    let common = ["--system", "quantum", "--n-atoms", "4", "--steps", "30"];
    let mut args = vec!["baseline", "--which", "ramp", "--ramp-points", "5", "--ramp-times", "3", "--out", dir.to_str().unwrap()];
    args.extend_from_slice(&common);
    ok(&args);
    let s = json(&dir.join("summary.json"));
    assert!(s["best"]["t_ramp"].is_number());
    assert_eq!(s["evaluated"], 75);
    assert!(s["final_fidelity"].as_f64().unwrap() <= 1.0);

    let dir = tmp.path().join("greedy");
    let mut args = vec!["baseline", "--which", "greedy", "--grid-points", "13", "--out", dir.to_str().unwrap()];
    args.extend_from_slice(&common);
    ok(&args);
    assert_eq!(rows(&dir.join("record.csv")).len(), 31);
}

#[test]
fn analytic_baseline() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("a");
    ok(&["baseline", "--which", "analytic", "--system", "meanfield", "--out", dir.to_str().unwrap()]);
    let s = json(&dir.join("summary.json"));
    assert!(s["summary"]["final_rho0"].as_f64().unwrap() < 0.01);

    let out = twinfock(&["baseline", "--which", "analytic", "--system", "quantum", "--n-atoms", "2", "--out", tmp.path().join("q").to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("mean-field"));
}
