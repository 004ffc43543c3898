use std::path::Path;
use std::process::{Command, Output};

fn mdlab(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mdlab")).args(args).arg("--out").arg(out).output().expect("failed to spawn mdlab")
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// CSV contents with the wall_clock column removed.
fn csv_without_clock(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().clone();
    let clock = header.iter().position(|h| h == "wall_clock").expect("wall_clock column");
    assert_eq!(clock, header.len() - 1);
    let mut rows = vec![header.iter().take(clock).map(String::from).collect()];
    for rec in r.records() {
        rows.push(rec.unwrap().iter().take(clock).map(String::from).collect());
    }
    rows
}

#[test]
fn verify_algebra_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = mdlab(&["verify-algebra", "--d", "2", "--n", "16"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_without_clock(&dir.path().join("verify-algebra.csv"));
    assert_eq!(rows[0], ["suite", "d", "n", "check", "defect", "tolerance", "passed"]);
    assert!(rows[1..].iter().all(|r| r[6] == "true"));
    let m = read_json(&dir.path().join("manifest.json"));
    assert_eq!(m["command"], "verify-algebra");
    assert_eq!(m["status"], "ok");
    assert_eq!(m["config"]["dims"], serde_json::json!([2]));
    assert_eq!(m["config_sha256"].as_str().unwrap().len(), 64);
    assert!(m["git_rev"].is_string());
    assert!(m["wall_clock"].as_f64().unwrap() >= 0.0);
    let summary = read_json(&dir.path().join("verify-algebra.json"));
    assert!(summary["gamma_tables"]["d2"].as_str().unwrap().contains("gamma^2"));
}

#[test]
fn decimal_point_and_utf8() {
    let dir = tempfile::tempdir().unwrap();
    let o = mdlab(&["picard", "--n", "8", "--eps", "0.01"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(dir.path().join("picard.csv")).unwrap();
    let first = text.lines().nth(1).unwrap();
    assert!(first.starts_with("1e-2,1,"), "{first}");
    let m = read_json(&dir.path().join("manifest.json"));
    assert_eq!(m["config"]["eps"], serde_json::json!([0.01, 0.005]));
}

#[test]
fn failed_check_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("k.toml");
    // one rung below the calibrated constant keeps the packet too long
    std::fs::write(&cfg, "[knapp]\ntime_constant = 0.0625\n").unwrap();
    let o = mdlab(&["knapp", "--config", cfg.to_str().unwrap()], &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stdout));
    let m = read_json(&dir.path().join("out/manifest.json"));
    assert_eq!(m["status"], "identity-failure");
    assert_eq!(m["config_file_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn runtime_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = mdlab(&["verify-algebra", "--d", "7"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[evolve]\nno_such_key = 1\n").unwrap();
    let o = mdlab(&["evolve", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = mdlab(&["evolve", "--config", "/nonexistent/cfg.toml"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn reruns_are_identical_up_to_timing() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = a.path().join("e.toml");
    std::fs::write(&cfg, "[evolve]\nn = 8\nt_final = 0.4\ndt = 0.1\nreport_every = 1\ndt_levels = 2\n").unwrap();
    let args = ["evolve", "--config", cfg.to_str().unwrap(), "--seed", "3"];
    assert_eq!(mdlab(&args, &a.path().join("o")).status.code(), Some(0));
    let mut with_threads = args.to_vec();
    with_threads.extend(["--threads", "1"]);
    assert_eq!(mdlab(&with_threads, &b.path().join("o")).status.code(), Some(0));
    let (pa, pb) = (a.path().join("o"), b.path().join("o"));
    assert_eq!(csv_without_clock(&pa.join("evolve.csv")), csv_without_clock(&pb.join("evolve.csv")));
    assert_eq!(std::fs::read(pa.join("evolve.json")).unwrap(), std::fs::read(pb.join("evolve.json")).unwrap());
    let (ma, mb) = (read_json(&pa.join("manifest.json")), read_json(&pb.join("manifest.json")));
    assert_eq!(ma["config_sha256"], mb["config_sha256"]);
    assert_eq!(ma["config"]["seed"], 3);
}
