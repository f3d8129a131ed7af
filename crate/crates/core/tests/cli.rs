mod common;

use std::process::{Command, Output};

use serde_json::Value;

fn simpl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_simpl")).args(args).output().unwrap()
}

fn fixture_path(name: &str) -> String {
    format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn lines(out: &Output) -> Vec<Value> {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn estimate(v: &Value) -> Vec<f64> {
    v["estimate"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

#[test]
fn pe_run_matches_interpreter() {
    let base = ["run", "--algo", "likelihood", "--model", "burglary", "--n", "200000", "--seed", "1"];
    let pe = lines(&simpl(&[&base[..], &["--mode", "pe"]].concat()));
    let interp = lines(&simpl(&[&base[..], &["--mode", "interp"]].concat()));
    assert_eq!(estimate(&pe[0]), estimate(&interp[0]));
    assert_eq!(estimate(&pe[0]), vec![0.5451775979573626, 0.4548224020426375]);
    assert_eq!(pe[0]["rng_state"], interp[0]["rng_state"]);
}

#[test]
fn repetitions_use_consecutive_seeds() {
    let out = lines(&simpl(&["run", "--mode", "pe-cache", "--n", "500", "--seed", "7", "--repetitions", "3"]));
    let seeds: Vec<u64> = out.iter().map(|r| r["seed"].as_u64().unwrap()).collect();
    assert_eq!(seeds, vec![7, 8, 9]);
    assert!(out[0]["cache"][0]["hits"].as_u64().unwrap() > 0);
}

#[test]
fn c_mode_writes_the_unit() {
    if common::toolchain().is_none() {
        eprintln!("no C compiler, skipped");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let c = lines(&simpl(&["run", "--mode", "c", "--n", "20000", "--emit", d]));
    let pe = lines(&simpl(&["run", "--mode", "pe-cache", "--n", "20000"]));
    assert_eq!(estimate(&c[0]), estimate(&pe[0]));
    for f in ["likelihood_burglary.c", "simpl_rt.h", "likelihood_burglary.json"] {
        assert!(dir.path().join(f).exists(), "{f} missing");
    }
}

#[test]
fn emit_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = lines(&simpl(&["emit", "--algo", "gibbs", "--model", "csi", "--out", d]));
    assert_eq!(out[0]["manifest"]["entry"], "simpl_run");
    assert!(dir.path().join("gibbs_csi.c").exists());
}

#[test]
fn oracle_prints_posterior() {
    let dir = tempfile::tempdir().unwrap();
    let out = lines(&simpl(&["oracle", "--model", "csi", "--cache-dir", dir.path().to_str().unwrap()]));
    assert!((out[0]["probability"].as_f64().unwrap() - 0.5787965616045845).abs() < 1e-12);
}

#[test]
fn ir_dump_prints_residual() {
    let out = simpl(&["ir-dump", "--algo", "likelihood", "--model", "burglary"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("cache k0 [Alarm] dense"));
    let out = simpl(&["ir-dump", "--unparse", "--no-cache"]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("(flip 0.02)"));
}

#[test]
fn bench_reports_cells() {
    let out = simpl(&[
        "bench", "--algo", "likelihood", "--model", "csi", "--mode", "pe", "pe-cache",
        "--repetitions", "2", "--min-time-ms", "5", "--n", "64",
    ]);
    let cells = lines(&out);
    assert!(cells.iter().filter(|c| c.get("mode").is_some()).count() >= 2);
}

fn failure(args: &[&str], code: i32, needle: &str) {
    let out = simpl(args);
    let err = String::from_utf8_lossy(&out.stderr);
    assert_eq!(out.status.code(), Some(code), "{err}");
    assert!(err.contains(needle), "{err}");
}

#[test]
fn error_exit_codes() {
    let bad = fixture_path("bad_static.simpl");
    failure(&["run", "--program", &bad, "--mode", "pe"], 10, "2:21: bad static");
    let unbounded = fixture_path("unbounded_inline.simpl");
    failure(&["run", "--program", &unbounded, "--mode", "pe"], 11, "count-down <- count-down");
    let bounded = fixture_path("bounded_inline.simpl");
    failure(&["run", "--program", &bounded, "--mode", "pe"], 12, "cannot be inlined");
    failure(&["run", "--algo", "nope"], 12, "unknown algorithm");
}

#[test]
fn interpreter_runs_dynamic_recursion() {
    let unbounded = fixture_path("unbounded_inline.simpl");
    let out = lines(&simpl(&["run", "--program", &unbounded, "--mode", "interp", "--n", "1"]));
    let k = out[0]["result"].as_str().unwrap().parse::<i64>().unwrap();
    assert!((0..10).contains(&k));
}

#[test]
fn lists_are_rejected_by_the_emitter() {
    if common::toolchain().is_none() {
        return;
    }
    let list = fixture_path("list_result.simpl");
    failure(&["run", "--program", &list, "--mode", "c"], 12, "lists");
}
