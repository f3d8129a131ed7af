mod common;

use common::*;
use simpl::emit_c::{compile_and_run, emit_c, EmitOptions, ENTRY_SYMBOL, RUNTIME_HEADER_NAME, RUNTIME_VERSION};
use simpl::exec::{execute, ExecOptions};
use simpl::interp::RunParams;
use simpl::model::exact_posterior;
use simpl::pe::{specialize, PeOptions};
use simpl::{algorithms::custom_program, ErrorClass};

#[test]
fn manifest_describes_the_unit() {
    let rp = residual("likelihood", &net("burglary"), true);
    let unit = emit_c(&rp, "likelihood_burglary", EmitOptions::default()).unwrap();
    let m = &unit.manifest;
    assert_eq!(m.entry, ENTRY_SYMBOL);
    assert_eq!(m.header, RUNTIME_HEADER_NAME);
    assert_eq!(m.header_version, RUNTIME_VERSION);
    assert_eq!(m.caches, 1);
    assert_eq!(unit.file_name(), "likelihood_burglary.c");
    assert!(unit.source.contains(&format!("#include \"{RUNTIME_HEADER_NAME}\"")));
    assert!(!unit.source.contains("cpt"));
}

#[test]
fn list_values_are_unsupported() {
    let n = net("burglary");
    let p = custom_program(&fixture("list_result.simpl"), &n).unwrap();
    let rp = specialize(&p, &n, PeOptions { caching: true }).unwrap();
    let e = emit_c(&rp, "list_result", EmitOptions::default()).unwrap_err();
    assert_eq!(e.class(), ErrorClass::Unsupported);
}

#[test]
fn debug_cache_in_c_recomputes_every_hit() {
    if toolchain().is_none() {
        return;
    }
    for model in ["burglary", "csi"] {
        for alg in ALGORITHMS {
            let rp = residual(alg, &net(model), true);
            let p = RunParams::new(3, 5000, 100);
            let c = compile_and_run(&rp, p, EmitOptions { debug_cache: true }).unwrap();
            let e = execute(&rp, p, ExecOptions::default()).unwrap();
            assert!(same_run(&c.outcome, &e), "{alg}/{model}");
        }
    }
}

#[test]
fn dropped_key_is_caught_in_both_backends() {
    let n = net("csi");
    let mut rp = residual("likelihood", &n, true);
    rp.caches[0].keys.pop();
    let p = RunParams::new(1, 20_000, 0);
    let e = execute(&rp, p, ExecOptions { debug_cache: true }).unwrap_err();
    assert_eq!(e.class(), ErrorClass::CacheMismatch);
    if toolchain().is_some() {
        let e = compile_and_run(&rp, p, EmitOptions { debug_cache: true }).unwrap_err();
        assert_eq!(e.class(), ErrorClass::CacheMismatch);
    }
}

#[test]
fn multiburglary_likelihood_in_c_is_accurate() {
    if toolchain().is_none() {
        return;
    }
    let n = net("multiburglary");
    let rp = residual("likelihood", &n, true);
    let c = compile_and_run(&rp, RunParams::new(1, 2_000_000, 0), EmitOptions::default()).unwrap();
    let want = exact_posterior(&n).unwrap();
    assert!((c.outcome.estimate[0] - want).abs() < 0.02, "{} vs {want}", c.outcome.estimate[0]);
}
