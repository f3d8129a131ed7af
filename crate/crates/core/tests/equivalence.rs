mod common;

use common::*;
use simpl::exec::{execute, ExecOptions};
use simpl::interp::{interpret, RunParams};
use simpl::model::parse_model;
use simpl::pe::{specialize, PeOptions};

fn params(alg: &str, model: &str, seed: u64) -> RunParams {
    let n = small_n(model);
    let burn = if matches!(alg, "gibbs" | "mh") { n / 4 } else { 0 };
    RunParams::new(seed, n, burn)
}

#[test]
fn interpreter_and_residual_agree_on_every_cell() {
    for model in MODELS {
        let net = net(model);
        for alg in ALGORITHMS {
            let prog = program(alg, &net);
            for caching in [false, true] {
                let rp = residual(alg, &net, caching);
                for seed in [1, 2, 3] {
                    let p = params(alg, model, seed);
                    match (interpret(&prog, &net, p), execute(&rp, p, ExecOptions::default())) {
                        (Ok(a), Ok(b)) => assert!(same_run(&a, &b), "{alg} on {model}, seed {seed}: {a:?} vs {b:?}"),
                        (Err(a), Err(b)) => assert_eq!(a.class(), b.class(), "{alg} on {model}: {a} vs {b}"),
                        (a, b) => panic!("{alg} on {model}, seed {seed}: {a:?} vs {b:?}"),
                    }
                }
            }
        }
    }
}

#[test]
fn caching_does_not_change_results() {
    for model in MODELS {
        let net = net(model);
        for alg in ALGORITHMS {
            let plain = residual(alg, &net, false);
            let cached = residual(alg, &net, true);
            let p = params(alg, model, 7);
            let a = execute(&plain, p, ExecOptions::default());
            let b = execute(&cached, p, ExecOptions { debug_cache: true });
            match (a, b) {
                (Ok(a), Ok(b)) => assert!(same_run(&a, &b), "{alg} on {model}"),
                (Err(a), Err(b)) => assert_eq!(a.class(), b.class()),
                (a, b) => panic!("{alg} on {model}: {a:?} vs {b:?}"),
            }
        }
    }
}

#[test]
fn compiled_c_agrees_with_residual() {
    let Some(tc) = toolchain() else {
        eprintln!("skipped: no C compiler");
        return;
    };
    let dir = tempfile::tempdir().unwrap();
    for model in MODELS {
        let net = net(model);
        for alg in ALGORITHMS {
            let rp = residual(alg, &net, true);
            let unit = simpl::emit_c::emit_c(&rp, &format!("{alg}_{model}"), Default::default()).unwrap();
            let exe = tc.compile(&unit, dir.path()).unwrap();
            for seed in [1, 9] {
                let p = params(alg, model, seed);
                let a = execute(&rp, p, ExecOptions::default());
                let b = simpl::emit_c::run_compiled(&exe, p).map(|r| r.outcome);
                match (a, b) {
                    (Ok(a), Ok(b)) => {
                        assert!(same_run(&a, &b), "{alg} on {model}, seed {seed}: {a:?} vs {b:?}");
                        assert_eq!(a.caches, b.caches);
                    }
                    (Err(a), Err(b)) => assert_eq!(a.class(), b.class(), "{alg} on {model}: {a} vs {b}"),
                    (a, b) => panic!("{alg} on {model}, seed {seed}: {a:?} vs {b:?}"),
                }
            }
        }
    }
}

#[test]
fn query_on_evidence_node_is_certain() {
    let net = parse_model(
        "(node A (cpt 0.3)) (node B (parents A) (cpt (0.9 0.2)))
         (evidence A true) (query A)",
    )
    .unwrap();
    let prog = program("likelihood", &net);
    let rp = specialize(&prog, &net, PeOptions::default()).unwrap();
    let p = RunParams::new(5, 500, 0);
    assert_eq!(interpret(&prog, &net, p).unwrap().estimate, vec![1.0, 0.0]);
    assert_eq!(execute(&rp, p, ExecOptions::default()).unwrap().estimate, vec![1.0, 0.0]);
}

#[test]
fn empty_evidence_weight_is_one() {
    let net = parse_model("(node A (cpt 0.3)) (node B (parents A) (cpt (0.9 0.2))) (query B)").unwrap();
    let rp = residual("likelihood", &net, true);
    assert!(rp.caches.is_empty());
    let out = execute(&rp, RunParams::new(3, 10_000, 0), ExecOptions::default()).unwrap();
    let exact = 0.3 * 0.9 + 0.7 * 0.2;
    assert!((out.estimate[0] - exact).abs() < 0.02);
}

#[test]
fn specialization_is_idempotent_through_unparse() {
    for model in ["burglary", "csi"] {
        let net = net(model);
        for alg in ALGORITHMS {
            let rp = residual(alg, &net, false);
            let text = simpl::residual::unparse(&rp).unwrap();
            let again = simpl::algorithms::custom_program(&text, &net).unwrap();
            let rp2 = specialize(&again, &net, PeOptions::default()).unwrap();
            assert_eq!(
                simpl::residual::unparse(&rp2).unwrap(),
                text,
                "{alg} on {model}: respecializing the residual changed it"
            );
            let p = params(alg, model, 4);
            let a = execute(&rp, p, ExecOptions::default()).unwrap();
            let b = interpret(&again, &net, p).unwrap();
            assert!(same_run(&a, &b), "{alg} on {model}");
        }
    }
}
