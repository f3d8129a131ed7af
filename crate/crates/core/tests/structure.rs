mod common;

use common::*;
use simpl::exec::{execute, ExecOptions};
use simpl::interp::RunParams;
use simpl::model::{parse_model, Repr, BUNDLED};
use simpl::residual::{dump, unparse, Block, CacheKey, Operand, ResidualProgram, Stmt};

fn golden(name: &str, actual: &str) {
    let path = format!("{}/tests/golden/{name}", env!("CARGO_MANIFEST_DIR"));
    if std::env::var_os("SIMPL_BLESS").is_some() {
        std::fs::write(&path, actual).unwrap();
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing golden file {path}"));
    assert_eq!(actual, expected, "{name} differs from the frozen residual");
}

fn main_loop(rp: &ResidualProgram) -> &Block {
    let loops: Vec<&Block> = rp
        .body
        .iter()
        .filter_map(|s| match s {
            Stmt::For { count: Operand::Temp(0), body, .. } => Some(body),
            _ => None,
        })
        .collect();
    assert_eq!(loops.len(), 1);
    loops[0]
}

fn count(block: &Block, pred: &dyn Fn(&Stmt) -> bool) -> usize {
    block
        .iter()
        .map(|s| usize::from(pred(s)) + s.blocks().into_iter().map(|b| count(b, pred)).sum::<usize>())
        .sum()
}

fn multiburglary(len: usize) -> String {
    BUNDLED[2].1.replace("1000", &len.to_string())
}

#[test]
fn likelihood_burglary_matches_golden() {
    let rp = residual("likelihood", &net("burglary"), true);
    golden("likelihood_burglary.ir", &dump(&rp));
}

#[test]
fn gibbs_burglary_matches_golden() {
    let rp = residual("gibbs", &net("burglary"), true);
    golden("gibbs_burglary.ir", &dump(&rp));
}

#[test]
fn likelihood_burglary_has_no_structure_left() {
    let net = net("burglary");
    let rp = residual("likelihood", &net, true);
    let m = rp.metrics();
    assert_eq!(m.loops, 1);
    main_loop(&rp);
    let text = unparse(&residual("likelihood", &net, false)).unwrap();
    for word in ["parents", "children", "cpt", "true-cp", "index", "evidence?", "node-value"] {
        assert!(!text.contains(word), "residual mentions `{word}`");
    }
    let lits = rp.float_literals();
    for x in [0.95, 0.94, 0.29, 0.001] {
        assert!(lits.contains(&x), "Alarm constant {x} is not inlined");
    }
    let alarm = net.lookup("Alarm").unwrap();
    assert_eq!(rp.plan.reprs[alarm], Repr::BoolVar);
    assert_eq!(rp.plan.reprs[net.lookup("JohnCalls").unwrap()], Repr::Const(true));
}

#[test]
fn burglary_weight_cache_keys_on_alarm_only() {
    let net = net("burglary");
    let rp = residual("likelihood", &net, true);
    assert_eq!(rp.caches.len(), 1);
    let c = &rp.caches[0];
    assert_eq!(c.keys, vec![CacheKey::Node(net.lookup("Alarm").unwrap())]);
    assert!(c.is_dense());
    let out = execute(&rp, RunParams::new(1, 50_000, 0), ExecOptions::default()).unwrap();
    assert!(out.caches[0].entries <= 2);
    assert_eq!(out.caches[0].hits + out.caches[0].misses, 50_000);
}

#[test]
fn csi_weight_cache_keys_on_both_parents_of_z() {
    let net = net("csi");
    let rp = residual("likelihood", &net, true);
    let keys = &rp.caches[0].keys;
    assert_eq!(
        keys,
        &vec![CacheKey::Node(net.lookup("X").unwrap()), CacheKey::Node(net.lookup("Y").unwrap())]
    );
}

#[test]
fn gibbs_burglary_updates_exactly_three_nodes() {
    let rp = residual("gibbs", &net("burglary"), true);
    let body = main_loop(&rp);
    let flips = count(body, &|s| matches!(s, Stmt::Flip { .. }));
    assert_eq!(flips, 3);
    let written: Vec<usize> = body
        .iter()
        .filter_map(|s| match s {
            Stmt::WriteNode { node, value: Operand::Temp(_), .. } => Some(*node),
            _ => None,
        })
        .collect();
    assert_eq!(written, vec![0, 1, 2]);
    let lits = rp.float_literals();
    for x in [0.02, 0.98, 0.05, 0.95, 0.94, 0.29, 0.001, 0.9, 0.05, 0.7, 0.01] {
        assert!(lits.contains(&x), "constant {x} missing");
    }
}

#[test]
fn multiburglary_residual_size_ignores_array_length() {
    for alg in ["likelihood", "gibbs", "mh", "rejection"] {
        let sizes: Vec<_> = [10usize, 100, 1000]
            .into_iter()
            .map(|len| {
                let net = parse_model(&multiburglary(len)).unwrap();
                let rp = residual(alg, &net, true);
                rp.metrics()
            })
            .collect();
        assert!(sizes.windows(2).all(|w| w[0] == w[1]), "{alg}: {sizes:?}");
    }
    let rp = residual("likelihood", &net("multiburglary"), true);
    assert_eq!(rp.metrics().loops, 3);
}

#[test]
fn our_annotation_counts() {
    let net = net("burglary");
    let counts: Vec<usize> = ALGORITHMS.iter().map(|a| program(a, &net).annotations().total()).collect();
    assert_eq!(counts, vec![2, 1, 2, 3]);
}
