mod common;

use common::*;
use proptest::prelude::*;
use simpl::exec::{execute, ExecOptions};
use simpl::interp::{interpret, RunParams};
use simpl::model::{exact_posterior, parse_model, BayesNet};

#[derive(Debug, Clone)]
struct NodeSpec {
    array: bool,
    parents: Vec<usize>,
    cpt: Vec<f64>,
    evidence: Option<bool>,
}

fn cpt_text(cpt: &[f64], depth: usize) -> String {
    if depth == 0 {
        return format!("{}", cpt[0]);
    }
    let half = cpt.len() / 2;
    format!("({} {})", cpt_text(&cpt[..half], depth - 1), cpt_text(&cpt[half..], depth - 1))
}

fn render(nodes: &[NodeSpec], query: usize) -> String {
    let mut s = String::new();
    for (i, n) in nodes.iter().enumerate() {
        let parents: Vec<String> = n.parents.iter().map(|p| format!("N{p}")).collect();
        let ps = if parents.is_empty() { String::new() } else { format!(" (parents {})", parents.join(" ")) };
        s += &format!("(node N{i}{ps} (cpt {}))\n", cpt_text(&n.cpt, n.parents.len()));
        if n.array {
            s += &format!("(array N{i} 3)\n");
        }
        if let Some(v) = n.evidence {
            if n.array {
                s += &format!("(evidence N{i} {v} (1 {}))\n", !v);
            } else {
                s += &format!("(evidence N{i} {v})\n");
            }
        }
    }
    if nodes[query].array {
        s += &format!("(query N{query} 0)\n");
    } else {
        s += &format!("(query N{query})\n");
    }
    s
}

fn arb_net() -> impl Strategy<Value = String> {
    (2usize..6, 0usize..3).prop_flat_map(|(scalars, arrays)| {
        let total = scalars + arrays;
        let specs: Vec<_> = (0..total)
            .map(|i| {
                (
                    proptest::sample::subsequence((0..i).collect::<Vec<_>>(), 0..=i.min(2)),
                    proptest::collection::vec(0.05f64..0.95, 4),
                    prop_oneof![3 => Just(None), 1 => any::<bool>().prop_map(Some)],
                )
                    .prop_map(move |(parents, cpt, evidence)| NodeSpec {
                        array: i >= scalars,
                        cpt: cpt[..1 << parents.len()].iter().map(|x| (x * 100.0).round() / 100.0).collect(),
                        parents,
                        evidence,
                    })
            })
            .collect();
        (specs, 0..total).prop_map(|(mut nodes, q)| {
            nodes[q].evidence = None;
            render(&nodes, q)
        })
    })
}

fn parsed(text: &str) -> BayesNet {
    parse_model(text).unwrap_or_else(|e| panic!("{e}\n{text}"))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn residual_agrees_with_interpreter(text in arb_net(), alg in 0usize..4, seed in any::<u64>()) {
        let net = parsed(&text);
        let alg = ALGORITHMS[alg];
        let p = RunParams::new(seed, 200, 20);
        let want = interpret(&program(alg, &net), &net, p);
        for caching in [false, true] {
            let got = execute(&residual(alg, &net, caching), p, ExecOptions::default());
            match (&want, &got) {
                (Ok(a), Ok(b)) => prop_assert!(same_run(a, b), "{alg} caching={caching}\n{text}"),
                (Err(a), Err(b)) => prop_assert_eq!(a.class(), b.class()),
                _ => prop_assert!(false, "{alg}: {want:?} vs {got:?}\n{text}"),
            }
        }
    }

    #[test]
    fn cache_keys_are_complete(text in arb_net(), alg in 0usize..4, seed in any::<u64>()) {
        let net = parsed(&text);
        let rp = residual(ALGORITHMS[alg], &net, true);
        let r = execute(&rp, RunParams::new(seed, 2000, 50), ExecOptions { debug_cache: true });
        prop_assert!(r.is_ok(), "{:?}\n{}", r.err(), text);
    }

    #[test]
    fn oracle_agrees_with_naive_enumeration(text in arb_net()) {
        let net = parsed(&text);
        let a = exact_posterior(&net).unwrap();
        let b = simpl::model::naive_posterior(&net).unwrap();
        prop_assert!((a - b).abs() < 1e-10, "{a} vs {b}\n{text}");
    }
}

fn median_error(alg: &str, n: i64, burn: i64) -> f64 {
    let net = net("burglary");
    let want = exact_posterior(&net).unwrap();
    let rp = residual(alg, &net, true);
    median(
        (0..10)
            .map(|s| {
                let o = execute(&rp, RunParams::new(100 + s, n, burn), ExecOptions::default()).unwrap();
                (o.estimate[0] - want).abs()
            })
            .collect(),
    )
}

#[test]
fn estimators_converge() {
    for (alg, burn) in [("likelihood", 0), ("rejection", 0), ("gibbs", 500), ("mh", 1000)] {
        let coarse = median_error(alg, 5_000, burn);
        let fine = median_error(alg, 80_000, burn);
        assert!(fine < coarse, "{alg}: {coarse} -> {fine}");
        assert!(fine < 0.02, "{alg}: {fine}");
    }
}
