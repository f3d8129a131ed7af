mod common;

use common::*;
use simpl::model::{evidence_probability, exact_posterior, naive_posterior, OracleReport};
use simpl::model::parse_model;

// Hand enumeration, computed outside this crate.
const BURGLARY: f64 = 0.5418256806845435;
const CSI: f64 = 0.5787965616045845;
const CSI_EVIDENCE: f64 = 0.4188;
const MULTIBURGLARY: f64 = 0.6532314107018764;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-12
}

#[test]
fn frozen_posteriors() {
    for (model, want) in [("burglary", BURGLARY), ("csi", CSI), ("multiburglary", MULTIBURGLARY)] {
        let got = exact_posterior(&net(model)).unwrap();
        assert!(close(got, want), "{model}: {got} vs {want}");
    }
    assert!(close(evidence_probability(&net("csi")).unwrap(), CSI_EVIDENCE));
}

#[test]
fn naive_enumeration_agrees() {
    for model in ["burglary", "csi"] {
        let n = net(model);
        assert!(close(naive_posterior(&n).unwrap(), exact_posterior(&n).unwrap()));
    }
    let small = parse_model(
        "(node B (cpt 0.3)) (array B 6) (node E (cpt 0.1))
         (node A (parents B E) (cpt ((0.9 0.8) (0.4 0.05)))) (array A 6)
         (evidence A false (0 true) (3 true)) (query B 3)",
    )
    .unwrap();
    assert!(close(naive_posterior(&small).unwrap(), exact_posterior(&small).unwrap()));
}

#[test]
fn report_labels() {
    let r = OracleReport::new(&net("multiburglary")).unwrap();
    assert_eq!(r.query, "Burglary[0]");
    assert!(close(r.probability, MULTIBURGLARY));
}

#[test]
fn zero_probability_evidence_is_an_error() {
    let n = parse_model("(node A (cpt 0.0)) (node B (parents A) (cpt (0.5 0.5))) (evidence A true) (query B)").unwrap();
    assert!(exact_posterior(&n).is_err());
}
