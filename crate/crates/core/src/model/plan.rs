use serde::Serialize;

use super::BayesNet;

/// Run-time operations an algorithm needs from the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct OpSet {
    pub read: bool,
    pub write: bool,
}

impl OpSet {
    pub const ALL: OpSet = OpSet {
        read: true,
        write: true,
    };
}

/// How one node is represented in residual code.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Repr {
    BoolVar,
    BoolArray(usize),
    Const(bool),
    ConstArray(Vec<bool>),
}

/// The minimal run-time representation of a model: one entry per node,
/// never any graph structure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ModelCodePlan {
    pub reprs: Vec<Repr>,
    pub ops: OpSet,
}

impl ModelCodePlan {
    pub fn len(&self) -> usize {
        self.reprs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reprs.is_empty()
    }

    pub fn is_const(&self, id: usize) -> bool {
        matches!(self.reprs[id], Repr::Const(_) | Repr::ConstArray(_))
    }
}

pub fn specialize_model(net: &BayesNet, ops: OpSet) -> ModelCodePlan {
    let reprs = net
        .nodes
        .iter()
        .map(|n| match (&n.evidence, n.len) {
            (Some(ev), None) => Repr::Const(ev[0]),
            (Some(ev), Some(_)) => Repr::ConstArray(ev.clone()),
            (None, None) => Repr::BoolVar,
            (None, Some(k)) => Repr::BoolArray(k),
        })
        .collect();
    ModelCodePlan { reprs, ops }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_model;

    #[test]
    fn evidence_becomes_constants() {
        let net = parse_model(
            "(node A (cpt 0.3)) (node B (parents A) (cpt (0.9 0.2))) (evidence B true) (query A)",
        )
        .unwrap();
        let plan = specialize_model(&net, OpSet::ALL);
        assert_eq!(plan.reprs, vec![Repr::BoolVar, Repr::Const(true)]);
    }

    #[test]
    fn arrays_stay_one_entry() {
        let net = parse_model(
            "(node A (cpt 0.3)) (array A 1000) (node E (cpt 0.1))
             (node B (parents A E) (cpt ((0.9 0.8) (0.2 0.1)))) (array B 1000)
             (query A 0)",
        )
        .unwrap();
        let plan = specialize_model(&net, OpSet::ALL);
        assert_eq!(plan.len(), 3);
        assert_eq!(plan.reprs[0], Repr::BoolArray(1000));
    }

    #[test]
    fn all_evidence() {
        let net = parse_model("(node A (cpt 0.3)) (evidence A false) (query A)").unwrap();
        let plan = specialize_model(&net, OpSet::ALL);
        assert!((0..plan.len()).all(|i| plan.is_const(i)));
    }
}
