//! Bayes-net models: boolean scalar or boolean-array nodes with nested-list
//! CPTs, evidence and a query.

mod oracle;
mod parse;
mod plan;

use std::collections::HashMap;

use serde::Serialize;

use crate::value::{List, Value};

pub use oracle::{evidence_probability, exact_posterior, naive_posterior, OracleReport, ORACLE_LIMIT};
pub use parse::parse_model;

/// Models shipped with the crate, by file stem.
pub const BUNDLED: [(&str, &str); 3] = [
    ("burglary", include_str!("../../models/burglary.bn")),
    ("csi", include_str!("../../models/csi.bn")),
    ("multiburglary", include_str!("../../models/multiburglary.bn")),
];

/// Reads a model from a path, falling back to the bundled model of the
/// same stem. Returns the stem and the parsed net.
pub fn load_model(spec: &str) -> crate::Result<(String, BayesNet)> {
    let path = std::path::Path::new(spec);
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| spec.to_string());
    let text = if path.is_file() {
        std::fs::read_to_string(path)?
    } else {
        match BUNDLED.iter().find(|(n, _)| *n == stem.to_ascii_lowercase()) {
            Some((_, t)) => t.to_string(),
            None => {
                return Err(crate::Error::Model(format!(
                    "no model file `{spec}` and no bundled model named `{stem}`"
                )))
            }
        }
    };
    Ok((stem, parse_model(&text)?))
}
pub use plan::{specialize_model, ModelCodePlan, OpSet, Repr};

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Node {
    pub name: String,
    pub parents: Vec<NodeId>,
    pub children: Vec<NodeId>,
    /// P(node = true | parents), flattened row-major over parent tuples.
    /// The first parent is the most significant position and `true`
    /// selects the lower half, matching the nested-list order.
    pub cpt: Vec<f64>,
    /// Element count for array nodes.
    pub len: Option<usize>,
    /// Observed values, one per element (one for scalar nodes).
    pub evidence: Option<Vec<bool>>,
}

impl Node {
    pub fn is_array(&self) -> bool {
        self.len.is_some()
    }

    pub fn width(&self) -> usize {
        self.len.unwrap_or(1)
    }

    pub fn is_evidence(&self) -> bool {
        self.evidence.is_some()
    }

    /// Nested-list form of the CPT.
    pub fn cpt_nested(&self) -> Value {
        fn build(flat: &[f64]) -> Value {
            if flat.len() == 1 {
                Value::Float(flat[0])
            } else {
                let (t, f) = flat.split_at(flat.len() / 2);
                Value::List(List::new(vec![build(t), build(f)]))
            }
        }
        build(&self.cpt)
    }
}

/// Flattened CPT position for a tuple of parent values.
pub fn cpt_index(parent_values: impl IntoIterator<Item = bool>) -> usize {
    parent_values
        .into_iter()
        .fold(0, |acc, v| (acc << 1) | usize::from(!v))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BayesNet {
    /// Topological order; a node's id is its position here.
    pub nodes: Vec<Node>,
    pub query: NodeId,
    pub query_index: Option<usize>,
    #[serde(skip)]
    by_name: HashMap<String, NodeId>,
}

impl BayesNet {
    pub(crate) fn from_parts(nodes: Vec<Node>, query: NodeId, query_index: Option<usize>) -> Self {
        let by_name = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.name.clone(), i))
            .collect();
        BayesNet {
            nodes,
            query,
            query_index,
            by_name,
        }
    }

    pub fn lookup(&self, name: &str) -> Option<NodeId> {
        self.by_name.get(name).copied()
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    /// Evidence nodes in topological order.
    pub fn evidence(&self) -> Vec<NodeId> {
        (0..self.nodes.len())
            .filter(|&i| self.nodes[i].is_evidence())
            .collect()
    }

    pub fn names(&self) -> Vec<&str> {
        self.nodes.iter().map(|n| n.name.as_str()).collect()
    }

    /// Human-readable query, e.g. `Burglary[0]`.
    pub fn query_label(&self) -> String {
        let n = &self.nodes[self.query].name;
        match self.query_index {
            Some(i) => format!("{n}[{i}]"),
            None => n.clone(),
        }
    }

    /// Evidence as `name=value` strings (arrays summarized).
    pub fn evidence_labels(&self) -> Vec<String> {
        self.nodes
            .iter()
            .filter_map(|n| {
                let ev = n.evidence.as_ref()?;
                Some(if n.is_array() {
                    let t = ev.iter().filter(|b| **b).count();
                    format!("{}[{} true, {} false]", n.name, t, ev.len() - t)
                } else {
                    format!("{}={}", n.name, ev[0])
                })
            })
            .collect()
    }

    /// Initial run-time value slots: evidence values, `false` elsewhere.
    pub fn initial_state(&self) -> Vec<Vec<bool>> {
        self.nodes
            .iter()
            .map(|n| n.evidence.clone().unwrap_or_else(|| vec![false; n.width()]))
            .collect()
    }

    /// P(node[i] = true | parents) for a full state.
    pub fn true_cp(&self, state: &[Vec<bool>], id: NodeId, i: usize) -> f64 {
        let n = &self.nodes[id];
        let idx = cpt_index(n.parents.iter().map(|&p| {
            let pv = &state[p];
            if pv.len() == 1 && !self.nodes[p].is_array() {
                pv[0]
            } else {
                pv[i]
            }
        }));
        n.cpt[idx]
    }
}

/// Lists used by the model primitives, built once per run so that
/// `parents`, `children`, `CPT` and `nodes` are O(1).
pub struct StructureValues {
    pub parents: Vec<Value>,
    pub children: Vec<Value>,
    pub cpts: Vec<Value>,
    pub nodes: Value,
    pub evidence: Value,
}

impl StructureValues {
    pub fn new(net: &BayesNet) -> Self {
        let ids = |v: &[NodeId]| Value::List(List::new(v.iter().map(|&i| Value::Node(i)).collect()));
        StructureValues {
            parents: net.nodes.iter().map(|n| ids(&n.parents)).collect(),
            children: net.nodes.iter().map(|n| ids(&n.children)).collect(),
            cpts: net.nodes.iter().map(Node::cpt_nested).collect(),
            nodes: ids(&(0..net.nodes.len()).collect::<Vec<_>>()),
            evidence: ids(&net.evidence()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cpt_index_true_first() {
        assert_eq!(cpt_index([]), 0);
        assert_eq!(cpt_index([true, true]), 0);
        assert_eq!(cpt_index([true, false]), 1);
        assert_eq!(cpt_index([false, true]), 2);
        assert_eq!(cpt_index([false, false]), 3);
    }
}
