//! Exact posterior by enumeration.
//!
//! Scalar non-evidence nodes are enumerated jointly. Array nodes of equal
//! length form a plate whose elements are conditionally independent given
//! the scalars, so each element is summed out separately. Everything is
//! accumulated in log space because plate products over a thousand
//! elements underflow quickly.

use serde::Serialize;

use super::{cpt_index, BayesNet, NodeId};
use crate::error::{Error, Result};

/// Largest amount of enumeration work the oracle accepts.
pub const ORACLE_LIMIT: u64 = 1 << 25;

#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub query: String,
    pub evidence: Vec<String>,
    pub probability: f64,
    pub evidence_probability: f64,
}

impl OracleReport {
    pub fn new(net: &BayesNet) -> Result<Self> {
        let (num, den) = log_marginals(net)?;
        Ok(OracleReport {
            query: net.query_label(),
            evidence: net.evidence_labels(),
            probability: (num - den).exp(),
            evidence_probability: den.exp(),
        })
    }
}

fn logsumexp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn prob(p_true: f64, v: bool) -> f64 {
    if v {
        p_true
    } else {
        1.0 - p_true
    }
}

struct Plate {
    len: usize,
    members: Vec<NodeId>,
    free: Vec<NodeId>,
}

/// Returns (log P(query = true, evidence), log P(evidence)).
fn log_marginals(net: &BayesNet) -> Result<(f64, f64)> {
    let n = net.nodes.len();
    let scalars: Vec<NodeId> = (0..n)
        .filter(|&i| !net.nodes[i].is_array() && !net.nodes[i].is_evidence())
        .collect();
    let mut plates: Vec<Plate> = Vec::new();
    for (i, node) in net.nodes.iter().enumerate() {
        if let Some(len) = node.len {
            let pos = match plates.iter().position(|p| p.len == len) {
                Some(p) => p,
                None => {
                    plates.push(Plate {
                        len,
                        members: Vec::new(),
                        free: Vec::new(),
                    });
                    plates.len() - 1
                }
            };
            plates[pos].members.push(i);
            if !node.is_evidence() {
                plates[pos].free.push(i);
            }
        }
    }
    if scalars.len() > 25 || plates.iter().any(|p| p.free.len() > 25) {
        return Err(Error::Oracle(format!(
            "state space too large for enumeration (limit {ORACLE_LIMIT} steps)"
        )));
    }
    let per_scalar: u64 = plates
        .iter()
        .map(|p| p.len as u64 * (1u64 << p.free.len()) * p.members.len().max(1) as u64)
        .sum::<u64>()
        .max(1);
    let work = (1u64 << scalars.len()).saturating_mul(per_scalar);
    if work > ORACLE_LIMIT {
        return Err(Error::Oracle(format!(
            "state space too large for enumeration ({work} steps, limit {ORACLE_LIMIT})"
        )));
    }

    let mut state = net.initial_state();
    let mut num_terms = Vec::new();
    let mut den_terms = Vec::new();
    for mask in 0u64..(1u64 << scalars.len()) {
        for (b, &s) in scalars.iter().enumerate() {
            state[s][0] = mask >> b & 1 == 1;
        }
        let mut logw = 0.0;
        for (i, node) in net.nodes.iter().enumerate() {
            if !node.is_array() {
                logw += prob(net.true_cp(&state, i, 0), state[i][0]).ln();
            }
        }
        if logw == f64::NEG_INFINITY {
            continue;
        }
        let mut log_num = logw;
        let mut log_den = logw;
        for plate in &plates {
            for e in 0..plate.len {
                let (mut s_all, mut s_q) = (0.0f64, 0.0f64);
                for m in 0u64..(1u64 << plate.free.len()) {
                    for (b, &f) in plate.free.iter().enumerate() {
                        state[f][e] = m >> b & 1 == 1;
                    }
                    let mut w = 1.0;
                    for &a in &plate.members {
                        w *= prob(net.true_cp(&state, a, e), state[a][e]);
                    }
                    s_all += w;
                    if net.query_index == Some(e) && plate.members.contains(&net.query) && state[net.query][e] {
                        s_q += w;
                    }
                }
                log_den += s_all.ln();
                if net.query_index == Some(e) && plate.members.contains(&net.query) {
                    log_num += s_q.ln();
                } else {
                    log_num += s_all.ln();
                }
            }
        }
        den_terms.push(log_den);
        let query_true = match net.query_index {
            None => state[net.query][0],
            Some(_) => true,
        };
        if query_true {
            num_terms.push(log_num);
        }
    }
    let den = logsumexp(&den_terms);
    if den == f64::NEG_INFINITY {
        return Err(Error::Oracle(
            "evidence has zero probability under the model".into(),
        ));
    }
    Ok((logsumexp(&num_terms), den))
}

/// P(query = true | evidence).
pub fn exact_posterior(net: &BayesNet) -> Result<f64> {
    let (num, den) = log_marginals(net)?;
    Ok((num - den).exp())
}

/// P(evidence).
pub fn evidence_probability(net: &BayesNet) -> Result<f64> {
    Ok(log_marginals(net)?.1.exp())
}

/// Brute-force enumeration over every element of every node, with no
/// factoring at all. Only usable on tiny nets; kept as an independent
/// cross-check of [`exact_posterior`].
pub fn naive_posterior(net: &BayesNet) -> Result<f64> {
    let mut sites: Vec<(NodeId, usize)> = Vec::new();
    for (i, node) in net.nodes.iter().enumerate() {
        if !node.is_evidence() {
            for e in 0..node.width() {
                sites.push((i, e));
            }
        }
    }
    if sites.len() > 22 {
        return Err(Error::Oracle("too many free elements for naive enumeration".into()));
    }
    let mut state = net.initial_state();
    let (mut num, mut den) = (0.0, 0.0);
    for mask in 0u64..(1u64 << sites.len()) {
        for (b, &(i, e)) in sites.iter().enumerate() {
            state[i][e] = mask >> b & 1 == 1;
        }
        let mut w = 1.0;
        for (i, node) in net.nodes.iter().enumerate() {
            for e in 0..node.width() {
                let parents = node.parents.iter().map(|&p| {
                    if net.nodes[p].is_array() {
                        state[p][e]
                    } else {
                        state[p][0]
                    }
                });
                w *= prob(node.cpt[cpt_index(parents)], state[i][e]);
            }
        }
        den += w;
        if state[net.query][net.query_index.unwrap_or(0)] {
            num += w;
        }
    }
    if den == 0.0 {
        return Err(Error::Oracle("evidence has zero probability under the model".into()));
    }
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_model;

    #[test]
    fn prior_of_root() {
        let net = parse_model("(node A (cpt 0.3)) (node B (parents A) (cpt (0.9 0.2))) (query A)").unwrap();
        assert!((exact_posterior(&net).unwrap() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn zero_evidence() {
        let net = parse_model("(node A (cpt 0.0)) (node B (parents A) (cpt (0.9 0.0))) (evidence B true) (query A)").unwrap();
        assert!(matches!(exact_posterior(&net), Err(Error::Oracle(_))));
    }

    #[test]
    fn plates_agree_with_naive() {
        let net = parse_model(
            "(node E (cpt 0.3)) (node B (cpt 0.2)) (array B 4)
             (node A (parents B E) (cpt ((0.95 0.94) (0.29 0.01)))) (array A 4)
             (evidence A false (1 true)) (query B 1)",
        )
        .unwrap();
        let a = exact_posterior(&net).unwrap();
        let b = naive_posterior(&net).unwrap();
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }

    #[test]
    fn refuses_huge() {
        let mut src = String::new();
        for i in 0..26 {
            src.push_str(&format!("(node N{i} (cpt 0.5))"));
        }
        src.push_str("(query N0)");
        let net = parse_model(&src).unwrap();
        assert!(exact_posterior(&net).unwrap_err().to_string().contains("too large"));
    }
}
