use std::collections::{BinaryHeap, HashMap};
use std::cmp::Reverse;

use super::{BayesNet, Node, NodeId};
use crate::error::{Error, Result, Span};
use crate::sexpr::{read_all, Atom, SExpr};

struct Decl {
    name: String,
    span: Span,
    parents: Vec<(String, Span)>,
    cpt: Option<SExpr>,
    len: Option<usize>,
    evidence: Option<EvidenceDecl>,
}

enum EvidenceDecl {
    Broadcast(bool, Vec<(usize, bool)>),
    PerIndex(Vec<bool>),
}

fn err(span: Span, msg: impl std::fmt::Display) -> Error {
    Error::Model(format!("{span}: {msg}"))
}

fn sym(e: &SExpr, what: &str) -> Result<String> {
    e.as_sym()
        .map(str::to_string)
        .ok_or_else(|| err(e.span(), format!("expected {what}, found `{e}`")))
}

fn boolean(e: &SExpr) -> Result<bool> {
    match e {
        SExpr::Atom(Atom::Bool(b), _) => Ok(*b),
        SExpr::Atom(Atom::Sym(s), _) if s == "true" => Ok(true),
        SExpr::Atom(Atom::Sym(s), _) if s == "false" => Ok(false),
        _ => Err(err(e.span(), format!("expected true or false, found `{e}`"))),
    }
}

fn index(e: &SExpr) -> Result<usize> {
    match e {
        SExpr::Atom(Atom::Int(i), _) if *i >= 0 => Ok(*i as usize),
        _ => Err(err(e.span(), format!("expected a non-negative index, found `{e}`"))),
    }
}

/// Strips a leading `quote` so that `'((0.9 0.1) ...)` and `((0.9 0.1) ...)`
/// are both accepted.
fn unquote(e: &SExpr) -> &SExpr {
    if let Some([head, inner]) = e.as_list() {
        if head.as_sym() == Some("quote") {
            return inner;
        }
    }
    e
}

fn flatten_cpt(e: &SExpr, depth: usize, node: &str, out: &mut Vec<f64>) -> Result<()> {
    let e = unquote(e);
    if depth == 0 {
        let p = match e {
            SExpr::Atom(Atom::Float(x), _) => *x,
            SExpr::Atom(Atom::Int(i), _) => *i as f64,
            _ => {
                return Err(err(
                    e.span(),
                    format!("CPT of `{node}` has the wrong nesting depth: expected a probability, found `{e}`"),
                ))
            }
        };
        if !(0.0..=1.0).contains(&p) {
            return Err(err(e.span(), format!("CPT of `{node}`: probability {p} is outside [0, 1]")));
        }
        out.push(p);
        return Ok(());
    }
    match e.as_list() {
        Some([t, f]) => {
            flatten_cpt(t, depth - 1, node, out)?;
            flatten_cpt(f, depth - 1, node, out)
        }
        _ => Err(err(
            e.span(),
            format!("CPT of `{node}` has the wrong shape: expected a two-element list at depth {depth} from the leaves, found `{e}`"),
        )),
    }
}

/// Parses a `.bn` model description.
///
/// ```text
/// (node Alarm (parents Burglary Earthquake) (cpt ((0.95 0.94) (0.29 0.001))))
/// (array Burglary 1000)
/// (evidence JohnCalls true)
/// (evidence Alarm false (0 true))
/// (query Burglary 0)
/// ```
pub fn parse_model(text: &str) -> Result<BayesNet> {
    let forms = read_all(text).map_err(|e| Error::Model(e.to_string()))?;
    let mut decls: Vec<Decl> = Vec::new();
    let mut by_name: HashMap<String, usize> = HashMap::new();
    let mut arrays: Vec<(String, usize, Span)> = Vec::new();
    let mut evidence: Vec<(String, EvidenceDecl, Span)> = Vec::new();
    let mut query: Option<(String, Option<usize>, Span)> = None;

    for form in &forms {
        let items = form
            .as_list()
            .ok_or_else(|| err(form.span(), format!("expected a declaration, found `{form}`")))?;
        let head = items
            .first()
            .and_then(SExpr::as_sym)
            .ok_or_else(|| err(form.span(), "empty or malformed declaration"))?;
        match head {
            "node" => {
                let name = sym(items.get(1).ok_or_else(|| err(form.span(), "node needs a name"))?, "a node name")?;
                if by_name.contains_key(&name) {
                    return Err(err(form.span(), format!("node `{name}` declared twice")));
                }
                let mut d = Decl {
                    name: name.clone(),
                    span: form.span(),
                    parents: Vec::new(),
                    cpt: None,
                    len: None,
                    evidence: None,
                };
                for clause in &items[2..] {
                    let parts = clause.as_list().unwrap_or(&[]);
                    match parts.first().and_then(SExpr::as_sym) {
                        Some("parents") => {
                            for p in &parts[1..] {
                                d.parents.push((sym(p, "a parent name")?, p.span()));
                            }
                        }
                        Some("cpt") if parts.len() == 2 => d.cpt = Some(parts[1].clone()),
                        _ => return Err(err(clause.span(), format!("unknown node clause `{clause}`"))),
                    }
                }
                if d.cpt.is_none() {
                    return Err(err(form.span(), format!("node `{name}` has no cpt")));
                }
                by_name.insert(name, decls.len());
                decls.push(d);
            }
            "array" => match items {
                [_, n, k] => {
                    let len = index(k)?;
                    if len == 0 {
                        return Err(err(k.span(), "array length must be positive"));
                    }
                    arrays.push((sym(n, "a node name")?, len, form.span()));
                }
                _ => return Err(err(form.span(), "expected (array Node length)")),
            },
            "evidence" => {
                if items.len() < 3 {
                    return Err(err(form.span(), "expected (evidence Node value ...)"));
                }
                let name = sym(&items[1], "a node name")?;
                let spec = unquote(&items[2]);
                let ev = if let Some(vals) = spec.as_list() {
                    let vals = if vals.first().and_then(SExpr::as_sym) == Some("list") {
                        &vals[1..]
                    } else {
                        vals
                    };
                    if items.len() > 3 {
                        return Err(err(form.span(), "per-index evidence takes no overrides"));
                    }
                    EvidenceDecl::PerIndex(vals.iter().map(boolean).collect::<Result<_>>()?)
                } else {
                    let mut overrides = Vec::new();
                    for o in &items[3..] {
                        match o.as_list() {
                            Some([i, v]) => overrides.push((index(i)?, boolean(v)?)),
                            _ => return Err(err(o.span(), "expected (index value) override")),
                        }
                    }
                    EvidenceDecl::Broadcast(boolean(spec)?, overrides)
                };
                evidence.push((name, ev, form.span()));
            }
            "query" => {
                let (n, i) = match items {
                    [_, n] => (n, None),
                    [_, n, i] => (n, Some(index(i)?)),
                    _ => return Err(err(form.span(), "expected (query Node [index])")),
                };
                if query.is_some() {
                    return Err(err(form.span(), "more than one query"));
                }
                query = Some((sym(n, "a node name")?, i, form.span()));
            }
            other => return Err(err(form.span(), format!("unknown declaration `{other}`"))),
        }
    }

    let find = |name: &str, span: Span| {
        by_name
            .get(name)
            .copied()
            .ok_or_else(|| err(span, format!("unknown node `{name}`")))
    };
    for (name, len, span) in arrays {
        let i = find(&name, span)?;
        if decls[i].len.replace(len).is_some() {
            return Err(err(span, format!("array length of `{name}` declared twice")));
        }
    }
    for (name, ev, span) in evidence {
        let i = find(&name, span)?;
        if decls[i].evidence.is_some() {
            return Err(err(span, format!("evidence on `{name}` given twice")));
        }
        decls[i].evidence = Some(ev);
    }

    // Kahn's algorithm, preferring declaration order among ready nodes.
    let n = decls.len();
    let mut parent_ids: Vec<Vec<usize>> = Vec::with_capacity(n);
    for d in &decls {
        let mut ps = Vec::new();
        for (p, span) in &d.parents {
            let pid = find(p, *span)?;
            if ps.contains(&pid) {
                return Err(err(*span, format!("`{}` lists parent `{p}` twice", d.name)));
            }
            ps.push(pid);
        }
        parent_ids.push(ps);
    }
    let mut indegree: Vec<usize> = parent_ids.iter().map(Vec::len).collect();
    let mut kids: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (c, ps) in parent_ids.iter().enumerate() {
        for &p in ps {
            kids[p].push(c);
        }
    }
    let mut ready: BinaryHeap<Reverse<usize>> = (0..n).filter(|&i| indegree[i] == 0).map(Reverse).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse(i)) = ready.pop() {
        order.push(i);
        for &c in &kids[i] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                ready.push(Reverse(c));
            }
        }
    }
    if order.len() < n {
        let stuck: Vec<&str> = (0..n)
            .filter(|&i| indegree[i] > 0)
            .map(|i| decls[i].name.as_str())
            .collect();
        return Err(Error::Model(format!("cycle detected among nodes: {}", stuck.join(", "))));
    }
    let mut new_id = vec![0; n];
    for (pos, &old) in order.iter().enumerate() {
        new_id[old] = pos;
    }

    let mut nodes = Vec::with_capacity(n);
    for &old in &order {
        let d = &decls[old];
        let parents: Vec<NodeId> = parent_ids[old].iter().map(|&p| new_id[p]).collect();
        let mut cpt = Vec::with_capacity(1 << parents.len());
        flatten_cpt(d.cpt.as_ref().unwrap(), parents.len(), &d.name, &mut cpt)?;
        for (p, span) in &d.parents {
            let pd = &decls[by_name[p]];
            match (pd.len, d.len) {
                (Some(_), None) => {
                    return Err(err(
                        *span,
                        format!("scalar node `{}` cannot have array parent `{p}`", d.name),
                    ))
                }
                (Some(a), Some(b)) if a != b => {
                    return Err(err(
                        *span,
                        format!("array node `{}` (length {b}) has parent `{p}` of different length {a}", d.name),
                    ))
                }
                _ => {}
            }
        }
        let width = d.len.unwrap_or(1);
        let evidence = match &d.evidence {
            None => None,
            Some(EvidenceDecl::PerIndex(vals)) => {
                if d.len.is_none() {
                    return Err(err(d.span, format!("evidence list given for scalar node `{}`", d.name)));
                }
                if vals.len() != width {
                    return Err(err(
                        d.span,
                        format!("evidence on `{}` gives {} values for {width} elements", d.name, vals.len()),
                    ));
                }
                Some(vals.clone())
            }
            Some(EvidenceDecl::Broadcast(v, overrides)) => {
                if d.len.is_none() && !overrides.is_empty() {
                    return Err(err(d.span, format!("indexed evidence on scalar node `{}`", d.name)));
                }
                let mut vals = vec![*v; width];
                for &(i, b) in overrides {
                    if i >= width {
                        return Err(err(d.span, format!("evidence index {i} out of range for `{}`", d.name)));
                    }
                    vals[i] = b;
                }
                Some(vals)
            }
        };
        nodes.push(Node {
            name: d.name.clone(),
            parents,
            children: Vec::new(),
            cpt,
            len: d.len,
            evidence,
        });
    }
    for id in 0..n {
        for p in nodes[id].parents.clone() {
            nodes[p].children.push(id);
        }
    }

    let (qname, qidx, qspan) = query.ok_or_else(|| Error::Model("model declares no (query ...)".into()))?;
    let q = new_id[find(&qname, qspan)?];
    match (nodes[q].len, qidx) {
        (Some(len), Some(i)) if i >= len => {
            return Err(err(qspan, format!("query index {i} out of range for `{qname}`")))
        }
        (Some(_), None) => return Err(err(qspan, format!("query on array node `{qname}` needs an index"))),
        (None, Some(_)) => return Err(err(qspan, format!("query index given for scalar node `{qname}`"))),
        _ => {}
    }
    Ok(BayesNet::from_parts(nodes, q, qidx))
}

#[cfg(test)]
mod tests {
    use super::*;

    const BURGLARY: &str = "
        (node Burglary (cpt 0.02))
        (node Earthquake (cpt 0.05))
        (node Alarm (parents Burglary Earthquake) (cpt ((0.95 0.94) (0.29 0.001))))
        (node JohnCalls (parents Alarm) (cpt (0.9 0.05)))
        (node MaryCalls (parents Alarm) (cpt (0.7 0.01)))
        (evidence JohnCalls true)
        (evidence MaryCalls true)
        (query Burglary)";

    #[test]
    fn burglary_structure() {
        let net = parse_model(BURGLARY).unwrap();
        assert_eq!(net.names(), vec!["Burglary", "Earthquake", "Alarm", "JohnCalls", "MaryCalls"]);
        let a = net.lookup("Alarm").unwrap();
        assert_eq!(net.node(a).parents, vec![0, 1]);
        assert_eq!(net.node(a).children, vec![3, 4]);
        assert_eq!(net.node(a).cpt, vec![0.95, 0.94, 0.29, 0.001]);
        assert_eq!(net.evidence(), vec![3, 4]);
        assert_eq!(net.node(a).cpt_nested().to_string(), "((0.95 0.94) (0.29 0.001))");
    }

    #[test]
    fn declaration_order_need_not_be_topological() {
        let net = parse_model(
            "(node B (parents A) (cpt (0.5 0.5))) (node A (cpt 0.1)) (query B)",
        )
        .unwrap();
        assert_eq!(net.names(), vec!["A", "B"]);
        assert_eq!(net.query, 1);
    }

    #[test]
    fn rejects_bad_models() {
        let cyc = parse_model("(node A (parents B) (cpt (0.5 0.5))) (node B (parents A) (cpt (0.5 0.5))) (query A)");
        assert!(cyc.unwrap_err().to_string().contains("cycle"));
        let arity = parse_model("(node A (cpt 0.5)) (node B (parents A) (cpt 0.5)) (query B)");
        assert!(arity.unwrap_err().to_string().contains("wrong"));
        let range = parse_model("(node A (cpt 1.5)) (query A)");
        assert!(range.unwrap_err().to_string().contains("outside"));
        let unknown = parse_model("(node A (parents Z) (cpt (0.5 0.5))) (query A)");
        assert!(unknown.unwrap_err().to_string().contains("unknown node `Z`"));
        let noquery = parse_model("(node A (cpt 0.5))");
        assert!(noquery.is_err());
        let scalar_child = parse_model("(node A (cpt 0.5)) (array A 3) (node B (parents A) (cpt (0.5 0.5))) (query B)");
        assert!(scalar_child.unwrap_err().to_string().contains("array parent"));
        let ev_len = parse_model("(node A (cpt 0.5)) (array A 3) (evidence A (true false)) (query A 0)");
        assert!(ev_len.unwrap_err().to_string().contains("2 values"));
    }

    #[test]
    fn array_evidence_forms() {
        let net = parse_model(
            "(node A (cpt 0.5)) (array A 4) (node B (parents A) (cpt (0.9 0.1))) (array B 4)
             (evidence B false (0 true) (2 true)) (query A 1)",
        )
        .unwrap();
        assert_eq!(net.node(1).evidence, Some(vec![true, false, true, false]));
        let net = parse_model(
            "(node A (cpt 0.5)) (array A 3) (evidence A '(#t #f #t)) (query A 1)",
        )
        .unwrap();
        assert_eq!(net.node(0).evidence, Some(vec![true, false, true]));
    }
}
