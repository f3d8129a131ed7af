//! Textual dump of residual programs, one statement per line, with temps
//! and cells renumbered in definition order so that dumps are stable
//! across specialization runs.

use std::collections::HashMap;

use super::*;
use crate::model::Repr;

struct Names {
    temps: HashMap<TempId, usize>,
    cells: HashMap<CellId, usize>,
}

impl Names {
    fn temp(&mut self, t: TempId) -> usize {
        let n = self.temps.len();
        *self.temps.entry(t).or_insert(n)
    }

    fn cell(&mut self, c: CellId) -> usize {
        let n = self.cells.len();
        *self.cells.entry(c).or_insert(n)
    }

    fn number(&mut self, block: &Block, rp: &ResidualProgram) {
        for s in block {
            match s {
                Stmt::DeclCell { cell, .. } => {
                    self.cell(*cell);
                }
                Stmt::For { var, body, .. } => {
                    self.temp(*var);
                    self.number(body, rp);
                }
                Stmt::If { then_b, else_b, .. } => {
                    self.number(then_b, rp);
                    self.number(else_b, rp);
                }
                Stmt::Cache { dst, cache } => {
                    if let Some(spec) = rp.caches.get(*cache as usize) {
                        self.number(&spec.body, rp);
                    }
                    self.temp(*dst);
                }
                other => {
                    if let Some(d) = other.def() {
                        self.temp(d);
                    }
                }
            }
        }
    }
}

struct Printer<'a> {
    rp: &'a ResidualProgram,
    names: Names,
    out: String,
}

impl Printer<'_> {
    fn op(&mut self, o: Operand) -> String {
        match o {
            Operand::Temp(t) => format!("t{}", self.names.temp(t)),
            Operand::Lit(l) => l.to_string(),
        }
    }

    fn t(&mut self, t: TempId) -> String {
        format!("t{}", self.names.temp(t))
    }

    fn c(&mut self, c: CellId) -> String {
        format!("c{}", self.names.cell(c))
    }

    fn ops(&mut self, v: &[Operand]) -> String {
        v.iter().map(|o| self.op(*o)).collect::<Vec<_>>().join(" ")
    }

    fn line(&mut self, depth: usize, text: String) {
        for _ in 0..depth {
            self.out.push_str("  ");
        }
        self.out.push_str(&text);
        self.out.push('\n');
    }

    fn block(&mut self, block: &Block, depth: usize) {
        for s in block {
            self.stmt(s, depth);
        }
    }

    fn stmt(&mut self, s: &Stmt, depth: usize) {
        let text = match s {
            Stmt::Let { dst, ty, rhs } => {
                let r = match rhs {
                    Rhs::Bin(op, a, b) => format!("({} {} {})", op.name(), self.op(*a), self.op(*b)),
                    Rhs::Neg(a) => format!("(- {})", self.op(*a)),
                    Rhs::Not(a) => format!("(not {})", self.op(*a)),
                    Rhs::Same(a, b) => format!("(eq? {} {})", self.op(*a), self.op(*b)),
                    Rhs::IsZero(a) => format!("(zero? {})", self.op(*a)),
                };
                format!("{}:{ty} = {r}", self.t(*dst))
            }
            Stmt::Flip { dst, p } => format!("{} = flip {}", self.t(*dst), self.op(*p)),
            Stmt::RandomInt { dst, k } => format!("{} = random-integer {}", self.t(*dst), self.op(*k)),
            Stmt::ReadNode { dst, node, index } => {
                let d = self.t(*dst);
                let n = self.node_ref(*node, *index);
                format!("{d} = read {n}")
            }
            Stmt::ReadEvidence { dst, node, index } => {
                let d = self.t(*dst);
                let i = self.op(*index);
                format!("{d} = evidence {}[{i}]", self.rp.node_names[*node])
            }
            Stmt::WriteNode { node, index, value } => {
                let v = self.op(*value);
                let n = self.node_ref(*node, *index);
                format!("write {n} {v}")
            }
            Stmt::DeclCell { cell, init } => format!("{} := {}", self.c(*cell), self.op(*init)),
            Stmt::LoadCell { dst, cell } => format!("{} = load {}", self.t(*dst), self.c(*cell)),
            Stmt::StoreCell { cell, value } => format!("store {} {}", self.c(*cell), self.op(*value)),
            Stmt::NewVector { dst, items } => format!("{} = vector {}", self.t(*dst), self.ops(items)),
            Stmt::NewVectorFill { dst, len, fill } => {
                format!("{} = make-vector {} {}", self.t(*dst), self.op(*len), self.op(*fill))
            }
            Stmt::VectorRef { dst, vec, index } => {
                format!("{} = vector-ref {} {}", self.t(*dst), self.op(*vec), self.op(*index))
            }
            Stmt::VectorSet { vec, index, value } => {
                format!("vector-set! {} {} {}", self.op(*vec), self.op(*index), self.op(*value))
            }
            Stmt::VectorLength { dst, vec } => format!("{} = vector-length {}", self.t(*dst), self.op(*vec)),
            Stmt::Normalize { dst, vec } => format!("{} = normalize {}", self.t(*dst), self.op(*vec)),
            Stmt::ListLit { dst, items } => format!("{} = list {}", self.t(*dst), self.ops(items)),
            Stmt::Print { args } => format!("print {}", self.ops(args)),
            Stmt::Abort { msg } => format!("abort {msg:?}"),
            Stmt::For { var, count, body } => {
                let v = self.t(*var);
                let c = self.op(*count);
                self.line(depth, format!("for {v} < {c}:"));
                self.block(body, depth + 1);
                return;
            }
            Stmt::If { cond, then_b, else_b } => {
                let c = self.op(*cond);
                self.line(depth, format!("if {c}:"));
                self.block(then_b, depth + 1);
                if !else_b.is_empty() {
                    self.line(depth, "else:".into());
                    self.block(else_b, depth + 1);
                }
                return;
            }
            Stmt::Cache { dst, cache } => format!("{} = cache k{cache}", self.t(*dst)),
        };
        self.line(depth, text);
    }

    fn node_ref(&mut self, node: NodeId, index: Option<Operand>) -> String {
        let name = self.rp.node_names[node].clone();
        match index {
            None => name,
            Some(o) => format!("{name}[{}]", self.op(o)),
        }
    }
}

pub fn dump(rp: &ResidualProgram) -> String {
    let mut names = Names {
        temps: HashMap::new(),
        cells: HashMap::new(),
    };
    for p in &rp.params {
        names.temp(p.temp);
    }
    names.number(&rp.body, rp);
    let mut pr = Printer {
        rp,
        names,
        out: String::new(),
    };
    let params: Vec<String> = rp
        .params
        .iter()
        .map(|p| format!("{}:{}=t{}", p.name, p.ty, pr.names.temp(p.temp)))
        .collect();
    pr.line(0, format!("params {}", params.join(" ")));
    let model: Vec<String> = rp
        .plan
        .reprs
        .iter()
        .zip(&rp.node_names)
        .map(|(r, n)| match r {
            Repr::BoolVar => format!("{n}:bool"),
            Repr::BoolArray(k) => format!("{n}:bool[{k}]"),
            Repr::Const(b) => format!("{n}:const({})", Lit::Bool(*b)),
            Repr::ConstArray(v) => format!("{n}:const[{}]", v.len()),
        })
        .collect();
    pr.line(0, format!("model {}", model.join(" ")));
    for spec in &rp.caches {
        let keys: Vec<String> = spec
            .keys
            .iter()
            .map(|k| match k {
                CacheKey::Node(n) => rp.node_names[*n].clone(),
                CacheKey::Element(n, i) => format!("{}[{}]", rp.node_names[*n], pr.op(*i)),
                CacheKey::Array(n) => format!("{}[*]", rp.node_names[*n]),
                CacheKey::Cell(c) => pr.c(*c),
                CacheKey::Temp(t) => pr.t(*t),
            })
            .collect();
        let kind = if spec.is_dense() { "dense" } else { "hashed" };
        pr.line(0, format!("cache k{} [{}] {kind}:", spec.id, keys.join(" ")));
        pr.block(&spec.body, 1);
        let r = pr.op(spec.result);
        pr.line(1, format!("=> {r}"));
    }
    pr.line(0, "body:".into());
    pr.block(&rp.body, 1);
    let r = pr.op(rp.result);
    pr.line(0, format!("result {r}:{}", rp.result_ty));
    pr.out
}
