//! Converts a cache-free residual program back into DSL source. Temps
//! become immutable `let` bindings named `tN`, cells become mutable
//! locals named `cN`.

use super::*;
use crate::error::{Error, Result};
use crate::sexpr::format_float;

struct Unparser<'a> {
    rp: &'a ResidualProgram,
}

impl Unparser<'_> {
    fn lit(&self, l: Lit) -> String {
        match l {
            Lit::Void => "(void)".into(),
            Lit::Bool(true) => "#t".into(),
            Lit::Bool(false) => "#f".into(),
            Lit::Int(i) => i.to_string(),
            Lit::Float(x) => format_float(x),
        }
    }

    fn op(&self, o: Operand) -> String {
        match o {
            Operand::Lit(l) => self.lit(l),
            Operand::Temp(t) => match self.rp.params.iter().find(|p| p.temp == t) {
                Some(p) => p.name.clone(),
                None => format!("t{t}"),
            },
        }
    }

    fn ops(&self, v: &[Operand]) -> String {
        v.iter().map(|o| format!(" {}", self.op(*o))).collect()
    }

    fn node(&self, n: NodeId, index: Option<Operand>) -> String {
        match index {
            None => self.rp.node_names[n].clone(),
            Some(i) => format!("{} {}", self.rp.node_names[n], self.op(i)),
        }
    }

    fn block(&self, block: &Block, tail: String) -> Result<String> {
        let mut acc = tail;
        for s in block.iter().rev() {
            acc = self.wrap(s, acc)?;
        }
        Ok(acc)
    }

    fn bind(&self, dst: TempId, rhs: String, rest: String) -> String {
        format!("(let ([t{dst} {rhs}])\n{rest})")
    }

    fn seq(&self, effect: String, rest: String) -> String {
        format!("(begin {effect}\n{rest})")
    }

    fn wrap(&self, s: &Stmt, rest: String) -> Result<String> {
        Ok(match s {
            Stmt::Let { dst, rhs, .. } => {
                let r = match rhs {
                    Rhs::Bin(op, a, b) => format!("({} {} {})", op.name(), self.op(*a), self.op(*b)),
                    Rhs::Neg(a) => format!("(- {})", self.op(*a)),
                    Rhs::Not(a) => format!("(not {})", self.op(*a)),
                    Rhs::Same(a, b) => format!("(eq? {} {})", self.op(*a), self.op(*b)),
                    Rhs::IsZero(a) => format!("(zero? {})", self.op(*a)),
                };
                self.bind(*dst, r, rest)
            }
            Stmt::Flip { dst, p } => self.bind(*dst, format!("(flip {})", self.op(*p)), rest),
            Stmt::RandomInt { dst, k } => self.bind(*dst, format!("(random-integer {})", self.op(*k)), rest),
            Stmt::ReadNode { dst, node, index } => {
                self.bind(*dst, format!("(value {})", self.node(*node, *index)), rest)
            }
            Stmt::ReadEvidence { dst, node, index } => {
                self.bind(*dst, format!("(value {})", self.node(*node, Some(*index))), rest)
            }
            Stmt::WriteNode { node, index, value } => {
                let e = match index {
                    None => format!("(set-value! {} {})", self.rp.node_names[*node], self.op(*value)),
                    Some(i) => format!(
                        "(set-value! {} {} {})",
                        self.rp.node_names[*node],
                        self.op(*value),
                        self.op(*i)
                    ),
                };
                self.seq(e, rest)
            }
            Stmt::DeclCell { cell, init } => format!("(let ([c{cell} {}])\n{rest})", self.op(*init)),
            Stmt::LoadCell { dst, cell } => self.bind(*dst, format!("c{cell}"), rest),
            Stmt::StoreCell { cell, value } => self.seq(format!("(set! c{cell} {})", self.op(*value)), rest),
            Stmt::NewVector { dst, items } => self.bind(*dst, format!("(vector{})", self.ops(items)), rest),
            Stmt::NewVectorFill { dst, len, fill } => self.bind(
                *dst,
                format!("(make-vector {} {})", self.op(*len), self.op(*fill)),
                rest,
            ),
            Stmt::VectorRef { dst, vec, index } => self.bind(
                *dst,
                format!("(vector-ref {} {})", self.op(*vec), self.op(*index)),
                rest,
            ),
            Stmt::VectorSet { vec, index, value } => self.seq(
                format!("(vector-set! {} {} {})", self.op(*vec), self.op(*index), self.op(*value)),
                rest,
            ),
            Stmt::VectorLength { dst, vec } => self.bind(*dst, format!("(vector-length {})", self.op(*vec)), rest),
            Stmt::Normalize { dst, vec } => self.bind(*dst, format!("(normalize {})", self.op(*vec)), rest),
            Stmt::Print { args } => self.seq(format!("(print{})", self.ops(args)), rest),
            Stmt::Abort { msg } => self.seq(format!("(error {msg:?})"), rest),
            Stmt::For { var, count, body } => {
                let b = self.block(body, "(void)".into())?;
                self.seq(format!("(for ([t{var} {}])\n{b})", self.op(*count)), rest)
            }
            Stmt::If { cond, then_b, else_b } => {
                let t = self.block(then_b, "(void)".into())?;
                let e = self.block(else_b, "(void)".into())?;
                self.seq(format!("(if {}\n{t}\n{e})", self.op(*cond)), rest)
            }
            Stmt::ListLit { .. } => {
                return Err(Error::Unsupported(
                    "list literals in residual code cannot be turned back into source".into(),
                ))
            }
            Stmt::Cache { .. } => {
                return Err(Error::Unsupported(
                    "cache lookups in residual code cannot be turned back into source".into(),
                ))
            }
        })
    }
}

/// Renders `rp` as a DSL program whose main expression computes the same
/// result. Programs containing caches or list literals are rejected.
pub fn unparse(rp: &ResidualProgram) -> Result<String> {
    let u = Unparser { rp };
    u.block(&rp.body, u.op(rp.result))
}
