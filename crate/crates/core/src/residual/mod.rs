//! The residual program: an SSA-like statement trace produced by the
//! partial evaluator and consumed by the executor and the C emitter.
//!
//! Temps are assigned exactly once. Cells are the only mutable locals;
//! they hold `set!` targets and the join values of residual conditionals.

mod dce;
mod dump;
mod unparse;
mod validate;

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::error::Span;
use crate::model::{ModelCodePlan, NodeId};
use crate::prim::BinOp;
use crate::sexpr::format_float;

pub use dce::eliminate_dead_code;
pub(crate) use dce::prune_block;
pub use dump::dump;
pub use unparse::unparse;
pub use validate::validate;

pub type TempId = u32;
pub type CellId = u32;
pub type CacheId = u32;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Lit {
    Void,
    Bool(bool),
    Int(i64),
    Float(f64),
}

impl Lit {
    pub fn ty(self) -> Ty {
        match self {
            Lit::Void => Ty::Void,
            Lit::Bool(_) => Ty::Bool,
            Lit::Int(_) => Ty::Int,
            Lit::Float(_) => Ty::Float,
        }
    }

    pub fn same(self, other: Lit) -> bool {
        match (self, other) {
            (Lit::Float(a), Lit::Float(b)) => a.to_bits() == b.to_bits(),
            _ => self == other,
        }
    }
}

impl fmt::Display for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Lit::Void => write!(f, "void"),
            Lit::Bool(true) => write!(f, "#t"),
            Lit::Bool(false) => write!(f, "#f"),
            Lit::Int(i) => write!(f, "{i}"),
            Lit::Float(x) => write!(f, "{}", format_float(*x)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Operand {
    Temp(TempId),
    Lit(Lit),
}

impl Operand {
    pub fn temp(self) -> Option<TempId> {
        match self {
            Operand::Temp(t) => Some(t),
            Operand::Lit(_) => None,
        }
    }
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Temp(t) => write!(f, "t{t}"),
            Operand::Lit(l) => write!(f, "{l}"),
        }
    }
}

/// Static type hint of a run-time value. `Num` is an integer or a float
/// not known which; `Any` is anything at all.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Ty {
    Void,
    Bool,
    Int,
    Float,
    Num,
    Vector,
    List,
    Any,
}

impl Ty {
    pub fn is_numeric(self) -> bool {
        matches!(self, Ty::Int | Ty::Float | Ty::Num)
    }

    pub fn join(self, other: Ty) -> Ty {
        if self == other {
            self
        } else if self.is_numeric() && other.is_numeric() {
            Ty::Num
        } else {
            Ty::Any
        }
    }
}

impl fmt::Display for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Ty::Void => "void",
            Ty::Bool => "bool",
            Ty::Int => "int",
            Ty::Float => "float",
            Ty::Num => "num",
            Ty::Vector => "vector",
            Ty::List => "list",
            Ty::Any => "any",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Rhs {
    Bin(BinOp, Operand, Operand),
    Neg(Operand),
    Not(Operand),
    /// Identity comparison (`eq?`).
    Same(Operand, Operand),
    IsZero(Operand),
}

impl Rhs {
    pub fn operands(&self) -> Vec<Operand> {
        match self {
            Rhs::Bin(_, a, b) | Rhs::Same(a, b) => vec![*a, *b],
            Rhs::Neg(a) | Rhs::Not(a) | Rhs::IsZero(a) => vec![*a],
        }
    }
}

pub type Block = Vec<Stmt>;

#[derive(Debug, Clone, PartialEq)]
pub enum Stmt {
    Let { dst: TempId, ty: Ty, rhs: Rhs },
    Flip { dst: TempId, p: Operand },
    RandomInt { dst: TempId, k: Operand },
    /// Read of a node's run-time value slot.
    ReadNode { dst: TempId, node: NodeId, index: Option<Operand> },
    /// Read of an evidence array at a run-time index.
    ReadEvidence { dst: TempId, node: NodeId, index: Operand },
    WriteNode { node: NodeId, index: Option<Operand>, value: Operand },
    DeclCell { cell: CellId, init: Operand },
    LoadCell { dst: TempId, cell: CellId },
    StoreCell { cell: CellId, value: Operand },
    NewVector { dst: TempId, items: Vec<Operand> },
    NewVectorFill { dst: TempId, len: Operand, fill: Operand },
    VectorRef { dst: TempId, vec: Operand, index: Operand },
    VectorSet { vec: Operand, index: Operand, value: Operand },
    VectorLength { dst: TempId, vec: Operand },
    Normalize { dst: TempId, vec: Operand },
    ListLit { dst: TempId, items: Vec<Operand> },
    Print { args: Vec<Operand> },
    Abort { msg: String },
    For { var: TempId, count: Operand, body: Block },
    If { cond: Operand, then_b: Block, else_b: Block },
    Cache { dst: TempId, cache: CacheId },
}

impl Stmt {
    /// The temp this statement defines, if any (loop variables excluded).
    pub fn def(&self) -> Option<TempId> {
        match self {
            Stmt::Let { dst, .. }
            | Stmt::Flip { dst, .. }
            | Stmt::RandomInt { dst, .. }
            | Stmt::ReadNode { dst, .. }
            | Stmt::ReadEvidence { dst, .. }
            | Stmt::LoadCell { dst, .. }
            | Stmt::NewVector { dst, .. }
            | Stmt::NewVectorFill { dst, .. }
            | Stmt::VectorRef { dst, .. }
            | Stmt::VectorLength { dst, .. }
            | Stmt::Normalize { dst, .. }
            | Stmt::ListLit { dst, .. }
            | Stmt::Cache { dst, .. } => Some(*dst),
            _ => None,
        }
    }

    /// Operands read directly by this statement (nested blocks excluded).
    pub fn uses(&self) -> Vec<Operand> {
        match self {
            Stmt::Let { rhs, .. } => rhs.operands(),
            Stmt::Flip { p, .. } => vec![*p],
            Stmt::RandomInt { k, .. } => vec![*k],
            Stmt::ReadNode { index, .. } => index.iter().copied().collect(),
            Stmt::ReadEvidence { index, .. } => vec![*index],
            Stmt::WriteNode { index, value, .. } => {
                let mut v: Vec<Operand> = index.iter().copied().collect();
                v.push(*value);
                v
            }
            Stmt::DeclCell { init, .. } => vec![*init],
            Stmt::StoreCell { value, .. } => vec![*value],
            Stmt::NewVector { items, .. } | Stmt::ListLit { items, .. } => items.clone(),
            Stmt::Print { args } => args.clone(),
            Stmt::NewVectorFill { len, fill, .. } => vec![*len, *fill],
            Stmt::VectorRef { vec, index, .. } => vec![*vec, *index],
            Stmt::VectorSet { vec, index, value } => vec![*vec, *index, *value],
            Stmt::VectorLength { vec, .. } | Stmt::Normalize { vec, .. } => vec![*vec],
            Stmt::For { count, .. } => vec![*count],
            Stmt::If { cond, .. } => vec![*cond],
            Stmt::LoadCell { .. } | Stmt::Abort { .. } | Stmt::Cache { .. } => vec![],
        }
    }

    pub fn blocks(&self) -> Vec<&Block> {
        match self {
            Stmt::For { body, .. } => vec![body],
            Stmt::If { then_b, else_b, .. } => vec![then_b, else_b],
            _ => vec![],
        }
    }
}

/// A run-time value the cached expression depends on.
#[derive(Debug, Clone, PartialEq)]
pub enum CacheKey {
    /// A scalar node's value.
    Node(NodeId),
    /// One element of an array node, at an index known outside the body.
    Element(NodeId, Operand),
    /// Every element of an array node.
    Array(NodeId),
    Cell(CellId),
    Temp(TempId),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CacheSpec {
    pub id: CacheId,
    pub keys: Vec<CacheKey>,
    /// Width of each key in bits when every key is boolean.
    pub bool_bits: Option<usize>,
    pub body: Block,
    pub result: Operand,
    pub ty: Ty,
    pub span: Span,
}

/// Largest key width (in boolean bits) that gets a dense table.
pub const DENSE_LIMIT: usize = 20;

impl CacheSpec {
    pub fn is_dense(&self) -> bool {
        matches!(self.bool_bits, Some(b) if b <= DENSE_LIMIT)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub temp: TempId,
    pub ty: Ty,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualProgram {
    pub params: Vec<Param>,
    pub plan: ModelCodePlan,
    pub node_names: Vec<String>,
    pub cell_types: Vec<Ty>,
    pub caches: Vec<CacheSpec>,
    pub body: Block,
    pub result: Operand,
    pub result_ty: Ty,
    pub temp_count: u32,
    /// Element type of each run-time vector, by the temp that created it.
    pub vector_types: BTreeMap<TempId, Ty>,
}

/// Size metrics of a residual program.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize, Default)]
pub struct Metrics {
    pub statements: usize,
    pub loops: usize,
    pub branches: usize,
    pub flips: usize,
    pub caches: usize,
}

fn visit<'a>(block: &'a Block, f: &mut dyn FnMut(&'a Stmt)) {
    for s in block {
        f(s);
        for b in s.blocks() {
            visit(b, f);
        }
    }
}

impl ResidualProgram {
    /// Visits every statement, including cache bodies.
    pub fn for_each_stmt<'a>(&'a self, mut f: impl FnMut(&'a Stmt)) {
        visit(&self.body, &mut f);
        for c in &self.caches {
            visit(&c.body, &mut f);
        }
    }

    pub fn metrics(&self) -> Metrics {
        let mut m = Metrics {
            caches: self.caches.len(),
            ..Metrics::default()
        };
        self.for_each_stmt(|s| {
            m.statements += 1;
            match s {
                Stmt::For { .. } => m.loops += 1,
                Stmt::If { .. } => m.branches += 1,
                Stmt::Flip { .. } => m.flips += 1,
                _ => {}
            }
        });
        m
    }

    /// Every float literal appearing anywhere in the program.
    pub fn float_literals(&self) -> Vec<f64> {
        let mut out = Vec::new();
        self.for_each_stmt(|s| {
            for op in s.uses() {
                if let Operand::Lit(Lit::Float(x)) = op {
                    out.push(x);
                }
            }
        });
        for c in &self.caches {
            if let Operand::Lit(Lit::Float(x)) = c.result {
                out.push(x);
            }
        }
        out
    }
}

impl fmt::Display for ResidualProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&dump(self))
    }
}
