use std::collections::HashMap;

use crate::error::Span;
use crate::model::NodeId;
use crate::prim::Prim;
use crate::value::{FuncId, Value};

/// Index of a local variable in its function's frame.
pub type Slot = usize;

/// Run-time inputs visible to every program.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Input {
    Net,
    Evidence,
    Query,
    QueryIndex,
    N,
    Burn,
}

impl Input {
    pub const ALL: [Input; 6] = [
        Input::Net,
        Input::Evidence,
        Input::Query,
        Input::QueryIndex,
        Input::N,
        Input::Burn,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Input::Net => "net",
            Input::Evidence => "evidence",
            Input::Query => "query",
            Input::QueryIndex => "query-index",
            Input::N => "N",
            Input::Burn => "burn",
        }
    }
}

#[derive(Debug, Clone)]
pub enum Expr {
    Const(Value, Span),
    Local(Slot, Span),
    Input(Input, Span),
    NodeRef(NodeId, Span),
    FuncRef(FuncId, Span),
    PrimRef(Prim, Span),
    CallFunc(FuncId, Vec<Expr>, Span),
    CallPrim(Prim, Vec<Expr>, Span),
    /// Call of a procedure value held in a variable.
    Apply(Box<Expr>, Vec<Expr>, Span),
    Let {
        binds: Vec<(Slot, Expr)>,
        body: Box<Expr>,
        span: Span,
    },
    If {
        cond: Box<Expr>,
        then_e: Box<Expr>,
        else_e: Box<Expr>,
        /// Outer locals assigned somewhere inside the branches.
        assigns: Vec<Slot>,
        span: Span,
    },
    Begin(Vec<Expr>, Span),
    For {
        clauses: Vec<(Slot, Expr)>,
        body: Box<Expr>,
        unroll: bool,
        /// Outer locals assigned somewhere inside the body.
        assigns: Vec<Slot>,
        span: Span,
    },
    Set(Slot, Box<Expr>, Span),
    Static(Box<Expr>, Span),
    Lift(Box<Expr>, Span),
    Cache(Box<Expr>, Span),
}

impl Expr {
    pub fn span(&self) -> Span {
        match self {
            Expr::Const(_, s)
            | Expr::Local(_, s)
            | Expr::Input(_, s)
            | Expr::NodeRef(_, s)
            | Expr::FuncRef(_, s)
            | Expr::PrimRef(_, s)
            | Expr::CallFunc(_, _, s)
            | Expr::CallPrim(_, _, s)
            | Expr::Apply(_, _, s)
            | Expr::Begin(_, s)
            | Expr::Set(_, _, s)
            | Expr::Static(_, s)
            | Expr::Lift(_, s)
            | Expr::Cache(_, s) => *s,
            Expr::Let { span, .. } | Expr::If { span, .. } | Expr::For { span, .. } => *span,
        }
    }

    /// Visits this expression and all subexpressions, pre-order.
    pub fn walk(&self, f: &mut dyn FnMut(&Expr)) {
        f(self);
        match self {
            Expr::CallFunc(_, args, _) | Expr::CallPrim(_, args, _) | Expr::Begin(args, _) => {
                args.iter().for_each(|a| a.walk(f))
            }
            Expr::Apply(h, args, _) => {
                h.walk(f);
                args.iter().for_each(|a| a.walk(f));
            }
            Expr::Let { binds, body, .. } => {
                binds.iter().for_each(|(_, e)| e.walk(f));
                body.walk(f);
            }
            Expr::If {
                cond, then_e, else_e, ..
            } => {
                cond.walk(f);
                then_e.walk(f);
                else_e.walk(f);
            }
            Expr::For { clauses, body, .. } => {
                clauses.iter().for_each(|(_, e)| e.walk(f));
                body.walk(f);
            }
            Expr::Set(_, e, _) | Expr::Static(e, _) | Expr::Lift(e, _) | Expr::Cache(e, _) => e.walk(f),
            _ => {}
        }
    }
}

#[derive(Debug, Clone)]
pub struct FuncDef {
    pub name: String,
    pub params: Vec<String>,
    /// Parameter positions that must be concrete for a call to be inlined.
    pub no_inline: Vec<usize>,
    pub frame_size: usize,
    pub body: Expr,
    pub span: Span,
}

#[derive(Debug, Clone)]
pub struct Program {
    pub funcs: Vec<FuncDef>,
    pub func_index: HashMap<String, FuncId>,
    pub main: Expr,
    pub main_frame: usize,
}

/// Annotation forms counted per source construct.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize)]
pub struct AnnotationCount {
    pub static_: usize,
    pub lift: usize,
    pub unroll: usize,
    pub cache: usize,
    pub no_inline: usize,
}

impl AnnotationCount {
    pub fn total(&self) -> usize {
        self.static_ + self.lift + self.unroll + self.cache + self.no_inline
    }
}

impl Program {
    pub fn func(&self, name: &str) -> Option<&FuncDef> {
        self.func_index.get(name).map(|&i| &self.funcs[i])
    }

    /// Functions reachable from the main expression, in id order.
    pub fn reachable(&self) -> Vec<FuncId> {
        let mut seen = vec![false; self.funcs.len()];
        let mut stack = Vec::new();
        let push_calls = |e: &Expr, stack: &mut Vec<FuncId>| {
            e.walk(&mut |x| match x {
                Expr::CallFunc(id, _, _) | Expr::FuncRef(id, _) => stack.push(*id),
                _ => {}
            })
        };
        push_calls(&self.main, &mut stack);
        while let Some(id) = stack.pop() {
            if !seen[id] {
                seen[id] = true;
                push_calls(&self.funcs[id].body, &mut stack);
            }
        }
        (0..self.funcs.len()).filter(|&i| seen[i]).collect()
    }

    /// Annotations in the main expression and every reachable definition.
    pub fn annotations(&self) -> AnnotationCount {
        let mut c = AnnotationCount::default();
        let mut count = |e: &Expr| {
            e.walk(&mut |x| match x {
                Expr::Static(..) => c.static_ += 1,
                Expr::Lift(..) => c.lift += 1,
                Expr::Cache(..) => c.cache += 1,
                Expr::For { unroll: true, .. } => c.unroll += 1,
                _ => {}
            })
        };
        count(&self.main);
        let reach = self.reachable();
        for &id in &reach {
            count(&self.funcs[id].body);
        }
        c.no_inline = reach.iter().filter(|&&id| !self.funcs[id].no_inline.is_empty()).count();
        c
    }
}
