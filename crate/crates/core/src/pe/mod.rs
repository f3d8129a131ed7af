//! Online partial evaluator. Every value is either known at specialization
//! time or a residual operand; operations on known values are folded and
//! everything else is emitted into the residual program.

mod cache;

use std::collections::HashMap;

use crate::dsl::{Expr, Input, Program, Slot};
use crate::error::{Error, Result, Span};
use crate::model::{specialize_model, BayesNet, OpSet, StructureValues};
use crate::ops::{self, Ctx};
use crate::prim::{self, BinOp, Prim};
use crate::residual::{
    self, Block, CacheSpec, CellId, Lit, Operand, Param, ResidualProgram, Rhs, Stmt, TempId, Ty,
};
use crate::rng::check_probability;
use crate::value::{FuncId, List, Value};

/// Maximum inline depth before specialization is declared non-terminating.
pub const INLINE_LIMIT: usize = 10_000;

const MAX_RESTARTS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PeOptions {
    /// Honour `cache` annotations; when false they are ignored.
    pub caching: bool,
}

impl Default for PeOptions {
    fn default() -> Self {
        PeOptions { caching: true }
    }
}

/// Control leaving an expression early: an error, or a residual `error`
/// call after which nothing in the current block can run.
enum Stop {
    Err(Error),
    Abort,
}

impl From<Error> for Stop {
    fn from(e: Error) -> Self {
        Stop::Err(e)
    }
}

type R<T> = std::result::Result<T, Stop>;

#[derive(Clone)]
enum SlotVal {
    Val(Value),
    Cell(CellId),
}

struct Frame {
    slots: Vec<SlotVal>,
    /// Static extent that bound each slot (0 outside any `static`).
    extents: Vec<u32>,
}

impl Frame {
    fn new(size: usize) -> Self {
        Frame {
            slots: vec![SlotVal::Val(Value::Void); size],
            extents: vec![0; size],
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum TypeKey {
    Cell(usize),
    Vector(usize),
}

/// Element or cell types that may widen after they were first read.
#[derive(Default)]
struct Widening {
    tys: Vec<Ty>,
    read: Vec<bool>,
}

struct StaticExtent {
    span: Span,
    id: u32,
}

struct Pe<'a> {
    prog: &'a Program,
    ctx: Ctx<'a>,
    opts: PeOptions,
    blocks: Vec<Block>,
    temp_tys: Vec<Ty>,
    cells: Widening,
    vectors: Widening,
    vec_alloc: HashMap<TempId, usize>,
    hints: HashMap<TypeKey, Ty>,
    restart: bool,
    caches: Vec<CacheSpec>,
    stack: Vec<FuncId>,
    statics: Vec<StaticExtent>,
    next_extent: u32,
    ops_used: OpSet,
}

fn zero(ty: Ty) -> Option<Lit> {
    Some(match ty {
        Ty::Bool => Lit::Bool(false),
        Ty::Int | Ty::Num => Lit::Int(0),
        Ty::Float => Lit::Float(0.0),
        Ty::Void | Ty::Any => Lit::Void,
        Ty::Vector | Ty::List => return None,
    })
}

fn arith_ty(op: BinOp, a: Ty, b: Ty) -> Ty {
    if op.is_comparison() {
        Ty::Bool
    } else if op == BinOp::Div || a == Ty::Float || b == Ty::Float {
        Ty::Float
    } else if a == Ty::Int && b == Ty::Int {
        Ty::Int
    } else {
        Ty::Num
    }
}

impl<'a> Pe<'a> {
    fn emit(&mut self, s: Stmt) {
        self.blocks.last_mut().unwrap().push(s);
    }

    fn temp(&mut self, ty: Ty) -> TempId {
        self.temp_tys.push(ty);
        (self.temp_tys.len() - 1) as TempId
    }

    fn in_static(&self) -> bool {
        !self.statics.is_empty()
    }

    fn extent(&self) -> u32 {
        self.statics.last().map_or(0, |s| s.id)
    }

    fn bad_static(&self, at: Span, reason: impl Into<String>) -> Stop {
        Stop::Err(Error::BadStatic {
            static_span: self.statics.last().unwrap().span,
            at,
            reason: reason.into(),
        })
    }

    fn check_static(&self, v: &Value, at: Span, what: &str) -> R<()> {
        if self.in_static() && v.contains_dyn() {
            return Err(self.bad_static(at, format!("{what} is only known at run time")));
        }
        Ok(())
    }

    fn hinted(&self, key: TypeKey, ty: Ty) -> Ty {
        match self.hints.get(&key) {
            Some(h) => h.join(ty),
            None => ty,
        }
    }

    fn widen(&mut self, key: TypeKey, ty: Ty) {
        let (w, i) = match key {
            TypeKey::Cell(i) => (&mut self.cells, i),
            TypeKey::Vector(i) => (&mut self.vectors, i),
        };
        let joined = w.tys[i].join(ty);
        if joined != w.tys[i] {
            w.tys[i] = joined;
            if w.read[i] {
                self.hints.insert(key, joined);
                self.restart = true;
            }
        }
    }

    fn decl_cell(&mut self, init: Operand, ty: Ty) -> CellId {
        let id = self.cells.tys.len();
        let ty = self.hinted(TypeKey::Cell(id), ty);
        self.cells.tys.push(ty);
        self.cells.read.push(false);
        self.emit(Stmt::DeclCell { cell: id as CellId, init });
        id as CellId
    }

    fn load_cell(&mut self, cell: CellId) -> Value {
        self.cells.read[cell as usize] = true;
        let ty = self.cells.tys[cell as usize];
        let dst = self.temp(ty);
        self.emit(Stmt::LoadCell { dst, cell });
        Value::Dyn(Operand::Temp(dst), ty)
    }

    fn store_cell(&mut self, cell: CellId, value: Operand, ty: Ty) {
        self.widen(TypeKey::Cell(cell as usize), ty);
        self.emit(Stmt::StoreCell { cell, value });
    }

    /// The residual operand for a value that must exist at run time.
    fn lower(&mut self, v: &Value, span: Span) -> R<(Operand, Ty)> {
        Ok(match v {
            Value::Dyn(op, ty) => (*op, *ty),
            Value::Void => (Operand::Lit(Lit::Void), Ty::Void),
            Value::Bool(b) => (Operand::Lit(Lit::Bool(*b)), Ty::Bool),
            Value::Int(i) => (Operand::Lit(Lit::Int(*i)), Ty::Int),
            Value::Float(x) => (Operand::Lit(Lit::Float(*x)), Ty::Float),
            Value::List(l) => {
                let mut items = Vec::with_capacity(l.len());
                for x in l.as_slice() {
                    items.push(self.lower(x, span)?.0);
                }
                let dst = self.temp(Ty::List);
                self.emit(Stmt::ListLit { dst, items });
                (Operand::Temp(dst), Ty::List)
            }
            other => {
                return Err(Error::Unsupported(format!(
                    "{span}: {} `{other}` cannot be represented in residual code",
                    other.type_name()
                ))
                .into())
            }
        })
    }

    fn let_(&mut self, ty: Ty, rhs: Rhs) -> Value {
        let dst = self.temp(ty);
        self.emit(Stmt::Let { dst, ty, rhs });
        Value::Dyn(Operand::Temp(dst), ty)
    }

    // ---- expressions -------------------------------------------------

    fn pe(&mut self, e: &Expr, frame: &mut Frame) -> R<Value> {
        match e {
            Expr::Const(v, _) => Ok(v.clone()),
            Expr::Local(s, span) => match &frame.slots[*s] {
                SlotVal::Val(v) => {
                    let v = v.clone();
                    self.check_static(&v, *span, "this variable")?;
                    Ok(v)
                }
                SlotVal::Cell(c) => {
                    if self.in_static() {
                        return Err(self.bad_static(*span, "this variable is assigned at run time"));
                    }
                    Ok(self.load_cell(*c))
                }
            },
            Expr::Input(i, span) => {
                let v = match i {
                    Input::Net => Value::Net,
                    Input::Evidence => self.ctx.sv.evidence.clone(),
                    Input::Query => Value::Node(self.ctx.net.query),
                    Input::QueryIndex => Value::Int(self.ctx.net.query_index.unwrap_or(0) as i64),
                    Input::N => Value::Dyn(Operand::Temp(0), Ty::Int),
                    Input::Burn => Value::Dyn(Operand::Temp(1), Ty::Int),
                };
                self.check_static(&v, *span, &format!("`{}`", i.name()))?;
                Ok(v)
            }
            Expr::NodeRef(n, _) => Ok(Value::Node(*n)),
            Expr::FuncRef(f, _) => Ok(Value::Func(*f)),
            Expr::PrimRef(p, _) => Ok(Value::Prim(*p)),
            Expr::CallFunc(f, args, span) => {
                let vals = self.pe_args(args, frame)?;
                self.call_func(*f, vals, *span)
            }
            Expr::CallPrim(p, args, span) => {
                let vals = self.pe_args(args, frame)?;
                self.call_prim(*p, vals, *span)
            }
            Expr::Apply(head, args, span) => {
                let h = self.pe(head, frame)?;
                let vals = self.pe_args(args, frame)?;
                self.apply(&h, vals, *span)
            }
            Expr::Let { binds, body, .. } => {
                for (slot, init) in binds {
                    let v = self.pe(init, frame)?;
                    self.bind(frame, *slot, v);
                }
                self.pe(body, frame)
            }
            Expr::If {
                cond,
                then_e,
                else_e,
                assigns,
                span,
            } => {
                let c = self.pe(cond, frame)?;
                match c {
                    Value::Dyn(op, ty) => match ty {
                        Ty::Bool => self.dyn_if(op, then_e, else_e, assigns, frame, *span),
                        Ty::Any => {
                            let not = self.let_(Ty::Bool, Rhs::Not(op));
                            let Value::Dyn(op, _) = not else { unreachable!() };
                            self.dyn_if(op, else_e, then_e, assigns, frame, *span)
                        }
                        _ => self.pe(then_e, frame),
                    },
                    Value::Bool(false) => self.pe(else_e, frame),
                    _ => self.pe(then_e, frame),
                }
            }
            Expr::Begin(items, _) => {
                let mut last = Value::Void;
                for it in items {
                    last = self.pe(it, frame)?;
                }
                Ok(last)
            }
            Expr::For {
                clauses,
                body,
                unroll,
                assigns,
                span,
            } => self.pe_for(clauses, body, *unroll, assigns, frame, *span),
            Expr::Set(slot, value, span) => {
                let v = self.pe(value, frame)?;
                if self.in_static() {
                    let ext = frame.extents[*slot];
                    if ext == 0 || !self.statics.iter().any(|s| s.id == ext) {
                        return Err(self.bad_static(*span, "`set!` of a variable bound outside this `static`"));
                    }
                }
                match frame.slots[*slot] {
                    SlotVal::Cell(c) => {
                        let (op, ty) = self.lower(&v, *span)?;
                        if matches!(ty, Ty::Vector | Ty::List) {
                            return Err(Error::Unsupported(format!(
                                "{span}: assigning a {ty} to a variable under run-time control"
                            ))
                            .into());
                        }
                        self.store_cell(c, op, ty);
                    }
                    SlotVal::Val(_) => frame.slots[*slot] = SlotVal::Val(v),
                }
                Ok(Value::Void)
            }
            Expr::Static(inner, span) => {
                self.next_extent += 1;
                let id = self.next_extent;
                self.statics.push(StaticExtent { span: *span, id });
                let r = self.pe(inner, frame);
                let r = match r {
                    Ok(v) => {
                        if v.contains_dyn() {
                            Err(self.bad_static(*span, "the result is only known at run time"))
                        } else if matches!(&v, Value::Vector(o) if o.borrow().extent == id) {
                            Err(self.bad_static(*span, "a vector created here escapes the `static`"))
                        } else {
                            Ok(v)
                        }
                    }
                    Err(Stop::Abort) => Err(Stop::Err(Error::Runtime(format!(
                        "{span}: `error` reached inside `static`"
                    )))),
                    Err(e) => Err(e),
                };
                self.statics.pop();
                r
            }
            Expr::Lift(inner, span) => {
                let v = self.pe(inner, frame)?;
                match &v {
                    Value::Dyn(..) => Ok(v),
                    Value::Void | Value::Bool(_) | Value::Int(_) | Value::Float(_) => {
                        let (op, ty) = self.lower(&v, *span)?;
                        Ok(Value::Dyn(op, ty))
                    }
                    Value::List(_) => {
                        let (op, ty) = self.lower(&v, *span)?;
                        Ok(Value::Dyn(op, ty))
                    }
                    other => Err(Error::Unsupported(format!(
                        "{span}: cannot lift {} `{other}` to run time",
                        other.type_name()
                    ))
                    .into()),
                }
            }
            Expr::Cache(inner, span) => {
                if !self.opts.caching || self.in_static() {
                    self.pe(inner, frame)
                } else {
                    self.pe_cache(inner, frame, *span)
                }
            }
        }
    }

    fn pe_args(&mut self, args: &[Expr], frame: &mut Frame) -> R<Vec<Value>> {
        let mut out = Vec::with_capacity(args.len());
        for a in args {
            out.push(self.pe(a, frame)?);
        }
        Ok(out)
    }

    fn bind(&self, frame: &mut Frame, slot: Slot, v: Value) {
        frame.slots[slot] = SlotVal::Val(v);
        frame.extents[slot] = self.extent();
    }

    /// Moves locals assigned under run-time control into cells.
    fn cellify(&mut self, assigns: &[Slot], frame: &mut Frame, span: Span) -> R<()> {
        for &s in assigns {
            if let SlotVal::Val(v) = &frame.slots[s] {
                let v = v.clone();
                let (op, ty) = self.lower(&v, span)?;
                if matches!(ty, Ty::Vector | Ty::List) {
                    return Err(Error::Unsupported(format!(
                        "{span}: a variable holding a {ty} is assigned under run-time control"
                    ))
                    .into());
                }
                let c = self.decl_cell(op, ty);
                frame.slots[s] = SlotVal::Cell(c);
            }
        }
        Ok(())
    }

    /// Specializes `e` into a fresh block. `None` means the block always
    /// ends in a residual `error`.
    fn sub_block(&mut self, e: &Expr, frame: &mut Frame) -> Result<(Option<Value>, Block)> {
        self.blocks.push(Vec::new());
        let r = self.pe(e, frame);
        let b = self.blocks.pop().unwrap();
        match r {
            Ok(v) => Ok((Some(v), b)),
            Err(Stop::Abort) => Ok((None, b)),
            Err(Stop::Err(e)) => Err(e),
        }
    }

    fn dyn_if(
        &mut self,
        cond: Operand,
        then_e: &Expr,
        else_e: &Expr,
        assigns: &[Slot],
        frame: &mut Frame,
        span: Span,
    ) -> R<Value> {
        self.cellify(assigns, frame, span)?;
        let (tv, mut tb) = self.sub_block(then_e, frame)?;
        let (ev, mut eb) = self.sub_block(else_e, frame)?;
        let live: Vec<&Value> = tv.iter().chain(ev.iter()).collect();
        let joined = match live.as_slice() {
            [] => None,
            [v] if !v.is_dyn() => Some(Ok((*v).clone())),
            [a, b] if a.identical(b) == Some(true) => Some(Ok((*a).clone())),
            [Value::Void, Value::Void] => Some(Ok(Value::Void)),
            _ => None,
        };
        if let Some(v) = joined {
            self.emit(Stmt::If {
                cond,
                then_b: tb,
                else_b: eb,
            });
            return v;
        }
        if live.is_empty() {
            self.emit(Stmt::If {
                cond,
                then_b: tb,
                else_b: eb,
            });
            return Err(Stop::Abort);
        }
        let mut ty: Option<Ty> = None;
        let mut stores = [None, None];
        for (k, v) in [tv.as_ref(), ev.as_ref()].into_iter().enumerate() {
            if let Some(v) = v {
                if !v.is_dyn() && v.contains_dyn() {
                    return Err(Error::Unsupported(format!(
                        "{span}: conditional branches yield different lists of run-time values"
                    ))
                    .into());
                }
                let (op, t) = match v {
                    Value::List(_) => (Operand::Lit(Lit::Void), Ty::List),
                    _ => self.lower(v, span)?,
                };
                ty = Some(ty.map_or(t, |x| x.join(t)));
                stores[k] = Some((op, t));
            }
        }
        let ty = ty.unwrap();
        let init = zero(ty).ok_or_else(|| {
            Error::Unsupported(format!("{span}: conditional branches yield different {ty} values"))
        })?;
        let cell = self.decl_cell(Operand::Lit(init), ty);
        for ((op, t), block) in stores.into_iter().zip([&mut tb, &mut eb]).filter_map(|(s, b)| Some((s?, b))) {
            self.widen(TypeKey::Cell(cell as usize), t);
            block.push(Stmt::StoreCell { cell, value: op });
        }
        self.emit(Stmt::If {
            cond,
            then_b: tb,
            else_b: eb,
        });
        Ok(self.load_cell(cell))
    }

    fn pe_for(
        &mut self,
        clauses: &[(Slot, Expr)],
        body: &Expr,
        unroll: bool,
        assigns: &[Slot],
        frame: &mut Frame,
        span: Span,
    ) -> R<Value> {
        let mut seqs = Vec::with_capacity(clauses.len());
        for (_, it) in clauses {
            seqs.push(self.pe(it, frame)?);
        }
        if let ([(slot, _)], [count]) = (clauses, seqs.as_slice()) {
            let runtime = match count {
                Value::Dyn(op, Ty::Int) => Some(*op),
                Value::Int(n) if !unroll && !self.in_static() => Some(Operand::Lit(Lit::Int(*n))),
                Value::Dyn(_, ty) if !ty.is_numeric() || *ty != Ty::Int => {
                    return Err(Error::ty(span, format!("`for` cannot iterate over a run-time {ty}")).into())
                }
                _ => None,
            };
            if let Some(count) = runtime {
                if unroll {
                    return Err(Error::Unsupported(format!(
                        "{span}: `for/unroll` needs a sequence known at specialization time"
                    ))
                    .into());
                }
                self.cellify(assigns, frame, span)?;
                let var = self.temp(Ty::Int);
                self.bind(frame, *slot, Value::Dyn(Operand::Temp(var), Ty::Int));
                let (_, block) = self.sub_block(body, frame)?;
                self.emit(Stmt::For { var, count, body: block });
                return Ok(Value::Void);
            }
        }
        let mut items = Vec::with_capacity(seqs.len());
        for s in &seqs {
            if s.is_dyn() {
                return Err(Error::Unsupported(format!(
                    "{span}: `for` over a run-time sequence with several clauses"
                ))
                .into());
            }
            items.push(ops::sequence(&self.ctx, s, span)?);
        }
        let len = items.iter().map(Vec::len).min().unwrap_or(0);
        for k in 0..len {
            for ((slot, _), seq) in clauses.iter().zip(&items) {
                self.bind(frame, *slot, seq[k].clone());
            }
            self.pe(body, frame)?;
        }
        Ok(Value::Void)
    }

    // ---- calls -------------------------------------------------------

    fn call_func(&mut self, f: FuncId, args: Vec<Value>, span: Span) -> R<Value> {
        let def = &self.prog.funcs[f];
        if def.params.len() != args.len() {
            return Err(Error::Arity {
                span,
                form: def.name.clone(),
                expected: format!("{} argument(s)", def.params.len()),
                got: args.len(),
            }
            .into());
        }
        if !self.in_static() {
            for &i in &def.no_inline {
                if args[i].contains_dyn() {
                    return Err(Error::NoInline {
                        span,
                        func: def.name.clone(),
                        param: def.params[i].clone(),
                    }
                    .into());
                }
            }
        }
        if self.stack.len() >= INLINE_LIMIT {
            return Err(Error::NonTermination {
                limit: INLINE_LIMIT,
                stack: self.stack.iter().map(|&id| self.prog.funcs[id].name.clone()).collect(),
            }
            .into());
        }
        let mut frame = Frame::new(def.frame_size);
        for (i, a) in args.into_iter().enumerate() {
            self.bind(&mut frame, i, a);
        }
        self.stack.push(f);
        let r = stacker::maybe_grow(256 * 1024, 8 * 1024 * 1024, || self.pe(&def.body, &mut frame));
        self.stack.pop();
        r
    }

    fn apply(&mut self, f: &Value, args: Vec<Value>, span: Span) -> R<Value> {
        match f {
            Value::Func(id) => self.call_func(*id, args, span),
            Value::Prim(p) => {
                let (lo, hi) = p.arity();
                if args.len() < lo || hi.is_some_and(|h| args.len() > h) {
                    return Err(Error::Arity {
                        span,
                        form: p.name().into(),
                        expected: format!("{lo}+ argument(s)"),
                        got: args.len(),
                    }
                    .into());
                }
                self.call_prim(*p, args, span)
            }
            Value::Dyn(..) => Err(Error::Unsupported(format!("{span}: calling a procedure chosen at run time")).into()),
            other => Err(Error::ty(span, format!("cannot call {} `{other}`", other.type_name())).into()),
        }
    }

    fn call_prim(&mut self, p: Prim, args: Vec<Value>, span: Span) -> R<Value> {
        let v = self.prim(p, args, span)?;
        self.check_static(&v, span, &format!("the result of `{p}`"))?;
        Ok(v)
    }

    fn prim(&mut self, p: Prim, args: Vec<Value>, span: Span) -> R<Value> {
        let any_dyn = args.iter().any(Value::is_dyn);
        match p {
            Prim::Flip | Prim::RandomInteger | Prim::Value | Prim::SetValue | Prim::Error | Prim::Print => {
                return self.effect_prim(p, &args, span)
            }
            Prim::Foldl => {
                let l = self.known_list(p, &args[2], span)?;
                let mut acc = args[1].clone();
                for x in l.as_slice() {
                    acc = self.apply(&args[0], vec![x.clone(), acc], span)?;
                }
                return Ok(acc);
            }
            Prim::Map => {
                let l = self.known_list(p, &args[1], span)?;
                let mut out = Vec::with_capacity(l.len());
                for x in l.as_slice() {
                    out.push(self.apply(&args[0], vec![x.clone()], span)?);
                }
                return Ok(Value::List(List::new(out)));
            }
            Prim::Vector | Prim::MakeVector if !self.in_static() => return self.new_vector(p, &args, span),
            Prim::VectorRef | Prim::VectorSet | Prim::VectorLength | Prim::Normalize
                if matches!(args[0], Value::Dyn(..)) =>
            {
                return self.vector_op(p, &args, span)
            }
            Prim::VectorSet => {
                if let Value::Vector(o) = &args[0] {
                    let ext = o.borrow().extent;
                    if !self.statics.iter().any(|s| s.id == ext) {
                        return Err(self.bad_static(span, "`vector-set!` on a vector created outside this `static`"));
                    }
                }
            }
            _ => {}
        }
        if !any_dyn {
            return Ok(ops::apply_pure(&self.ctx, p, &args, span, self.extent())?.expect("pure primitive"));
        }
        self.dyn_prim(p, &args, span)
    }

    fn known_list(&self, p: Prim, v: &Value, span: Span) -> R<List> {
        match v {
            Value::List(l) => Ok(l.clone()),
            Value::Dyn(..) => Err(Error::Unsupported(format!("{span}: `{p}` over a run-time list")).into()),
            other => Err(Error::ty(span, format!("`{p}` expects a list, given {} `{other}`", other.type_name())).into()),
        }
    }

    fn known_node(&self, p: Prim, v: &Value, span: Span) -> R<usize> {
        match v {
            Value::Dyn(..) => Err(Error::Unsupported(format!("{span}: `{p}` of a node chosen at run time")).into()),
            other => Ok(ops::node(span, p, other)?),
        }
    }

    fn num_operand(&mut self, p: Prim, v: &Value, span: Span) -> R<(Operand, Ty)> {
        match v {
            Value::Dyn(_, ty) if ty.is_numeric() || *ty == Ty::Any => self.lower(v, span),
            Value::Int(_) | Value::Float(_) => self.lower(v, span),
            other => Err(Error::ty(span, format!("`{p}` expects a number, given {} `{other}`", other.type_name())).into()),
        }
    }

    fn binop(&mut self, op: BinOp, a: &Value, b: &Value, p: Prim, span: Span) -> R<Value> {
        if let (Some(x), Some(y)) = (a.as_num(), b.as_num()) {
            return Ok(ops::scalar_value(prim::binop(op, x, y)));
        }
        let (ao, at) = self.num_operand(p, a, span)?;
        let (bo, bt) = self.num_operand(p, b, span)?;
        let numeric = |t: Ty| t.is_numeric();
        let int = |o: Operand, k: i64| matches!(o, Operand::Lit(Lit::Int(v)) if v == k);
        let one_f = |o: Operand| matches!(o, Operand::Lit(Lit::Float(v)) if v == 1.0);
        match op {
            BinOp::Add if int(ao, 0) && numeric(bt) => return Ok(b.clone()),
            BinOp::Add | BinOp::Sub if int(bo, 0) && numeric(at) => return Ok(a.clone()),
            BinOp::Mul if int(ao, 1) && numeric(bt) => return Ok(b.clone()),
            BinOp::Mul if int(bo, 1) && numeric(at) => return Ok(a.clone()),
            BinOp::Mul if one_f(ao) && bt == Ty::Float => return Ok(b.clone()),
            BinOp::Mul if one_f(bo) && at == Ty::Float => return Ok(a.clone()),
            _ => {}
        }
        let ty = arith_ty(op, at, bt);
        Ok(self.let_(ty, Rhs::Bin(op, ao, bo)))
    }

    fn dyn_prim(&mut self, p: Prim, args: &[Value], span: Span) -> R<Value> {
        match p {
            Prim::Add | Prim::Sub | Prim::Mul => {
                if p == Prim::Sub && args.len() == 1 {
                    let (o, t) = self.num_operand(p, &args[0], span)?;
                    let ty = if t == Ty::Any { Ty::Num } else { t };
                    return Ok(self.let_(ty, Rhs::Neg(o)));
                }
                let op = p.binop().unwrap();
                let mut acc = args[0].clone();
                if args.len() == 1 {
                    self.num_operand(p, &acc, span)?;
                }
                for b in &args[1..] {
                    acc = self.binop(op, &acc, b, p, span)?;
                }
                Ok(acc)
            }
            Prim::Div | Prim::Lt | Prim::Le | Prim::Gt | Prim::Ge | Prim::NumEq | Prim::Min | Prim::Max => {
                self.binop(p.binop().unwrap(), &args[0], &args[1], p, span)
            }
            Prim::Not => match &args[0] {
                Value::Dyn(o, Ty::Bool | Ty::Any) => Ok(self.let_(Ty::Bool, Rhs::Not(*o))),
                _ => Ok(Value::Bool(false)),
            },
            Prim::IsZero => {
                let (o, _) = self.num_operand(p, &args[0], span)?;
                Ok(self.let_(Ty::Bool, Rhs::IsZero(o)))
            }
            Prim::Eq => self.eq(&args[0], &args[1], span),
            Prim::List => Ok(Value::List(List::new(args.to_vec()))),
            Prim::Cons => match &args[1] {
                Value::List(l) => Ok(Value::List(List::cons(args[0].clone(), l))),
                _ => Err(Error::Unsupported(format!("{span}: `cons` onto a run-time list")).into()),
            },
            Prim::IsArray | Prim::IsEvidence => Ok(Value::Bool(false)),
            Prim::Member if !args[1].is_dyn() => {
                Ok(ops::apply_pure(&self.ctx, p, args, span, self.extent())?.expect("pure primitive"))
            }
            _ => Err(Error::Unsupported(format!("{span}: `{p}` applied to a run-time value")).into()),
        }
    }

    fn eq(&mut self, a: &Value, b: &Value, span: Span) -> R<Value> {
        let scalar = |v: &Value| matches!(v, Value::Void | Value::Bool(_) | Value::Int(_) | Value::Float(_));
        match (a, b) {
            (Value::Dyn(o, Ty::Bool), Value::Bool(k)) | (Value::Bool(k), Value::Dyn(o, Ty::Bool)) => {
                if *k {
                    Ok(Value::Dyn(*o, Ty::Bool))
                } else {
                    Ok(self.let_(Ty::Bool, Rhs::Not(*o)))
                }
            }
            (Value::Dyn(..), x) | (x, Value::Dyn(..)) if !x.is_dyn() && !scalar(x) => Ok(Value::Bool(false)),
            _ => {
                let (ao, _) = self.lower(a, span)?;
                let (bo, _) = self.lower(b, span)?;
                Ok(self.let_(Ty::Bool, Rhs::Same(ao, bo)))
            }
        }
    }

    fn effect_prim(&mut self, p: Prim, args: &[Value], span: Span) -> R<Value> {
        let net = self.ctx.net;
        match p {
            Prim::Flip => {
                if self.in_static() {
                    return Err(self.bad_static(span, "`flip` draws a random value"));
                }
                let prob = match &args[0] {
                    Value::Dyn(..) => self.num_operand(p, &args[0], span)?.0,
                    v => {
                        let x = ops::num(span, p, v)?.to_f64();
                        check_probability(x).map_err(|m| Error::ty(span, m))?;
                        self.lower(v, span)?.0
                    }
                };
                let dst = self.temp(Ty::Bool);
                self.emit(Stmt::Flip { dst, p: prob });
                Ok(Value::Dyn(Operand::Temp(dst), Ty::Bool))
            }
            Prim::RandomInteger => {
                if self.in_static() {
                    return Err(self.bad_static(span, "`random-integer` draws a random value"));
                }
                if let Value::Int(k) = args[0] {
                    if k < 1 {
                        return Err(Error::ty(span, format!("random-integer: bound {k} must be positive")).into());
                    }
                }
                let (k, ty) = self.lower(&args[0], span)?;
                if !matches!(ty, Ty::Int | Ty::Num | Ty::Any) {
                    return Err(Error::ty(span, format!("`{p}` expects an integer, given a {ty}")).into());
                }
                let dst = self.temp(Ty::Int);
                self.emit(Stmt::RandomInt { dst, k });
                Ok(Value::Dyn(Operand::Temp(dst), Ty::Int))
            }
            Prim::Value => {
                let n = self.known_node(p, &args[0], span)?;
                let node = net.node(n);
                let index = self.node_index(p, n, args.get(1), span)?;
                if let Some(ev) = &node.evidence {
                    return Ok(match index {
                        None => Value::Bool(ev[0]),
                        Some(Operand::Lit(Lit::Int(i))) => Value::Bool(ev[i as usize]),
                        Some(index) => {
                            let dst = self.temp(Ty::Bool);
                            self.emit(Stmt::ReadEvidence { dst, node: n, index });
                            Value::Dyn(Operand::Temp(dst), Ty::Bool)
                        }
                    });
                }
                if self.in_static() {
                    return Err(self.bad_static(span, format!("the value of `{}` is only known at run time", node.name)));
                }
                self.ops_used.read = true;
                let dst = self.temp(Ty::Bool);
                self.emit(Stmt::ReadNode { dst, node: n, index });
                Ok(Value::Dyn(Operand::Temp(dst), Ty::Bool))
            }
            Prim::SetValue => {
                if self.in_static() {
                    return Err(self.bad_static(span, "`set-value!` changes run-time model state"));
                }
                let n = self.known_node(p, &args[0], span)?;
                let node = net.node(n);
                let index = self.node_index(p, n, args.get(2), span)?;
                if node.is_evidence() {
                    self.emit(Stmt::Abort {
                        msg: format!("{span}: set-value! on evidence node `{}`", node.name),
                    });
                    return Err(Stop::Abort);
                }
                let value = match &args[1] {
                    Value::Bool(b) => Operand::Lit(Lit::Bool(*b)),
                    Value::Dyn(o, Ty::Bool | Ty::Any) => *o,
                    other => {
                        return Err(Error::ty(span, format!("set-value! expects a boolean, given `{other}`")).into())
                    }
                };
                self.ops_used.write = true;
                self.emit(Stmt::WriteNode { node: n, index, value });
                Ok(Value::Void)
            }
            Prim::Error => {
                let msg = args
                    .iter()
                    .map(|a| match a {
                        Value::Str(s) => s.to_string(),
                        other => other.to_string(),
                    })
                    .collect::<Vec<_>>()
                    .join(" ");
                if self.in_static() {
                    return Err(Error::Runtime(msg).into());
                }
                self.emit(Stmt::Abort { msg });
                Err(Stop::Abort)
            }
            Prim::Print => {
                if self.in_static() {
                    return Err(self.bad_static(span, "`print` is a run-time effect"));
                }
                let mut ops = Vec::with_capacity(args.len());
                for a in args {
                    ops.push(self.lower(a, span)?.0);
                }
                self.emit(Stmt::Print { args: ops });
                Ok(Value::Void)
            }
            _ => unreachable!(),
        }
    }

    fn node_index(&mut self, p: Prim, n: usize, index: Option<&Value>, span: Span) -> R<Option<Operand>> {
        let node = self.ctx.net.node(n);
        match (node.len, index) {
            (Some(_), Some(Value::Dyn(o, ty))) => {
                if !matches!(ty, Ty::Int | Ty::Num | Ty::Any) {
                    return Err(Error::ty(span, format!("`{p}`: index must be an integer, given a {ty}")).into());
                }
                Ok(Some(*o))
            }
            (None, Some(Value::Dyn(..))) => Err(Error::ty(
                span,
                format!("`{p}`: `{}` is a scalar node and takes no index", node.name),
            )
            .into()),
            _ => {
                let i = ops::element(&self.ctx, span, p, n, index)?;
                Ok(node.len.map(|_| Operand::Lit(Lit::Int(i as i64))))
            }
        }
    }

    fn new_vector(&mut self, p: Prim, args: &[Value], span: Span) -> R<Value> {
        let alloc = self.vectors.tys.len();
        let (stmt, ty): (Box<dyn FnOnce(TempId) -> Stmt>, Ty) = if p == Prim::Vector {
            let mut items = Vec::with_capacity(args.len());
            let mut ty: Option<Ty> = None;
            for a in args {
                let (o, t) = self.lower(a, span)?;
                items.push(o);
                ty = Some(ty.map_or(t, |x| x.join(t)));
            }
            (Box::new(|dst| Stmt::NewVector { dst, items }), ty.unwrap_or(Ty::Float))
        } else {
            if let Value::Int(n) = args[0] {
                if n < 0 {
                    return Err(Error::ty(span, format!("`{p}`: negative length {n}")).into());
                }
            }
            let (len, lt) = self.lower(&args[0], span)?;
            if !matches!(lt, Ty::Int | Ty::Num | Ty::Any) {
                return Err(Error::ty(span, format!("`{p}` expects an integer length, given a {lt}")).into());
            }
            let (fill, ft) = self.lower(&args[1], span)?;
            (Box::new(move |dst| Stmt::NewVectorFill { dst, len, fill }), ft)
        };
        if matches!(ty, Ty::Vector | Ty::List) {
            return Err(Error::Unsupported(format!("{span}: vectors of {ty}s at run time")).into());
        }
        let ty = self.hinted(TypeKey::Vector(alloc), ty);
        self.vectors.tys.push(ty);
        self.vectors.read.push(false);
        let dst = self.temp(Ty::Vector);
        self.vec_alloc.insert(dst, alloc);
        self.emit(stmt(dst));
        Ok(Value::Dyn(Operand::Temp(dst), Ty::Vector))
    }

    fn alloc_of(&self, v: Operand, span: Span) -> R<usize> {
        v.temp()
            .and_then(|t| self.vec_alloc.get(&t).copied())
            .ok_or_else(|| Stop::Err(Error::Unsupported(format!("{span}: vector of unknown origin at run time"))))
    }

    fn vector_op(&mut self, p: Prim, args: &[Value], span: Span) -> R<Value> {
        let Value::Dyn(vec, vt) = args[0] else { unreachable!() };
        if vt != Ty::Vector {
            return Err(Error::ty(span, format!("`{p}` expects a vector, given a {vt}")).into());
        }
        let alloc = self.alloc_of(vec, span)?;
        let index = |pe: &mut Self| -> R<Operand> {
            let (o, t) = pe.lower(&args[1], span)?;
            if matches!(t, Ty::Int | Ty::Num | Ty::Any) {
                Ok(o)
            } else {
                Err(Error::ty(span, format!("`{p}`: index must be an integer, given a {t}")).into())
            }
        };
        match p {
            Prim::VectorRef => {
                let index = index(self)?;
                self.vectors.read[alloc] = true;
                let ty = self.vectors.tys[alloc];
                let dst = self.temp(ty);
                self.emit(Stmt::VectorRef { dst, vec, index });
                Ok(Value::Dyn(Operand::Temp(dst), ty))
            }
            Prim::VectorSet => {
                let index = index(self)?;
                let (value, ty) = self.lower(&args[2], span)?;
                if matches!(ty, Ty::Vector | Ty::List) {
                    return Err(Error::Unsupported(format!("{span}: storing a {ty} in a run-time vector")).into());
                }
                self.widen(TypeKey::Vector(alloc), ty);
                self.emit(Stmt::VectorSet { vec, index, value });
                Ok(Value::Void)
            }
            Prim::VectorLength => {
                let dst = self.temp(Ty::Int);
                self.emit(Stmt::VectorLength { dst, vec });
                Ok(Value::Dyn(Operand::Temp(dst), Ty::Int))
            }
            Prim::Normalize => {
                let ty = self.vectors.tys[alloc];
                if !ty.is_numeric() && ty != Ty::Any {
                    return Err(Error::ty(span, format!("`normalize` of a vector of {ty}")).into());
                }
                self.vectors.read[alloc] = true;
                let out = self.vectors.tys.len();
                self.vectors.tys.push(Ty::Float);
                self.vectors.read.push(false);
                let dst = self.temp(Ty::Vector);
                self.vec_alloc.insert(dst, out);
                self.emit(Stmt::Normalize { dst, vec });
                Ok(Value::Dyn(Operand::Temp(dst), Ty::Vector))
            }
            _ => unreachable!(),
        }
    }
}

/// Specializes `prog` to `net`: the model structure, evidence and query
/// are fixed; `N`, `burn` and all node values remain run-time inputs.
pub fn specialize(prog: &Program, net: &BayesNet, opts: PeOptions) -> Result<ResidualProgram> {
    let sv = StructureValues::new(net);
    let mut hints = HashMap::new();
    for _ in 0..MAX_RESTARTS {
        let mut pe = Pe {
            prog,
            ctx: Ctx { net, sv: &sv },
            opts,
            blocks: vec![Vec::new()],
            temp_tys: vec![Ty::Int, Ty::Int],
            cells: Widening::default(),
            vectors: Widening::default(),
            vec_alloc: HashMap::new(),
            hints,
            restart: false,
            caches: Vec::new(),
            stack: Vec::new(),
            statics: Vec::new(),
            next_extent: 0,
            ops_used: OpSet {
                read: false,
                write: false,
            },
        };
        let mut frame = Frame::new(prog.main_frame);
        let v = match pe.pe(&prog.main, &mut frame) {
            Ok(v) => Some(v),
            Err(Stop::Abort) => None,
            Err(Stop::Err(e)) => return Err(e),
        };
        let (result, result_ty) = match &v {
            Some(v) => match pe.lower(v, prog.main.span()) {
                Ok(r) => r,
                Err(Stop::Err(e)) => return Err(e),
                Err(Stop::Abort) => unreachable!(),
            },
            None => (Operand::Lit(Lit::Void), Ty::Void),
        };
        if pe.restart {
            hints = pe.hints;
            continue;
        }
        let vector_types = pe.vec_alloc.iter().map(|(&t, &a)| (t, pe.vectors.tys[a])).collect();
        let mut rp = ResidualProgram {
            params: vec![
                Param {
                    name: "N".into(),
                    temp: 0,
                    ty: Ty::Int,
                },
                Param {
                    name: "burn".into(),
                    temp: 1,
                    ty: Ty::Int,
                },
            ],
            plan: specialize_model(net, pe.ops_used),
            node_names: net.names().iter().map(|s| s.to_string()).collect(),
            cell_types: pe.cells.tys,
            caches: pe.caches,
            body: pe.blocks.pop().unwrap(),
            result,
            result_ty,
            temp_count: pe.temp_tys.len() as u32,
            vector_types,
        };
        residual::eliminate_dead_code(&mut rp);
        if let Err(problems) = residual::validate(&rp) {
            return Err(Error::Runtime(format!(
                "specializer produced an invalid residual program: {}",
                problems.join("; ")
            )));
        }
        return Ok(rp);
    }
    Err(Error::Unsupported(
        "residual types did not settle; a cell or vector keeps changing type".into(),
    ))
}
