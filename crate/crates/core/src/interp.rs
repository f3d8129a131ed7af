//! Reference interpreter. Annotations are no-ops: `static`, `lift` and
//! `cache` evaluate their body and `for/unroll` is an ordinary loop.

use serde::Serialize;

use crate::dsl::{Expr, Input, Program};
use crate::error::{Error, Result, Span};
use crate::model::{BayesNet, StructureValues};
use crate::ops::{self, Ctx};
use crate::prim::Prim;
use crate::rng::{check_probability, Rng};
use crate::value::{FuncId, List, Value};

/// Maximum call depth before a run is declared non-terminating.
pub const DEPTH_LIMIT: usize = 10_000;

/// Observable effects of a run, counted identically by every route.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Effects {
    pub flips: u64,
    pub random_ints: u64,
    pub node_writes: u64,
    pub prints: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunParams {
    pub seed: u64,
    pub n: i64,
    pub burn: i64,
}

impl RunParams {
    pub fn new(seed: u64, n: i64, burn: i64) -> Self {
        RunParams { seed, n, burn }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub estimate: Vec<f64>,
    pub display: String,
    pub effects: Effects,
    pub output: Vec<String>,
    pub rng: Rng,
    pub caches: Vec<crate::exec::CacheStats>,
}

/// Numbers carried by a result value, as reported in `estimate`.
pub fn estimate_of(v: &Value) -> Vec<f64> {
    fn scalar(v: &Value) -> Option<f64> {
        match v {
            Value::Int(i) => Some(*i as f64),
            Value::Float(x) => Some(*x),
            Value::Bool(b) => Some(f64::from(u8::from(*b))),
            _ => None,
        }
    }
    match v {
        Value::Vector(items) => items.borrow().items.iter().filter_map(scalar).collect(),
        Value::List(l) => l.as_slice().iter().filter_map(scalar).collect(),
        other => scalar(other).into_iter().collect(),
    }
}

struct Interp<'a> {
    prog: &'a Program,
    ctx: Ctx<'a>,
    state: Vec<Vec<bool>>,
    rng: Rng,
    effects: Effects,
    output: Vec<String>,
    params: RunParams,
    stack: Vec<FuncId>,
}

impl Interp<'_> {
    fn eval(&mut self, e: &Expr, frame: &mut [Value]) -> Result<Value> {
        match e {
            Expr::Const(v, _) => Ok(v.clone()),
            Expr::Local(s, _) => Ok(frame[*s].clone()),
            Expr::Input(i, _) => Ok(match i {
                Input::Net => Value::Net,
                Input::Evidence => self.ctx.sv.evidence.clone(),
                Input::Query => Value::Node(self.ctx.net.query),
                Input::QueryIndex => Value::Int(self.ctx.net.query_index.unwrap_or(0) as i64),
                Input::N => Value::Int(self.params.n),
                Input::Burn => Value::Int(self.params.burn),
            }),
            Expr::NodeRef(n, _) => Ok(Value::Node(*n)),
            Expr::FuncRef(f, _) => Ok(Value::Func(*f)),
            Expr::PrimRef(p, _) => Ok(Value::Prim(*p)),
            Expr::CallFunc(f, args, span) => {
                let vals = self.eval_args(args, frame)?;
                self.call_func(*f, vals, *span)
            }
            Expr::CallPrim(p, args, span) => {
                let vals = self.eval_args(args, frame)?;
                self.call_prim(*p, &vals, *span)
            }
            Expr::Apply(head, args, span) => {
                let h = self.eval(head, frame)?;
                let vals = self.eval_args(args, frame)?;
                self.apply(&h, vals, *span)
            }
            Expr::Let { binds, body, .. } => {
                for (slot, init) in binds {
                    frame[*slot] = self.eval(init, frame)?;
                }
                self.eval(body, frame)
            }
            Expr::If {
                cond, then_e, else_e, ..
            } => {
                if matches!(self.eval(cond, frame)?, Value::Bool(false)) {
                    self.eval(else_e, frame)
                } else {
                    self.eval(then_e, frame)
                }
            }
            Expr::Begin(items, _) => {
                let mut last = Value::Void;
                for it in items {
                    last = self.eval(it, frame)?;
                }
                Ok(last)
            }
            Expr::For { clauses, body, span, .. } => {
                if let [(slot, it)] = clauses.as_slice() {
                    if let Value::Int(n) = self.eval(it, frame)? {
                        for i in 0..n {
                            frame[*slot] = Value::Int(i);
                            self.eval(body, frame)?;
                        }
                        return Ok(Value::Void);
                    }
                }
                let mut seqs = Vec::new();
                for (_, it) in clauses {
                    let v = self.eval(it, frame)?;
                    seqs.push(ops::sequence(&self.ctx, &v, *span)?);
                }
                let len = seqs.iter().map(Vec::len).min().unwrap_or(0);
                for k in 0..len {
                    for ((slot, _), seq) in clauses.iter().zip(&seqs) {
                        frame[*slot] = seq[k].clone();
                    }
                    self.eval(body, frame)?;
                }
                Ok(Value::Void)
            }
            Expr::Set(slot, value, _) => {
                frame[*slot] = self.eval(value, frame)?;
                Ok(Value::Void)
            }
            Expr::Static(inner, _) | Expr::Lift(inner, _) | Expr::Cache(inner, _) => self.eval(inner, frame),
        }
    }

    fn eval_args(&mut self, args: &[Expr], frame: &mut [Value]) -> Result<Vec<Value>> {
        args.iter().map(|a| self.eval(a, frame)).collect()
    }

    fn call_func(&mut self, f: FuncId, args: Vec<Value>, span: Span) -> Result<Value> {
        if self.stack.len() >= DEPTH_LIMIT {
            return Err(Error::NonTermination {
                limit: DEPTH_LIMIT,
                stack: self.stack.iter().map(|&id| self.prog.funcs[id].name.clone()).collect(),
            });
        }
        let def = &self.prog.funcs[f];
        if def.params.len() != args.len() {
            return Err(Error::Arity {
                span,
                form: def.name.clone(),
                expected: format!("{} argument(s)", def.params.len()),
                got: args.len(),
            });
        }
        let mut frame = args;
        frame.resize(def.frame_size, Value::Void);
        self.stack.push(f);
        let r = stacker::maybe_grow(256 * 1024, 8 * 1024 * 1024, || self.eval(&def.body, &mut frame));
        self.stack.pop();
        r
    }

    fn apply(&mut self, f: &Value, args: Vec<Value>, span: Span) -> Result<Value> {
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
                    });
                }
                self.call_prim(*p, &args, span)
            }
            other => Err(Error::ty(span, format!("cannot call {} `{other}`", other.type_name()))),
        }
    }

    fn call_prim(&mut self, p: Prim, args: &[Value], span: Span) -> Result<Value> {
        if let Some(v) = ops::apply_pure(&self.ctx, p, args, span, 0)? {
            return Ok(v);
        }
        match p {
            Prim::Flip => {
                let prob = ops::num(span, p, &args[0])?.to_f64();
                let prob = check_probability(prob).map_err(|m| Error::ty(span, m))?;
                self.effects.flips += 1;
                Ok(Value::Bool(self.rng.flip(prob)))
            }
            Prim::RandomInteger => {
                let k = ops::int(span, p, &args[0])?;
                if k < 1 {
                    return Err(Error::ty(span, format!("random-integer: bound {k} must be positive")));
                }
                self.effects.random_ints += 1;
                Ok(Value::Int(self.rng.below(k)))
            }
            Prim::Error => Err(Error::Runtime(ops::display_args(args))),
            Prim::Print => {
                self.effects.prints += 1;
                self.output.push(ops::display_args(args));
                Ok(Value::Void)
            }
            Prim::Value => {
                let n = ops::node(span, p, &args[0])?;
                let i = ops::element(&self.ctx, span, p, n, args.get(1))?;
                Ok(Value::Bool(self.state[n][i]))
            }
            Prim::SetValue => {
                let n = ops::node(span, p, &args[0])?;
                let i = ops::element(&self.ctx, span, p, n, args.get(2))?;
                let node = self.ctx.net.node(n);
                if node.is_evidence() {
                    return Err(Error::Runtime(format!("{span}: set-value! on evidence node `{}`", node.name)));
                }
                let v = match &args[1] {
                    Value::Bool(b) => *b,
                    other => return Err(Error::ty(span, format!("set-value! expects a boolean, given `{other}`"))),
                };
                self.effects.node_writes += 1;
                self.state[n][i] = v;
                Ok(Value::Void)
            }
            Prim::Foldl => {
                let l = ops::list(span, p, &args[2])?.clone();
                let mut acc = args[1].clone();
                for x in l.as_slice() {
                    acc = self.apply(&args[0], vec![x.clone(), acc], span)?;
                }
                Ok(acc)
            }
            Prim::Map => {
                let l = ops::list(span, p, &args[1])?.clone();
                let mut out = Vec::with_capacity(l.len());
                for x in l.as_slice() {
                    out.push(self.apply(&args[0], vec![x.clone()], span)?);
                }
                Ok(Value::List(List::new(out)))
            }
            _ => unreachable!("pure primitive {p} not folded"),
        }
    }
}

/// Runs `prog` against `net` with no specialization.
pub fn interpret(prog: &Program, net: &BayesNet, params: RunParams) -> Result<Outcome> {
    let sv = StructureValues::new(net);
    let mut it = Interp {
        prog,
        ctx: Ctx { net, sv: &sv },
        state: net.initial_state(),
        rng: Rng::new(params.seed),
        effects: Effects::default(),
        output: Vec::new(),
        params,
        stack: Vec::new(),
    };
    let mut frame = vec![Value::Void; prog.main_frame];
    let v = it.eval(&prog.main, &mut frame)?;
    Ok(Outcome {
        estimate: estimate_of(&v),
        display: v.to_string(),
        effects: it.effects,
        output: it.output,
        rng: it.rng,
        caches: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_program;
    use crate::model::parse_model;

    fn burglary() -> BayesNet {
        parse_model(
            "(node Burglary (cpt 0.02)) (node Earthquake (cpt 0.05))
             (node Alarm (parents Burglary Earthquake) (cpt ((0.95 0.94) (0.29 0.001))))
             (node JohnCalls (parents Alarm) (cpt (0.9 0.05)))
             (node MaryCalls (parents Alarm) (cpt (0.7 0.01)))
             (evidence JohnCalls true) (evidence MaryCalls true) (query Burglary)",
        )
        .unwrap()
    }

    fn run(src: &str) -> Result<Outcome> {
        let net = burglary();
        let p = parse_program(src, Some(&net))?;
        interpret(&p, &net, RunParams::new(1, 10, 0))
    }

    #[test]
    fn index_into_alarm_cpt() {
        let src = "(define (index cpt parents)
                     (if (null? parents) cpt
                         (if (value (car parents))
                             (index (first cpt) (cdr parents))
                             (index (second cpt) (cdr parents)))))
                   (set-value! Burglary #t)
                   (set-value! Earthquake #f)
                   (index '((0.95 0.94) (0.29 0.001)) (list Burglary Earthquake))";
        assert_eq!(run(src).unwrap().estimate, vec![0.94]);
    }

    #[test]
    fn cp_of_false_node() {
        let src = "(set-value! Alarm #f) (- 1 0.94)";
        assert_eq!(run(src).unwrap().estimate, vec![1.0 - 0.94]);
    }

    #[test]
    fn evidence_is_immutable() {
        let e = run("(set-value! JohnCalls #f)").unwrap_err();
        assert!(e.to_string().contains("evidence"), "{e}");
    }

    #[test]
    fn type_and_flip_errors() {
        assert!(matches!(run("(car 1)"), Err(Error::Type { .. })));
        assert!(matches!(run("(flip 1.5)"), Err(Error::Type { .. })));
    }

    #[test]
    fn depth_limit() {
        let e = run("(define (f x) (f x)) (f 1)").unwrap_err();
        match e {
            Error::NonTermination { stack, .. } => assert_eq!(stack.last().unwrap(), "f"),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn or_returns_first_true_value() {
        assert_eq!(run("(or #f 3 4)").unwrap().estimate, vec![3.0]);
        assert_eq!(run("(and 1 2)").unwrap().estimate, vec![2.0]);
        assert_eq!(run("(cond [#f 1] [else 2])").unwrap().estimate, vec![2.0]);
    }

    #[test]
    fn foldl_argument_order() {
        assert_eq!(run("(foldl - 0 (list 1 2 3))").unwrap().estimate, vec![2.0]);
        assert_eq!(run("(foldl * 1 (map - (list 1 2)))").unwrap().estimate, vec![2.0]);
    }
}
