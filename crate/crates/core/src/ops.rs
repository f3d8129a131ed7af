//! Concrete application of the pure primitives. The interpreter uses this
//! for everything; the partial evaluator uses it to fold operations whose
//! arguments are all known.

use crate::error::{Error, Result, Span};
use crate::model::{BayesNet, StructureValues};
use crate::prim::{self, Num, Prim, Scalar};
use crate::value::{List, Value};

pub struct Ctx<'a> {
    pub net: &'a BayesNet,
    pub sv: &'a StructureValues,
}

fn type_err(span: Span, p: Prim, want: &str, got: &Value) -> Error {
    Error::ty(span, format!("`{p}` expects {want}, given {} `{got}`", got.type_name()))
}

pub fn num(span: Span, p: Prim, v: &Value) -> Result<Num> {
    v.as_num().ok_or_else(|| type_err(span, p, "a number", v))
}

pub fn list<'v>(span: Span, p: Prim, v: &'v Value) -> Result<&'v List> {
    match v {
        Value::List(l) => Ok(l),
        _ => Err(type_err(span, p, "a list", v)),
    }
}

pub fn node(span: Span, p: Prim, v: &Value) -> Result<usize> {
    match v {
        Value::Node(n) => Ok(*n),
        _ => Err(type_err(span, p, "a node", v)),
    }
}

pub fn int(span: Span, p: Prim, v: &Value) -> Result<i64> {
    match v {
        Value::Int(i) => Ok(*i),
        _ => Err(type_err(span, p, "an integer", v)),
    }
}

pub fn scalar_value(s: Scalar) -> Value {
    match s {
        Scalar::Bool(b) => Value::Bool(b),
        Scalar::Num(n) => Value::from_num(n),
    }
}

/// Folds a variadic arithmetic primitive over concrete numbers.
pub fn arith(span: Span, p: Prim, args: &[Value]) -> Result<Value> {
    let op = p.binop().unwrap();
    let nums = args.iter().map(|a| num(span, p, a)).collect::<Result<Vec<_>>>()?;
    let r = match (p, nums.as_slice()) {
        (Prim::Add, []) => Num::Int(0),
        (Prim::Mul, []) => Num::Int(1),
        (Prim::Sub, [x]) => prim::negate(*x),
        (_, [x]) => *x,
        (_, [x, rest @ ..]) => {
            let mut acc = *x;
            for y in rest {
                match prim::binop(op, acc, *y) {
                    Scalar::Num(n) => acc = n,
                    Scalar::Bool(_) => unreachable!(),
                }
            }
            acc
        }
        _ => unreachable!(),
    };
    Ok(Value::from_num(r))
}

/// Checks an array index against a node's length.
pub fn element(ctx: &Ctx, span: Span, p: Prim, n: usize, index: Option<&Value>) -> Result<usize> {
    let node = ctx.net.node(n);
    match (node.len, index) {
        (None, None) => Ok(0),
        (None, Some(_)) => Err(Error::ty(span, format!("`{p}`: `{}` is a scalar node and takes no index", node.name))),
        (Some(_), None) => Err(Error::ty(span, format!("`{p}`: `{}` is an array node and needs an index", node.name))),
        (Some(len), Some(i)) => {
            let i = int(span, p, i)?;
            if i < 0 || i as usize >= len {
                Err(Error::ty(span, format!("`{p}`: index {i} out of range for `{}` of length {len}", node.name)))
            } else {
                Ok(i as usize)
            }
        }
    }
}

pub fn vector_index(span: Span, p: Prim, len: usize, i: &Value) -> Result<usize> {
    let i = int(span, p, i)?;
    if i < 0 || i as usize >= len {
        Err(Error::ty(span, format!("`{p}`: index {i} out of range for vector of length {len}")))
    } else {
        Ok(i as usize)
    }
}

/// Applies a pure primitive to concrete arguments. Returns `None` for
/// primitives that are effectful, higher-order, or read run-time model
/// state; the caller handles those.
pub fn apply_pure(ctx: &Ctx, p: Prim, args: &[Value], span: Span, extent: u32) -> Result<Option<Value>> {
    let v = match p {
        Prim::Add | Prim::Sub | Prim::Mul => arith(span, p, args)?,
        Prim::Div | Prim::Lt | Prim::Le | Prim::Gt | Prim::Ge | Prim::NumEq | Prim::Min | Prim::Max => {
            let a = num(span, p, &args[0])?;
            let b = num(span, p, &args[1])?;
            scalar_value(prim::binop(p.binop().unwrap(), a, b))
        }
        Prim::Not => Value::Bool(matches!(args[0], Value::Bool(false))),
        Prim::IsZero => Value::Bool(num(span, p, &args[0])?.to_f64() == 0.0),
        Prim::Eq => Value::Bool(args[0].identical(&args[1]).expect("concrete")),
        Prim::Void => Value::Void,
        Prim::List => Value::List(crate::value::List::new(args.to_vec())),
        Prim::Cons => Value::List(crate::value::List::cons(args[0].clone(), list(span, p, &args[1])?)),
        Prim::Car | Prim::First => list(span, p, &args[0])?
            .first()
            .cloned()
            .ok_or_else(|| Error::ty(span, format!("`{p}` of an empty list")))?,
        Prim::Second => list(span, p, &args[0])?
            .as_slice()
            .get(1)
            .cloned()
            .ok_or_else(|| Error::ty(span, format!("`{p}` of a list with fewer than two elements")))?,
        Prim::Cdr => Value::List(
            list(span, p, &args[0])?
                .rest()
                .ok_or_else(|| Error::ty(span, format!("`{p}` of an empty list")))?,
        ),
        Prim::IsNull => Value::Bool(matches!(&args[0], Value::List(l) if l.is_empty())),
        Prim::Member => {
            let l = list(span, p, &args[1])?;
            let mut tail = l.clone();
            loop {
                match tail.first() {
                    None => break Value::Bool(false),
                    Some(x) => match x.identical(&args[0]) {
                        Some(true) => break Value::List(tail),
                        Some(false) => tail = tail.rest().unwrap(),
                        None => {
                            return Err(Error::Unsupported(format!(
                                "{span}: `member` comparing against a value only known at run time"
                            )))
                        }
                    },
                }
            }
        }
        Prim::Length => Value::Int(list(span, p, &args[0])?.len() as i64),
        Prim::Parents => ctx.sv.parents[node(span, p, &args[0])?].clone(),
        Prim::Children => ctx.sv.children[node(span, p, &args[0])?].clone(),
        Prim::Cpt => ctx.sv.cpts[node(span, p, &args[0])?].clone(),
        Prim::IsEvidence => Value::Bool(ctx.net.node(node(span, p, &args[0])?).is_evidence()),
        Prim::IsArray => Value::Bool(matches!(&args[0], Value::Node(n) if ctx.net.node(*n).is_array())),
        Prim::ArrayLength => {
            let n = node(span, p, &args[0])?;
            match ctx.net.node(n).len {
                Some(k) => Value::Int(k as i64),
                None => return Err(Error::ty(span, format!("`{p}`: `{}` is a scalar node", ctx.net.node(n).name))),
            }
        }
        Prim::Nodes => match &args[0] {
            Value::Net => ctx.sv.nodes.clone(),
            other => return Err(type_err(span, p, "a bayesnet", other)),
        },
        Prim::Vector => Value::new_vector(args.to_vec(), extent),
        Prim::MakeVector => {
            let n = int(span, p, &args[0])?;
            if n < 0 {
                return Err(Error::ty(span, format!("`{p}`: negative length {n}")));
            }
            Value::new_vector(vec![args[1].clone(); n as usize], extent)
        }
        Prim::VectorRef => match &args[0] {
            Value::Vector(v) => {
                let v = v.borrow();
                let i = vector_index(span, p, v.items.len(), &args[1])?;
                v.items[i].clone()
            }
            other => return Err(type_err(span, p, "a vector", other)),
        },
        Prim::VectorSet => match &args[0] {
            Value::Vector(v) => {
                let mut v = v.borrow_mut();
                let i = vector_index(span, p, v.items.len(), &args[1])?;
                v.items[i] = args[2].clone();
                Value::Void
            }
            other => return Err(type_err(span, p, "a vector", other)),
        },
        Prim::VectorLength => match &args[0] {
            Value::Vector(v) => Value::Int(v.borrow().items.len() as i64),
            other => return Err(type_err(span, p, "a vector", other)),
        },
        Prim::Normalize => match &args[0] {
            Value::Vector(v) => {
                let nums = v
                    .borrow()
                    .items
                    .iter()
                    .map(|x| num(span, p, x))
                    .collect::<Result<Vec<_>>>()?;
                let out = prim::normalize(&nums).map_err(Error::Runtime)?;
                Value::new_vector(out.into_iter().map(Value::Float).collect(), extent)
            }
            other => return Err(type_err(span, p, "a vector", other)),
        },
        Prim::Flip | Prim::RandomInteger | Prim::Error | Prim::Print | Prim::Value | Prim::SetValue | Prim::Foldl | Prim::Map => return Ok(None),
    };
    Ok(Some(v))
}

/// Renders `error`/`print` arguments the way `display` would.
pub fn display_args(args: &[Value]) -> String {
    args.iter()
        .map(|a| match a {
            Value::Str(s) => s.to_string(),
            other => other.to_string(),
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Iteration sequence of a concrete `for` clause.
pub fn sequence(ctx: &Ctx, v: &Value, span: Span) -> Result<Vec<Value>> {
    match v {
        Value::Int(n) => Ok((0..(*n).max(0)).map(Value::Int).collect()),
        Value::List(l) => Ok(l.as_slice().to_vec()),
        Value::Net => Ok((0..ctx.net.nodes.len()).map(Value::Node).collect()),
        Value::Vector(v) => Ok(v.borrow().items.clone()),
        other => Err(Error::ty(
            span,
            format!("`for` cannot iterate over {} `{other}`", other.type_name()),
        )),
    }
}
