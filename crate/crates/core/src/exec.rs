//! Direct executor for residual programs. Node values live in flat
//! boolean slots described by the model code plan; no graph structure is
//! consulted at run time.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interp::{estimate_of, Effects, Outcome, RunParams};
use crate::model::Repr;
use crate::ops::display_args;
use crate::prim::{self, Num};
use crate::residual::{Block, CacheKey, CacheSpec, Lit, Operand, ResidualProgram, Rhs, Stmt};
use crate::rng::{check_probability, Rng};
use crate::value::{List, Value};

/// Hit and miss counts for one cache table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CacheStats {
    pub id: u32,
    pub hits: u64,
    pub misses: u64,
    pub entries: u64,
    pub dense: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ExecOptions {
    /// Recompute every cached expression and compare with the table.
    pub debug_cache: bool,
}

enum Table {
    Dense(Vec<Option<Value>>),
    Hashed(HashMap<Vec<u64>, Value>),
}

struct Exec<'a> {
    rp: &'a ResidualProgram,
    temps: Vec<Value>,
    cells: Vec<Value>,
    state: Vec<Vec<bool>>,
    rng: Rng,
    effects: Effects,
    output: Vec<String>,
    tables: Vec<Table>,
    stats: Vec<CacheStats>,
    opts: ExecOptions,
}

fn rt(msg: impl Into<String>) -> Error {
    Error::Runtime(msg.into())
}

fn lit(l: Lit) -> Value {
    match l {
        Lit::Void => Value::Void,
        Lit::Bool(b) => Value::Bool(b),
        Lit::Int(i) => Value::Int(i),
        Lit::Float(x) => Value::Float(x),
    }
}

fn num(v: &Value, what: &str) -> Result<Num> {
    v.as_num().ok_or_else(|| rt(format!("{what} expects a number, given `{v}`")))
}

fn int(v: &Value, what: &str) -> Result<i64> {
    match v {
        Value::Int(i) => Ok(*i),
        _ => Err(rt(format!("{what} expects an integer, given `{v}`"))),
    }
}

fn same(a: &Value, b: &Value) -> bool {
    a.identical(b).unwrap_or(false)
}

/// Bitwise equality used when checking cached results.
fn same_result(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Float(x), Value::Float(y)) => x.to_bits() == y.to_bits(),
        _ => same(a, b),
    }
}

impl Exec<'_> {
    fn get(&self, o: Operand) -> Value {
        match o {
            Operand::Temp(t) => self.temps[t as usize].clone(),
            Operand::Lit(l) => lit(l),
        }
    }

    fn set(&mut self, t: u32, v: Value) {
        self.temps[t as usize] = v;
    }

    fn element(&self, node: usize, index: Option<Operand>) -> Result<usize> {
        let width = self.state[node].len();
        match index {
            None => Ok(0),
            Some(o) => {
                let i = int(&self.get(o), "node index")?;
                if i < 0 || i as usize >= width {
                    Err(rt(format!(
                        "index {i} out of range for `{}` of length {width}",
                        self.rp.node_names[node]
                    )))
                } else {
                    Ok(i as usize)
                }
            }
        }
    }

    fn read(&mut self, dst: u32, node: usize, index: Option<Operand>) -> Result<()> {
        let i = self.element(node, index)?;
        let v = self.state[node][i];
        self.set(dst, Value::Bool(v));
        Ok(())
    }

    fn vector_index(items: &[Value], i: &Value) -> Result<usize> {
        let i = int(i, "vector index")?;
        if i < 0 || i as usize >= items.len() {
            Err(rt(format!("vector index {i} out of range for length {}", items.len())))
        } else {
            Ok(i as usize)
        }
    }

    fn rhs(&self, rhs: &Rhs) -> Result<Value> {
        Ok(match rhs {
            Rhs::Bin(op, a, b) => {
                let a = num(&self.get(*a), op.name())?;
                let b = num(&self.get(*b), op.name())?;
                match prim::binop(*op, a, b) {
                    prim::Scalar::Bool(x) => Value::Bool(x),
                    prim::Scalar::Num(n) => Value::from_num(n),
                }
            }
            Rhs::Neg(a) => Value::from_num(prim::negate(num(&self.get(*a), "-")?)),
            Rhs::Not(a) => Value::Bool(matches!(self.get(*a), Value::Bool(false))),
            Rhs::Same(a, b) => Value::Bool(same(&self.get(*a), &self.get(*b))),
            Rhs::IsZero(a) => Value::Bool(num(&self.get(*a), "zero?")?.to_f64() == 0.0),
        })
    }

    fn block(&mut self, b: &Block) -> Result<()> {
        for s in b {
            self.stmt(s)?;
        }
        Ok(())
    }

    fn stmt(&mut self, s: &Stmt) -> Result<()> {
        match s {
            Stmt::Let { dst, rhs, .. } => {
                let v = self.rhs(rhs)?;
                self.set(*dst, v);
            }
            Stmt::Flip { dst, p } => {
                let p = num(&self.get(*p), "flip")?.to_f64();
                let p = check_probability(p).map_err(rt)?;
                self.effects.flips += 1;
                let v = self.rng.flip(p);
                self.set(*dst, Value::Bool(v));
            }
            Stmt::RandomInt { dst, k } => {
                let k = int(&self.get(*k), "random-integer")?;
                if k < 1 {
                    return Err(rt(format!("random-integer: bound {k} must be positive")));
                }
                self.effects.random_ints += 1;
                let v = self.rng.below(k);
                self.set(*dst, Value::Int(v));
            }
            Stmt::ReadNode { dst, node, index } => self.read(*dst, *node, *index)?,
            Stmt::ReadEvidence { dst, node, index } => self.read(*dst, *node, Some(*index))?,
            Stmt::WriteNode { node, index, value } => {
                let i = self.element(*node, *index)?;
                let v = match self.get(*value) {
                    Value::Bool(b) => b,
                    other => return Err(rt(format!("set-value! expects a boolean, given `{other}`"))),
                };
                self.effects.node_writes += 1;
                self.state[*node][i] = v;
            }
            Stmt::DeclCell { cell, init } => self.cells[*cell as usize] = self.get(*init),
            Stmt::LoadCell { dst, cell } => {
                let v = self.cells[*cell as usize].clone();
                self.set(*dst, v);
            }
            Stmt::StoreCell { cell, value } => self.cells[*cell as usize] = self.get(*value),
            Stmt::NewVector { dst, items } => {
                let items = items.iter().map(|o| self.get(*o)).collect();
                self.set(*dst, Value::new_vector(items, 0));
            }
            Stmt::NewVectorFill { dst, len, fill } => {
                let n = int(&self.get(*len), "make-vector")?;
                if n < 0 {
                    return Err(rt(format!("make-vector: negative length {n}")));
                }
                let fill = self.get(*fill);
                self.set(*dst, Value::new_vector(vec![fill; n as usize], 0));
            }
            Stmt::VectorRef { dst, vec, index } => {
                let v = match self.get(*vec) {
                    Value::Vector(o) => {
                        let o = o.borrow();
                        let i = Self::vector_index(&o.items, &self.get(*index))?;
                        o.items[i].clone()
                    }
                    other => return Err(rt(format!("vector-ref expects a vector, given `{other}`"))),
                };
                self.set(*dst, v);
            }
            Stmt::VectorSet { vec, index, value } => match self.get(*vec) {
                Value::Vector(o) => {
                    let mut o = o.borrow_mut();
                    let i = Self::vector_index(&o.items, &self.get(*index))?;
                    o.items[i] = self.get(*value);
                }
                other => return Err(rt(format!("vector-set! expects a vector, given `{other}`"))),
            },
            Stmt::VectorLength { dst, vec } => {
                let n = match self.get(*vec) {
                    Value::Vector(o) => o.borrow().items.len(),
                    other => return Err(rt(format!("vector-length expects a vector, given `{other}`"))),
                };
                self.set(*dst, Value::Int(n as i64));
            }
            Stmt::Normalize { dst, vec } => {
                let out = match self.get(*vec) {
                    Value::Vector(o) => {
                        let nums = o
                            .borrow()
                            .items
                            .iter()
                            .map(|x| num(x, "normalize"))
                            .collect::<Result<Vec<_>>>()?;
                        prim::normalize(&nums).map_err(rt)?
                    }
                    other => return Err(rt(format!("normalize expects a vector, given `{other}`"))),
                };
                self.set(*dst, Value::new_vector(out.into_iter().map(Value::Float).collect(), 0));
            }
            Stmt::ListLit { dst, items } => {
                let items = items.iter().map(|o| self.get(*o)).collect();
                self.set(*dst, Value::List(List::new(items)));
            }
            Stmt::Print { args } => {
                let vals: Vec<Value> = args.iter().map(|o| self.get(*o)).collect();
                self.effects.prints += 1;
                self.output.push(display_args(&vals));
            }
            Stmt::Abort { msg } => return Err(rt(msg.clone())),
            Stmt::For { var, count, body } => {
                let n = int(&self.get(*count), "for")?;
                for i in 0..n {
                    self.set(*var, Value::Int(i));
                    self.block(body)?;
                }
            }
            Stmt::If { cond, then_b, else_b } => {
                if matches!(self.get(*cond), Value::Bool(false)) {
                    self.block(else_b)?;
                } else {
                    self.block(then_b)?;
                }
            }
            Stmt::Cache { dst, cache } => {
                let v = self.cached(&self.rp.caches[*cache as usize])?;
                self.set(*dst, v);
            }
        }
        Ok(())
    }

    fn compute(&mut self, spec: &CacheSpec) -> Result<Value> {
        self.block(&spec.body)?;
        Ok(self.get(spec.result))
    }

    fn dense_index(&self, spec: &CacheSpec) -> Result<usize> {
        let mut idx = 0usize;
        for k in &spec.keys {
            match k {
                CacheKey::Array(n) => {
                    for &b in &self.state[*n] {
                        idx = (idx << 1) | usize::from(b);
                    }
                }
                other => {
                    let b = match self.key_value(other)? {
                        Value::Bool(b) => b,
                        v => return Err(rt(format!("cache key expected a boolean, found `{v}`"))),
                    };
                    idx = (idx << 1) | usize::from(b);
                }
            }
        }
        Ok(idx)
    }

    fn key_value(&self, k: &CacheKey) -> Result<Value> {
        Ok(match k {
            CacheKey::Node(n) => Value::Bool(self.state[*n][0]),
            CacheKey::Element(n, i) => Value::Bool(self.state[*n][self.element(*n, Some(*i))?]),
            CacheKey::Cell(c) => self.cells[*c as usize].clone(),
            CacheKey::Temp(t) => self.temps[*t as usize].clone(),
            CacheKey::Array(_) => unreachable!(),
        })
    }

    fn hashed_key(&self, spec: &CacheSpec) -> Result<Vec<u64>> {
        let mut key = Vec::new();
        for k in &spec.keys {
            match k {
                CacheKey::Array(n) => {
                    for chunk in self.state[*n].chunks(64) {
                        key.push(chunk.iter().fold(0u64, |acc, &b| (acc << 1) | u64::from(b)));
                    }
                }
                other => match self.key_value(other)? {
                    Value::Void => key.push(0),
                    Value::Bool(b) => key.extend([1, u64::from(b)]),
                    Value::Int(i) => key.extend([2, i as u64]),
                    Value::Float(x) => key.extend([3, x.to_bits()]),
                    v => return Err(rt(format!("cache key cannot hold `{v}`"))),
                },
            }
        }
        Ok(key)
    }

    fn cached(&mut self, spec: &CacheSpec) -> Result<Value> {
        let id = spec.id as usize;
        let stored = match &self.tables[id] {
            Table::Dense(t) => {
                let i = self.dense_index(spec)?;
                (t[i].clone(), Err(i))
            }
            Table::Hashed(t) => {
                let k = self.hashed_key(spec)?;
                (t.get(&k).cloned(), Ok(k))
            }
        };
        match stored {
            (Some(v), key) => {
                self.stats[id].hits += 1;
                if self.opts.debug_cache {
                    let fresh = self.compute(spec)?;
                    if !same_result(&v, &fresh) {
                        return Err(Error::CacheMismatch {
                            cache: id,
                            key: match key {
                                Err(i) => format!("{i:#b}"),
                                Ok(k) => format!("{k:?}"),
                            },
                            stored: v.to_string(),
                            recomputed: fresh.to_string(),
                        });
                    }
                }
                Ok(v)
            }
            (None, key) => {
                self.stats[id].misses += 1;
                self.stats[id].entries += 1;
                let v = self.compute(spec)?;
                match (&mut self.tables[id], key) {
                    (Table::Dense(t), Err(i)) => t[i] = Some(v.clone()),
                    (Table::Hashed(t), Ok(k)) => {
                        t.insert(k, v.clone());
                    }
                    _ => unreachable!(),
                }
                Ok(v)
            }
        }
    }
}

fn initial_state(rp: &ResidualProgram) -> Vec<Vec<bool>> {
    rp.plan
        .reprs
        .iter()
        .map(|r| match r {
            Repr::BoolVar => vec![false],
            Repr::BoolArray(k) => vec![false; *k],
            Repr::Const(b) => vec![*b],
            Repr::ConstArray(v) => v.clone(),
        })
        .collect()
}

/// Runs a residual program.
pub fn execute(rp: &ResidualProgram, params: RunParams, opts: ExecOptions) -> Result<Outcome> {
    let mut ex = Exec {
        rp,
        temps: vec![Value::Void; rp.temp_count as usize],
        cells: vec![Value::Void; rp.cell_types.len()],
        state: initial_state(rp),
        rng: Rng::new(params.seed),
        effects: Effects::default(),
        output: Vec::new(),
        tables: rp
            .caches
            .iter()
            .map(|c| match c.bool_bits {
                Some(b) if c.is_dense() => Table::Dense(vec![None; 1 << b]),
                _ => Table::Hashed(HashMap::new()),
            })
            .collect(),
        stats: rp
            .caches
            .iter()
            .map(|c| CacheStats {
                id: c.id,
                dense: c.is_dense(),
                ..CacheStats::default()
            })
            .collect(),
        opts,
    };
    for p in &rp.params {
        let v = match p.name.as_str() {
            "N" => params.n,
            "burn" => params.burn,
            other => return Err(rt(format!("unknown parameter `{other}`"))),
        };
        ex.temps[p.temp as usize] = Value::Int(v);
    }
    ex.block(&rp.body)?;
    let v = ex.get(rp.result);
    Ok(Outcome {
        estimate: estimate_of(&v),
        display: v.to_string(),
        effects: ex.effects,
        output: ex.output,
        rng: ex.rng,
        caches: ex.stats,
    })
}
