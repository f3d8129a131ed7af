//! C99 back end. A residual program becomes one translation unit holding a
//! `simpl_run` function and a `main` that prints a JSON report; the
//! support code lives in the header-only runtime `simpl_rt.h`.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::CacheStats;
use crate::interp::{Effects, Outcome, RunParams};
use crate::model::{NodeId, Repr};
use crate::prim::BinOp;
use crate::residual::{Block, CacheKey, CacheSpec, Lit, Operand, ResidualProgram, Rhs, Stmt, TempId, Ty};
use crate::rng::Rng;

pub const RUNTIME_HEADER: &str = include_str!("../runtime/simpl_rt.h");
pub const RUNTIME_HEADER_NAME: &str = "simpl_rt.h";
pub const RUNTIME_VERSION: u32 = 1;
pub const ENTRY_SYMBOL: &str = "simpl_run";

pub const CFLAGS: &[&str] = &["-O2", "-std=c99", "-Wall", "-Wextra", "-ffp-contract=off"];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EmitOptions {
    /// Recompute cached expressions on every hit and exit on a mismatch.
    pub debug_cache: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub name: String,
    pub entry: String,
    pub header: String,
    pub header_version: u32,
    pub compiler: Vec<String>,
    pub params: Vec<String>,
    pub outputs: Vec<String>,
    pub caches: usize,
    pub debug_cache: bool,
}

#[derive(Debug, Clone)]
pub struct EmittedUnit {
    pub name: String,
    pub source: String,
    pub manifest: Manifest,
}

impl EmittedUnit {
    pub fn file_name(&self) -> String {
        format!("{}.c", self.name)
    }

    /// Writes the source, the runtime header and the manifest into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        let src = dir.join(self.file_name());
        std::fs::write(&src, &self.source)?;
        std::fs::write(dir.join(RUNTIME_HEADER_NAME), RUNTIME_HEADER)?;
        let manifest = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        std::fs::write(dir.join(format!("{}.json", self.name)), manifest)?;
        Ok(src)
    }
}

fn unsupported(msg: impl Into<String>) -> Error {
    Error::Unsupported(msg.into())
}

fn c_type(ty: Ty) -> Result<&'static str> {
    Ok(match ty {
        Ty::Bool => "bool",
        Ty::Int => "int64_t",
        Ty::Float | Ty::Num => "double",
        Ty::Void => "int",
        Ty::Vector => "simpl_vec *",
        Ty::List => return Err(unsupported("C emission: lists have no run-time representation")),
        Ty::Any => return Err(unsupported("C emission: value of unknown type at run time")),
    })
}

fn is_double(ty: Ty) -> bool {
    matches!(ty, Ty::Float | Ty::Num)
}

fn c_float(x: f64) -> String {
    if x.is_nan() {
        "NAN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "INFINITY".into() } else { "(-INFINITY)".into() }
    } else {
        let s = format!("{x:?}");
        if x.is_sign_negative() { format!("({s})") } else { s }
    }
}

fn c_lit(l: Lit) -> String {
    match l {
        Lit::Void => "0".into(),
        Lit::Bool(b) => (if b { "true" } else { "false" }).into(),
        Lit::Int(i64::MIN) => "INT64_MIN".into(),
        Lit::Int(i) if i < 0 => format!("(-INT64_C({}))", -i),
        Lit::Int(i) => format!("INT64_C({i})"),
        Lit::Float(x) => c_float(x),
    }
}

fn c_string(s: &str) -> String {
    let mut out = String::from("\"");
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '%' => out.push_str("%%"),
            c if c.is_ascii() && !c.is_ascii_control() => out.push(c),
            c => {
                let mut buf = [0u8; 4];
                for b in c.encode_utf8(&mut buf).bytes() {
                    let _ = write!(out, "\\{b:03o}");
                }
            }
        }
    }
    out.push('"');
    out
}

/// Converts a C expression of type `from` into one of type `to`.
fn conv(e: &str, from: Ty, to: Ty) -> Result<String> {
    if from == to || (is_double(from) && is_double(to)) {
        return Ok(e.to_string());
    }
    Ok(match (from, to) {
        (_, Ty::Void) => "0".into(),
        (Ty::Void, Ty::Bool) => "false".into(),
        (Ty::Void, Ty::Int | Ty::Float | Ty::Num) => "0".into(),
        (Ty::Int | Ty::Bool, Ty::Float | Ty::Num) => format!("(double)({e})"),
        (Ty::Float | Ty::Num | Ty::Bool, Ty::Int) => format!("(int64_t)({e})"),
        (Ty::Int | Ty::Float | Ty::Num, Ty::Bool) => format!("(({e}) != 0)"),
        _ => return Err(unsupported(format!("C emission: cannot convert {from} to {to}"))),
    })
}

struct Emitter<'a> {
    rp: &'a ResidualProgram,
    opts: EmitOptions,
    tys: Vec<Ty>,
    used: HashSet<TempId>,
    out: String,
    depth: usize,
}

fn collect_uses(b: &Block, used: &mut HashSet<TempId>) {
    for s in b {
        for o in s.uses() {
            if let Some(t) = o.temp() {
                used.insert(t);
            }
        }
        for inner in s.blocks() {
            collect_uses(inner, used);
        }
    }
}

fn collect_nodes(b: &Block, nodes: &mut HashSet<NodeId>) {
    for s in b {
        match s {
            Stmt::ReadNode { node, .. } | Stmt::ReadEvidence { node, .. } | Stmt::WriteNode { node, .. } => {
                nodes.insert(*node);
            }
            _ => {}
        }
        for inner in s.blocks() {
            collect_nodes(inner, nodes);
        }
    }
}

impl<'a> Emitter<'a> {
    fn new(rp: &'a ResidualProgram, opts: EmitOptions) -> Self {
        let mut tys = vec![Ty::Void; rp.temp_count as usize];
        for p in &rp.params {
            tys[p.temp as usize] = p.ty;
        }
        rp.for_each_stmt(|s| {
            let ty = match s {
                Stmt::Let { dst, ty, .. } => Some((*dst, *ty)),
                Stmt::Flip { dst, .. } | Stmt::ReadNode { dst, .. } | Stmt::ReadEvidence { dst, .. } => {
                    Some((*dst, Ty::Bool))
                }
                Stmt::RandomInt { dst, .. } | Stmt::VectorLength { dst, .. } => Some((*dst, Ty::Int)),
                Stmt::LoadCell { dst, cell } => Some((*dst, rp.cell_types[*cell as usize])),
                Stmt::NewVector { dst, .. } | Stmt::NewVectorFill { dst, .. } | Stmt::Normalize { dst, .. } => {
                    Some((*dst, Ty::Vector))
                }
                Stmt::VectorRef { dst, vec, .. } => {
                    let elem = vec.temp().and_then(|t| rp.vector_types.get(&t).copied()).unwrap_or(Ty::Any);
                    Some((*dst, elem))
                }
                Stmt::ListLit { dst, .. } => Some((*dst, Ty::List)),
                Stmt::Cache { dst, cache } => Some((*dst, rp.caches[*cache as usize].ty)),
                Stmt::For { var, .. } => Some((*var, Ty::Int)),
                _ => None,
            };
            if let Some((t, ty)) = ty {
                tys[t as usize] = ty;
            }
        });
        let mut used = HashSet::new();
        collect_uses(&rp.body, &mut used);
        for c in &rp.caches {
            collect_uses(&c.body, &mut used);
            if let Some(t) = c.result.temp() {
                used.insert(t);
            }
            for k in &c.keys {
                match k {
                    CacheKey::Temp(t) => {
                        used.insert(*t);
                    }
                    CacheKey::Element(_, Operand::Temp(t)) => {
                        used.insert(*t);
                    }
                    _ => {}
                }
            }
        }
        if let Some(t) = rp.result.temp() {
            used.insert(t);
        }
        Emitter {
            rp,
            opts,
            tys,
            used,
            out: String::new(),
            depth: 0,
        }
    }

    fn line(&mut self, s: &str) {
        for _ in 0..self.depth {
            self.out.push_str("    ");
        }
        self.out.push_str(s);
        self.out.push('\n');
    }

    fn op(&self, o: Operand) -> (String, Ty) {
        match o {
            Operand::Temp(t) => (format!("t{t}"), self.tys[t as usize]),
            Operand::Lit(l) => (c_lit(l), l.ty()),
        }
    }

    fn op_as(&self, o: Operand, to: Ty) -> Result<String> {
        let (e, ty) = self.op(o);
        conv(&e, ty, to)
    }

    fn node_name(&self, n: NodeId) -> String {
        self.rp.node_names[n].clone()
    }

    fn node_ref(&self, node: NodeId, index: Option<Operand>) -> Result<String> {
        match (&self.rp.plan.reprs[node], index) {
            (Repr::BoolVar | Repr::Const(_), _) => Ok(format!("n{node}")),
            (Repr::BoolArray(k), Some(i)) => Ok(format!(
                "n{node}[simpl_index({}, {k}, {})]",
                self.op_as(i, Ty::Int)?,
                c_string(&self.node_name(node))
            )),
            (Repr::ConstArray(v), Some(i)) => Ok(format!(
                "n{node}[simpl_index({}, {}, {})]",
                self.op_as(i, Ty::Int)?,
                v.len(),
                c_string(&self.node_name(node))
            )),
            (_, None) => Ok(format!("n{node}[0]")),
        }
    }

    fn define(&mut self, dst: TempId, expr: &str) -> Result<()> {
        let ty = self.tys[dst as usize];
        let ct = c_type(ty)?;
        let sep = if ct.ends_with('*') { "" } else { " " };
        self.line(&format!("{ct}{sep}t{dst} = {expr};"));
        if !self.used.contains(&dst) {
            self.line(&format!("(void)t{dst};"));
        }
        Ok(())
    }

    fn rhs(&self, rhs: &Rhs) -> Result<(String, Ty)> {
        Ok(match rhs {
            Rhs::Bin(op, a, b) => self.bin(*op, *a, *b)?,
            Rhs::Neg(a) => {
                let (e, ty) = self.op(*a);
                match ty {
                    Ty::Int => (format!("simpl_neg_i({e})"), Ty::Int),
                    Ty::Float | Ty::Num => (format!("(-{e})"), ty),
                    _ => return Err(unsupported(format!("C emission: negation of {ty}"))),
                }
            }
            Rhs::Not(a) => {
                let (e, ty) = self.op(*a);
                match ty {
                    Ty::Bool => (format!("(!{e})"), Ty::Bool),
                    Ty::Any => return Err(unsupported("C emission: `not` of a value of unknown type")),
                    _ => ("false".into(), Ty::Bool),
                }
            }
            Rhs::Same(a, b) => (self.same(*a, *b)?, Ty::Bool),
            Rhs::IsZero(a) => {
                let (e, ty) = self.op(*a);
                if !ty.is_numeric() {
                    return Err(unsupported(format!("C emission: zero? of {ty}")));
                }
                (format!("({e} == 0)"), Ty::Bool)
            }
        })
    }

    fn same(&self, a: Operand, b: Operand) -> Result<String> {
        let (ea, ta) = self.op(a);
        let (eb, tb) = self.op(b);
        if matches!(ta, Ty::Num | Ty::Any | Ty::List) || matches!(tb, Ty::Num | Ty::Any | Ty::List) {
            return Err(unsupported(format!("C emission: eq? between {ta} and {tb}")));
        }
        Ok(if ta != tb {
            "false".into()
        } else {
            match ta {
                Ty::Void => "true".into(),
                Ty::Float => format!("simpl_same_d({ea}, {eb})"),
                _ => format!("({ea} == {eb})"),
            }
        })
    }

    fn bin(&self, op: BinOp, a: Operand, b: Operand) -> Result<(String, Ty)> {
        let (ea, ta) = self.op(a);
        let (eb, tb) = self.op(b);
        if !ta.is_numeric() || !tb.is_numeric() {
            return Err(unsupported(format!("C emission: `{}` on {ta} and {tb}", op.name())));
        }
        let cmp = |sym: &str, x: &str, y: &str| (format!("({x} {sym} {y})"), Ty::Bool);
        if ta == Ty::Int && tb == Ty::Int {
            return Ok(match op {
                BinOp::Add => (format!("simpl_add_i({ea}, {eb})"), Ty::Int),
                BinOp::Sub => (format!("simpl_sub_i({ea}, {eb})"), Ty::Int),
                BinOp::Mul => (format!("simpl_mul_i({ea}, {eb})"), Ty::Int),
                BinOp::Div => (format!("((double){ea} / (double){eb})"), Ty::Float),
                BinOp::Min => (format!("simpl_min_i({ea}, {eb})"), Ty::Int),
                BinOp::Max => (format!("simpl_max_i({ea}, {eb})"), Ty::Int),
                BinOp::Lt => cmp("<", &ea, &eb),
                BinOp::Le => cmp("<=", &ea, &eb),
                BinOp::Gt => cmp(">", &ea, &eb),
                BinOp::Ge => cmp(">=", &ea, &eb),
                BinOp::NumEq => cmp("==", &ea, &eb),
            });
        }
        let da = conv(&ea, ta, Ty::Float)?;
        let db = conv(&eb, tb, Ty::Float)?;
        Ok(match op {
            BinOp::Add if ta == Ty::Int => (format!("({ea} == 0 ? {db} : {da} + {db})"), Ty::Float),
            BinOp::Add if tb == Ty::Int => (format!("({eb} == 0 ? {da} : {da} + {db})"), Ty::Float),
            BinOp::Add => (format!("({da} + {db})"), Ty::Float),
            BinOp::Sub if tb == Ty::Int => (format!("({eb} == 0 ? {da} : {da} - {db})"), Ty::Float),
            BinOp::Sub => (format!("({da} - {db})"), Ty::Float),
            BinOp::Mul => (format!("({da} * {db})"), Ty::Float),
            BinOp::Div => (format!("({da} / {db})"), Ty::Float),
            BinOp::Min => (format!("simpl_min_d({da}, {db})"), Ty::Float),
            BinOp::Max => (format!("simpl_max_d({da}, {db})"), Ty::Float),
            BinOp::Lt => cmp("<", &da, &db),
            BinOp::Le => cmp("<=", &da, &db),
            BinOp::Gt => cmp(">", &da, &db),
            BinOp::Ge => cmp(">=", &da, &db),
            BinOp::NumEq => cmp("==", &da, &db),
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
            Stmt::Let { dst, ty, rhs } => {
                let (e, ety) = self.rhs(rhs)?;
                let e = conv(&e, ety, *ty)?;
                self.define(*dst, &e)?;
            }
            Stmt::Flip { dst, p } => {
                let p = self.op_as(*p, Ty::Float)?;
                self.define(*dst, &format!("simpl_flip(rng, {p})"))?;
                self.line("simpl_effects[0]++;");
            }
            Stmt::RandomInt { dst, k } => {
                let k = self.op_as(*k, Ty::Int)?;
                self.define(*dst, &format!("simpl_below(rng, {k})"))?;
                self.line("simpl_effects[1]++;");
            }
            Stmt::ReadNode { dst, node, index } => {
                let r = self.node_ref(*node, *index)?;
                self.define(*dst, &r)?;
            }
            Stmt::ReadEvidence { dst, node, index } => {
                let r = self.node_ref(*node, Some(*index))?;
                self.define(*dst, &r)?;
            }
            Stmt::WriteNode { node, index, value } => {
                if self.rp.plan.is_const(*node) {
                    return Err(unsupported(format!(
                        "C emission: write to evidence node `{}`",
                        self.node_name(*node)
                    )));
                }
                let r = self.node_ref(*node, *index)?;
                let v = self.op_as(*value, Ty::Bool)?;
                self.line(&format!("{r} = {v};"));
                self.line("simpl_effects[2]++;");
            }
            Stmt::DeclCell { cell, init } | Stmt::StoreCell { cell, value: init } => {
                let v = self.op_as(*init, self.rp.cell_types[*cell as usize])?;
                self.line(&format!("c{cell} = {v};"));
            }
            Stmt::LoadCell { dst, cell } => self.define(*dst, &format!("c{cell}"))?,
            Stmt::NewVector { dst, items } => {
                self.define(*dst, &format!("simpl_vec_new({})", items.len()))?;
                for (i, it) in items.iter().enumerate() {
                    let v = self.op_as(*it, Ty::Float)?;
                    self.line(&format!("t{dst}->v[{i}] = {v};"));
                }
            }
            Stmt::NewVectorFill { dst, len, fill } => {
                let n = self.op_as(*len, Ty::Int)?;
                let f = self.op_as(*fill, Ty::Float)?;
                self.define(*dst, &format!("simpl_vec_fill({n}, {f})"))?;
            }
            Stmt::VectorRef { dst, vec, index } => {
                let (v, _) = self.op(*vec);
                let i = self.op_as(*index, Ty::Int)?;
                let elem = self.tys[*dst as usize];
                let e = conv(&format!("simpl_vec_ref({v}, {i})"), Ty::Float, elem)?;
                self.define(*dst, &e)?;
            }
            Stmt::VectorSet { vec, index, value } => {
                let (v, _) = self.op(*vec);
                let i = self.op_as(*index, Ty::Int)?;
                let x = self.op_as(*value, Ty::Float)?;
                self.line(&format!("simpl_vec_set({v}, {i}, {x});"));
            }
            Stmt::VectorLength { dst, vec } => {
                let (v, _) = self.op(*vec);
                self.define(*dst, &format!("{v}->len"))?;
            }
            Stmt::Normalize { dst, vec } => {
                let (v, _) = self.op(*vec);
                self.define(*dst, &format!("simpl_normalize({v})"))?;
            }
            Stmt::ListLit { .. } => {
                return Err(unsupported("C emission: list construction has no C equivalent"));
            }
            Stmt::Print { args } => {
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        self.line("fputc(' ', stderr);");
                    }
                    let (e, ty) = self.op(*a);
                    let call = match ty {
                        Ty::Bool => format!("fputs({e} ? \"#t\" : \"#f\", stderr);"),
                        Ty::Int => format!("fprintf(stderr, \"%\" PRId64, {e});"),
                        Ty::Float | Ty::Num => format!("fprintf(stderr, \"%.17g\", {e});"),
                        Ty::Void => "fputs(\"#<void>\", stderr);".into(),
                        Ty::Vector => "fputs(\"#<vector>\", stderr);".into(),
                        _ => return Err(unsupported(format!("C emission: print of {ty}"))),
                    };
                    self.line(&call);
                }
                self.line("fputc('\\n', stderr);");
                self.line("simpl_effects[3]++;");
            }
            Stmt::Abort { msg } => {
                self.line(&format!("simpl_fail(SIMPL_EXIT_RUNTIME, {});", c_string(msg)));
            }
            Stmt::For { var, count, body } => {
                let n = self.op_as(*count, Ty::Int)?;
                self.line(&format!("for (int64_t t{var} = 0; t{var} < {n}; t{var}++) {{"));
                self.depth += 1;
                self.block(body)?;
                self.depth -= 1;
                self.line("}");
            }
            Stmt::If { cond, then_b, else_b } => {
                let (c, ty) = self.op(*cond);
                let c = match ty {
                    Ty::Bool => c,
                    Ty::Any => return Err(unsupported("C emission: condition of unknown type")),
                    _ => "true".into(),
                };
                self.line(&format!("if ({c}) {{"));
                self.depth += 1;
                self.block(then_b)?;
                self.depth -= 1;
                if else_b.is_empty() {
                    self.line("}");
                } else {
                    self.line("} else {");
                    self.depth += 1;
                    self.block(else_b)?;
                    self.depth -= 1;
                    self.line("}");
                }
            }
            Stmt::Cache { dst, cache } => self.cache(*dst, &self.rp.caches[*cache as usize])?,
        }
        Ok(())
    }

    fn key_scalar(&self, k: &CacheKey) -> Result<(String, Ty)> {
        Ok(match k {
            CacheKey::Node(n) => (self.node_ref(*n, None)?, Ty::Bool),
            CacheKey::Element(n, i) => (self.node_ref(*n, Some(*i))?, Ty::Bool),
            CacheKey::Cell(c) => (format!("c{c}"), self.rp.cell_types[*c as usize]),
            CacheKey::Temp(t) => self.op(Operand::Temp(*t)),
            CacheKey::Array(_) => unreachable!(),
        })
    }

    fn array_len(&self, n: NodeId) -> usize {
        match &self.rp.plan.reprs[n] {
            Repr::BoolArray(k) => *k,
            Repr::ConstArray(v) => v.len(),
            _ => 1,
        }
    }

    fn key_width(&self, spec: &CacheSpec) -> Result<usize> {
        let mut w = 0;
        for k in &spec.keys {
            w += match k {
                CacheKey::Array(n) => self.array_len(*n).div_ceil(64),
                other => {
                    let (_, ty) = self.key_scalar(other)?;
                    if matches!(ty, Ty::Vector | Ty::List | Ty::Any) {
                        return Err(unsupported(format!("C emission: cache key of type {ty}")));
                    }
                    1
                }
            };
        }
        Ok(w.max(1))
    }

    fn cache(&mut self, dst: TempId, spec: &CacheSpec) -> Result<()> {
        let id = spec.id;
        let ty = self.tys[dst as usize];
        let ct = c_type(ty)?;
        self.line(&format!("{ct} t{dst};"));
        self.line("{");
        self.depth += 1;
        let slot = if spec.is_dense() {
            self.line("size_t ki = 0;");
            for k in &spec.keys {
                match k {
                    CacheKey::Array(n) => {
                        let len = self.array_len(*n);
                        self.line(&format!("for (int64_t j = 0; j < {len}; j++) ki = (ki << 1) | (size_t)n{n}[j];"));
                    }
                    other => {
                        let (e, kty) = self.key_scalar(other)?;
                        let e = conv(&e, kty, Ty::Bool)?;
                        self.line(&format!("ki = (ki << 1) | (size_t)({e});"));
                    }
                }
            }
            self.line(&format!("double *slot = &k{id}_val[ki];"));
            self.line(&format!("bool found = k{id}_occ[ki] != 0;"));
            self.line(&format!("k{id}_occ[ki] = 1;"));
            "slot"
        } else {
            let width = self.key_width(spec)?;
            self.line(&format!("uint64_t key[{width}] = {{0}};"));
            let mut w = 0;
            for k in &spec.keys {
                match k {
                    CacheKey::Array(n) => {
                        let len = self.array_len(*n);
                        self.line(&format!(
                            "for (int64_t j = 0; j < {len}; j++) key[{w} + j / 64] = (key[{w} + j / 64] << 1) | (uint64_t)n{n}[j];"
                        ));
                        w += len.div_ceil(64);
                    }
                    other => {
                        let (e, kty) = self.key_scalar(other)?;
                        let bits = match kty {
                            Ty::Float | Ty::Num => format!("simpl_bits({e})"),
                            Ty::Void => "0".into(),
                            _ => format!("(uint64_t)({e})"),
                        };
                        self.line(&format!("key[{w}] = {bits};"));
                        w += 1;
                    }
                }
            }
            self.line("bool found;");
            self.line(&format!("double *slot = simpl_htab_lookup(&k{id}_tab, key, &found);"));
            "slot"
        };
        let load = conv(&format!("*{slot}"), Ty::Float, ty)?;
        self.line("if (found) {");
        self.depth += 1;
        self.line(&format!("simpl_stats[{id}].hits++;"));
        self.line(&format!("t{dst} = {load};"));
        if self.opts.debug_cache {
            self.line("{");
            self.depth += 1;
            self.block(&spec.body)?;
            let fresh = self.op_as(spec.result, Ty::Float)?;
            self.line(&format!("simpl_check_cached({id}, *{slot}, {fresh});"));
            self.depth -= 1;
            self.line("}");
        }
        self.depth -= 1;
        self.line("} else {");
        self.depth += 1;
        self.line(&format!("simpl_stats[{id}].misses++;"));
        self.line(&format!("simpl_stats[{id}].entries++;"));
        self.block(&spec.body)?;
        let r = self.op_as(spec.result, ty)?;
        self.line(&format!("t{dst} = {r};"));
        self.line(&format!("*{slot} = {};", conv(&format!("t{dst}"), ty, Ty::Float)?));
        self.depth -= 1;
        self.line("}");
        self.depth -= 1;
        self.line("}");
        Ok(())
    }

    fn globals(&mut self) -> Result<()> {
        let rp = self.rp;
        let mut nodes = HashSet::new();
        collect_nodes(&rp.body, &mut nodes);
        for c in &rp.caches {
            collect_nodes(&c.body, &mut nodes);
            for k in &c.keys {
                match k {
                    CacheKey::Node(n) | CacheKey::Element(n, _) | CacheKey::Array(n) => {
                        nodes.insert(*n);
                    }
                    _ => {}
                }
            }
        }
        let mut nodes: Vec<NodeId> = nodes.into_iter().collect();
        nodes.sort_unstable();
        for n in nodes {
            let name = &rp.node_names[n];
            let decl = match &rp.plan.reprs[n] {
                Repr::BoolVar => format!("static bool n{n};"),
                Repr::BoolArray(k) => format!("static bool n{n}[{k}];"),
                Repr::Const(b) => format!("static const bool n{n} = {b};"),
                Repr::ConstArray(v) => {
                    let items: Vec<&str> = v.iter().map(|&b| if b { "1" } else { "0" }).collect();
                    format!("static const bool n{n}[{}] = {{{}}};", v.len(), items.join(", "))
                }
            };
            self.line(&format!("/* {name} */"));
            self.line(&decl);
        }
        self.line("static uint64_t simpl_effects[4];");
        if !rp.caches.is_empty() {
            self.line(&format!("static simpl_cache_stats simpl_stats[{}];", rp.caches.len()));
        }
        for c in &rp.caches {
            match c.bool_bits {
                Some(bits) if c.is_dense() => {
                    self.line(&format!("static double k{}_val[{}];", c.id, 1usize << bits));
                    self.line(&format!("static unsigned char k{}_occ[{}];", c.id, 1usize << bits));
                }
                _ => {
                    let w = self.key_width(c)?;
                    self.line(&format!("static simpl_htab k{}_tab = {{{w}, 0, 0, NULL, NULL, NULL}};", c.id));
                }
            }
        }
        Ok(())
    }

    fn run_fn(&mut self) -> Result<()> {
        let rp = self.rp;
        let ret = c_type(rp.result_ty)?;
        if matches!(rp.result_ty, Ty::Vector) {
            let elem = rp.result.temp().and_then(|t| rp.vector_types.get(&t).copied());
            if matches!(elem, Some(Ty::Void | Ty::Vector | Ty::List | Ty::Any)) {
                return Err(unsupported("C emission: result vector holds non-numeric elements"));
            }
        }
        let sep = if ret.ends_with('*') { "" } else { " " };
        self.line(&format!("static {ret}{sep}{ENTRY_SYMBOL}(int64_t N, int64_t burn, simpl_rng *rng)"));
        self.line("{");
        self.depth += 1;
        let param_temps: Vec<(String, TempId)> = rp.params.iter().map(|p| (p.name.clone(), p.temp)).collect();
        for (name, t) in &param_temps {
            self.line(&format!("int64_t t{t} = {name};"));
            if !self.used.contains(t) {
                self.line(&format!("(void)t{t};"));
            }
        }
        if !param_temps.iter().any(|(n, _)| n == "N") {
            self.line("(void)N;");
        }
        if !param_temps.iter().any(|(n, _)| n == "burn") {
            self.line("(void)burn;");
        }
        self.line("(void)rng;");
        for (i, ty) in rp.cell_types.iter().enumerate() {
            let ct = c_type(*ty)?;
            let sep = if ct.ends_with('*') { "" } else { " " };
            let init = if *ty == Ty::Vector { "NULL" } else { "0" };
            self.line(&format!("{ct}{sep}c{i} = {init};"));
            self.line(&format!("(void)c{i};"));
        }
        self.block(&rp.body)?;
        let (r, _) = self.op(rp.result);
        self.line(&format!("return {r};"));
        self.depth -= 1;
        self.line("}");
        Ok(())
    }

    fn main_fn(&mut self) -> Result<()> {
        let rp = self.rp;
        let ret = c_type(rp.result_ty)?;
        let sep = if ret.ends_with('*') { "" } else { " " };
        let body = format!(
            r#"int main(int argc, char **argv)
{{
    simpl_rng rng;
    uint64_t t0, t1;
    int64_t n, burn = 0;
    if (argc < 3 || argc > 4) {{
        fprintf(stderr, "usage: %s <seed> <N> [burn]\n", argv[0]);
        return 2;
    }}
    rng.state = strtoull(argv[1], NULL, 10);
    rng.draws = 0;
    n = strtoll(argv[2], NULL, 10);
    if (argc == 4)
        burn = strtoll(argv[3], NULL, 10);
    t0 = simpl_now_ns();
    {ret}{sep}result = {ENTRY_SYMBOL}(n, burn, &rng);
    t1 = simpl_now_ns();
    printf("{{\"estimate\":[");
"#
        );
        self.out.push_str(&body);
        self.depth = 1;
        match rp.result_ty {
            Ty::Vector => {
                self.line("for (int64_t i = 0; i < result->len; i++) {");
                self.line("    if (i > 0)");
                self.line("        putchar(',');");
                self.line("    simpl_print_double(result->v[i]);");
                self.line("}");
            }
            Ty::Void => self.line("(void)result;"),
            ty => self.line(&format!("simpl_print_double({});", conv("result", ty, Ty::Float)?)),
        }
        self.line("printf(\"],\\\"flips\\\":%\" PRIu64 \",\\\"random_ints\\\":%\" PRIu64, simpl_effects[0], simpl_effects[1]);");
        self.line("printf(\",\\\"node_writes\\\":%\" PRIu64 \",\\\"prints\\\":%\" PRIu64, simpl_effects[2], simpl_effects[3]);");
        self.line("printf(\",\\\"draws\\\":%\" PRIu64 \",\\\"rng_state\\\":%\" PRIu64, rng.draws, rng.state);");
        self.line("printf(\",\\\"elapsed_ns\\\":%\" PRIu64 \",\\\"cache\\\":[\", t1 - t0);");
        for (i, c) in rp.caches.iter().enumerate() {
            let comma = if i > 0 { "," } else { "" };
            self.line(&format!(
                "printf(\"{comma}{{\\\"id\\\":{},\\\"hits\\\":%\" PRIu64 \",\\\"misses\\\":%\" PRIu64 \",\\\"entries\\\":%\" PRIu64 \",\\\"dense\\\":{}}}\", simpl_stats[{i}].hits, simpl_stats[{i}].misses, simpl_stats[{i}].entries);",
                c.id,
                c.is_dense()
            ));
        }
        self.line("printf(\"]}\\n\");");
        self.line("return 0;");
        self.depth = 0;
        self.line("}");
        Ok(())
    }
}

/// Emits a C translation unit for a residual program.
pub fn emit_c(rp: &ResidualProgram, name: &str, opts: EmitOptions) -> Result<EmittedUnit> {
    let mut em = Emitter::new(rp, opts);
    em.line("#define _POSIX_C_SOURCE 199309L");
    em.line(&format!("#include \"{RUNTIME_HEADER_NAME}\""));
    em.line("");
    em.line(&format!("#if SIMPL_RT_VERSION != {RUNTIME_VERSION}"));
    em.line("#error \"runtime header version mismatch\"");
    em.line("#endif");
    em.line("");
    em.globals()?;
    em.line("");
    em.run_fn()?;
    em.line("");
    em.main_fn()?;
    let mut compiler = vec!["cc".to_string()];
    compiler.extend(CFLAGS.iter().map(|s| s.to_string()));
    compiler.extend(["-o".into(), name.into(), format!("{name}.c"), "-lm".into()]);
    Ok(EmittedUnit {
        name: name.to_string(),
        source: em.out,
        manifest: Manifest {
            name: name.to_string(),
            entry: ENTRY_SYMBOL.into(),
            header: RUNTIME_HEADER_NAME.into(),
            header_version: RUNTIME_VERSION,
            compiler,
            params: ["seed", "N", "burn"].map(String::from).to_vec(),
            outputs: ["estimate", "flips", "random_ints", "node_writes", "prints", "draws", "rng_state", "elapsed_ns", "cache"]
                .map(String::from)
                .to_vec(),
            caches: rp.caches.len(),
            debug_cache: opts.debug_cache,
        },
    })
}

/// A C compiler found on this machine.
#[derive(Debug, Clone)]
pub struct Toolchain {
    pub cc: String,
}

impl Toolchain {
    /// Uses `$CC` when set, else `cc`; `None` when it cannot be run.
    pub fn detect() -> Option<Toolchain> {
        let cc = std::env::var("CC").ok().filter(|s| !s.is_empty()).unwrap_or_else(|| "cc".into());
        let ok = Command::new(&cc)
            .arg("--version")
            .output()
            .map(|o| o.status.success())
            .unwrap_or(false);
        ok.then_some(Toolchain { cc })
    }

    pub fn require() -> Result<Toolchain> {
        Self::detect().ok_or_else(|| Error::Toolchain("no C compiler found (set CC or install cc)".into()))
    }

    /// Writes and compiles `unit` in `dir`. Any compiler diagnostic is an error.
    pub fn compile(&self, unit: &EmittedUnit, dir: &Path) -> Result<PathBuf> {
        let src = unit.write_to(dir)?;
        let exe = dir.join(&unit.name);
        let out = Command::new(&self.cc)
            .args(CFLAGS)
            .arg("-o")
            .arg(&exe)
            .arg(&src)
            .arg("-lm")
            .output()
            .map_err(|e| Error::Toolchain(format!("cannot run `{}`: {e}", self.cc)))?;
        let diag = String::from_utf8_lossy(&out.stderr);
        if !out.status.success() {
            return Err(Error::Toolchain(format!("compilation of {} failed:\n{diag}", src.display())));
        }
        if !diag.trim().is_empty() {
            return Err(Error::Toolchain(format!("compiler warnings for {}:\n{diag}", src.display())));
        }
        Ok(exe)
    }
}

#[derive(Debug, Deserialize)]
struct Report {
    estimate: Vec<Option<f64>>,
    flips: u64,
    random_ints: u64,
    node_writes: u64,
    prints: u64,
    draws: u64,
    rng_state: u64,
    elapsed_ns: u64,
    cache: Vec<CacheStats>,
}

/// Result of one run of a compiled sampler.
#[derive(Debug, Clone)]
pub struct CRun {
    pub outcome: Outcome,
    pub elapsed_ns: u64,
}

/// Runs a compiled sampler and parses its report.
pub fn run_compiled(exe: &Path, params: RunParams) -> Result<CRun> {
    let out = Command::new(exe)
        .arg(params.seed.to_string())
        .arg(params.n.to_string())
        .arg(params.burn.to_string())
        .output()
        .map_err(|e| Error::Toolchain(format!("cannot run {}: {e}", exe.display())))?;
    let stderr = String::from_utf8_lossy(&out.stderr).to_string();
    match out.status.code() {
        Some(0) => {}
        Some(4) => {
            let msg = stderr.lines().last().unwrap_or("").trim_start_matches("error: ");
            return Err(Error::Runtime(msg.to_string()));
        }
        Some(13) => {
            return Err(Error::CacheMismatch {
                cache: 0,
                key: "(compiled)".into(),
                stored: String::new(),
                recomputed: stderr.trim().to_string(),
            })
        }
        code => {
            return Err(Error::Toolchain(format!(
                "{} exited with {code:?}: {stderr}",
                exe.display()
            )))
        }
    }
    let report: Report = serde_json::from_slice(&out.stdout)
        .map_err(|e| Error::Toolchain(format!("unreadable report from {}: {e}", exe.display())))?;
    let output = if report.prints > 0 {
        stderr.lines().map(str::to_string).collect()
    } else {
        Vec::new()
    };
    let estimate: Vec<f64> = report.estimate.into_iter().map(|x| x.unwrap_or(f64::NAN)).collect();
    let display = format!(
        "#({})",
        estimate.iter().map(|x| crate::sexpr::format_float(*x)).collect::<Vec<_>>().join(" ")
    );
    Ok(CRun {
        outcome: Outcome {
            estimate,
            display,
            effects: Effects {
                flips: report.flips,
                random_ints: report.random_ints,
                node_writes: report.node_writes,
                prints: report.prints,
            },
            output,
            rng: Rng {
                state: report.rng_state,
                draws: report.draws,
            },
            caches: report.cache,
        },
        elapsed_ns: report.elapsed_ns,
    })
}

/// Emits, compiles in a scratch directory and runs once.
pub fn compile_and_run(rp: &ResidualProgram, params: RunParams, opts: EmitOptions) -> Result<CRun> {
    let tc = Toolchain::require()?;
    let unit = emit_c(rp, "sampler", opts)?;
    let dir = tempfile::tempdir()?;
    let exe = tc.compile(&unit, dir.path())?;
    run_compiled(&exe, params)
}
