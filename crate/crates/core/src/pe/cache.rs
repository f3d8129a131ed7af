//! `cache`: the body is specialized into a detached block, its run-time
//! dependencies are discovered by scanning that block, and the body is
//! replaced by a table lookup keyed on those dependencies.

use std::collections::HashSet;

use super::{Frame, Pe, Stop, R};
use crate::dsl::Expr;
use crate::error::{Error, Span};
use crate::residual::{prune_block, Block, CacheKey, CacheSpec, CellId, Operand, Stmt, TempId, Ty};
use crate::value::Value;

struct Scan<'p> {
    caches: &'p [CacheSpec],
    start: TempId,
    inner_cells: HashSet<CellId>,
    keys: Vec<CacheKey>,
    span: Span,
}

impl Scan<'_> {
    fn key(&mut self, k: CacheKey) {
        if !self.keys.contains(&k) {
            self.keys.push(k);
        }
    }

    fn free(&self, o: Operand) -> Option<TempId> {
        o.temp().filter(|&t| t < self.start)
    }

    fn effect(&self, what: &str) -> Error {
        Error::CacheEffect {
            span: self.span,
            what: what.into(),
        }
    }

    fn operand(&mut self, o: Operand) {
        if let Some(t) = self.free(o) {
            self.key(CacheKey::Temp(t));
        }
    }

    fn block(&mut self, b: &Block) -> Result<(), Error> {
        for s in b {
            match s {
                Stmt::Flip { .. } => return Err(self.effect("flip")),
                Stmt::RandomInt { .. } => return Err(self.effect("random-integer")),
                Stmt::WriteNode { .. } => return Err(self.effect("set-value!")),
                Stmt::Print { .. } => return Err(self.effect("print")),
                Stmt::Abort { .. } => return Err(self.effect("error")),
                Stmt::DeclCell { cell, init } => {
                    self.inner_cells.insert(*cell);
                    self.operand(*init);
                }
                Stmt::StoreCell { cell, value } => {
                    if !self.inner_cells.contains(cell) {
                        return Err(self.effect("assignment to a variable outside the cached expression"));
                    }
                    self.operand(*value);
                }
                Stmt::LoadCell { cell, .. } => {
                    if !self.inner_cells.contains(cell) {
                        self.key(CacheKey::Cell(*cell));
                    }
                }
                Stmt::ReadNode { node, index, .. } => match index {
                    None => self.key(CacheKey::Node(*node)),
                    Some(i) if i.temp().is_none() || self.free(*i).is_some() => {
                        self.key(CacheKey::Element(*node, *i))
                    }
                    Some(_) => self.key(CacheKey::Array(*node)),
                },
                Stmt::VectorSet { vec, index, value } => {
                    if self.free(*vec).is_some() {
                        return Err(self.effect("vector-set! on a vector outside the cached expression"));
                    }
                    self.operand(*index);
                    self.operand(*value);
                }
                Stmt::VectorRef { vec, .. } | Stmt::VectorLength { vec, .. } | Stmt::Normalize { vec, .. }
                    if self.free(*vec).is_some() =>
                {
                    return Err(Error::Unsupported(format!(
                        "{}: cached expression reads a run-time vector created outside it",
                        self.span
                    )));
                }
                Stmt::Cache { cache, .. } => {
                    let inner = &self.caches[*cache as usize];
                    for k in inner.keys.clone() {
                        match k {
                            CacheKey::Temp(t) => self.operand(Operand::Temp(t)),
                            CacheKey::Cell(c) if self.inner_cells.contains(&c) => {}
                            CacheKey::Element(n, i) if i.temp().is_some() && self.free(i).is_none() => {
                                self.key(CacheKey::Array(n))
                            }
                            other => self.key(other),
                        }
                    }
                }
                other => {
                    for o in other.uses() {
                        self.operand(o);
                    }
                }
            }
            for b in s.blocks() {
                self.block(b)?;
            }
        }
        Ok(())
    }
}

impl Pe<'_> {
    pub(super) fn pe_cache(&mut self, inner: &Expr, frame: &mut Frame, span: Span) -> R<Value> {
        let start = self.temp_tys.len() as TempId;
        self.blocks.push(Vec::new());
        let r = self.pe(inner, frame);
        let mut body = self.blocks.pop().unwrap();
        let v = match r {
            Ok(v) => v,
            Err(Stop::Abort) => return Err(Error::CacheEffect { span, what: "error".into() }.into()),
            Err(e) => return Err(e),
        };
        if !v.is_dyn() && !matches!(v, Value::Void | Value::Bool(_) | Value::Int(_) | Value::Float(_)) {
            if body.is_empty() {
                return Ok(v);
            }
            return Err(Error::Unsupported(format!(
                "{span}: cached expression yields a {} rather than a scalar",
                v.type_name()
            ))
            .into());
        }
        let (result, ty) = self.lower(&v, span)?;
        prune_block(&mut body, &[result]);
        let free_result = result.temp().map_or(true, |t| t < start);
        if body.is_empty() && free_result {
            return Ok(v);
        }
        if matches!(ty, Ty::Vector | Ty::List) {
            return Err(Error::Unsupported(format!("{span}: cached expression yields a {ty}")).into());
        }
        let mut scan = Scan {
            caches: &self.caches,
            start,
            inner_cells: HashSet::new(),
            keys: Vec::new(),
            span,
        };
        scan.block(&body)?;
        if let Some(t) = scan.free(result) {
            scan.key(CacheKey::Temp(t));
        }
        let keys = scan.keys;
        let mut bits = Some(0usize);
        for k in &keys {
            let w = match k {
                CacheKey::Node(_) | CacheKey::Element(..) => Some(1),
                CacheKey::Array(n) => Some(self.ctx.net.node(*n).width()),
                CacheKey::Cell(c) => {
                    self.cells.read[*c as usize] = true;
                    (self.cells.tys[*c as usize] == Ty::Bool).then_some(1)
                }
                CacheKey::Temp(t) => (self.temp_tys[*t as usize] == Ty::Bool).then_some(1),
            };
            bits = match (bits, w) {
                (Some(b), Some(w)) => Some(b + w),
                _ => None,
            };
        }
        let id = self.caches.len() as u32;
        self.caches.push(CacheSpec {
            id,
            keys,
            bool_bits: bits,
            body,
            result,
            ty,
            span,
        });
        let dst = self.temp(ty);
        self.emit(Stmt::Cache { dst, cache: id });
        Ok(Value::Dyn(Operand::Temp(dst), ty))
    }
}
