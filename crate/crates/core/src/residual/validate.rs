use std::collections::HashSet;

use super::*;

struct Checker<'a> {
    rp: &'a ResidualProgram,
    defined: HashSet<TempId>,
    visible: Vec<TempId>,
    cells: Vec<CellId>,
    errors: Vec<String>,
}

impl Checker<'_> {
    fn use_op(&mut self, o: Operand, what: &str) {
        if let Operand::Temp(t) = o {
            if !self.visible.contains(&t) {
                self.errors
                    .push(format!("{what}: temp t{t} used outside the scope of its definition"));
            }
        }
    }

    fn define(&mut self, t: TempId) {
        if !self.defined.insert(t) {
            self.errors.push(format!("temp t{t} is assigned more than once"));
        }
        self.visible.push(t);
    }

    fn scoped(&mut self, block: &Block) {
        let (v, c) = (self.visible.len(), self.cells.len());
        self.block(block);
        self.visible.truncate(v);
        self.cells.truncate(c);
    }

    fn block(&mut self, block: &Block) {
        for s in block {
            for o in s.uses() {
                self.use_op(o, "statement");
            }
            match s {
                Stmt::LoadCell { cell, .. } | Stmt::StoreCell { cell, .. } if !self.cells.contains(cell) => {
                    self.errors
                        .push(format!("cell c{cell} used outside the scope of its declaration"));
                }
                Stmt::DeclCell { cell, .. } => {
                    if self.cells.contains(cell) {
                        self.errors.push(format!("cell c{cell} declared twice"));
                    }
                    self.cells.push(*cell);
                }
                _ => {}
            }
            match s {
                Stmt::For { var, body, .. } => {
                    let v = self.visible.len();
                    self.define(*var);
                    self.scoped(body);
                    self.visible.truncate(v);
                }
                Stmt::If { then_b, else_b, .. } => {
                    self.scoped(then_b);
                    self.scoped(else_b);
                }
                Stmt::Cache { dst, cache } => {
                    match self.rp.caches.get(*cache as usize) {
                        Some(spec) => {
                            for k in &spec.keys {
                                match k {
                                    CacheKey::Temp(t) | CacheKey::Element(_, Operand::Temp(t)) => {
                                        if !self.visible.contains(t) {
                                            self.errors
                                                .push(format!("cache k{cache} keyed on invisible temp t{t}"));
                                        }
                                    }
                                    CacheKey::Cell(c) if !self.cells.contains(c) => {
                                        self.errors
                                            .push(format!("cache k{cache} keyed on undeclared cell c{c}"));
                                    }
                                    _ => {}
                                }
                            }
                            let (v, c) = (self.visible.len(), self.cells.len());
                            self.block(&spec.body);
                            self.use_op(spec.result, "cache result");
                            self.visible.truncate(v);
                            self.cells.truncate(c);
                        }
                        None => self.errors.push(format!("reference to unknown cache k{cache}")),
                    }
                    self.define(*dst);
                }
                other => {
                    if let Some(d) = other.def() {
                        self.define(d);
                    }
                }
            }
        }
    }
}

/// Checks the single-assignment and scoping discipline of a residual
/// program. Returns every violation found.
pub fn validate(rp: &ResidualProgram) -> Result<(), Vec<String>> {
    let mut ck = Checker {
        rp,
        defined: HashSet::new(),
        visible: Vec::new(),
        cells: Vec::new(),
        errors: Vec::new(),
    };
    for p in &rp.params {
        ck.define(p.temp);
    }
    ck.block(&rp.body);
    ck.use_op(rp.result, "result");
    if ck.errors.is_empty() {
        Ok(())
    } else {
        Err(ck.errors)
    }
}
