use std::collections::{HashMap, HashSet};

use super::*;

#[derive(Default)]
struct Live {
    temps: HashSet<TempId>,
    cells: HashSet<CellId>,
}

fn mark_block(block: &Block, live: &mut Live) {
    for s in block {
        for o in s.uses() {
            if let Operand::Temp(t) = o {
                live.temps.insert(t);
            }
        }
        if let Stmt::LoadCell { cell, .. } = s {
            live.cells.insert(*cell);
        }
        for b in s.blocks() {
            mark_block(b, live);
        }
    }
}

fn mark_cache(spec: &CacheSpec, live: &mut Live) {
    mark_block(&spec.body, live);
    if let Operand::Temp(t) = spec.result {
        live.temps.insert(t);
    }
    for k in &spec.keys {
        match k {
            CacheKey::Temp(t) | CacheKey::Element(_, Operand::Temp(t)) => {
                live.temps.insert(*t);
            }
            CacheKey::Cell(c) => {
                live.cells.insert(*c);
            }
            _ => {}
        }
    }
}

fn removable(s: &Stmt, live: &Live) -> bool {
    let dead = |d: &TempId| !live.temps.contains(d);
    match s {
        Stmt::Let { dst, .. }
        | Stmt::LoadCell { dst, .. }
        | Stmt::NewVector { dst, .. }
        | Stmt::ListLit { dst, .. }
        | Stmt::VectorLength { dst, .. } => dead(dst),
        Stmt::ReadNode { dst, index, .. } => dead(dst) && !matches!(index, Some(Operand::Temp(_))),
        Stmt::ReadEvidence { dst, index, .. } => dead(dst) && matches!(index, Operand::Lit(_)),
        Stmt::DeclCell { cell, .. } | Stmt::StoreCell { cell, .. } => !live.cells.contains(cell),
        Stmt::If { then_b, else_b, .. } => then_b.is_empty() && else_b.is_empty(),
        Stmt::For { body, .. } => body.is_empty(),
        _ => false,
    }
}

fn prune(block: &mut Block, live: &Live) -> bool {
    let mut changed = false;
    for s in block.iter_mut() {
        match s {
            Stmt::For { body, .. } => changed |= prune(body, live),
            Stmt::If { then_b, else_b, .. } => {
                changed |= prune(then_b, live);
                changed |= prune(else_b, live);
            }
            _ => {}
        }
    }
    let before = block.len();
    block.retain(|s| !removable(s, live));
    changed || block.len() != before
}

/// Removes pure statements whose results are never used, cells that are
/// never read, and control flow left empty by those removals.
pub fn eliminate_dead_code(rp: &mut ResidualProgram) {
    loop {
        let mut live = Live::default();
        mark_block(&rp.body, &mut live);
        for spec in &rp.caches {
            mark_cache(spec, &mut live);
        }
        if let Operand::Temp(t) = rp.result {
            live.temps.insert(t);
        }
        let mut changed = prune(&mut rp.body, &live);
        for spec in &mut rp.caches {
            changed |= prune(&mut spec.body, &live);
        }
        if !changed {
            break;
        }
    }
    renumber_cells(rp);
    renumber_temps(rp);
}

fn cell_of(s: &mut Stmt) -> Option<&mut CellId> {
    match s {
        Stmt::DeclCell { cell, .. } | Stmt::LoadCell { cell, .. } | Stmt::StoreCell { cell, .. } => Some(cell),
        _ => None,
    }
}

fn order_cells(block: &Block, caches: &[CacheSpec], map: &mut HashMap<CellId, CellId>) {
    let see = |c: CellId, map: &mut HashMap<CellId, CellId>| {
        let next = map.len() as CellId;
        map.entry(c).or_insert(next);
    };
    for s in block {
        match s {
            Stmt::DeclCell { cell, .. } | Stmt::LoadCell { cell, .. } | Stmt::StoreCell { cell, .. } => {
                see(*cell, map)
            }
            Stmt::Cache { cache, .. } => {
                let spec = &caches[*cache as usize];
                for k in &spec.keys {
                    if let CacheKey::Cell(c) = k {
                        see(*c, map);
                    }
                }
                order_cells(&spec.body, caches, map);
            }
            _ => {}
        }
        for b in s.blocks() {
            order_cells(b, caches, map);
        }
    }
}

fn rename_block(block: &mut Block, map: &HashMap<CellId, CellId>) {
    for s in block.iter_mut() {
        if let Some(c) = cell_of(s) {
            *c = map[c];
        }
        match s {
            Stmt::For { body, .. } => rename_block(body, map),
            Stmt::If { then_b, else_b, .. } => {
                rename_block(then_b, map);
                rename_block(else_b, map);
            }
            _ => {}
        }
    }
}

/// Numbers the surviving cells densely in order of first appearance, so
/// that equal programs get equal cell names.
fn renumber_cells(rp: &mut ResidualProgram) {
    let mut map = HashMap::new();
    order_cells(&rp.body, &rp.caches, &mut map);
    for spec in &rp.caches {
        order_cells(&spec.body, &rp.caches, &mut map);
    }
    rename_block(&mut rp.body, &map);
    for spec in &mut rp.caches {
        rename_block(&mut spec.body, &map);
        for k in &mut spec.keys {
            if let CacheKey::Cell(c) = k {
                *c = map[c];
            }
        }
    }
    let mut tys = vec![Ty::Void; map.len()];
    for (&old, &new) in &map {
        tys[new as usize] = rp.cell_types[old as usize];
    }
    rp.cell_types = tys;
}

/// Dead-code elimination for a detached block whose only outside uses
/// are `roots`.
pub(crate) fn prune_block(block: &mut Block, roots: &[Operand]) {
    fn cells(block: &Block, declared: &mut HashSet<CellId>, touched: &mut HashSet<CellId>) {
        for s in block {
            match s {
                Stmt::DeclCell { cell, .. } => {
                    declared.insert(*cell);
                }
                Stmt::StoreCell { cell, .. } | Stmt::LoadCell { cell, .. } => {
                    touched.insert(*cell);
                }
                _ => {}
            }
            for b in s.blocks() {
                cells(b, declared, touched);
            }
        }
    }
    let (mut declared, mut touched) = (HashSet::new(), HashSet::new());
    cells(block, &mut declared, &mut touched);
    let outer: Vec<CellId> = touched.difference(&declared).copied().collect();
    loop {
        let mut live = Live::default();
        live.cells.extend(outer.iter().copied());
        mark_block(block, &mut live);
        for r in roots {
            if let Operand::Temp(t) = r {
                live.temps.insert(*t);
            }
        }
        if !prune(block, &live) {
            break;
        }
    }
}

fn order_temps(block: &Block, caches: &[CacheSpec], map: &mut HashMap<TempId, TempId>) {
    let see = |t: TempId, map: &mut HashMap<TempId, TempId>| {
        let next = map.len() as TempId;
        map.entry(t).or_insert(next);
    };
    for s in block {
        match s {
            Stmt::For { var, .. } => see(*var, map),
            Stmt::Cache { cache, .. } => order_temps(&caches[*cache as usize].body, caches, map),
            _ => {}
        }
        for b in s.blocks() {
            order_temps(b, caches, map);
        }
        if let Some(d) = s.def() {
            see(d, map);
        }
    }
}

fn rename_operand(o: &mut Operand, map: &HashMap<TempId, TempId>) {
    if let Operand::Temp(t) = o {
        *t = map[t];
    }
}

fn rename_temps(block: &mut Block, map: &HashMap<TempId, TempId>) {
    let r = |o: &mut Operand| rename_operand(o, map);
    let d = |t: &mut TempId| *t = map[t];
    for s in block.iter_mut() {
        match s {
            Stmt::Let { dst, rhs, .. } => {
                d(dst);
                match rhs {
                    Rhs::Bin(_, a, b) | Rhs::Same(a, b) => {
                        r(a);
                        r(b);
                    }
                    Rhs::Neg(a) | Rhs::Not(a) | Rhs::IsZero(a) => r(a),
                }
            }
            Stmt::Flip { dst, p: x } | Stmt::RandomInt { dst, k: x } => {
                d(dst);
                r(x);
            }
            Stmt::ReadNode { dst, index, .. } => {
                d(dst);
                if let Some(i) = index {
                    r(i);
                }
            }
            Stmt::ReadEvidence { dst, index, .. } => {
                d(dst);
                r(index);
            }
            Stmt::WriteNode { index, value, .. } => {
                if let Some(i) = index {
                    r(i);
                }
                r(value);
            }
            Stmt::DeclCell { init: x, .. } | Stmt::StoreCell { value: x, .. } => r(x),
            Stmt::LoadCell { dst, .. } | Stmt::Cache { dst, .. } => d(dst),
            Stmt::NewVector { dst, items } | Stmt::ListLit { dst, items } => {
                d(dst);
                items.iter_mut().for_each(r);
            }
            Stmt::NewVectorFill { dst, len, fill } => {
                d(dst);
                r(len);
                r(fill);
            }
            Stmt::VectorRef { dst, vec, index } => {
                d(dst);
                r(vec);
                r(index);
            }
            Stmt::VectorSet { vec, index, value } => {
                r(vec);
                r(index);
                r(value);
            }
            Stmt::VectorLength { dst, vec } | Stmt::Normalize { dst, vec } => {
                d(dst);
                r(vec);
            }
            Stmt::Print { args } => args.iter_mut().for_each(r),
            Stmt::Abort { .. } => {}
            Stmt::For { var, count, body } => {
                d(var);
                r(count);
                rename_temps(body, map);
            }
            Stmt::If { cond, then_b, else_b } => {
                r(cond);
                rename_temps(then_b, map);
                rename_temps(else_b, map);
            }
        }
    }
}

/// Numbers temps densely in definition order, parameters first.
fn renumber_temps(rp: &mut ResidualProgram) {
    let mut map = HashMap::new();
    for p in &rp.params {
        let next = map.len() as TempId;
        map.insert(p.temp, next);
    }
    order_temps(&rp.body, &rp.caches, &mut map);
    for spec in &rp.caches {
        order_temps(&spec.body, &rp.caches, &mut map);
    }
    for p in &mut rp.params {
        p.temp = map[&p.temp];
    }
    rename_temps(&mut rp.body, &map);
    for spec in &mut rp.caches {
        rename_temps(&mut spec.body, &map);
        rename_operand(&mut spec.result, &map);
        for k in &mut spec.keys {
            match k {
                CacheKey::Temp(t) => *t = map[t],
                CacheKey::Element(_, o) => rename_operand(o, &map),
                _ => {}
            }
        }
    }
    rename_operand(&mut rp.result, &map);
    rp.vector_types = std::mem::take(&mut rp.vector_types)
        .into_iter()
        .filter_map(|(t, ty)| map.get(&t).map(|&n| (n, ty)))
        .collect();
    rp.temp_count = map.len() as u32;
}
