//! Primitive operations of the DSL and the scalar semantics shared by the
//! interpreter, the partial evaluator's constant folding, and the residual
//! executor. Keeping one definition of arithmetic here is what makes the
//! three execution routes agree bit for bit.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Prim {
    Add,
    Sub,
    Mul,
    Div,
    Lt,
    Le,
    Gt,
    Ge,
    NumEq,
    Min,
    Max,
    Not,
    IsZero,
    Eq,
    Flip,
    RandomInteger,
    Error,
    Print,
    Void,
    List,
    Cons,
    Car,
    Cdr,
    First,
    Second,
    IsNull,
    Member,
    Length,
    Foldl,
    Map,
    Vector,
    MakeVector,
    VectorRef,
    VectorSet,
    VectorLength,
    Normalize,
    Value,
    SetValue,
    Parents,
    Children,
    Cpt,
    IsEvidence,
    IsArray,
    ArrayLength,
    Nodes,
}

impl Prim {
    pub const ALL: &'static [Prim] = &[
        Prim::Add,
        Prim::Sub,
        Prim::Mul,
        Prim::Div,
        Prim::Lt,
        Prim::Le,
        Prim::Gt,
        Prim::Ge,
        Prim::NumEq,
        Prim::Min,
        Prim::Max,
        Prim::Not,
        Prim::IsZero,
        Prim::Eq,
        Prim::Flip,
        Prim::RandomInteger,
        Prim::Error,
        Prim::Print,
        Prim::Void,
        Prim::List,
        Prim::Cons,
        Prim::Car,
        Prim::Cdr,
        Prim::First,
        Prim::Second,
        Prim::IsNull,
        Prim::Member,
        Prim::Length,
        Prim::Foldl,
        Prim::Map,
        Prim::Vector,
        Prim::MakeVector,
        Prim::VectorRef,
        Prim::VectorSet,
        Prim::VectorLength,
        Prim::Normalize,
        Prim::Value,
        Prim::SetValue,
        Prim::Parents,
        Prim::Children,
        Prim::Cpt,
        Prim::IsEvidence,
        Prim::IsArray,
        Prim::ArrayLength,
        Prim::Nodes,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Prim::Add => "+",
            Prim::Sub => "-",
            Prim::Mul => "*",
            Prim::Div => "/",
            Prim::Lt => "<",
            Prim::Le => "<=",
            Prim::Gt => ">",
            Prim::Ge => ">=",
            Prim::NumEq => "=",
            Prim::Min => "min",
            Prim::Max => "max",
            Prim::Not => "not",
            Prim::IsZero => "zero?",
            Prim::Eq => "eq?",
            Prim::Flip => "flip",
            Prim::RandomInteger => "random-integer",
            Prim::Error => "error",
            Prim::Print => "print",
            Prim::Void => "void",
            Prim::List => "list",
            Prim::Cons => "cons",
            Prim::Car => "car",
            Prim::Cdr => "cdr",
            Prim::First => "first",
            Prim::Second => "second",
            Prim::IsNull => "null?",
            Prim::Member => "member",
            Prim::Length => "length",
            Prim::Foldl => "foldl",
            Prim::Map => "map",
            Prim::Vector => "vector",
            Prim::MakeVector => "make-vector",
            Prim::VectorRef => "vector-ref",
            Prim::VectorSet => "vector-set!",
            Prim::VectorLength => "vector-length",
            Prim::Normalize => "normalize",
            Prim::Value => "value",
            Prim::SetValue => "set-value!",
            Prim::Parents => "parents",
            Prim::Children => "children",
            Prim::Cpt => "CPT",
            Prim::IsEvidence => "evidence?",
            Prim::IsArray => "array?",
            Prim::ArrayLength => "array-length",
            Prim::Nodes => "nodes",
        }
    }

    pub fn from_name(name: &str) -> Option<Prim> {
        // `equal?` is accepted as an alias; the DSL has no structural data
        // where the two would differ observably.
        if name == "equal?" {
            return Some(Prim::Eq);
        }
        Prim::ALL.iter().copied().find(|p| p.name() == name)
    }

    /// Inclusive arity bounds; `None` upper bound means variadic.
    pub fn arity(self) -> (usize, Option<usize>) {
        match self {
            Prim::Add | Prim::Mul | Prim::List | Prim::Vector => (0, None),
            Prim::Sub => (1, None),
            Prim::Div
            | Prim::Lt
            | Prim::Le
            | Prim::Gt
            | Prim::Ge
            | Prim::NumEq
            | Prim::Min
            | Prim::Max
            | Prim::Eq
            | Prim::Cons
            | Prim::Member
            | Prim::Map
            | Prim::MakeVector
            | Prim::VectorRef => (2, Some(2)),
            Prim::Foldl | Prim::VectorSet => (3, Some(3)),
            Prim::Void => (0, Some(0)),
            Prim::Value => (1, Some(2)),
            Prim::SetValue => (2, Some(3)),
            _ => (1, Some(1)),
        }
    }

    pub fn binop(self) -> Option<BinOp> {
        Some(match self {
            Prim::Add => BinOp::Add,
            Prim::Sub => BinOp::Sub,
            Prim::Mul => BinOp::Mul,
            Prim::Div => BinOp::Div,
            Prim::Lt => BinOp::Lt,
            Prim::Le => BinOp::Le,
            Prim::Gt => BinOp::Gt,
            Prim::Ge => BinOp::Ge,
            Prim::NumEq => BinOp::NumEq,
            Prim::Min => BinOp::Min,
            Prim::Max => BinOp::Max,
            _ => return None,
        })
    }
}

impl fmt::Display for Prim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Binary numeric operations that can appear in residual code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Lt,
    Le,
    Gt,
    Ge,
    NumEq,
    Min,
    Max,
}

impl BinOp {
    pub fn name(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::NumEq => "=",
            BinOp::Min => "min",
            BinOp::Max => "max",
        }
    }

    pub fn from_name(s: &str) -> Option<BinOp> {
        [
            BinOp::Add,
            BinOp::Sub,
            BinOp::Mul,
            BinOp::Div,
            BinOp::Lt,
            BinOp::Le,
            BinOp::Gt,
            BinOp::Ge,
            BinOp::NumEq,
            BinOp::Min,
            BinOp::Max,
        ]
        .into_iter()
        .find(|b| b.name() == s)
    }

    pub fn is_comparison(self) -> bool {
        matches!(self, BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge | BinOp::NumEq)
    }
}

/// A number as seen by arithmetic: exact integer or binary64 float.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Num {
    Int(i64),
    Float(f64),
}

impl Num {
    pub fn to_f64(self) -> f64 {
        match self {
            Num::Int(i) => i as f64,
            Num::Float(x) => x,
        }
    }
}

/// Result of a binary operation: a number or, for comparisons, a boolean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scalar {
    Bool(bool),
    Num(Num),
}

/// Applies a binary numeric operation.
///
/// Mixed integer/float operands are promoted to float, with one exception
/// borrowed from exact-arithmetic Lisps: exact `0` is the additive identity,
/// so `0 + x` is `x` itself (this keeps `-0.0` intact and makes the
/// `(+ 0 x) => x` rewrite value-preserving).
pub fn binop(op: BinOp, a: Num, b: Num) -> Scalar {
    use Num::*;
    match op {
        BinOp::Add => Scalar::Num(match (a, b) {
            (Int(x), Int(y)) => Int(x.wrapping_add(y)),
            (Int(0), Float(y)) => Float(y),
            (Float(x), Int(0)) => Float(x),
            _ => Float(a.to_f64() + b.to_f64()),
        }),
        BinOp::Sub => Scalar::Num(match (a, b) {
            (Int(x), Int(y)) => Int(x.wrapping_sub(y)),
            (Float(x), Int(0)) => Float(x),
            _ => Float(a.to_f64() - b.to_f64()),
        }),
        BinOp::Mul => Scalar::Num(match (a, b) {
            (Int(x), Int(y)) => Int(x.wrapping_mul(y)),
            _ => Float(a.to_f64() * b.to_f64()),
        }),
        BinOp::Div => Scalar::Num(Float(a.to_f64() / b.to_f64())),
        BinOp::Min | BinOp::Max => {
            let pick_b = match (a, b) {
                (Int(x), Int(y)) => {
                    if op == BinOp::Min {
                        y < x
                    } else {
                        y > x
                    }
                }
                _ => {
                    let (x, y) = (a.to_f64(), b.to_f64());
                    if op == BinOp::Min {
                        y < x
                    } else {
                        y > x
                    }
                }
            };
            let r = if pick_b { b } else { a };
            Scalar::Num(match (a, b) {
                (Int(_), Int(_)) => r,
                _ => Float(r.to_f64()),
            })
        }
        BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge | BinOp::NumEq => {
            let r = match (a, b) {
                (Int(x), Int(y)) => cmp(op, x, y),
                _ => cmp(op, a.to_f64(), b.to_f64()),
            };
            Scalar::Bool(r)
        }
    }
}

fn cmp<T: PartialOrd>(op: BinOp, x: T, y: T) -> bool {
    match op {
        BinOp::Lt => x < y,
        BinOp::Le => x <= y,
        BinOp::Gt => x > y,
        BinOp::Ge => x >= y,
        BinOp::NumEq => x == y,
        _ => unreachable!(),
    }
}

pub fn negate(a: Num) -> Num {
    match a {
        Num::Int(x) => Num::Int(x.wrapping_neg()),
        Num::Float(x) => Num::Float(-x),
    }
}

/// Divides each entry by the left-to-right float sum of all entries.
pub fn normalize(entries: &[Num]) -> Result<Vec<f64>, String> {
    let mut sum = 0.0f64;
    for e in entries {
        sum += e.to_f64();
    }
    if sum == 0.0 {
        return Err("normalize: weights sum to zero (no accepted mass)".into());
    }
    Ok(entries.iter().map(|e| e.to_f64() / sum).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for p in Prim::ALL {
            assert_eq!(Prim::from_name(p.name()), Some(*p));
        }
    }

    #[test]
    fn exact_zero_is_additive_identity() {
        let r = binop(BinOp::Add, Num::Int(0), Num::Float(-0.0));
        match r {
            Scalar::Num(Num::Float(x)) => assert!(x == 0.0 && x.is_sign_negative()),
            _ => panic!(),
        }
        assert_eq!(binop(BinOp::Add, Num::Int(2), Num::Int(3)), Scalar::Num(Num::Int(5)));
        assert_eq!(binop(BinOp::Sub, Num::Int(1), Num::Float(0.94)), Scalar::Num(Num::Float(1.0 - 0.94)));
    }

    #[test]
    fn min_max_and_compare() {
        assert_eq!(binop(BinOp::Min, Num::Float(1.0), Num::Float(0.5)), Scalar::Num(Num::Float(0.5)));
        assert_eq!(binop(BinOp::Min, Num::Float(1.0), Num::Float(3.0)), Scalar::Num(Num::Float(1.0)));
        assert_eq!(binop(BinOp::Max, Num::Int(1), Num::Int(3)), Scalar::Num(Num::Int(3)));
        assert_eq!(binop(BinOp::Lt, Num::Int(1), Num::Float(1.5)), Scalar::Bool(true));
        assert_eq!(binop(BinOp::Div, Num::Int(1), Num::Int(4)), Scalar::Num(Num::Float(0.25)));
    }

    #[test]
    fn normalize_rejects_zero_mass() {
        assert!(normalize(&[Num::Int(0), Num::Float(0.0)]).is_err());
        assert_eq!(normalize(&[Num::Int(1), Num::Float(3.0)]).unwrap(), vec![0.25, 0.75]);
    }
}
