//! Values manipulated by the interpreter and the partial evaluator.

use std::cell::RefCell;
use std::fmt;
use std::rc::Rc;

use crate::model::NodeId;
use crate::prim::{Num, Prim};
use crate::residual::{Operand, Ty};
use crate::sexpr::format_float;

pub type FuncId = usize;

/// Immutable list with O(1) `cdr`.
#[derive(Clone)]
pub struct List {
    items: Rc<[Value]>,
    start: usize,
}

impl List {
    pub fn new(items: Vec<Value>) -> Self {
        List {
            items: items.into(),
            start: 0,
        }
    }

    pub fn empty() -> Self {
        List::new(Vec::new())
    }

    pub fn as_slice(&self) -> &[Value] {
        &self.items[self.start..]
    }

    pub fn len(&self) -> usize {
        self.items.len() - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn first(&self) -> Option<&Value> {
        self.as_slice().first()
    }

    pub fn rest(&self) -> Option<List> {
        if self.is_empty() {
            None
        } else {
            Some(List {
                items: self.items.clone(),
                start: self.start + 1,
            })
        }
    }

    pub fn cons(head: Value, tail: &List) -> List {
        let mut v = Vec::with_capacity(tail.len() + 1);
        v.push(head);
        v.extend(tail.as_slice().iter().cloned());
        List::new(v)
    }
}

/// A vector that exists at specialization or interpretation time.
/// `extent` is the id of the `static` extent that created it (0 outside
/// any `static`).
pub struct VecObj {
    pub items: Vec<Value>,
    pub extent: u32,
}

#[derive(Clone)]
pub enum Value {
    Void,
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(Rc<str>),
    Sym(Rc<str>),
    Node(NodeId),
    Net,
    List(List),
    Func(FuncId),
    Prim(Prim),
    Vector(Rc<RefCell<VecObj>>),
    /// Known only at run time: a residual operand and its type.
    Dyn(Operand, Ty),
}

impl Value {
    pub fn type_name(&self) -> &'static str {
        match self {
            Value::Void => "void",
            Value::Bool(_) => "boolean",
            Value::Int(_) => "integer",
            Value::Float(_) => "float",
            Value::Str(_) => "string",
            Value::Sym(_) => "symbol",
            Value::Node(_) => "node",
            Value::Net => "bayesnet",
            Value::List(_) => "list",
            Value::Func(_) | Value::Prim(_) => "procedure",
            Value::Vector(_) => "vector",
            Value::Dyn(..) => "runtime value",
        }
    }

    pub fn as_num(&self) -> Option<Num> {
        match self {
            Value::Int(i) => Some(Num::Int(*i)),
            Value::Float(x) => Some(Num::Float(*x)),
            _ => None,
        }
    }

    pub fn from_num(n: Num) -> Value {
        match n {
            Num::Int(i) => Value::Int(i),
            Num::Float(x) => Value::Float(x),
        }
    }

    pub fn is_dyn(&self) -> bool {
        matches!(self, Value::Dyn(..))
    }

    /// True when the value, or anything reachable from it through lists,
    /// is only known at run time.
    pub fn contains_dyn(&self) -> bool {
        match self {
            Value::Dyn(..) => true,
            Value::List(l) => l.as_slice().iter().any(Value::contains_dyn),
            _ => false,
        }
    }

    pub fn new_vector(items: Vec<Value>, extent: u32) -> Value {
        Value::Vector(Rc::new(RefCell::new(VecObj { items, extent })))
    }

    /// Identity equality as used by `eq?` and `member`: node handles and
    /// procedures compare by identity, scalars by value, vectors by
    /// reference. `None` means the answer depends on run-time data.
    pub fn identical(&self, other: &Value) -> Option<bool> {
        use Value::*;
        Some(match (self, other) {
            (Dyn(..), _) | (_, Dyn(..)) => return None,
            (Void, Void) | (Net, Net) => true,
            (Bool(a), Bool(b)) => a == b,
            (Int(a), Int(b)) => a == b,
            (Float(a), Float(b)) => a.to_bits() == b.to_bits(),
            (Str(a), Str(b)) | (Sym(a), Sym(b)) => a == b,
            (Node(a), Node(b)) => a == b,
            (Func(a), Func(b)) => a == b,
            (Prim(a), Prim(b)) => a == b,
            (Vector(a), Vector(b)) => Rc::ptr_eq(a, b),
            (List(a), List(b)) => {
                if a.is_empty() && b.is_empty() {
                    true
                } else if Rc::ptr_eq(&a.items, &b.items) && a.start == b.start {
                    true
                } else {
                    false
                }
            }
            _ => false,
        })
    }
}

impl fmt::Debug for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Void => write!(f, "#<void>"),
            Value::Bool(true) => write!(f, "#t"),
            Value::Bool(false) => write!(f, "#f"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Float(x) => write!(f, "{}", format_float(*x)),
            Value::Str(s) => write!(f, "{s:?}"),
            Value::Sym(s) => write!(f, "{s}"),
            Value::Node(n) => write!(f, "#<node {n}>"),
            Value::Net => write!(f, "#<bayesnet>"),
            Value::List(l) => {
                write!(f, "(")?;
                for (i, v) in l.as_slice().iter().enumerate() {
                    if i > 0 {
                        write!(f, " ")?;
                    }
                    write!(f, "{v}")?;
                }
                write!(f, ")")
            }
            Value::Func(id) => write!(f, "#<procedure {id}>"),
            Value::Prim(p) => write!(f, "#<procedure {p}>"),
            Value::Vector(v) => {
                write!(f, "#(")?;
                for (i, x) in v.borrow().items.iter().enumerate() {
                    if i > 0 {
                        write!(f, " ")?;
                    }
                    write!(f, "{x}")?;
                }
                write!(f, ")")
            }
            Value::Dyn(op, ty) => write!(f, "#<dyn {op} : {ty}>"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn list_rest_shares_storage() {
        let l = List::new(vec![Value::Int(1), Value::Int(2), Value::Int(3)]);
        let r = l.rest().unwrap();
        assert_eq!(r.len(), 2);
        assert!(matches!(r.first(), Some(Value::Int(2))));
        assert!(r.rest().unwrap().rest().unwrap().rest().is_none());
        let c = List::cons(Value::Int(0), &r);
        assert_eq!(Value::List(c).to_string(), "(0 2 3)");
    }

    #[test]
    fn identity() {
        assert_eq!(Value::Node(3).identical(&Value::Node(3)), Some(true));
        assert_eq!(Value::Node(3).identical(&Value::Node(1)), Some(false));
        assert_eq!(Value::Bool(true).identical(&Value::Int(1)), Some(false));
        assert_eq!(
            Value::Dyn(Operand::Temp(0), Ty::Bool).identical(&Value::Bool(true)),
            None
        );
    }
}
