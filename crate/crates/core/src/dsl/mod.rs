//! The inference DSL: S-expression syntax resolved into an AST whose
//! variables are frame slots.

mod ast;
mod parse;

pub use ast::{AnnotationCount, Expr, FuncDef, Input, Program, Slot};
pub use parse::parse_program;
