pub mod algorithms;
pub mod bench;
pub mod dsl;
pub mod emit_c;
pub mod error;
pub mod exec;
pub mod interp;
pub mod model;
pub mod ops;
pub mod pe;
pub mod pipeline;
pub mod prim;
pub mod residual;
pub mod rng;
pub mod sexpr;
pub mod value;

pub use error::{Error, ErrorClass, Result, Span};
