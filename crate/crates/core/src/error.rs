use std::fmt;

use thiserror::Error;

/// Source position, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl Span {
    pub fn new(line: u32, col: u32) -> Self {
        Span { line, col }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// Coarse error classes, each mapped to a distinct process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Syntax,
    Model,
    Runtime,
    BadStatic,
    NonTermination,
    Unsupported,
    CacheMismatch,
    Toolchain,
    Io,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Io => 1,
            ErrorClass::Syntax => 2,
            ErrorClass::Model => 3,
            ErrorClass::Runtime => 4,
            ErrorClass::Toolchain => 5,
            ErrorClass::BadStatic => 10,
            ErrorClass::NonTermination => 11,
            ErrorClass::Unsupported => 12,
            ErrorClass::CacheMismatch => 13,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorClass::Syntax => "syntax",
            ErrorClass::Model => "model",
            ErrorClass::Runtime => "runtime",
            ErrorClass::BadStatic => "bad-static",
            ErrorClass::NonTermination => "non-termination",
            ErrorClass::Unsupported => "unsupported-feature",
            ErrorClass::CacheMismatch => "cache-mismatch",
            ErrorClass::Toolchain => "toolchain",
            ErrorClass::Io => "io",
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{span}: syntax error: {msg}")]
    Syntax { span: Span, msg: String },

    #[error("{span}: unknown special form `{form}`")]
    UnknownForm { span: Span, form: String },

    #[error("{span}: `{form}` expects {expected}, got {got}")]
    Arity {
        span: Span,
        form: String,
        expected: String,
        got: usize,
    },

    #[error("{span}: unbound variable `{name}`")]
    Unbound { span: Span, name: String },

    #[error("{span}: type error: {msg}")]
    Type { span: Span, msg: String },

    #[error("model error: {0}")]
    Model(String),

    #[error("{at}: bad static: {reason} (inside `static` at {static_span})")]
    BadStatic {
        static_span: Span,
        at: Span,
        reason: String,
    },

    #[error("inline depth limit of {limit} exceeded; innermost calls: {}", summarize_stack(.stack))]
    NonTermination { limit: usize, stack: Vec<String> },

    #[error("{span}: call to `{func}` cannot be inlined: argument `{param}` is symbolic and the definition forbids inlining it")]
    NoInline {
        span: Span,
        func: String,
        param: String,
    },

    #[error("unsupported feature: {0}")]
    Unsupported(String),

    #[error("{span}: cache body is effectful ({what}); caching it would change program meaning")]
    CacheEffect { span: Span, what: String },

    #[error("cache {cache} mismatch for key {key}: stored {stored}, recomputed {recomputed}")]
    CacheMismatch {
        cache: usize,
        key: String,
        stored: String,
        recomputed: String,
    },

    #[error("runtime error: {0}")]
    Runtime(String),

    #[error("oracle: {0}")]
    Oracle(String),

    #[error("C toolchain: {0}")]
    Toolchain(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn summarize_stack(stack: &[String]) -> String {
    let tail: Vec<&str> = stack.iter().rev().take(8).map(String::as_str).collect();
    format!("{} (stack depth {})", tail.join(" <- "), stack.len())
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Syntax { .. }
            | Error::UnknownForm { .. }
            | Error::Arity { .. }
            | Error::Unbound { .. } => ErrorClass::Syntax,
            Error::Model(_) | Error::Oracle(_) => ErrorClass::Model,
            Error::Type { .. } | Error::Runtime(_) => ErrorClass::Runtime,
            Error::BadStatic { .. } => ErrorClass::BadStatic,
            Error::NonTermination { .. } => ErrorClass::NonTermination,
            Error::NoInline { .. } | Error::Unsupported(_) | Error::CacheEffect { .. } => {
                ErrorClass::Unsupported
            }
            Error::CacheMismatch { .. } => ErrorClass::CacheMismatch,
            Error::Toolchain(_) => ErrorClass::Toolchain,
            Error::Io(_) => ErrorClass::Io,
        }
    }

    pub(crate) fn syntax(span: Span, msg: impl Into<String>) -> Self {
        Error::Syntax {
            span,
            msg: msg.into(),
        }
    }

    pub(crate) fn ty(span: Span, msg: impl Into<String>) -> Self {
        Error::Type {
            span,
            msg: msg.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
