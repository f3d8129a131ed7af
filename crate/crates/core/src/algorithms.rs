//! The shipped inference algorithms, written in the DSL.

use crate::dsl::{parse_program, Program};
use crate::error::{Error, Result};
use crate::model::BayesNet;

pub const PRELUDE: &str = include_str!("../algorithms/prelude.simpl");

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum SamplerKind {
    Independent,
    Chain,
}

#[derive(Debug, Clone, Copy)]
pub struct Algorithm {
    pub name: &'static str,
    pub source: &'static str,
    pub kind: SamplerKind,
    /// Burn-in used when none is given.
    pub default_burn: i64,
}

pub const ALGORITHMS: [Algorithm; 4] = [
    Algorithm {
        name: "likelihood",
        source: include_str!("../algorithms/likelihood.simpl"),
        kind: SamplerKind::Independent,
        default_burn: 0,
    },
    Algorithm {
        name: "rejection",
        source: include_str!("../algorithms/rejection.simpl"),
        kind: SamplerKind::Independent,
        default_burn: 0,
    },
    Algorithm {
        name: "gibbs",
        source: include_str!("../algorithms/gibbs.simpl"),
        kind: SamplerKind::Chain,
        default_burn: 2000,
    },
    Algorithm {
        name: "mh",
        source: include_str!("../algorithms/mh.simpl"),
        kind: SamplerKind::Chain,
        default_burn: 5000,
    },
];

impl Algorithm {
    pub fn by_name(name: &str) -> Result<Algorithm> {
        ALGORITHMS.iter().copied().find(|a| a.name == name).ok_or_else(|| {
            let known: Vec<&str> = ALGORITHMS.iter().map(|a| a.name).collect();
            Error::Unsupported(format!("unknown algorithm `{name}` (known: {})", known.join(", ")))
        })
    }

    /// Algorithm text followed by the prelude, so reported positions in the
    /// algorithm itself are unshifted.
    pub fn text(&self) -> String {
        format!("{}\n{}", self.source, PRELUDE)
    }

    pub fn program(&self, net: &BayesNet) -> Result<Program> {
        parse_program(&self.text(), Some(net))
    }
}

/// Parses a user program with the prelude appended.
pub fn custom_program(text: &str, net: &BayesNet) -> Result<Program> {
    parse_program(&format!("{text}\n{PRELUDE}"), Some(net))
}
