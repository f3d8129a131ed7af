//! End-to-end execution of one configuration: model and algorithm in,
//! estimate out, through one of the four execution modes.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::algorithms::{custom_program, Algorithm};
use crate::dsl::Program;
use crate::emit_c::{emit_c, run_compiled, EmitOptions, Toolchain};
use crate::error::{Error, Result};
use crate::exec::{execute, ExecOptions};
use crate::interp::{interpret, Outcome, RunParams};
use crate::model::{load_model, BayesNet};
use crate::pe::{specialize, PeOptions};
use crate::residual::{Metrics, ResidualProgram};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Interp,
    Pe,
    PeCache,
    C,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Interp, Mode::Pe, Mode::PeCache, Mode::C];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Interp => "interp",
            Mode::Pe => "pe",
            Mode::PeCache => "pe-cache",
            Mode::C => "c",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Mode, String> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown mode `{s}` (expected interp, pe, pe-cache or c)"))
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub algorithm: String,
    /// A program file used instead of a shipped algorithm.
    pub program: Option<PathBuf>,
    pub model: String,
    pub mode: Mode,
    pub n: i64,
    /// `None` takes the algorithm's default.
    pub burn: Option<i64>,
    pub seed: u64,
    pub repetitions: usize,
    pub output: Option<PathBuf>,
    pub debug_cache: bool,
    pub emit: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            algorithm: "likelihood".into(),
            program: None,
            model: "burglary".into(),
            mode: Mode::Interp,
            n: 10_000,
            burn: None,
            seed: 1,
            repetitions: 10,
            output: None,
            debug_cache: false,
            emit: None,
        }
    }
}

/// A configuration with parsing, specialization and compilation done, so
/// that runs measure sampling alone.
pub struct Prepared {
    pub name: String,
    pub model_name: String,
    pub net: BayesNet,
    pub program: Program,
    pub mode: Mode,
    pub default_burn: i64,
    pub residual: Option<ResidualProgram>,
    exe: Option<PathBuf>,
    debug_cache: bool,
    _scratch: Option<tempfile::TempDir>,
}

#[derive(Debug, Clone)]
pub struct Timed {
    pub outcome: Outcome,
    pub elapsed_ns: u64,
}

impl Prepared {
    pub fn new(cfg: &RunConfig) -> Result<Prepared> {
        let (model_name, net) = load_model(&cfg.model)?;
        let (name, program, default_burn) = match &cfg.program {
            Some(path) => {
                let text = std::fs::read_to_string(path)?;
                let stem = path.file_stem().map_or("program".into(), |s| s.to_string_lossy().into_owned());
                (stem, custom_program(&text, &net)?, 0)
            }
            None => {
                let alg = Algorithm::by_name(&cfg.algorithm)?;
                (alg.name.to_string(), alg.program(&net)?, alg.default_burn)
            }
        };
        let residual = match cfg.mode {
            Mode::Interp => None,
            m => Some(specialize(&program, &net, PeOptions { caching: m != Mode::Pe })?),
        };
        let mut scratch = None;
        let exe = if cfg.mode == Mode::C {
            let tc = Toolchain::require()?;
            let unit = emit_c(
                residual.as_ref().unwrap(),
                &format!("{name}_{model_name}"),
                EmitOptions { debug_cache: cfg.debug_cache },
            )?;
            let dir = match &cfg.emit {
                Some(d) => d.clone(),
                None => {
                    let t = tempfile::tempdir()?;
                    let p = t.path().to_path_buf();
                    scratch = Some(t);
                    p
                }
            };
            Some(tc.compile(&unit, &dir)?)
        } else {
            None
        };
        Ok(Prepared {
            name,
            model_name,
            net,
            program,
            mode: cfg.mode,
            default_burn,
            residual,
            exe,
            debug_cache: cfg.debug_cache,
            _scratch: scratch,
        })
    }

    pub fn exe(&self) -> Option<&Path> {
        self.exe.as_deref()
    }

    pub fn metrics(&self) -> Option<Metrics> {
        self.residual.as_ref().map(ResidualProgram::metrics)
    }

    pub fn run(&self, params: RunParams) -> Result<Timed> {
        match (self.mode, &self.residual, &self.exe) {
            (Mode::C, _, Some(exe)) => {
                let r = run_compiled(exe, params)?;
                Ok(Timed {
                    outcome: r.outcome,
                    elapsed_ns: r.elapsed_ns,
                })
            }
            (Mode::Interp, _, _) => timed(|| interpret(&self.program, &self.net, params)),
            (_, Some(rp), _) => timed(|| {
                execute(rp, params, ExecOptions { debug_cache: self.debug_cache })
            }),
            _ => unreachable!(),
        }
    }
}

fn timed(f: impl FnOnce() -> Result<Outcome>) -> Result<Timed> {
    let t = Instant::now();
    let outcome = f()?;
    Ok(Timed {
        elapsed_ns: t.elapsed().as_nanos() as u64,
        outcome,
    })
}

/// One line of `run` output.
#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub algorithm: String,
    pub model: String,
    pub mode: Mode,
    pub seed: u64,
    pub n: i64,
    pub burn: i64,
    pub estimate: Vec<f64>,
    pub result: String,
    pub flips: u64,
    pub random_ints: u64,
    pub node_writes: u64,
    pub draws: u64,
    pub rng_state: u64,
    pub elapsed_ns: u64,
    pub cache: Vec<crate::exec::CacheStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<Metrics>,
}

/// Prepares and runs `cfg` once per repetition, with seeds
/// `seed, seed + 1, ...`.
pub fn run_config(cfg: &RunConfig) -> Result<Vec<RunRecord>> {
    if cfg.repetitions == 0 {
        return Err(Error::Unsupported("repetitions must be at least 1".into()));
    }
    let prep = Prepared::new(cfg)?;
    let burn = cfg.burn.unwrap_or(prep.default_burn);
    let mut out = Vec::new();
    for r in 0..cfg.repetitions as u64 {
        let seed = cfg.seed.wrapping_add(r);
        let t = prep.run(RunParams::new(seed, cfg.n, burn))?;
        out.push(RunRecord {
            algorithm: prep.name.clone(),
            model: prep.model_name.clone(),
            mode: cfg.mode,
            seed,
            n: cfg.n,
            burn,
            estimate: t.outcome.estimate,
            result: t.outcome.display,
            flips: t.outcome.effects.flips,
            random_ints: t.outcome.effects.random_ints,
            node_writes: t.outcome.effects.node_writes,
            draws: t.outcome.rng.draws,
            rng_state: t.outcome.rng.state,
            elapsed_ns: t.elapsed_ns,
            cache: t.outcome.caches,
            metrics: prep.metrics(),
        });
    }
    Ok(out)
}
