use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use simpl::bench::{assemble, bench_cell, benchmark, cached_oracle, default_oracle_dir, BenchCell, BenchConfig};
use simpl::emit_c::{emit_c, EmitOptions, Toolchain};
use simpl::model::load_model;
use simpl::pipeline::{run_config, Mode, Prepared, RunConfig};
use simpl::residual::{dump, unparse};
use simpl::{Error, Result};

#[derive(Parser)]
#[command(name = "simpl", version, about = "Specializing compiler for Bayes-net inference programs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one configuration and print one JSON line per repetition.
    Run(RunArgs),
    /// Time (algorithm × model × mode) cells and report speedups.
    Bench(BenchArgs),
    /// Write the C translation unit, runtime header and manifest.
    Emit(EmitArgs),
    /// Exact posterior of a model's query by enumeration.
    Oracle(OracleArgs),
    /// Print the residual program.
    IrDump(IrDumpArgs),
}

#[derive(Args)]
struct Source {
    /// Shipped algorithm: likelihood, rejection, gibbs or mh.
    #[arg(long, default_value = "likelihood")]
    algo: String,
    /// Program file to use instead of a shipped algorithm.
    #[arg(long)]
    program: Option<PathBuf>,
    /// Model file, or the name of a bundled model.
    #[arg(long, default_value = "burglary")]
    model: String,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    src: Source,
    #[arg(long, default_value = "interp")]
    mode: Mode,
    #[arg(long, default_value_t = 10_000)]
    n: i64,
    #[arg(long)]
    burn: Option<i64>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    repetitions: usize,
    /// Write JSON lines here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Recompute every cache hit and fail on a mismatch.
    #[arg(long)]
    debug_cache: bool,
    /// Directory for the emitted C program (mode c).
    #[arg(long)]
    emit: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long = "algo", num_args = 1..)]
    algos: Vec<String>,
    #[arg(long = "model", num_args = 1..)]
    models: Vec<String>,
    #[arg(long = "mode", num_args = 1..)]
    modes: Vec<Mode>,
    /// Starting sample count before auto-scaling.
    #[arg(long, default_value_t = 256)]
    n: i64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    repetitions: usize,
    /// Minimum duration of one timed run, in milliseconds.
    #[arg(long, default_value_t = 500)]
    min_time_ms: u64,
    #[arg(long)]
    oracle_dir: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
    /// Run each cell in its own process.
    #[arg(long)]
    parallel: bool,
    /// Print the selected cell as one JSON object (used by --parallel).
    #[arg(long, hide = true)]
    cell_json: bool,
}

#[derive(Args)]
struct EmitArgs {
    #[command(flatten)]
    src: Source,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long)]
    debug_cache: bool,
    /// Also compile the unit.
    #[arg(long)]
    compile: bool,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, default_value = "burglary")]
    model: String,
    /// Directory of the on-disk oracle cache.
    #[arg(long)]
    cache_dir: Option<PathBuf>,
}

#[derive(Args)]
struct IrDumpArgs {
    #[command(flatten)]
    src: Source,
    /// Specialize without honoring `cache`.
    #[arg(long)]
    no_cache: bool,
    /// Print the residual program as DSL text.
    #[arg(long)]
    unparse: bool,
}

fn sink(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(std::fs::File::create(p)?),
        None => Box::new(std::io::stdout()),
    })
}

fn json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("report serializes")
}

fn run(a: RunArgs) -> Result<()> {
    let cfg = RunConfig {
        algorithm: a.src.algo,
        program: a.src.program,
        model: a.src.model,
        mode: a.mode,
        n: a.n,
        burn: a.burn,
        seed: a.seed,
        repetitions: a.repetitions,
        output: a.output,
        debug_cache: a.debug_cache,
        emit: a.emit,
    };
    let records = run_config(&cfg)?;
    let mut out = sink(&cfg.output)?;
    for r in &records {
        writeln!(out, "{}", json(r))?;
    }
    Ok(())
}

fn bench(a: BenchArgs) -> Result<()> {
    let mut cfg = BenchConfig {
        n: a.n,
        seed: a.seed,
        repetitions: a.repetitions,
        min_time: Duration::from_millis(a.min_time_ms),
        oracle_dir: a.oracle_dir,
        ..BenchConfig::default()
    };
    if !a.algos.is_empty() {
        cfg.algorithms = a.algos;
    }
    if !a.models.is_empty() {
        cfg.models = a.models;
    }
    if !a.modes.is_empty() {
        cfg.modes = a.modes;
    }
    if a.cell_json {
        let cell = bench_cell(&cfg, &cfg.algorithms[0], &cfg.models[0], cfg.modes[0]);
        println!("{}", json(&cell));
        return Ok(());
    }
    let report = if a.parallel {
        let exe = std::env::current_exe()?;
        let mut children = Vec::new();
        for alg in &cfg.algorithms {
            for model in &cfg.models {
                for mode in &cfg.modes {
                    let mut cmd = Command::new(&exe);
                    cmd.args(["bench", "--cell-json", "--algo", alg, "--model", model, "--mode", mode.as_str()])
                        .args(["--n", &cfg.n.to_string(), "--seed", &cfg.seed.to_string()])
                        .args(["--repetitions", &cfg.repetitions.to_string()])
                        .args(["--min-time-ms", &a.min_time_ms.to_string()]);
                    if let Some(d) = &cfg.oracle_dir {
                        cmd.arg("--oracle-dir").arg(d);
                    }
                    children.push(cmd.stdout(std::process::Stdio::piped()).spawn()?);
                }
            }
        }
        let mut cells = Vec::new();
        for child in children {
            let out = child.wait_with_output()?;
            let cell: BenchCell = serde_json::from_slice(&out.stdout)
                .map_err(|e| Error::Runtime(format!("benchmark worker produced no report: {e}")))?;
            cells.push(cell);
        }
        assemble(cells)
    } else {
        benchmark(&cfg)
    };
    let mut out = sink(&a.output)?;
    for c in &report.cells {
        writeln!(out, "{}", json(c))?;
    }
    for d in &report.decomposition {
        writeln!(out, "{}", json(d))?;
    }
    eprint!("{}", report.table());
    eprintln!("compiler: {}", report.compiler.join(" "));
    Ok(())
}

fn prepared(src: Source, mode: Mode) -> Result<Prepared> {
    Prepared::new(&RunConfig {
        algorithm: src.algo,
        program: src.program,
        model: src.model,
        mode,
        ..RunConfig::default()
    })
}

fn emit(a: EmitArgs) -> Result<()> {
    let prep = prepared(a.src, Mode::PeCache)?;
    let unit = emit_c(
        prep.residual.as_ref().unwrap(),
        &format!("{}_{}", prep.name, prep.model_name),
        EmitOptions { debug_cache: a.debug_cache },
    )?;
    let path = if a.compile {
        Toolchain::require()?.compile(&unit, &a.out)?
    } else {
        unit.write_to(&a.out)?
    };
    println!("{}", json(&serde_json::json!({ "path": path, "manifest": unit.manifest })));
    Ok(())
}

fn oracle(a: OracleArgs) -> Result<()> {
    let (name, net) = load_model(&a.model)?;
    let dir = a.cache_dir.unwrap_or_else(default_oracle_dir);
    let r = cached_oracle(&net, &name, &dir)?;
    println!("{}", json(&r));
    Ok(())
}

fn ir_dump(a: IrDumpArgs) -> Result<()> {
    let mode = if a.no_cache { Mode::Pe } else { Mode::PeCache };
    let prep = prepared(a.src, mode)?;
    let rp = prep.residual.as_ref().unwrap();
    if a.unparse {
        println!("{}", unparse(rp)?);
    } else {
        print!("{}", dump(rp));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let r = match cli.cmd {
        Cmd::Run(a) => run(a),
        Cmd::Bench(a) => bench(a),
        Cmd::Emit(a) => emit(a),
        Cmd::Oracle(a) => oracle(a),
        Cmd::IrDump(a) => ir_dump(a),
    };
    match r {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.class().as_str());
            ExitCode::from(e.class().exit_code() as u8)
        }
    }
}
