//! One PASS/FAIL/SKIP line per acceptance criterion. Exits nonzero on any FAIL.

mod common;

use std::time::{Duration, Instant};

use common::*;
use simpl::algorithms::custom_program;
use simpl::bench::{assemble, bench_cell, BenchConfig};
use simpl::emit_c::{compile_and_run, emit_c, EmitOptions};
use simpl::exec::{execute, ExecOptions};
use simpl::interp::{interpret, Outcome, RunParams};
use simpl::model::{exact_posterior, parse_model, BUNDLED};
use simpl::pe::{specialize, PeOptions};
use simpl::pipeline::Mode;
use simpl::residual::{unparse, CacheKey, Operand, Stmt};
use simpl::ErrorClass;

type Check = Result<String, String>;

struct Report {
    failed: usize,
}

impl Report {
    fn line(&mut self, name: &str, r: Check) {
        match r {
            Ok(msg) if msg.starts_with("skipped") => println!("SKIP {name}: {msg}"),
            Ok(msg) => println!("PASS {name}: {msg}"),
            Err(msg) => {
                self.failed += 1;
                println!("FAIL {name}: {msg}");
            }
        }
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn oracle_correctness() -> Check {
    let stated = [("likelihood", 200_000, 0, 0.01), ("rejection", 1_000_000, 0, 0.01), ("gibbs", 200_000, 2_000, 0.01), ("mh", 500_000, 5_000, 0.015)];
    let mut worst = Vec::new();
    for model in ["burglary", "csi"] {
        let net = net(model);
        let want = exact_posterior(&net).map_err(|e| e.to_string())?;
        for (alg, n, burn, tol) in stated {
            let t = Instant::now();
            let rp = residual(alg, &net, true);
            let errs: Vec<f64> = (1..=10)
                .map(|seed| {
                    let o = execute(&rp, RunParams::new(seed, n, burn), ExecOptions::default()).map_err(|e| e.to_string())?;
                    Ok((o.estimate[0] - want).abs())
                })
                .collect::<Result<_, String>>()?;
            let err = median(errs);
            let secs = t.elapsed().as_secs_f64();
            ensure(err <= tol, || format!("{alg}/{model}: median error {err:.5} > {tol}"))?;
            ensure(secs <= 60.0, || format!("{alg}/{model}: {secs:.1}s > 60s"))?;
            worst.push(format!("{alg}/{model} {err:.4}"));
        }
    }
    Ok(format!("median |error| over 10 seeds: {}", worst.join(", ")))
}

/// Same run, or failures of the same class.
fn agree(a: &simpl::Result<Outcome>, b: &simpl::Result<Outcome>) -> bool {
    match (a, b) {
        (Ok(a), Ok(b)) => same_run(a, b),
        (Err(a), Err(b)) => a.class() == b.class(),
        _ => false,
    }
}

fn triple_equivalence() -> Check {
    let mut cells = 0;
    let tc = toolchain();
    let mut c_cells = 0;
    for model in MODELS {
        let net = net(model);
        for alg in ALGORITHMS {
            let prog = program(alg, &net);
            let n = small_n(model);
            let burn = if matches!(alg, "gibbs" | "mh") { n / 4 } else { 0 };
            for seed in [1, 2, 3] {
                let p = RunParams::new(seed, n, burn);
                let want = interpret(&prog, &net, p);
                for caching in [false, true] {
                    let rp = residual(alg, &net, caching);
                    let got = execute(&rp, p, ExecOptions::default());
                    ensure(agree(&want, &got), || format!("{alg}/{model} seed {seed} caching={caching}: interp and residual differ"))?;
                    if caching && tc.is_some() && seed == 1 {
                        let c = compile_and_run(&rp, p, EmitOptions::default()).map(|r| r.outcome);
                        ensure(agree(&got, &c), || format!("{alg}/{model}: C differs from residual"))?;
                        c_cells += 1;
                    }
                }
            }
            cells += 1;
        }
    }
    let net = net("burglary");
    let p = RunParams::new(1, 200_000, 0);
    let a = interpret(&program("likelihood", &net), &net, p).map_err(|e| e.to_string())?;
    let b = execute(&residual("likelihood", &net, false), p, ExecOptions::default()).map_err(|e| e.to_string())?;
    ensure(same_run(&a, &b), || "burglary likelihood N=200000 seed 1: pe differs from interp".into())?;
    let c_note = if tc.is_some() { format!("C bit-exact on {c_cells} cells") } else { "C skipped, no compiler".into() };
    Ok(format!("interp = pe = pe-cache bit-exact on {cells} cells x 3 seeds; {c_note}"))
}

fn speedups() -> Check {
    let have_c = toolchain().is_some();
    let modes: Vec<Mode> = Mode::ALL.into_iter().filter(|&m| have_c || m != Mode::C).collect();
    let cfg = BenchConfig {
        n: 16,
        min_time: Duration::from_millis(300),
        repetitions: 5,
        ..BenchConfig::default()
    };
    let mut cells = Vec::new();
    for alg in ["likelihood", "gibbs"] {
        for model in ["burglary", "multiburglary"] {
            for &mode in &modes {
                cells.push(bench_cell(&cfg, alg, model, mode));
            }
        }
    }
    let report = assemble(cells);
    if let Some(c) = report.cells.iter().find(|c| c.error.is_some()) {
        return Err(format!("{}/{}/{}: {}", c.algorithm, c.model, c.mode, c.error.as_ref().unwrap()));
    }
    let mut notes = Vec::new();
    for d in &report.decomposition {
        let pe = d.pe_over_interp.unwrap_or(0.0);
        ensure(pe >= 1.5, || format!("{}/{}: pe/interp {pe:.2}x < 1.5x", d.algorithm, d.model))?;
        let mut note = format!("{}/{} pe/interp {pe:.1}x", d.algorithm, d.model);
        if have_c {
            let cc = d.c_over_cache.unwrap_or(0.0);
            let all = d.c_over_interp.unwrap_or(0.0);
            ensure(cc >= 3.0, || format!("{}/{}: c/pe-cache {cc:.2}x < 3x", d.algorithm, d.model))?;
            ensure(all >= 10.0, || format!("{}/{}: c/interp {all:.2}x < 10x", d.algorithm, d.model))?;
            note += &format!(" cache/pe {:.2}x c/pe-cache {cc:.1}x c/interp {all:.0}x", d.cache_over_pe.unwrap_or(0.0));
        }
        notes.push(note);
    }
    if !have_c {
        notes.push("C gates skipped, no compiler".into());
    }
    Ok(notes.join("; "))
}

fn cache_soundness() -> Check {
    let tc = toolchain();
    let p = RunParams::new(1, 100_000, 0);
    for model in ["burglary", "multiburglary"] {
        let rp = residual("likelihood", &net(model), true);
        execute(&rp, p, ExecOptions { debug_cache: true }).map_err(|e| format!("{model}: {e}"))?;
        if tc.is_some() {
            compile_and_run(&rp, p, EmitOptions { debug_cache: true }).map_err(|e| format!("{model} (C): {e}"))?;
        }
    }
    let net = net("burglary");
    let rp = residual("likelihood", &net, true);
    let alarm = net.lookup("Alarm").unwrap();
    ensure(rp.caches.len() == 1 && rp.caches[0].keys == vec![CacheKey::Node(alarm)], || {
        format!("weight cache keys are {:?}", rp.caches.iter().map(|c| &c.keys).collect::<Vec<_>>())
    })?;
    let o = execute(&rp, p, ExecOptions::default()).map_err(|e| e.to_string())?;
    let entries = o.caches[0].entries;
    ensure(entries <= 2, || format!("weight table holds {entries} entries"))?;
    let backends = if tc.is_some() { "residual and C" } else { "residual (C skipped)" };
    Ok(format!("0 mismatches over 1e5 samples in {backends}; weight keyed on {{Alarm}} with {entries} entries"))
}

fn residual_structure() -> Check {
    let net = net("burglary");
    let rp = residual("likelihood", &net, true);
    let text = unparse(&residual("likelihood", &net, false)).map_err(|e| e.to_string())?;
    for word in ["parents", "children", "cpt", "true-cp"] {
        ensure(!text.contains(word), || format!("residual still mentions `{word}`"))?;
    }
    let m = rp.metrics();
    let runtime_n = rp.body.iter().filter(|s| matches!(s, Stmt::For { count: Operand::Temp(0), .. })).count();
    ensure(m.loops == 1 && runtime_n == 1, || format!("{} loops, {runtime_n} over N", m.loops))?;
    let lits = rp.float_literals();
    for x in [0.95, 0.94, 0.29, 0.001] {
        ensure(lits.contains(&x), || format!("Alarm constant {x} missing"))?;
    }
    let mut sizes = Vec::new();
    for len in [10, 100, 1000] {
        let net = parse_model(&BUNDLED[2].1.replace("1000", &len.to_string())).map_err(|e| e.to_string())?;
        sizes.push(residual("likelihood", &net, true).metrics().statements);
    }
    ensure(sizes.windows(2).all(|w| w[0] == w[1]), || format!("multiburglary statement counts vary: {sizes:?}"))?;
    Ok(format!("no structure ops, 1 loop over N, Alarm constants inlined; multiburglary {} statements at lengths 10/100/1000", sizes[0]))
}

fn error_paths() -> Check {
    let net = net("burglary");
    let specialize_fixture = |name: &str| {
        let p = custom_program(&fixture(name), &net).map_err(|e| e.to_string())?;
        match specialize(&p, &net, PeOptions { caching: true }) {
            Ok(_) => Err(format!("{name} specialized without error")),
            Err(e) => Ok(e),
        }
    };
    let e = specialize_fixture("bad_static.simpl")?;
    let msg = e.to_string();
    ensure(e.class() == ErrorClass::BadStatic && msg.starts_with("2:21:"), || format!("bad static: {msg}"))?;
    let e = specialize_fixture("unbounded_inline.simpl")?;
    let stack = e.to_string();
    ensure(e.class() == ErrorClass::NonTermination && stack.contains("count-down <- count-down"), || format!("unbounded inline: {stack}"))?;
    let p = custom_program(&fixture("list_result.simpl"), &net).map_err(|e| e.to_string())?;
    let rp = specialize(&p, &net, PeOptions { caching: true }).map_err(|e| e.to_string())?;
    let e = match emit_c(&rp, "list_result", EmitOptions::default()) {
        Ok(_) => return Err("list result emitted".into()),
        Err(e) => e,
    };
    ensure(e.class() == ErrorClass::Unsupported, || format!("emission: {e}"))?;
    Ok(format!("located `{msg}`; inline stack reported; emission refused ({e})"))
}

fn main() {
    let mut r = Report { failed: 0 };
    r.line("oracle-correctness", oracle_correctness());
    r.line("triple-equivalence", triple_equivalence());
    if std::env::var_os("SIMPL_SKIP_TIMING").is_some() {
        r.line("speedup-decomposition", Ok("skipped, SIMPL_SKIP_TIMING is set".into()));
    } else {
        r.line("speedup-decomposition", speedups());
    }
    r.line("cache-soundness", cache_soundness());
    r.line("residual-structure", residual_structure());
    r.line("error-paths", error_paths());
    let standalone = if r.failed > 0 {
        Err(format!("{} criteria failed", r.failed))
    } else if toolchain().is_none() {
        Ok("primary crate only; emitted-C checks skipped without a compiler".into())
    } else {
        Ok("primary crate only; no secondary component in the workspace".into())
    };
    r.line("standalone-suite", standalone);
    if r.failed > 0 {
        std::process::exit(1);
    }
}
