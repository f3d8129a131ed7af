//! Writes the C translation of specialized Gibbs sampling for CSI and, when
//! a compiler is available, runs it against the in-process residual.
//!
//! Usage: cargo run --example emit_c [-- OUT_DIR]

use simpl::algorithms::Algorithm;
use simpl::emit_c::{emit_c, run_compiled, EmitOptions, Toolchain};
use simpl::exec::{execute, ExecOptions};
use simpl::interp::RunParams;
use simpl::model::load_model;
use simpl::pe::{specialize, PeOptions};

fn main() -> simpl::Result<()> {
    let out = std::env::args().nth(1).map_or_else(|| std::env::temp_dir().join("simpl-emit"), Into::into);
    std::fs::create_dir_all(&out)?;
    let (_, net) = load_model("csi")?;
    let rp = specialize(&Algorithm::by_name("gibbs")?.program(&net)?, &net, PeOptions::default())?;
    let unit = emit_c(&rp, "gibbs_csi", EmitOptions::default())?;
    let path = unit.write_to(&out)?;
    println!("wrote {} ({} lines)", path.display(), unit.source.lines().count());
    println!("{}", serde_json::to_string_pretty(&unit.manifest).unwrap());

    let Some(tc) = Toolchain::detect() else {
        println!("no C compiler found; skipping the run");
        return Ok(());
    };
    let exe = tc.compile(&unit, &out)?;
    let params = RunParams::new(5, 200_000, 2_000);
    let c = run_compiled(&exe, params)?;
    let r = execute(&rp, params, ExecOptions::default())?;
    println!("C        {:?} in {:.1} ms", c.outcome.estimate, c.elapsed_ns as f64 / 1e6);
    println!("residual {:?}", r.estimate);
    println!("bit-identical: {}", c.outcome.estimate == r.estimate);
    Ok(())
}
