//! Gibbs sampling on a thousand-house network. The residual is the same
//! size whatever the number of houses; only loop bounds change.

use std::time::Instant;

use simpl::algorithms::Algorithm;
use simpl::emit_c::{compile_and_run, EmitOptions, Toolchain};
use simpl::exec::{execute, ExecOptions};
use simpl::interp::RunParams;
use simpl::model::{exact_posterior, load_model};
use simpl::pe::{specialize, PeOptions};

fn main() -> simpl::Result<()> {
    let (_, net) = load_model("multiburglary")?;
    let rp = specialize(&Algorithm::by_name("gibbs")?.program(&net)?, &net, PeOptions::default())?;
    println!("residual: {:?}", rp.metrics());
    let exact = exact_posterior(&net)?;

    let params = RunParams::new(1, 2_000, 200);
    let t = Instant::now();
    let r = execute(&rp, params, ExecOptions::default())?;
    println!("residual N=2000   {:.4} (exact {exact:.4}) in {:.2?}", r.estimate[0], t.elapsed());

    if Toolchain::detect().is_some() {
        let params = RunParams::new(1, 50_000, 2_000);
        let c = compile_and_run(&rp, params, EmitOptions::default())?;
        println!(
            "C        N=50000  {:.4} (exact {exact:.4}) in {:.1} ms",
            c.outcome.estimate[0],
            c.elapsed_ns as f64 / 1e6
        );
    }
    Ok(())
}
