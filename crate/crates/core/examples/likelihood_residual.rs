//! Specializes likelihood weighting for Burglary, prints the residual and
//! checks that it reproduces the interpreter bit for bit.

use simpl::algorithms::Algorithm;
use simpl::exec::{execute, ExecOptions};
use simpl::interp::{interpret, RunParams};
use simpl::model::load_model;
use simpl::pe::{specialize, PeOptions};
use simpl::residual::dump;

fn main() -> simpl::Result<()> {
    let (_, net) = load_model("burglary")?;
    let program = Algorithm::by_name("likelihood")?.program(&net)?;
    let rp = specialize(&program, &net, PeOptions::default())?;
    print!("{}", dump(&rp));
    println!("{:?}", rp.metrics());

    let params = RunParams::new(1, 200_000, 0);
    let a = interpret(&program, &net, params)?;
    let b = execute(&rp, params, ExecOptions::default())?;
    println!("interpreter {:?}", a.estimate);
    println!("residual    {:?}", b.estimate);
    println!("bit-identical: {}", a.estimate == b.estimate && a.rng == b.rng);
    Ok(())
}
