//! Runs likelihood weighting on the Burglary net with the reference
//! interpreter and compares against exact enumeration.

use simpl::algorithms::Algorithm;
use simpl::interp::{interpret, RunParams};
use simpl::model::{exact_posterior, load_model};

fn main() -> simpl::Result<()> {
    let (_, net) = load_model("burglary")?;
    let program = Algorithm::by_name("likelihood")?.program(&net)?;
    let exact = exact_posterior(&net)?;
    for n in [1_000, 10_000, 100_000] {
        let out = interpret(&program, &net, RunParams::new(1, n, 0))?;
        println!(
            "N={n:>6}  P(Burglary | JohnCalls, MaryCalls) = {:.4}  exact {exact:.4}  flips {}",
            out.estimate[0], out.effects.flips
        );
    }
    Ok(())
}
