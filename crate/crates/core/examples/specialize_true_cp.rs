//! Specializes a single CPT lookup against the Burglary net. The parents
//! walk and CPT indexing disappear, leaving branches on Burglary and
//! Earthquake over inlined constants.

use simpl::algorithms::custom_program;
use simpl::model::load_model;
use simpl::pe::{specialize, PeOptions};
use simpl::residual::dump;

const SOURCE: &str = "
(sample net evidence)
(true-cp Alarm 0)
";

fn main() -> simpl::Result<()> {
    let (_, net) = load_model("burglary")?;
    let program = custom_program(SOURCE, &net)?;
    let rp = specialize(&program, &net, PeOptions { caching: false })?;
    print!("{}", dump(&rp));
    println!("constants: {:?}", rp.float_literals());
    Ok(())
}
