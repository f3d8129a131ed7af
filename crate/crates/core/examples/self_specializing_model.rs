//! The model representation left after specialization: one variable or
//! array per free node, constants for evidence, no graph.

use simpl::emit_c::{emit_c, EmitOptions};
use simpl::model::{load_model, Repr, BUNDLED};
use simpl::pe::{specialize, PeOptions};

fn main() -> simpl::Result<()> {
    for (name, _) in BUNDLED {
        let (_, net) = load_model(name)?;
        let program = simpl::algorithms::Algorithm::by_name("gibbs")?.program(&net)?;
        let rp = specialize(&program, &net, PeOptions::default())?;
        println!("{name}");
        for (node, repr) in net.nodes.iter().zip(&rp.plan.reprs) {
            let shown = match repr {
                Repr::ConstArray(v) => format!("ConstArray of {} ({} true)", v.len(), v.iter().filter(|&&b| b).count()),
                other => format!("{other:?}"),
            };
            println!("  {:<11} {shown}", node.name);
        }
        let unit = emit_c(&rp, name, EmitOptions::default())?;
        for line in unit.source.lines().filter(|l| l.starts_with("static bool") || l.starts_with("static const bool")) {
            println!("  | {}", &line[..line.len().min(72)]);
        }
    }
    Ok(())
}
