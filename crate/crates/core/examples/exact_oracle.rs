//! Exact posteriors of the bundled models, with the brute-force
//! enumeration as a cross-check where it is small enough.

use simpl::model::{load_model, naive_posterior, OracleReport, BUNDLED};

fn main() -> simpl::Result<()> {
    for (name, _) in BUNDLED {
        let (_, net) = load_model(name)?;
        let r = OracleReport::new(&net)?;
        let naive = naive_posterior(&net).map_or("too large".into(), |p| format!("{p:.6}"));
        println!(
            "{name:<14} P({} | {}) = {:.6}  P(evidence) = {:.3e}  naive {naive}",
            r.query,
            if r.evidence.len() > 3 { format!("{} evidence values", r.evidence.len()) } else { r.evidence.join(", ") },
            r.probability,
            r.evidence_probability
        );
    }
    Ok(())
}
