//! Lists the keys discovered for every `cache` site, then runs each
//! residual with hit verification switched on.

use simpl::algorithms::ALGORITHMS;
use simpl::exec::{execute, ExecOptions};
use simpl::interp::RunParams;
use simpl::model::{load_model, BUNDLED};
use simpl::pe::{specialize, PeOptions};
use simpl::residual::CacheKey;

fn main() -> simpl::Result<()> {
    for (model, _) in BUNDLED {
        let (_, net) = load_model(model)?;
        for alg in ALGORITHMS {
            let rp = specialize(&alg.program(&net)?, &net, PeOptions::default())?;
            let n = if model == "multiburglary" { 500 } else { 20_000 };
            let out = execute(&rp, RunParams::new(1, n, n / 10), ExecOptions { debug_cache: true });
            for (i, c) in rp.caches.iter().enumerate() {
                let keys: Vec<String> = c
                    .keys
                    .iter()
                    .map(|k| match k {
                        CacheKey::Node(id) => net.node(*id).name.clone(),
                        other => format!("{other:?}"),
                    })
                    .collect();
                let stats = out.as_ref().ok().map(|o| o.caches[i]);
                println!(
                    "{:<14} {:<11} k{i} [{}] {} {}",
                    model,
                    alg.name,
                    keys.join(" "),
                    if c.is_dense() { "dense" } else { "hashed" },
                    stats.map_or("-".into(), |s| format!("hits {} misses {} entries {}", s.hits, s.misses, s.entries))
                );
            }
            if let Err(e) = out {
                println!("{model:<14} {:<11} {e}", alg.name);
            }
        }
    }
    Ok(())
}
