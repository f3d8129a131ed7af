//! Times each execution mode on a few cells and prints how much each stage
//! contributes. Pass a minimum run time in milliseconds to change the
//! default of 200.

use std::time::Duration;

use simpl::bench::{benchmark, BenchConfig};
use simpl::emit_c::Toolchain;
use simpl::pipeline::Mode;

fn main() {
    let ms = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(200);
    let cfg = BenchConfig {
        algorithms: vec!["likelihood".into(), "gibbs".into()],
        models: vec!["burglary".into(), "csi".into()],
        modes: Mode::ALL.into_iter().filter(|&m| m != Mode::C || Toolchain::detect().is_some()).collect(),
        n: 64,
        min_time: Duration::from_millis(ms),
        repetitions: 3,
        ..BenchConfig::default()
    };
    let report = benchmark(&cfg);
    print!("{}", report.table());
}
