#![allow(dead_code)]

use simpl::algorithms::Algorithm;
use simpl::dsl::Program;
use simpl::emit_c::Toolchain;
use simpl::interp::Outcome;
use simpl::model::{load_model, BayesNet};
use simpl::pe::{specialize, PeOptions};
use simpl::residual::ResidualProgram;

pub const ALGORITHMS: [&str; 4] = ["likelihood", "rejection", "gibbs", "mh"];
pub const MODELS: [&str; 3] = ["burglary", "csi", "multiburglary"];

pub fn net(name: &str) -> BayesNet {
    load_model(name).unwrap().1
}

pub fn program(alg: &str, net: &BayesNet) -> Program {
    Algorithm::by_name(alg).unwrap().program(net).unwrap()
}

pub fn residual(alg: &str, net: &BayesNet, caching: bool) -> ResidualProgram {
    specialize(&program(alg, net), net, PeOptions { caching }).unwrap()
}

pub fn fixture(name: &str) -> String {
    let path = format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(path).unwrap()
}

pub fn toolchain() -> Option<Toolchain> {
    Toolchain::detect()
}

pub fn bits(xs: &[f64]) -> Vec<u64> {
    xs.iter().map(|x| x.to_bits()).collect()
}

/// Same estimate bits, effect counts and generator state.
pub fn same_run(a: &Outcome, b: &Outcome) -> bool {
    bits(&a.estimate) == bits(&b.estimate) && a.effects == b.effects && a.rng == b.rng
}

/// Sample count small enough for the interpreter on each model.
pub fn small_n(model: &str) -> i64 {
    if model == "multiburglary" {
        40
    } else {
        3000
    }
}

pub fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[m]
    } else {
        (xs[m - 1] + xs[m]) / 2.0
    }
}
