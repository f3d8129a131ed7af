//! Benchmark harness: timed runs over (algorithm × model × mode) cells,
//! speedups against the interpreter, and an on-disk oracle cache.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::{Hash, Hasher};
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::exec::CacheStats;
use crate::interp::RunParams;
use crate::model::{BayesNet, OracleReport};
use crate::pipeline::{Mode, Prepared, RunConfig};
use crate::residual::Metrics;

/// Relative spread above which a cell's timings are flagged.
pub const SPREAD_LIMIT: f64 = 0.10;

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub algorithms: Vec<String>,
    pub models: Vec<String>,
    pub modes: Vec<Mode>,
    /// Starting sample count; scaled up until a run takes `min_time`.
    pub n: i64,
    pub max_n: i64,
    pub min_time: Duration,
    pub seed: u64,
    pub repetitions: usize,
    pub oracle_dir: Option<PathBuf>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            algorithms: ["likelihood", "rejection", "gibbs", "mh"].map(String::from).to_vec(),
            models: ["burglary", "csi", "multiburglary"].map(String::from).to_vec(),
            modes: Mode::ALL.to_vec(),
            n: 256,
            max_n: 1 << 26,
            min_time: Duration::from_millis(500),
            seed: 1,
            repetitions: 10,
            oracle_dir: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchCell {
    pub algorithm: String,
    pub model: String,
    pub mode: Mode,
    pub n: i64,
    pub burn: i64,
    pub repetitions: usize,
    pub estimate: Vec<f64>,
    pub oracle: Option<f64>,
    pub abs_error: Option<f64>,
    /// Per-sample times in nanoseconds.
    pub mean_ns: f64,
    pub median_ns: f64,
    pub min_ns: f64,
    pub max_ns: f64,
    /// (max − min) / mean.
    pub spread: f64,
    pub flagged: bool,
    pub speedup_vs_interp: Option<f64>,
    pub cache: Vec<CacheStats>,
    pub metrics: Option<Metrics>,
    pub error: Option<String>,
}

/// Speedup of each stage over the previous one, from medians.
#[derive(Debug, Clone, Serialize)]
pub struct Decomposition {
    pub algorithm: String,
    pub model: String,
    pub pe_over_interp: Option<f64>,
    pub cache_over_pe: Option<f64>,
    pub c_over_cache: Option<f64>,
    pub c_over_interp: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub cells: Vec<BenchCell>,
    pub decomposition: Vec<Decomposition>,
    pub compiler: Vec<String>,
}

impl BenchReport {
    pub fn cell(&self, algorithm: &str, model: &str, mode: Mode) -> Option<&BenchCell> {
        self.cells
            .iter()
            .find(|c| c.algorithm == algorithm && c.model == model && c.mode == mode)
    }

    pub fn decomposition_for(&self, algorithm: &str, model: &str) -> Option<&Decomposition> {
        self.decomposition
            .iter()
            .find(|d| d.algorithm == algorithm && d.model == model)
    }

    /// Human-readable table.
    pub fn table(&self) -> String {
        let mut s = format!(
            "{:<11} {:<14} {:<9} {:>10} {:>12} {:>9} {:>8} {:>9} {:>6}\n",
            "algorithm", "model", "mode", "N", "ns/sample", "spread", "speedup", "error", "flag"
        );
        for c in &self.cells {
            if let Some(e) = &c.error {
                s += &format!("{:<11} {:<14} {:<9} error: {e}\n", c.algorithm, c.model, c.mode.as_str());
                continue;
            }
            s += &format!(
                "{:<11} {:<14} {:<9} {:>10} {:>12.1} {:>8.1}% {:>8} {:>9} {:>6}\n",
                c.algorithm,
                c.model,
                c.mode.as_str(),
                c.n,
                c.median_ns,
                c.spread * 100.0,
                c.speedup_vs_interp.map_or("-".into(), |x| format!("{x:.1}x")),
                c.abs_error.map_or("-".into(), |x| format!("{x:.4}")),
                if c.flagged { ">10%" } else { "" }
            );
        }
        s += "\nspeedup decomposition (median ns/sample ratios)\n";
        s += &format!(
            "{:<11} {:<14} {:>9} {:>9} {:>9} {:>9}\n",
            "algorithm", "model", "pe/interp", "cache/pe", "c/cache", "c/interp"
        );
        let f = |x: Option<f64>| x.map_or("-".into(), |x| format!("{x:.2}x"));
        for d in &self.decomposition {
            s += &format!(
                "{:<11} {:<14} {:>9} {:>9} {:>9} {:>9}\n",
                d.algorithm,
                d.model,
                f(d.pe_over_interp),
                f(d.cache_over_pe),
                f(d.c_over_cache),
                f(d.c_over_interp)
            );
        }
        s
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct OracleEntry {
    fingerprint: String,
    query: String,
    evidence: Vec<String>,
    probability: f64,
    evidence_probability: f64,
}

fn fingerprint(net: &BayesNet) -> String {
    let text = serde_json::to_string(net).expect("model serializes");
    let mut h = DefaultHasher::new();
    text.hash(&mut h);
    format!("{:016x}", h.finish())
}

/// Exact posterior for `net`, read from `dir/<name>.oracle.json` when that
/// entry matches the model, computed and stored otherwise.
pub fn cached_oracle(net: &BayesNet, name: &str, dir: &Path) -> Result<OracleReport> {
    let fp = fingerprint(net);
    let path = dir.join(format!("{name}.oracle.json"));
    if let Ok(text) = std::fs::read_to_string(&path) {
        if let Ok(e) = serde_json::from_str::<OracleEntry>(&text) {
            if e.fingerprint == fp {
                return Ok(OracleReport {
                    query: e.query,
                    evidence: e.evidence,
                    probability: e.probability,
                    evidence_probability: e.evidence_probability,
                });
            }
        }
    }
    let r = OracleReport::new(net)?;
    std::fs::create_dir_all(dir)?;
    let entry = OracleEntry {
        fingerprint: fp,
        query: r.query.clone(),
        evidence: r.evidence.clone(),
        probability: r.probability,
        evidence_probability: r.evidence_probability,
    };
    std::fs::write(&path, serde_json::to_string_pretty(&entry).expect("oracle serializes"))?;
    Ok(r)
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

fn burn_for(prep: &Prepared, n: i64) -> i64 {
    prep.default_burn.min(n / 2)
}

fn measure(cfg: &BenchConfig, prep: &Prepared, cell: &mut BenchCell) -> Result<()> {
    let mut n = cfg.n.max(1);
    let min_ns = cfg.min_time.as_nanos() as f64;
    loop {
        let t = prep.run(RunParams::new(cfg.seed, n, burn_for(prep, n)))?;
        let took = t.elapsed_ns.max(1) as f64;
        if took >= min_ns || n >= cfg.max_n {
            break;
        }
        let factor = (min_ns * 1.2 / took).clamp(2.0, 64.0);
        n = ((n as f64 * factor) as i64).min(cfg.max_n);
    }
    let burn = burn_for(prep, n);
    let mut per_sample = Vec::new();
    for r in 0..cfg.repetitions.max(1) as u64 {
        let t = prep.run(RunParams::new(cfg.seed.wrapping_add(r), n, burn))?;
        per_sample.push(t.elapsed_ns as f64 / n as f64);
        if r == 0 {
            cell.estimate = t.outcome.estimate;
            cell.cache = t.outcome.caches;
        }
    }
    let mean = per_sample.iter().sum::<f64>() / per_sample.len() as f64;
    let min = per_sample.iter().copied().fold(f64::INFINITY, f64::min);
    let max = per_sample.iter().copied().fold(0.0, f64::max);
    cell.n = n;
    cell.burn = burn;
    cell.repetitions = per_sample.len();
    cell.mean_ns = mean;
    cell.median_ns = median(&per_sample);
    cell.min_ns = min;
    cell.max_ns = max;
    cell.spread = (max - min) / mean;
    cell.flagged = cell.spread > SPREAD_LIMIT;
    Ok(())
}

fn empty_cell(algorithm: &str, model: &str, mode: Mode) -> BenchCell {
    BenchCell {
        algorithm: algorithm.to_string(),
        model: model.to_string(),
        mode,
        n: 0,
        burn: 0,
        repetitions: 0,
        estimate: Vec::new(),
        oracle: None,
        abs_error: None,
        mean_ns: 0.0,
        median_ns: 0.0,
        min_ns: 0.0,
        max_ns: 0.0,
        spread: 0.0,
        flagged: false,
        speedup_vs_interp: None,
        cache: Vec::new(),
        metrics: None,
        error: None,
    }
}

/// Measures one cell. Failures are recorded in the cell.
pub fn bench_cell(cfg: &BenchConfig, algorithm: &str, model: &str, mode: Mode) -> BenchCell {
    let mut cell = empty_cell(algorithm, model, mode);
    let run_cfg = RunConfig {
        algorithm: algorithm.to_string(),
        model: model.to_string(),
        mode,
        ..RunConfig::default()
    };
    let result = Prepared::new(&run_cfg).and_then(|prep| {
        cell.metrics = prep.metrics();
        let dir = cfg.oracle_dir.clone().unwrap_or_else(default_oracle_dir);
        if let Ok(o) = cached_oracle(&prep.net, &prep.model_name, &dir) {
            cell.oracle = Some(o.probability);
        }
        measure(cfg, &prep, &mut cell)
    });
    if let Err(e) = result {
        cell.error = Some(e.to_string());
    }
    if let (Some(o), Some(&p)) = (cell.oracle, cell.estimate.first()) {
        cell.abs_error = Some((p - o).abs());
    }
    cell
}

/// Fills in speedups and the decomposition table.
pub fn assemble(mut cells: Vec<BenchCell>) -> BenchReport {
    let mut base: HashMap<(String, String), f64> = HashMap::new();
    let mut pairs: Vec<(String, String)> = Vec::new();
    for c in &cells {
        let key = (c.algorithm.clone(), c.model.clone());
        if !pairs.contains(&key) {
            pairs.push(key.clone());
        }
        if c.mode == Mode::Interp && c.error.is_none() {
            base.insert(key, c.median_ns);
        }
    }
    for c in &mut cells {
        if c.error.is_none() {
            c.speedup_vs_interp = base.get(&(c.algorithm.clone(), c.model.clone())).map(|b| b / c.median_ns);
        }
    }
    let mut decomposition = Vec::new();
    for (alg, model) in pairs {
        let t = |m: Mode| {
            cells
                .iter()
                .find(|c| c.algorithm == alg && c.model == model && c.mode == m && c.error.is_none())
                .map(|c| c.median_ns)
        };
        let ratio = |a: Option<f64>, b: Option<f64>| Some(a? / b?);
        let (i, p, k, c) = (t(Mode::Interp), t(Mode::Pe), t(Mode::PeCache), t(Mode::C));
        decomposition.push(Decomposition {
            algorithm: alg,
            model,
            pe_over_interp: ratio(i, p),
            cache_over_pe: ratio(p, k),
            c_over_cache: ratio(k, c),
            c_over_interp: ratio(i, c),
        });
    }
    let mut compiler = vec![crate::emit_c::Toolchain::detect().map_or("cc".into(), |t| t.cc)];
    compiler.extend(crate::emit_c::CFLAGS.iter().map(|s| s.to_string()));
    BenchReport {
        cells,
        decomposition,
        compiler,
    }
}

/// Runs every requested cell sequentially.
pub fn benchmark(cfg: &BenchConfig) -> BenchReport {
    let mut cells = Vec::new();
    for alg in &cfg.algorithms {
        for model in &cfg.models {
            for &mode in &cfg.modes {
                cells.push(bench_cell(cfg, alg, model, mode));
            }
        }
    }
    assemble(cells)
}

pub fn default_oracle_dir() -> PathBuf {
    std::env::var_os("SIMPL_ORACLE_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("simpl-oracle"))
}
