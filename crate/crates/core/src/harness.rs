//! Strategy dispatch, benchmark sweeps and CSV output.
//!
//! CSV columns, in order: `kind` (`run` or `mean`), `instance`, `tasks`,
//! `strategy`, `deadline_fraction`, `repeat`, `energy_j`, `makespan_s`,
//! `offload_pct`, `feasible`, `runtime_ms`, `error`. Mean rows aggregate
//! successful runs per (tasks, strategy, deadline_fraction); their
//! `feasible` is the feasible share and `repeat` is empty.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::baselines::{all_in_end, brute_force, ga, greedy, pso, MetaheuristicConfig};
use crate::env::EnvParams;
use crate::error::{invalid, Error, Result};
use crate::evaluate::offload_percentage;
use crate::io::{read_workflow, workflow_to_json};
use crate::solver::{graph4edge_nonlinear, OffloadPlan, SolveConfig};
use crate::wdg::Wdg;
use crate::workloads::{generate, GenSpec};

/// Deadline fractions of the deadline sweep (70% to 140%).
pub const SWEEP_FRACTIONS: [f64; 8] = [0.7, 0.8, 0.9, 1.0, 1.1, 1.2, 1.3, 1.4];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    #[serde(rename = "graph4edge")]
    Graph4Edge,
    Greedy,
    AllInEnd,
    Pso,
    Ga,
    BruteForce,
}

impl Strategy {
    pub const ALL: [Strategy; 6] = [
        Strategy::Graph4Edge,
        Strategy::Greedy,
        Strategy::AllInEnd,
        Strategy::Pso,
        Strategy::Ga,
        Strategy::BruteForce,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Graph4Edge => "graph4edge",
            Strategy::Greedy => "greedy",
            Strategy::AllInEnd => "all_in_end",
            Strategy::Pso => "pso",
            Strategy::Ga => "ga",
            Strategy::BruteForce => "brute_force",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| invalid("strategy", format!("unknown strategy `{s}`")))
    }
}

/// Fractions are written as numbers, with `"inf"` for no deadline.
pub mod fraction_serde {
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(x) => Ok(x),
            Raw::Text(t) => parse_fraction(&t).map_err(serde::de::Error::custom),
        }
    }
}

pub fn parse_fraction(text: &str) -> Result<f64> {
    match text.trim() {
        "inf" | "infinity" | "none" => Ok(f64::INFINITY),
        t => t
            .parse::<f64>()
            .map_err(|_| invalid("deadline_fraction", format!("`{t}` is neither a number nor \"inf\""))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub env: EnvParams,
    pub strategy: Strategy,
    #[serde(with = "fraction_serde")]
    pub deadline_fraction: f64,
    pub metaheuristic: MetaheuristicConfig,
    pub plan_output: Option<PathBuf>,
    pub csv_output: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            env: EnvParams::default(),
            strategy: Strategy::Graph4Edge,
            deadline_fraction: 1.3,
            metaheuristic: MetaheuristicConfig::default(),
            plan_output: None,
            csv_output: None,
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.deadline_fraction.is_nan() || self.deadline_fraction <= 0.0 {
            return Err(invalid("deadline_fraction", "must be positive or \"inf\""));
        }
        self.env.validate()?;
        self.metaheuristic.validate()
    }

    pub fn solve_config(&self) -> SolveConfig {
        SolveConfig::new(self.env).with_fraction(self.deadline_fraction)
    }
}

/// Runs one strategy; the time covers the decision procedure only.
pub fn run_strategy(
    strategy: Strategy,
    wdg: &Wdg,
    cfg: &SolveConfig,
    mh: &MetaheuristicConfig,
) -> Result<(OffloadPlan, f64)> {
    let t = Instant::now();
    let plan = match strategy {
        Strategy::Graph4Edge => graph4edge_nonlinear(wdg, &BTreeSet::new(), cfg)?,
        Strategy::Pso => pso(wdg, cfg, mh)?,
        Strategy::Ga => ga(wdg, cfg, mh)?,
        Strategy::BruteForce => brute_force(wdg, cfg)?,
        Strategy::Greedy | Strategy::AllInEnd => {
            let d = if strategy == Strategy::Greedy {
                greedy(wdg, &cfg.env)
            } else {
                all_in_end(wdg)
            };
            let ms = t.elapsed().as_secs_f64() * 1e3;
            let plan = OffloadPlan::from_decisions(wdg, &d, &cfg.env, cfg.resolve_deadline(wdg))?;
            return Ok((plan, ms));
        }
    };
    Ok((plan, t.elapsed().as_secs_f64() * 1e3))
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub name: String,
    pub wdg: Wdg,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub kind: &'static str,
    pub instance: String,
    pub tasks: usize,
    pub strategy: Strategy,
    #[serde(serialize_with = "fraction_serde::serialize")]
    pub deadline_fraction: f64,
    pub repeat: Option<usize>,
    pub energy_j: f64,
    pub makespan_s: f64,
    pub offload_pct: f64,
    pub feasible: f64,
    pub runtime_ms: f64,
    pub error: String,
}

#[derive(Debug, Clone)]
pub struct BenchOptions {
    pub strategies: Vec<Strategy>,
    pub fractions: Vec<f64>,
    pub repeats: usize,
    pub env: EnvParams,
    pub metaheuristic: MetaheuristicConfig,
    /// Worker threads across instances; `None` uses all cores.
    pub threads: Option<usize>,
    /// When false, `runtime_ms` is written as 0 so reruns are byte-identical.
    pub record_runtime: bool,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            strategies: vec![Strategy::Graph4Edge],
            fractions: vec![1.3],
            repeats: 1,
            env: EnvParams::default(),
            metaheuristic: MetaheuristicConfig::default(),
            threads: None,
            record_runtime: true,
        }
    }
}

fn instance_rows(inst: &Instance, opts: &BenchOptions) -> Vec<BenchRow> {
    let mut rows = Vec::new();
    for &fraction in &opts.fractions {
        let cfg = SolveConfig::new(opts.env).with_fraction(fraction);
        for &strategy in &opts.strategies {
            for repeat in 0..opts.repeats {
                let mh = opts.metaheuristic.with_seed(opts.metaheuristic.seed.wrapping_add(repeat as u64));
                let mut row = BenchRow {
                    kind: "run",
                    instance: inst.name.clone(),
                    tasks: inst.wdg.real_task_count(),
                    strategy,
                    deadline_fraction: fraction,
                    repeat: Some(repeat),
                    energy_j: f64::NAN,
                    makespan_s: f64::NAN,
                    offload_pct: f64::NAN,
                    feasible: 0.0,
                    runtime_ms: 0.0,
                    error: String::new(),
                };
                match run_strategy(strategy, &inst.wdg, &cfg, &mh) {
                    Ok((plan, ms)) => {
                        row.energy_j = plan.total_energy;
                        row.makespan_s = plan.makespan;
                        row.offload_pct = 100.0 * offload_percentage(&plan.decisions);
                        row.feasible = if plan.feasible { 1.0 } else { 0.0 };
                        row.runtime_ms = if opts.record_runtime { ms } else { 0.0 };
                    }
                    Err(e) => row.error = e.to_string(),
                }
                rows.push(row);
            }
        }
    }
    rows
}

/// One row per (instance, fraction, strategy, repeat), in input order. A
/// failing strategy yields a row with `error` set; the sweep continues.
pub fn bench(instances: &[Instance], opts: &BenchOptions) -> Vec<BenchRow> {
    let run = || -> Vec<BenchRow> {
        instances
            .par_iter()
            .map(|inst| instance_rows(inst, opts))
            .collect::<Vec<_>>()
            .concat()
    };
    match opts.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(run),
            Err(_) => run(),
        },
        None => run(),
    }
}

/// Means of the successful runs per (tasks, strategy, deadline fraction).
pub fn aggregate(rows: &[BenchRow]) -> Vec<BenchRow> {
    let mut groups: BTreeMap<(usize, Strategy, u64), Vec<&BenchRow>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.kind == "run" && r.error.is_empty()) {
        groups
            .entry((r.tasks, r.strategy, r.deadline_fraction.to_bits()))
            .or_default()
            .push(r);
    }
    groups
        .into_iter()
        .map(|((tasks, strategy, bits), g)| {
            let mean = |f: fn(&BenchRow) -> f64| g.iter().map(|r| f(r)).sum::<f64>() / g.len() as f64;
            BenchRow {
                kind: "mean",
                instance: "*".into(),
                tasks,
                strategy,
                deadline_fraction: f64::from_bits(bits),
                repeat: None,
                energy_j: mean(|r| r.energy_j),
                makespan_s: mean(|r| r.makespan_s),
                offload_pct: mean(|r| r.offload_pct),
                feasible: mean(|r| r.feasible),
                runtime_ms: mean(|r| r.runtime_ms),
                error: String::new(),
            }
        })
        .collect()
}

pub fn write_csv<W: std::io::Write>(rows: &[BenchRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| Error::Parse(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Parse(e.to_string()))
}

pub fn corpus_file_name(tasks: usize, seed: u64) -> String {
    format!("n{tasks:03}_s{seed:02}.json")
}

/// Writes one flat workflow per (size, seed) and returns the paths.
pub fn write_corpus(dir: &Path, sizes: &[usize], seeds: &[u64], base: &GenSpec) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Parse(format!("{}: {e}", dir.display())))?;
    let mut paths = Vec::new();
    for &n in sizes {
        for &seed in seeds {
            let spec = GenSpec {
                task_count: n,
                seed: corpus_seed(n, seed),
                ..*base
            };
            let path = dir.join(corpus_file_name(n, seed));
            std::fs::write(&path, workflow_to_json(&generate(&spec)?))
                .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
            paths.push(path);
        }
    }
    Ok(paths)
}

/// Generator seed of corpus entry `(tasks, seed)`.
pub fn corpus_seed(tasks: usize, seed: u64) -> u64 {
    tasks as u64 * 1000 + seed
}

/// All `*.json` workflows in `dir`, sorted by file name.
pub fn load_corpus(dir: &Path) -> Result<Vec<Instance>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::Parse(format!("{}: {e}", dir.display())))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            Ok(Instance {
                name: p.file_stem().unwrap().to_string_lossy().into_owned(),
                wdg: read_workflow(&p)?,
            })
        })
        .collect()
}
