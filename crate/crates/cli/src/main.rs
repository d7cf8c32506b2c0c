use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use wdg_offload::dot::{etg_set_to_dot, wdg_to_dot};
use wdg_offload::harness::{
    aggregate, bench, load_corpus, parse_fraction, run_strategy, write_corpus, write_csv, BenchOptions, SWEEP_FRACTIONS,
};
use wdg_offload::io::{plan_to_json, read_workflow, workflow_to_json};
use wdg_offload::solver::solved_etg_set;
use wdg_offload::{generate, offload_percentage, Error, GenSpec, RunConfig, Strategy};

#[derive(Parser)]
#[command(name = "wdg-offload", version, about = "Minimum-energy offloading of DAG workflows to edge servers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one workflow and write its plan.
    Solve {
        workflow: PathBuf,
        #[command(flatten)]
        run: RunArgs,
        /// Where to write the plan JSON (stdout when omitted).
        #[arg(long)]
        plan_out: Option<PathBuf>,
    },
    /// Run strategies over a corpus directory and write CSV rows.
    Bench {
        corpus: PathBuf,
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated strategies (defaults to the configured one).
        #[arg(long, value_delimiter = ',')]
        strategies: Vec<Strategy>,
        /// Sweep deadline fractions 0.7 to 1.4 instead of a single one.
        #[arg(long)]
        sweep: bool,
        #[arg(long, default_value_t = 1)]
        repeats: usize,
        /// Worker threads across instances.
        #[arg(long)]
        threads: Option<usize>,
        /// Write runtime_ms as 0 for byte-identical reruns.
        #[arg(long)]
        no_runtime: bool,
        /// CSV destination (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate random workflows.
    Gen {
        #[arg(long, default_value_t = 50)]
        tasks: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        local_fraction: Option<f64>,
        /// Chains only.
        #[arg(long)]
        sequential: bool,
        /// Write the benchmark corpus (sizes 10 to 100, seeds 0 to 9) into this directory.
        #[arg(long, conflicts_with = "out")]
        corpus: Option<PathBuf>,
        /// Output file (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export Graphviz files.
    Export {
        workflow: PathBuf,
        /// WDG DOT destination (stdout when omitted).
        #[arg(long)]
        dot: Option<PathBuf>,
        /// Directory for one DOT file per scenario ETG.
        #[arg(long)]
        etg_dot: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Run configuration JSON; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    strategy: Option<Strategy>,
    /// Fraction of the all-local makespan, or "inf".
    #[arg(long, allow_hyphen_values = true)]
    deadline_fraction: Option<String>,
    /// Metaheuristic seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    f_end: Option<f64>,
    #[arg(long)]
    f_edge: Option<f64>,
    #[arg(long)]
    p_end: Option<f64>,
    #[arg(long)]
    p_idle: Option<f64>,
    #[arg(long)]
    p_trans: Option<f64>,
    #[arg(long)]
    bandwidth: Option<f64>,
    #[arg(long)]
    servers: Option<usize>,
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig, Error> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::read(p)?,
            None => RunConfig::default(),
        };
        if let Some(s) = self.strategy {
            cfg.strategy = s;
        }
        if let Some(f) = &self.deadline_fraction {
            cfg.deadline_fraction = parse_fraction(f)?;
        }
        if let Some(s) = self.seed {
            cfg.metaheuristic.seed = s;
        }
        let env = &mut cfg.env;
        let overrides = [
            (&mut env.f_end, self.f_end),
            (&mut env.f_edge, self.f_edge),
            (&mut env.p_end, self.p_end),
            (&mut env.p_idle, self.p_idle),
            (&mut env.p_trans, self.p_trans),
            (&mut env.bandwidth, self.bandwidth),
        ];
        for (slot, v) in overrides {
            if let Some(v) = v {
                *slot = v;
            }
        }
        if let Some(n) = self.servers {
            env.edge_server_count = n;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), Error> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Parse(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn solve(workflow: &Path, run: &RunArgs, plan_out: Option<&Path>) -> Result<ExitCode, Error> {
    let cfg = run.resolve()?;
    let wdg = read_workflow(workflow)?;
    let (plan, ms) = run_strategy(cfg.strategy, &wdg, &cfg.solve_config(), &cfg.metaheuristic)?;
    let out = plan_out.map(Path::to_path_buf).or(cfg.plan_output.clone());
    write_out(out.as_deref(), &(plan_to_json(&plan) + "\n"))?;
    println!(
        "strategy={} energy_j={:.6} makespan_s={:.6} offload_pct={:.2} runtime_ms={:.3} feasible={}",
        cfg.strategy,
        plan.total_energy,
        plan.makespan,
        100.0 * offload_percentage(&plan.decisions),
        ms,
        plan.feasible
    );
    Ok(if plan.feasible { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

#[allow(clippy::too_many_arguments)]
fn run_bench(
    corpus: &Path,
    run: &RunArgs,
    strategies: &[Strategy],
    sweep: bool,
    repeats: usize,
    threads: Option<usize>,
    no_runtime: bool,
    out: Option<&Path>,
) -> Result<ExitCode, Error> {
    let cfg = run.resolve()?;
    let instances = load_corpus(corpus)?;
    if instances.is_empty() {
        return Err(Error::Parse(format!("{}: no workflow files", corpus.display())));
    }
    let opts = BenchOptions {
        strategies: if strategies.is_empty() {
            vec![cfg.strategy]
        } else {
            strategies.to_vec()
        },
        fractions: if sweep {
            SWEEP_FRACTIONS.to_vec()
        } else {
            vec![cfg.deadline_fraction]
        },
        repeats: repeats.max(1),
        env: cfg.env,
        metaheuristic: cfg.metaheuristic,
        threads,
        record_runtime: !no_runtime,
    };
    let mut rows = bench(&instances, &opts);
    let failed = rows.iter().filter(|r| !r.error.is_empty()).count();
    rows.extend(aggregate(&rows));
    let mut buf = Vec::new();
    write_csv(&rows, &mut buf)?;
    let out = out.map(Path::to_path_buf).or(cfg.csv_output.clone());
    write_out(out.as_deref(), &String::from_utf8_lossy(&buf))?;
    if failed > 0 {
        eprintln!("{failed} run(s) failed; see the error column");
    }
    Ok(ExitCode::SUCCESS)
}

fn gen(
    tasks: usize,
    seed: u64,
    local_fraction: Option<f64>,
    sequential: bool,
    corpus: Option<&Path>,
    out: Option<&Path>,
) -> Result<ExitCode, Error> {
    let mut spec = GenSpec::new(tasks, seed);
    if let Some(f) = local_fraction {
        spec.local_fraction = f;
    }
    if sequential {
        spec = spec.sequential();
    }
    if let Some(dir) = corpus {
        let sizes: Vec<usize> = (1..=10).map(|k| 10 * k).collect();
        let seeds: Vec<u64> = (0..10).collect();
        let paths = write_corpus(dir, &sizes, &seeds, &spec)?;
        eprintln!("wrote {} workflows to {}", paths.len(), dir.display());
        return Ok(ExitCode::SUCCESS);
    }
    write_out(out, &(workflow_to_json(&generate(&spec)?) + "\n"))?;
    Ok(ExitCode::SUCCESS)
}

fn export(workflow: &Path, dot: Option<&Path>, etg_dot: Option<&Path>) -> Result<ExitCode, Error> {
    let wdg = read_workflow(workflow)?;
    write_out(dot, &wdg_to_dot(&wdg))?;
    if let Some(dir) = etg_dot {
        let (set, mb) = solved_etg_set(&wdg, &RunConfig::default().solve_config())?;
        std::fs::create_dir_all(dir).map_err(|e| Error::Parse(format!("{}: {e}", dir.display())))?;
        for (k, doc) in etg_set_to_dot(&set, &mb).iter().enumerate() {
            let p = dir.join(format!("etg_{k}.dot"));
            std::fs::write(&p, doc).map_err(|e| Error::Parse(format!("{}: {e}", p.display())))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Solve { workflow, run, plan_out } => solve(workflow, run, plan_out.as_deref()),
        Command::Bench {
            corpus,
            run,
            strategies,
            sweep,
            repeats,
            threads,
            no_runtime,
            out,
        } => run_bench(corpus, run, strategies, *sweep, *repeats, *threads, *no_runtime, out.as_deref()),
        Command::Gen {
            tasks,
            seed,
            local_fraction,
            sequential,
            corpus,
            out,
        } => gen(*tasks, *seed, *local_fraction, *sequential, corpus.as_deref(), out.as_deref()),
        Command::Export { workflow, dot, etg_dot } => export(workflow, dot.as_deref(), etg_dot.as_deref()),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
