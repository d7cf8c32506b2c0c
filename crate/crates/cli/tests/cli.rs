use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use wdg_offload::harness::write_corpus;
use wdg_offload::io::{parse_plan, read_workflow};
use wdg_offload::solver::solved_etg_set;
use wdg_offload::{GenSpec, Placement, SolveConfig};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wdg-offload"))
}

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/single_block.json")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn solve_fixture_matches_brute_force() {
    let dir = tempfile::tempdir().unwrap();
    let plan_path = dir.path().join("plan.json");
    let fix = fixture();
    let o = run(&["solve", fix.to_str().unwrap(), "--deadline-fraction", "inf", "--plan-out", plan_path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("feasible=true"));
    let plan = parse_plan(&std::fs::read_to_string(&plan_path).unwrap()).unwrap();
    assert!(plan.feasible);
    assert_eq!(plan.decisions[&wdg_offload::TaskId(8)], Placement::Local);

    let bf_path = dir.path().join("bf.json");
    let o = run(&[
        "solve",
        fix.to_str().unwrap(),
        "--strategy",
        "brute_force",
        "--deadline-fraction",
        "inf",
        "--plan-out",
        bf_path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let bf = parse_plan(&std::fs::read_to_string(&bf_path).unwrap()).unwrap();
    assert!((plan.total_energy - bf.total_energy).abs() <= 1e-9 * bf.total_energy);
}

#[test]
fn solve_prints_plan_without_destination() {
    let fix = fixture();
    let o = run(&["solve", fix.to_str().unwrap(), "--strategy", "greedy"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let json_end = out.rfind('}').unwrap();
    parse_plan(&out[..=json_end]).unwrap();
    assert!(out.lines().last().unwrap().starts_with("strategy=greedy energy_j="));
}

#[test]
fn parse_and_validation_failures_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    assert_eq!(run(&["solve", bad.to_str().unwrap()]).status.code(), Some(1));

    let fix = fixture();
    let o = run(&["solve", fix.to_str().unwrap(), "--bandwidth", "0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bandwidth"));

    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"deadline_fraction": 0}"#).unwrap();
    let o = run(&["solve", fix.to_str().unwrap(), "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("deadline_fraction"));

    assert_eq!(run(&["solve"]).status.code(), Some(1));
    assert_eq!(run(&["solve", fix.to_str().unwrap(), "--strategy", "magic"]).status.code(), Some(1));
}

#[test]
fn impossible_deadline_exits_two_with_local_plan() {
    let dir = tempfile::tempdir().unwrap();
    let wf = dir.path().join("heavy.json");
    assert!(run(&["gen", "--tasks", "60", "--seed", "4", "--out", wf.to_str().unwrap()]).status.success());
    let plan_path = dir.path().join("plan.json");
    let o = run(&["solve", wf.to_str().unwrap(), "--deadline-fraction", "0.01", "--plan-out", plan_path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let plan = parse_plan(&std::fs::read_to_string(&plan_path).unwrap()).unwrap();
    assert!(!plan.feasible);
    assert!(plan.decisions.values().all(|&p| p == Placement::Local));
}

#[test]
fn config_file_and_flags_combine() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"strategy": "all_in_end", "deadline_fraction": "inf", "env": {"p_end": 1.0}}"#).unwrap();
    let fix = fixture();
    let o = run(&["solve", fix.to_str().unwrap(), "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("strategy=all_in_end"));
    assert!(stdout(&o).contains("offload_pct=0.00"));
    let o = run(&["solve", fix.to_str().unwrap(), "--config", cfg.to_str().unwrap(), "--strategy", "graph4edge"]);
    assert!(stdout(&o).contains("strategy=graph4edge"));
}

fn small_corpus(dir: &Path) {
    let seeds: Vec<u64> = (0..10).collect();
    write_corpus(dir, &[10], &seeds, &GenSpec::default()).unwrap();
}

#[test]
fn bench_rows_and_aggregates() {
    let dir = tempfile::tempdir().unwrap();
    small_corpus(dir.path());
    let o = run(&["bench", dir.path().to_str().unwrap(), "--strategies", "graph4edge,greedy"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("kind,instance,tasks,strategy,deadline_fraction,repeat"));
    assert_eq!(lines.iter().filter(|l| l.starts_with("run,")).count(), 20);
    assert_eq!(lines.iter().filter(|l| l.starts_with("mean,")).count(), 2);
}

#[test]
fn bench_sweep_offload_share_rises() {
    let dir = tempfile::tempdir().unwrap();
    let seeds = [3u64];
    write_corpus(dir.path(), &[40], &seeds, &GenSpec::default()).unwrap();
    let o = run(&["bench", dir.path().to_str().unwrap(), "--sweep"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut rdr = csv_rows(&text);
    rdr.retain(|r| r[0] == "run");
    assert_eq!(rdr.len(), 8);
    let pct: Vec<f64> = rdr.iter().map(|r| r[8].parse().unwrap()).collect();
    assert!(pct.windows(2).all(|w| w[0] <= w[1]), "{pct:?}");
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn export_wdg_and_etgs() {
    let dir = tempfile::tempdir().unwrap();
    let fix = fixture();
    let o = run(&["export", fix.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).matches("shape=").count(), 10);

    let etg_dir = dir.path().join("etg");
    let dot = dir.path().join("wdg.dot");
    let o = run(&["export", fix.to_str().unwrap(), "--dot", dot.to_str().unwrap(), "--etg-dot", etg_dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(dot.exists());
    let (set, _) = solved_etg_set(&read_workflow(&fix).unwrap(), &SolveConfig::default()).unwrap();
    assert_eq!(std::fs::read_dir(&etg_dir).unwrap().count(), set.len());
    assert_eq!(set.len(), 2);

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "[]").unwrap();
    assert_eq!(run(&["export", bad.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn gen_is_deterministic() {
    let a = stdout(&run(&["gen", "--tasks", "30", "--seed", "5"]));
    let b = stdout(&run(&["gen", "--tasks", "30", "--seed", "5"]));
    assert_eq!(a, b);
    let w = wdg_offload::io::parse_workflow(&a).unwrap();
    assert_eq!(w.real_task_count(), 30);
    let chain = stdout(&run(&["gen", "--tasks", "12", "--sequential"]));
    assert!(wdg_offload::is_linear(&wdg_offload::io::parse_workflow(&chain).unwrap()));
}
