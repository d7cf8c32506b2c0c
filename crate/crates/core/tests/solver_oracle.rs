mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::{Shape, SHAPES};
use proptest::prelude::*;
use wdg_offload::solver::{decode_path, solve_with_stats};
use wdg_offload::{
    add_virtual_nodes, brute_force, graph4edge_linear, graph4edge_nonlinear, plan_energy, plan_makespan, EnvParams,
    MainBranchRule, Placement, SolveConfig, TaskId, TaskNode, Wdg,
};

fn none() -> BTreeSet<TaskId> {
    BTreeSet::new()
}

/// Minimum energy by recursive enumeration with its own energy sum.
fn recursive_min(w: &Wdg, env: &EnvParams) -> f64 {
    let tasks: Vec<usize> = w.real_tasks().filter(|&ix| !w.node(ix).local_only).collect();
    fn energy(w: &Wdg, env: &EnvParams, off: &[bool]) -> f64 {
        let mut e = 0.0;
        for ix in 0..w.len() {
            let n = w.node(ix);
            if !n.is_virtual() {
                e += if off[ix] {
                    n.workload / env.f_edge * env.p_idle
                } else {
                    n.workload / env.f_end * env.p_end
                };
            }
        }
        for (u, v) in w.edges() {
            if off[u] != off[v] {
                e += w.comm(u, v) / env.bandwidth * env.p_trans;
            }
        }
        e
    }
    fn go(w: &Wdg, env: &EnvParams, tasks: &[usize], k: usize, off: &mut Vec<bool>) -> f64 {
        if k == tasks.len() {
            return energy(w, env, off);
        }
        off[tasks[k]] = false;
        let a = go(w, env, tasks, k + 1, off);
        off[tasks[k]] = true;
        let b = go(w, env, tasks, k + 1, off);
        off[tasks[k]] = false;
        a.min(b)
    }
    go(w, env, &tasks, 0, &mut vec![false; w.len()])
}

/// 1 -> 2 -> {3 -> 4, 5 -> 6} -> 7 -> 8.
fn single_block(loads: [f64; 8]) -> Wdg {
    let edges = [(1, 2, 8.0), (2, 3, 16.0), (3, 4, 24.0), (2, 5, 32.0), (5, 6, 40.0), (4, 7, 48.0), (6, 7, 56.0), (7, 8, 64.0)];
    graph(&loads, &edges, 4.0)
}

fn graph(loads: &[f64], edges: &[(u32, u32, f64)], input: f64) -> Wdg {
    let mut nodes: Vec<TaskNode> = loads
        .iter()
        .enumerate()
        .map(|(i, &l)| TaskNode::regular(TaskId(i as u32 + 1), l))
        .collect();
    for &(a, b, mb) in edges {
        nodes[b as usize - 1] = nodes[b as usize - 1].clone().with_pred(TaskId(a), mb);
    }
    for n in &mut nodes {
        if n.comm_in.is_empty() {
            n.input = input;
        }
    }
    add_virtual_nodes(&Wdg::new(nodes).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn optimal_on_every_shape(seed in 0u64..1_000_000) {
        let shape = SHAPES[(seed % 4) as usize];
        let w = common::instance(shape, seed);
        prop_assume!(common::offloadable(&w) <= 12);
        let cfg = SolveConfig::default();
        let g = graph4edge_nonlinear(&w, &none(), &cfg).unwrap();
        let o = brute_force(&w, &cfg).unwrap();
        prop_assert!(common::rel_close(g.total_energy, o.total_energy, 1e-9), "{:?} seed {}: {} vs {}", shape, seed, g.total_energy, o.total_energy);
        let again = plan_energy(&w, &g.decisions, &cfg.env).unwrap();
        prop_assert_eq!(again.total_energy, g.total_energy);
    }

    #[test]
    fn main_branch_choice_does_not_change_energy(seed in 0u64..1_000_000) {
        let w = common::instance(Shape::Nested, seed);
        let a = graph4edge_nonlinear(&w, &none(), &SolveConfig::default()).unwrap();
        let b = graph4edge_nonlinear(&w, &none(), &SolveConfig::default().with_main_branch(MainBranchRule::LargestId)).unwrap();
        prop_assert!(common::rel_close(a.total_energy, b.total_energy, 1e-9));
    }

    #[test]
    fn deadlines_are_met_and_monotone(seed in 0u64..1_000_000) {
        let w = common::instance(SHAPES[(seed % 4) as usize], seed);
        let env = EnvParams::default();
        let mut prev = f64::INFINITY;
        for k in 5..=16 {
            let cfg = SolveConfig::new(env).with_fraction(k as f64 / 10.0);
            let plan = graph4edge_nonlinear(&w, &none(), &cfg).unwrap();
            if plan.feasible {
                let deadline = cfg.resolve_deadline(&w);
                prop_assert!(plan_makespan(&w, &plan.decisions, &env).unwrap() <= deadline);
                prop_assert!(plan.total_energy <= prev + 1e-12);
                prev = plan.total_energy;
            } else {
                prop_assert!(plan.decisions.values().all(|&p| p == Placement::Local));
                prop_assert!(prev.is_infinite(), "a looser deadline lost feasibility");
            }
        }
    }

    #[test]
    fn local_set_is_respected(seed in 0u64..1_000_000, pick in prop::collection::vec(any::<bool>(), 16)) {
        let w = common::instance(SHAPES[(seed % 4) as usize], seed);
        let local: BTreeSet<TaskId> = w.real_tasks().enumerate().filter(|(k, _)| pick[k % 16]).map(|(_, ix)| w.id(ix)).collect();
        let plan = graph4edge_nonlinear(&w, &local, &SolveConfig::default()).unwrap();
        for id in &local {
            prop_assert_eq!(plan.decisions[id], Placement::Local);
        }
        for ix in w.real_tasks().filter(|&ix| w.node(ix).local_only) {
            prop_assert_eq!(plan.decisions[&w.id(ix)], Placement::Local);
        }
        let oracle = brute_force(&w.with_local_set(&local).unwrap(), &SolveConfig::default()).unwrap();
        prop_assert!(common::rel_close(plan.total_energy, oracle.total_energy, 1e-9));
    }

    #[test]
    fn brute_force_matches_recursive_enumerator(seed in 0u64..1_000_000) {
        let w = common::instance(SHAPES[(seed % 4) as usize], seed);
        prop_assume!(common::offloadable(&w) <= 10);
        let env = EnvParams::default();
        let o = brute_force(&w, &SolveConfig::new(env)).unwrap();
        prop_assert!(common::rel_close(o.total_energy, recursive_min(&w, &env), 1e-12));
    }
}

#[test]
fn linear_shortcut_agrees() {
    for seed in 0..50 {
        let w = common::instance(Shape::Linear, seed);
        let cfg = SolveConfig::default().with_fraction(1.2);
        assert_eq!(
            graph4edge_linear(&w, &none(), &cfg).unwrap(),
            graph4edge_nonlinear(&w, &none(), &cfg).unwrap()
        );
    }
    let w = common::instance(Shape::SingleBlock, 3);
    assert!(graph4edge_linear(&w, &none(), &SolveConfig::default()).is_err());
}

#[test]
fn single_task_picks_cheaper_side() {
    let env = EnvParams::default();
    // z = 0.07; x + y = 0.8 + 0.0023.
    let heavy_data = graph(&[100.0], &[], 800.0);
    let plan = graph4edge_linear(&heavy_data, &none(), &SolveConfig::new(env)).unwrap();
    assert_eq!(plan.decisions[&TaskId(1)], Placement::Local);
    assert!((plan.total_energy - 0.07).abs() < 1e-12);
    // z = 0.91; x + y = 0.008 + 0.03.
    let heavy_compute = graph(&[1300.0], &[], 8.0);
    let plan = graph4edge_linear(&heavy_compute, &none(), &SolveConfig::new(env)).unwrap();
    assert_eq!(plan.decisions[&TaskId(1)], Placement::Offload);
    assert!((plan.total_energy - 0.038).abs() < 1e-12);
}

#[test]
fn single_block_matches_oracle_under_several_envs() {
    let loads = [300.0, 1200.0, 200.0, 1400.0, 900.0, 100.0, 1500.0, 600.0];
    let w = single_block(loads);
    for env in [
        EnvParams::default(),
        EnvParams { bandwidth: 10.0, ..EnvParams::default() },
        EnvParams { p_trans: 1.0, ..EnvParams::default() },
        EnvParams { f_edge: 500.0, p_idle: 0.5, ..EnvParams::default() },
    ] {
        let cfg = SolveConfig::new(env);
        let g = graph4edge_nonlinear(&w, &none(), &cfg).unwrap();
        let o = brute_force(&w, &cfg).unwrap();
        assert!(common::rel_close(g.total_energy, o.total_energy, 1e-9), "{env:?}");
    }
}

#[test]
fn nested_blocks_recurse_twice() {
    // 1 -> {2, 3 -> {4, 5} -> 6} -> 7: the main branch takes 2, so the
    // inner block only appears inside the outer sub-branch.
    let w = graph(
        &[500.0, 900.0, 1100.0, 700.0, 1300.0, 400.0, 800.0],
        &[(1, 2, 20.0), (1, 3, 30.0), (3, 4, 10.0), (3, 5, 15.0), (4, 6, 25.0), (5, 6, 5.0), (2, 7, 40.0), (6, 7, 12.0)],
        16.0,
    );
    let cfg = SolveConfig::default();
    let sol = solve_with_stats(&w, &none(), &cfg).unwrap();
    assert!(sol.stats.max_depth >= 2, "{:?}", sol.stats);
    let o = brute_force(&w, &cfg).unwrap();
    assert!(common::rel_close(sol.plan.total_energy, o.total_energy, 1e-9));
}

#[test]
fn decode_single_block_path_with_sub_plan() {
    let w = single_block([1.0; 8]);
    let ids = |v: &[u32]| v.iter().map(|&i| TaskId(i)).collect::<Vec<_>>();
    let ts = w.id(w.start().unwrap());
    let te = w.id(w.end().unwrap());
    let mut mb = vec![ts];
    mb.extend(ids(&[1, 2, 3, 4, 7, 8]));
    mb.push(te);
    let sub = BTreeMap::from([(0usize, BTreeMap::from([(TaskId(5), Placement::Local), (TaskId(6), Placement::Offload)]))]);
    let d = decode_path(&w, &mb, &[ts, TaskId(2), TaskId(7), te], &sub);
    let expected: BTreeMap<TaskId, Placement> = [
        (1, Placement::Local),
        (2, Placement::Offload),
        (3, Placement::Local),
        (4, Placement::Local),
        (5, Placement::Local),
        (6, Placement::Offload),
        (7, Placement::Offload),
        (8, Placement::Local),
    ]
    .into_iter()
    .map(|(i, p)| (TaskId(i), p))
    .collect();
    assert_eq!(d, expected);
    assert!(plan_energy(&w, &d, &EnvParams::default()).is_ok());
}

#[test]
fn impossible_deadline_returns_local_fallback() {
    let w = common::instance(Shape::Nested, 9);
    let plan = graph4edge_nonlinear(&w, &none(), &SolveConfig::default().with_fraction(0.01)).unwrap();
    assert!(!plan.feasible);
    assert!(plan.decisions.values().all(|&p| p == Placement::Local));
}
