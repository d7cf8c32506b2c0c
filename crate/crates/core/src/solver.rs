//! Graph4Edge solvers: minimum-energy plans through ETG shortest paths.
//!
//! Sub-branches of a block are solved recursively as their own graphs,
//! bounded by the block's fork and join pinned to the requested placements.
//! Results are memoised per (block contents, fork placement, join placement)
//! for the whole solve, so nested blocks are solved once per boundary case.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::rc::Rc;

use serde::{Deserialize, Serialize};

use crate::env::EnvParams;
use crate::error::{invalid, Error, Result};
use crate::etg::{main_branch_nodes, EtgBuilder, EtgSet, MainBranch, MainBranchBlock, MainBranchRule};
use crate::evaluate::{DecisionVector, Evaluator};
use crate::path::shortest_tree;
use crate::reach::transitive_closure;
use crate::wdg::{add_virtual_nodes, is_linear, Anchors, NodeKind, Placement, TaskId, TaskNode, Wdg};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveConfig {
    pub env: EnvParams,
    /// Absolute deadline in seconds; `f64::INFINITY` for none.
    pub deadline: f64,
    /// When set, overrides `deadline` with this fraction of the all-local
    /// makespan of the instance.
    pub deadline_fraction: Option<f64>,
    pub main_branch: MainBranchRule,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            env: EnvParams::default(),
            deadline: f64::INFINITY,
            deadline_fraction: None,
            main_branch: MainBranchRule::SmallestId,
        }
    }
}

impl SolveConfig {
    pub fn new(env: EnvParams) -> Self {
        Self { env, ..Self::default() }
    }

    pub fn with_deadline(mut self, seconds: f64) -> Self {
        self.deadline = seconds;
        self.deadline_fraction = None;
        self
    }

    pub fn with_fraction(mut self, fraction: f64) -> Self {
        self.deadline_fraction = Some(fraction);
        self
    }

    pub fn with_main_branch(mut self, rule: MainBranchRule) -> Self {
        self.main_branch = rule;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.env.validate()?;
        if self.deadline.is_nan() || self.deadline <= 0.0 {
            return Err(invalid("deadline", "must be positive"));
        }
        if let Some(f) = self.deadline_fraction {
            if f.is_nan() || f <= 0.0 {
                return Err(invalid("deadline_fraction", "must be positive"));
            }
        }
        Ok(())
    }

    /// Deadline in seconds for `wdg`.
    pub fn resolve_deadline(&self, wdg: &Wdg) -> f64 {
        match self.deadline_fraction {
            Some(f) if f.is_infinite() => f64::INFINITY,
            Some(f) => {
                let ev = Evaluator::new(wdg, &self.env);
                f * ev.makespan(&ev.all_local())
            }
            None => self.deadline,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OffloadPlan {
    pub decisions: DecisionVector,
    #[serde(rename = "energy_j")]
    pub total_energy: f64,
    #[serde(rename = "makespan_s")]
    pub makespan: f64,
    pub feasible: bool,
}

impl OffloadPlan {
    /// Evaluates `placements` on the evaluator's graph.
    pub fn evaluate(ev: &Evaluator, placements: &[Placement], deadline: f64) -> Self {
        let makespan = ev.makespan(placements);
        Self {
            decisions: ev.decisions(placements),
            total_energy: ev.energy(placements),
            makespan,
            feasible: makespan <= deadline,
        }
    }

    pub fn from_decisions(wdg: &Wdg, d: &DecisionVector, env: &EnvParams, deadline: f64) -> Result<Self> {
        let ev = Evaluator::new(wdg, env);
        Ok(Self::evaluate(&ev, &ev.placements(d)?, deadline))
    }

    /// All tasks on the device. `feasible` reflects the deadline.
    pub fn all_local(wdg: &Wdg, env: &EnvParams, deadline: f64) -> Self {
        let ev = Evaluator::new(wdg, env);
        Self::evaluate(&ev, &ev.all_local(), deadline)
    }

    pub fn offloaded(&self) -> impl Iterator<Item = TaskId> + '_ {
        self.decisions
            .iter()
            .filter(|(_, &p)| p == Placement::Offload)
            .map(|(&id, _)| id)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SolveStats {
    /// Deepest sub-branch recursion reached (0 when no block was solved).
    pub max_depth: usize,
    /// Distinct recursive sub-branch solves.
    pub sub_solves: usize,
    /// Scenario layers of the top-level ETG set.
    pub scenario_etgs: usize,
    /// Search states of the top-level ETG set.
    pub states: usize,
    /// Deadline-loop candidates evaluated.
    pub candidates: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub plan: OffloadPlan,
    pub stats: SolveStats,
}

/// Minimum-energy plan of a chain through the plain (single-layer) ETG.
pub fn graph4edge_linear(wdg: &Wdg, local_set: &BTreeSet<TaskId>, cfg: &SolveConfig) -> Result<OffloadPlan> {
    cfg.validate()?;
    let wdg = add_virtual_nodes(&wdg.with_local_set(local_set)?)?;
    if !is_linear(&wdg) {
        return Err(Error::MalformedGraph("graph is not a chain".into()));
    }
    let solver = Solver::new(cfg);
    let candidates = solver.solve_graph(&wdg, 0, true, false)?;
    Ok(solver.select(&wdg, candidates, cfg.resolve_deadline(&wdg)).0)
}

/// Minimum-energy plan of any well-formed block-structured graph.
pub fn graph4edge_nonlinear(wdg: &Wdg, local_set: &BTreeSet<TaskId>, cfg: &SolveConfig) -> Result<OffloadPlan> {
    Ok(solve_with_stats(wdg, local_set, cfg)?.plan)
}

pub fn solve_with_stats(wdg: &Wdg, local_set: &BTreeSet<TaskId>, cfg: &SolveConfig) -> Result<Solution> {
    cfg.validate()?;
    let wdg = add_virtual_nodes(&wdg.with_local_set(local_set)?)?;
    let solver = Solver::new(cfg);
    let candidates = solver.solve_graph(&wdg, 0, true, true)?;
    let (plan, evaluated) = solver.select(&wdg, candidates, cfg.resolve_deadline(&wdg));
    let mut stats = *solver.stats.borrow();
    stats.candidates = evaluated;
    Ok(Solution { plan, stats })
}

/// The solved scenario layers of `wdg` and its main branch (ids), with
/// every sub-branch minimum filled in.
pub fn solved_etg_set(wdg: &Wdg, cfg: &SolveConfig) -> Result<(EtgSet, Vec<TaskId>)> {
    cfg.validate()?;
    let wdg = add_virtual_nodes(wdg)?;
    let solver = Solver::new(cfg);
    let reach = transitive_closure(&wdg);
    let mb = MainBranch::new(&wdg, &reach, main_branch_nodes(&wdg, cfg.main_branch)?)?;
    let builder = EtgBuilder::new(&wdg, &cfg.env, &mb);
    let set = solver.etg_set(&wdg, &builder, 0, true)?;
    Ok((set, mb.ids(&wdg)))
}

/// Decisions for a main-branch path: interior path nodes are offloaded,
/// every other main-branch task runs locally, and members of the listed
/// blocks take their sub-branch decisions. Unlisted members stay local.
pub fn decode_path(
    wdg: &Wdg,
    main_branch: &[TaskId],
    path: &[TaskId],
    sub_plans: &BTreeMap<usize, DecisionVector>,
) -> DecisionVector {
    let on_path: BTreeSet<TaskId> = path.iter().copied().collect();
    let mut d: DecisionVector = wdg.real_tasks().map(|ix| (wdg.id(ix), Placement::Local)).collect();
    for id in main_branch {
        if on_path.contains(id) && d.contains_key(id) {
            d.insert(*id, Placement::Offload);
        }
    }
    for sub in sub_plans.values() {
        for (&id, &p) in sub {
            if let Some(slot) = d.get_mut(&id) {
                *slot = p;
            }
        }
    }
    d
}

type SubKey = (TaskId, TaskId, Vec<TaskId>, Placement, Placement);

struct SubPlan {
    energy: f64,
    decisions: Vec<(TaskId, Placement)>,
}

struct Candidate {
    length: f64,
    placements: Vec<Placement>,
}

struct Solver {
    env: EnvParams,
    rule: MainBranchRule,
    memo: RefCell<HashMap<SubKey, Rc<SubPlan>>>,
    stats: RefCell<SolveStats>,
}

impl Solver {
    fn new(cfg: &SolveConfig) -> Self {
        Self {
            env: cfg.env,
            rule: cfg.main_branch,
            memo: RefCell::new(HashMap::new()),
            stats: RefCell::new(SolveStats::default()),
        }
    }

    /// Shortest-path candidates on `wdg`. With `prefixes`, one candidate
    /// per reachable main-branch position (tasks after it run locally);
    /// otherwise only the full path to the virtual end.
    fn solve_graph(&self, wdg: &Wdg, depth: usize, prefixes: bool, layered: bool) -> Result<Vec<Candidate>> {
        let reach = transitive_closure(wdg);
        let mb = MainBranch::new(wdg, &reach, main_branch_nodes(wdg, self.rule)?)?;
        let builder = EtgBuilder::new(wdg, &self.env, &mb);
        let set = self.etg_set(wdg, &builder, depth, layered)?;
        if depth == 0 {
            let mut st = self.stats.borrow_mut();
            st.scenario_etgs = set.len();
            st.states = set.states().len();
        }
        let tree = shortest_tree(&set.to_digraph(), 0);
        let last = mb.last();

        // Best state per main-branch position.
        let mut best: BTreeMap<usize, usize> = BTreeMap::new();
        for (state, &(_, pos)) in set.states().iter().enumerate() {
            if pos == 0 || (!prefixes && pos != last) {
                continue;
            }
            let Some(d) = tree.dist(state) else { continue };
            let better = match best.get(&pos) {
                None => true,
                Some(&cur) => {
                    let cd = tree.dist(cur).unwrap();
                    d < cd || (d == cd && tree.hops(state) < tree.hops(cur))
                }
            };
            if better {
                best.insert(pos, state);
            }
        }

        let ev_all_local = vec![Placement::Local; wdg.len()];
        let mut out = Vec::new();
        for &state in best.values().rev() {
            let path = tree.path_to(state).unwrap();
            let mut placements = ev_all_local.clone();
            for w in path.nodes.windows(2) {
                let (sid, a) = set.states()[w[0]];
                let (_, b) = set.states()[w[1]];
                if b != last {
                    placements[mb.nodes[b]] = Placement::Offload;
                }
                let scenario = &set.etgs[sid].scenario;
                for (bi, fork, join) in builder.closed_blocks(a, scenario, b) {
                    let plan = self.sub_branch(wdg, &mb, &mb.blocks[bi], fork, join, depth)?;
                    for &(id, p) in &plan.decisions {
                        placements[wdg.index_of(id)?] = p;
                    }
                }
            }
            if let Some(ix) = wdg.start() {
                placements[ix] = wdg.anchors().start;
            }
            if let Some(ix) = wdg.end() {
                placements[ix] = wdg.anchors().end;
            }
            out.push(Candidate {
                length: path.length,
                placements,
            });
        }
        if out.is_empty() {
            return Err(Error::Unreachable);
        }
        Ok(out)
    }

    fn etg_set(&self, wdg: &Wdg, builder: &EtgBuilder, depth: usize, layered: bool) -> Result<EtgSet> {
        let mb = builder.main_branch();
        let failure: RefCell<Option<Error>> = RefCell::new(None);
        let sub = |bi: usize, fork: Placement, join: Placement| match self.sub_branch(wdg, mb, &mb.blocks[bi], fork, join, depth) {
            Ok(plan) => Some(plan.energy),
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                None
            }
        };
        let set = if layered || !mb.blocks.is_empty() {
            builder.spawn_scenario_etgs(&sub)
        } else {
            builder.build_initial_etg(&sub).map(EtgSet::single)
        };
        set.map_err(|e| failure.into_inner().unwrap_or(e))
    }

    fn sub_branch(
        &self,
        wdg: &Wdg,
        mb: &MainBranch,
        block: &MainBranchBlock,
        fork: Placement,
        join: Placement,
        depth: usize,
    ) -> Result<Rc<SubPlan>> {
        let (f, j) = (mb.nodes[block.fork_pos], mb.nodes[block.join_pos]);
        if block.members.is_empty() {
            let energy = if fork != join {
                self.env.transmission_energy(wdg.comm(f, j))
            } else {
                0.0
            };
            return Ok(Rc::new(SubPlan {
                energy,
                decisions: Vec::new(),
            }));
        }
        let mut members: Vec<TaskId> = block.members.iter().map(|&ix| wdg.id(ix)).collect();
        members.sort();
        let key = (wdg.id(f), wdg.id(j), members, fork, join);
        if let Some(hit) = self.memo.borrow().get(&key) {
            return Ok(hit.clone());
        }
        {
            let mut st = self.stats.borrow_mut();
            st.sub_solves += 1;
            st.max_depth = st.max_depth.max(depth + 1);
        }
        let sub = sub_branch_graph(wdg, f, j, block, Anchors { start: fork, end: join })?;
        let best = self.solve_graph(&sub, depth + 1, false, true)?.remove(0);
        let plan = Rc::new(SubPlan {
            energy: best.length,
            decisions: sub
                .real_tasks()
                .map(|ix| (sub.id(ix), best.placements[ix]))
                .collect(),
        });
        self.memo.borrow_mut().insert(key, plan.clone());
        Ok(plan)
    }

    /// Deadline loop: evaluates every candidate plus the all-local plan and
    /// keeps the minimum-energy one that meets the deadline. Infeasible
    /// instances fall back to the all-local plan marked infeasible.
    fn select(&self, wdg: &Wdg, candidates: Vec<Candidate>, deadline: f64) -> (OffloadPlan, usize) {
        let ev = Evaluator::new(wdg, &self.env);
        let mut scored: Vec<(f64, usize, Vec<Placement>)> = candidates
            .into_iter()
            .enumerate()
            .map(|(k, c)| {
                let e = ev.energy(&c.placements);
                debug_assert!(k != 0 || (e - c.length).abs() <= 1e-9 * e.abs().max(1.0));
                (e, k, c.placements)
            })
            .collect();
        let local = ev.all_local();
        scored.push((ev.energy(&local), scored.len(), local.clone()));
        scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut evaluated = 0;
        for (_, _, p) in &scored {
            evaluated += 1;
            if deadline.is_infinite() || ev.makespan(p) <= deadline {
                return (OffloadPlan::evaluate(&ev, p, deadline), evaluated);
            }
        }
        (OffloadPlan::evaluate(&ev, &local, deadline), evaluated)
    }
}

/// The graph formed by a block's members between its fork and join, with
/// the fork as virtual start and the join as virtual end.
fn sub_branch_graph(wdg: &Wdg, fork: usize, join: usize, block: &MainBranchBlock, anchors: Anchors) -> Result<Wdg> {
    let mut nodes = Vec::with_capacity(block.members.len() + 2);
    nodes.push(TaskNode::virtual_node(wdg.id(fork), NodeKind::VirtualStart));
    for &m in &block.members {
        let mut node = wdg.node(m).clone();
        node.input = 0.0;
        nodes.push(node);
    }
    let mut end = TaskNode::virtual_node(wdg.id(join), NodeKind::VirtualEnd);
    for &(u, v) in &block.edges {
        if v == join {
            end.comm_in.insert(wdg.id(u), wdg.comm(u, v));
        }
    }
    nodes.push(end);
    Ok(Wdg::new(nodes)?.with_anchors(anchors))
}
