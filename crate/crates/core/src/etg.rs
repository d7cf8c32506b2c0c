//! Energy-consumption transitive graphs (ETGs).
//!
//! An ETG lives on a main branch: a path from the virtual start to the
//! virtual end. Edge `<a, b>` between main-branch positions means "tasks at
//! `a` and `b` are offloaded, every main-branch task strictly between them
//! stays on the device". Sub-branches of the blocks along the main branch
//! are folded into edge weights through their minimum energy, which depends
//! on where the block's fork and join run.
//!
//! Which side the fork of a block ran on is only known to the edge that
//! entered the block. Paths that entered with the fork on the device are
//! kept in separate scenario layers so that the out-block edges leaving the
//! block can charge the matching sub-branch minimum.

use std::collections::{BTreeMap, HashMap, VecDeque};

use serde::Serialize;

use crate::classify::EdgeClass;
use crate::env::EnvParams;
use crate::error::{Error, Result};
use crate::path::{dijkstra, Digraph, ShortestPath};
use crate::reach::{transitive_closure, Reachability};
use crate::wdg::{NodeKind, Placement, TaskId, TaskNode, Wdg};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Weight {
    Finite(f64),
    Infinite,
}

impl Weight {
    pub fn finite(self) -> Option<f64> {
        match self {
            Weight::Finite(w) => Some(w),
            Weight::Infinite => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MainBranchRule {
    /// Follow the successor with the smallest id at every fork.
    #[default]
    SmallestId,
    LargestId,
}

/// Walks from the virtual start to the virtual end, choosing one successor
/// per step according to `rule`. Returns node indices.
pub fn main_branch_nodes(wdg: &Wdg, rule: MainBranchRule) -> Result<Vec<usize>> {
    let (start, end) = match (wdg.start(), wdg.end()) {
        (Some(s), Some(e)) => (s, e),
        _ => return Err(Error::MalformedGraph("main branch needs virtual start and end".into())),
    };
    let mut path = vec![start];
    let mut cur = start;
    while cur != end {
        let succs = wdg.succs(cur);
        cur = match rule {
            MainBranchRule::SmallestId => succs[0],
            MainBranchRule::LargestId => *succs.last().unwrap(),
        };
        path.push(cur);
    }
    Ok(path)
}

pub fn select_main_branch(wdg: &Wdg) -> Result<Vec<TaskId>> {
    Ok(main_branch_nodes(wdg, MainBranchRule::SmallestId)?
        .into_iter()
        .map(|ix| wdg.id(ix))
        .collect())
}

/// A block whose fork and join both lie on the main branch.
#[derive(Debug, Clone, PartialEq)]
pub struct MainBranchBlock {
    pub fork_pos: usize,
    pub join_pos: usize,
    /// Off-branch nodes of the block, in topological order.
    pub members: Vec<usize>,
    /// Dependencies owned by the block: every edge touching a member plus a
    /// direct fork-to-join shortcut, if present.
    pub edges: Vec<(usize, usize)>,
    /// Members contain two mutually unordered nodes.
    members_branch: bool,
}

impl MainBranchBlock {
    fn has_unordered_pair(&self) -> bool {
        !self.members.is_empty() && (self.join_pos > self.fork_pos + 1 || self.members_branch)
    }
}

#[derive(Debug, Clone)]
pub struct MainBranch {
    pub nodes: Vec<usize>,
    pub blocks: Vec<MainBranchBlock>,
    position: HashMap<usize, usize>,
}

impl MainBranch {
    /// Decomposes the graph around `nodes`. Every off-branch node is assigned
    /// to the block spanned by its latest main-branch ancestor and earliest
    /// main-branch descendant; dependencies that leave such a block anywhere
    /// but its fork or join make the graph malformed.
    pub fn new(wdg: &Wdg, reach: &Reachability, nodes: Vec<usize>) -> Result<Self> {
        let position: HashMap<usize, usize> = nodes.iter().enumerate().map(|(p, &ix)| (ix, p)).collect();
        if nodes.first() != wdg.start().as_ref() || nodes.last() != wdg.end().as_ref() {
            return Err(Error::MalformedGraph("main branch must run from start to end".into()));
        }
        for w in nodes.windows(2) {
            if !wdg.succs(w[0]).contains(&w[1]) {
                return Err(Error::MalformedGraph(format!(
                    "main branch step {} -> {} is not a dependency",
                    wdg.id(w[0]),
                    wdg.id(w[1])
                )));
            }
        }

        let mut span = vec![(0usize, 0usize); wdg.len()];
        let mut keyed: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut blocks: Vec<MainBranchBlock> = Vec::new();
        let mut block_for = |key: (usize, usize), blocks: &mut Vec<MainBranchBlock>| -> usize {
            *keyed.entry(key).or_insert_with(|| {
                blocks.push(MainBranchBlock {
                    fork_pos: key.0,
                    join_pos: key.1,
                    members: Vec::new(),
                    edges: Vec::new(),
                    members_branch: false,
                });
                blocks.len() - 1
            })
        };
        let mut owner = vec![usize::MAX; wdg.len()];
        for &v in wdg.topo() {
            if position.contains_key(&v) {
                continue;
            }
            let fork = (0..nodes.len()).rev().find(|&p| reach.reaches(nodes[p], v)).unwrap();
            let join = (0..nodes.len()).find(|&q| reach.reaches(v, nodes[q])).unwrap();
            span[v] = (fork, join);
            let b = block_for((fork, join), &mut blocks);
            blocks[b].members.push(v);
            owner[v] = b;
        }
        for (u, v) in wdg.edges() {
            let endpoint_ok = |b: &MainBranchBlock, ix: usize, fork_side: bool| match position.get(&ix) {
                Some(&p) => p == if fork_side { b.fork_pos } else { b.join_pos },
                None => false,
            };
            match (position.get(&u), position.get(&v)) {
                (Some(&pu), Some(&pv)) => {
                    if pv != pu + 1 {
                        let b = block_for((pu, pv), &mut blocks);
                        blocks[b].edges.push((u, v));
                    }
                }
                (_, None) => {
                    let b = owner[v];
                    if owner[u] != b && !endpoint_ok(&blocks[b], u, true) {
                        return Err(Error::MalformedGraph(format!(
                            "{} enters the region of {} outside its fork",
                            wdg.id(u),
                            wdg.id(v)
                        )));
                    }
                    blocks[b].edges.push((u, v));
                }
                (None, Some(_)) => {
                    let b = owner[u];
                    if !endpoint_ok(&blocks[b], v, false) {
                        return Err(Error::MalformedGraph(format!(
                            "{} leaves its region into {} outside the join",
                            wdg.id(u),
                            wdg.id(v)
                        )));
                    }
                    blocks[b].edges.push((u, v));
                }
            }
        }
        for b in &mut blocks {
            b.members_branch = b
                .members
                .iter()
                .enumerate()
                .any(|(k, &x)| b.members[k + 1..].iter().any(|&y| reach.unordered(x, y)));
        }
        blocks.sort_by_key(|b| (b.fork_pos, b.join_pos));
        Ok(Self { nodes, blocks, position })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn position(&self, ix: usize) -> Option<usize> {
        self.position.get(&ix).copied()
    }

    pub fn ids(&self, wdg: &Wdg) -> Vec<TaskId> {
        self.nodes.iter().map(|&ix| wdg.id(ix)).collect()
    }

    pub fn last(&self) -> usize {
        self.nodes.len() - 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EtgEdge {
    pub head: usize,
    pub tail: usize,
    pub weight: Weight,
    pub class: EdgeClass,
    /// Scenario layer the tail state belongs to.
    pub tail_scenario: usize,
}

/// One scenario layer of decision edges over the main branch.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Etg {
    /// Blocks (indices into `MainBranch::blocks`) entered with their fork on
    /// the device. Empty for the initial layer.
    pub scenario: Vec<usize>,
    /// Edges whose head state lives in this layer.
    pub edges: Vec<EtgEdge>,
}

impl Etg {
    /// Shortest path over this layer alone, positions as nodes.
    pub fn shortest_path(&self, positions: usize, src: usize, dst: usize) -> Result<ShortestPath> {
        let mut g = Digraph::new(positions);
        for e in &self.edges {
            if let Weight::Finite(w) = e.weight {
                g.add_edge(e.head, e.tail, w);
            }
        }
        dijkstra(&g, src, dst)
    }
}

/// All scenario layers reachable from the initial one, stitched together by
/// the in-block and out-block edges that move a path between layers.
#[derive(Debug, Clone)]
pub struct EtgSet {
    pub etgs: Vec<Etg>,
    states: Vec<(usize, usize)>,
    state_index: HashMap<(usize, usize), usize>,
}

impl EtgSet {
    /// Wraps a single layer; every position touched by an edge is a state.
    pub fn single(etg: Etg) -> Self {
        let mut positions: Vec<usize> = std::iter::once(0)
            .chain(etg.edges.iter().flat_map(|e| [e.head, e.tail]))
            .collect();
        positions.sort_unstable();
        positions.dedup();
        let states: Vec<(usize, usize)> = positions.into_iter().map(|p| (0, p)).collect();
        let state_index = states.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        Self {
            etgs: vec![etg],
            states,
            state_index,
        }
    }

    pub fn len(&self) -> usize {
        self.etgs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.etgs.is_empty()
    }

    /// `(scenario, position)` of each search state.
    pub fn states(&self) -> &[(usize, usize)] {
        &self.states
    }

    pub fn state(&self, scenario: usize, pos: usize) -> Option<usize> {
        self.state_index.get(&(scenario, pos)).copied()
    }

    pub fn to_digraph(&self) -> Digraph {
        let mut g = Digraph::new(self.states.len());
        for (sid, etg) in self.etgs.iter().enumerate() {
            for e in &etg.edges {
                if let Weight::Finite(w) = e.weight {
                    g.add_edge(self.state_index[&(sid, e.head)], self.state_index[&(e.tail_scenario, e.tail)], w);
                }
            }
        }
        g
    }
}

/// Minimum energy of a block's sub-branches for the given fork and join
/// placements, `None` when not yet solved.
pub type SubBranchEnergy<'s> = dyn Fn(usize, Placement, Placement) -> Option<f64> + 's;

/// Weight tables for one main branch.
pub struct EtgBuilder<'a> {
    wdg: &'a Wdg,
    mb: &'a MainBranch,
    eligible: Vec<bool>,
    exec_edge: Vec<f64>,
    z_prefix: Vec<f64>,
    tx_next: Vec<f64>,
    head_place: Vec<Placement>,
    tail_place: Vec<Placement>,
}

impl<'a> EtgBuilder<'a> {
    pub fn new(wdg: &'a Wdg, env: &EnvParams, mb: &'a MainBranch) -> Self {
        let len = mb.len();
        let anchors = wdg.anchors();
        let mut b = Self {
            wdg,
            mb,
            eligible: vec![false; len],
            exec_edge: vec![0.0; len],
            z_prefix: vec![0.0; len + 1],
            tx_next: vec![0.0; len],
            head_place: vec![Placement::Offload; len],
            tail_place: vec![Placement::Offload; len],
        };
        for (pos, &ix) in mb.nodes.iter().enumerate() {
            let node = wdg.node(ix);
            let attrs = wdg.attributes(ix, env);
            b.eligible[pos] = pos == 0 || pos == len - 1 || (node.kind == NodeKind::Regular && !node.local_only);
            b.exec_edge[pos] = attrs.y;
            b.z_prefix[pos + 1] = b.z_prefix[pos] + attrs.z;
            if pos + 1 < len {
                b.tx_next[pos] = env.transmission_energy(wdg.comm(ix, mb.nodes[pos + 1]));
            }
        }
        b.head_place[0] = anchors.start;
        b.tail_place[len - 1] = anchors.end;
        b
    }

    pub fn main_branch(&self) -> &MainBranch {
        self.mb
    }

    /// Whether position `pos` may carry an ETG node.
    pub fn is_eligible(&self, pos: usize) -> bool {
        self.eligible[pos]
    }

    pub fn head_placement(&self, pos: usize) -> Placement {
        self.head_place[pos]
    }

    pub fn tail_placement(&self, pos: usize) -> Placement {
        self.tail_place[pos]
    }

    /// Energy of the main-branch stretch `a..=b` with both ends offloaded
    /// and the tasks between on the device: `y_b + x_{a+1} + x_b + Σ z`.
    /// The two transfers collapse into one (or none) when `b` follows `a`
    /// directly, and the virtual start does not pay the downlink.
    pub fn base_weight(&self, a: usize, b: usize) -> f64 {
        debug_assert!(a < b);
        let exec = self.exec_edge[b];
        let between = self.z_prefix[b] - self.z_prefix[a + 1];
        let head = self.head_place[a];
        let tail = self.tail_place[b];
        let transfers = if b == a + 1 {
            if head != tail {
                self.tx_next[a]
            } else {
                0.0
            }
        } else {
            let down = if head == Placement::Offload { self.tx_next[a] } else { 0.0 };
            let up = if tail == Placement::Offload { self.tx_next[b - 1] } else { 0.0 };
            down + up
        };
        exec + between + transfers
    }

    /// Weight of an edge that closes a block: the stretch energy plus the
    /// sub-branch minimum.
    pub fn block_edge_weight(&self, a: usize, b: usize, sub_branch_min: Option<f64>, block: usize) -> Result<f64> {
        let sub = sub_branch_min.ok_or(Error::SubBranchUnsolved(block))?;
        Ok(self.base_weight(a, b) + sub)
    }

    /// Classification of `<a, b>` from the block structure.
    pub fn class(&self, a: usize, b: usize) -> EdgeClass {
        let blocks = self.mb.blocks.iter().filter(|blk| blk.has_unordered_pair());
        let mut class = EdgeClass::Ordinary;
        for blk in blocks {
            let (p, q) = (blk.fork_pos, blk.join_pos);
            if a <= p && q <= b {
                return EdgeClass::OverBlock;
            }
            if a <= p && p < b && b < q {
                class = EdgeClass::InBlock;
            } else if p < a && a < q && q <= b && class != EdgeClass::InBlock {
                class = EdgeClass::OutBlock;
            }
        }
        class
    }

    /// Weight of `<a, b>` for a head state whose open blocks with a device
    /// fork are `scenario`, and the scenario of the tail state.
    pub fn transition(&self, a: usize, scenario: &[usize], b: usize, sub: &SubBranchEnergy) -> Result<(f64, Vec<usize>)> {
        let mut weight = self.base_weight(a, b);
        let mut next = Vec::new();
        for (bi, fork, join) in self.crossed(a, scenario, b) {
            match join {
                Some(join) => weight += sub(bi, fork, join).ok_or(Error::SubBranchUnsolved(bi))?,
                None if fork == Placement::Local => next.push(bi),
                None => {}
            }
        }
        Ok((weight, next))
    }

    /// Blocks completed by `<a, b>` with the fork and join placements their
    /// sub-branch minimum was charged for.
    pub fn closed_blocks(&self, a: usize, scenario: &[usize], b: usize) -> Vec<(usize, Placement, Placement)> {
        self.crossed(a, scenario, b)
            .filter_map(|(bi, fork, join)| join.map(|j| (bi, fork, j)))
            .collect()
    }

    /// Blocks overlapping `(a, b]`: fork placement, and join placement when
    /// the block closes within the stretch.
    fn crossed<'s>(
        &'s self,
        a: usize,
        scenario: &'s [usize],
        b: usize,
    ) -> impl Iterator<Item = (usize, Placement, Option<Placement>)> + 's {
        self.mb.blocks.iter().enumerate().filter_map(move |(bi, blk)| {
            let (p, q) = (blk.fork_pos, blk.join_pos);
            if q <= a || p >= b {
                return None;
            }
            let fork = if p < a {
                if scenario.contains(&bi) {
                    Placement::Local
                } else {
                    Placement::Offload
                }
            } else if p == a {
                self.head_place[a]
            } else {
                Placement::Local
            };
            let join = if q < b {
                Some(Placement::Local)
            } else if q == b {
                Some(self.tail_place[b])
            } else {
                None
            };
            Some((bi, fork, join))
        })
    }

    /// Candidate edges between all ordered eligible pairs. Out-block edges
    /// start at infinity because the fork side of their block is unknown;
    /// over-block edges already include the sub-branch minimum.
    pub fn build_initial_etg(&self, sub: &SubBranchEnergy) -> Result<Etg> {
        let last = self.mb.last();
        let mut edges = Vec::new();
        for a in (0..last).filter(|&a| self.eligible[a]) {
            for b in (a + 1..=last).filter(|&b| self.eligible[b]) {
                let leaves_open = self
                    .mb
                    .blocks
                    .iter()
                    .any(|blk| blk.fork_pos < a && a < blk.join_pos && blk.join_pos <= b);
                let weight = if leaves_open {
                    Weight::Infinite
                } else {
                    Weight::Finite(self.transition(a, &[], b, sub)?.0)
                };
                edges.push(EtgEdge {
                    head: a,
                    tail: b,
                    weight,
                    class: self.class(a, b),
                    tail_scenario: 0,
                });
            }
        }
        Ok(Etg {
            scenario: Vec::new(),
            edges,
        })
    }

    /// Expands the initial ETG into scenario layers. An in-block edge from
    /// a node before the fork opens (or reuses) the layer where that block's
    /// fork runs on the device; in-block edges from the fork itself stay in
    /// the current layer. Out-block edges of every layer then get finite
    /// weights from the matching sub-branch minimum.
    pub fn spawn_scenario_etgs(&self, sub: &SubBranchEnergy) -> Result<EtgSet> {
        let last = self.mb.last();
        let mut etgs = vec![Etg {
            scenario: Vec::new(),
            edges: Vec::new(),
        }];
        let mut scenario_index: HashMap<Vec<usize>, usize> = HashMap::from([(Vec::new(), 0)]);
        let mut states = vec![(0usize, 0usize)];
        let mut state_index = HashMap::from([((0usize, 0usize), 0usize)]);
        let mut queue = VecDeque::from([0usize]);
        while let Some(state) = queue.pop_front() {
            let (sid, a) = states[state];
            if a == last {
                continue;
            }
            let scenario = etgs[sid].scenario.clone();
            for b in (a + 1..=last).filter(|&b| self.eligible[b]) {
                let (w, next) = self.transition(a, &scenario, b, sub)?;
                let tail_sid = match scenario_index.get(&next) {
                    Some(&s) => s,
                    None => {
                        etgs.push(Etg {
                            scenario: next.clone(),
                            edges: Vec::new(),
                        });
                        scenario_index.insert(next, etgs.len() - 1);
                        etgs.len() - 1
                    }
                };
                etgs[sid].edges.push(EtgEdge {
                    head: a,
                    tail: b,
                    weight: Weight::Finite(w),
                    class: self.class(a, b),
                    tail_scenario: tail_sid,
                });
                if let std::collections::hash_map::Entry::Vacant(e) = state_index.entry((tail_sid, b)) {
                    e.insert(states.len());
                    states.push((tail_sid, b));
                    queue.push_back(states.len() - 1);
                }
            }
        }
        Ok(EtgSet {
            etgs,
            states,
            state_index,
        })
    }

    pub fn wdg(&self) -> &Wdg {
        self.wdg
    }
}

/// Stretch weight for two main-branch tasks, by id.
pub fn ordinary_edge_weight(wdg: &Wdg, env: &EnvParams, i: TaskId, j: TaskId) -> Result<f64> {
    let reach = transitive_closure(wdg);
    let mb = MainBranch::new(wdg, &reach, main_branch_nodes(wdg, MainBranchRule::SmallestId)?)?;
    let pos = |id| {
        mb.position(wdg.index_of(id)?)
            .ok_or_else(|| Error::MalformedGraph(format!("{id} is not on the main branch")))
    };
    let (a, b) = (pos(i)?, pos(j)?);
    if a >= b {
        return Err(Error::MalformedGraph(format!("{i} does not precede {j} on the main branch")));
    }
    Ok(EtgBuilder::new(wdg, env, &mb).base_weight(a, b))
}

/// Inserts a device-pinned virtual node right after the virtual start and
/// moves the start's outgoing comm onto it, so that offloading the first
/// sub-branch task is charged its input transfer. Idempotent.
pub fn attach_virtual_nonoffload(wdg: &Wdg) -> Result<Wdg> {
    let start = wdg
        .start()
        .ok_or_else(|| Error::MalformedGraph("graph has no virtual start".into()))?;
    let succs = wdg.succs(start);
    if succs.len() == 1 && wdg.node(succs[0]).kind == NodeKind::VirtualNonoffload && wdg.preds(succs[0]).len() == 1 {
        return Ok(wdg.clone());
    }
    let start_id = wdg.id(start);
    let marker_id = TaskId(wdg.max_id().0 + 1);
    let mut nodes = wdg.nodes().to_vec();
    for &s in succs {
        let comm = nodes[s].comm_in.remove(&start_id).unwrap_or(0.0);
        nodes[s].comm_in.insert(marker_id, comm);
    }
    nodes.push(TaskNode::virtual_node(marker_id, NodeKind::VirtualNonoffload).with_pred(start_id, 0.0));
    Ok(Wdg::new(nodes)?.with_anchors(wdg.anchors()))
}
