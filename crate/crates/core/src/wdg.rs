//! Workflow dependency graphs.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::env::{compute_energy_attributes, EnergyAttributes, EnvParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TaskId(pub u32);

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "T{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    #[default]
    Regular,
    VirtualStart,
    VirtualEnd,
    /// Zero-cost node pinned to the end device (connectors and the
    /// non-offloaded start marker of sub-branch graphs).
    VirtualNonoffload,
}

/// Where a task runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Placement {
    Local,
    Offload,
}

/// Placement assumed for the virtual start and end nodes.
///
/// A full workflow starts and ends on the device. Sub-branch graphs carved
/// out of a block inherit the placement of the block's fork and join.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Anchors {
    pub start: Placement,
    pub end: Placement,
}

impl Default for Anchors {
    fn default() -> Self {
        Self {
            start: Placement::Local,
            end: Placement::Local,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskNode {
    pub id: TaskId,
    /// Megacycles.
    pub workload: f64,
    /// Megabits received from each direct predecessor.
    pub comm_in: BTreeMap<TaskId, f64>,
    /// Megabits read from the device when the task has no predecessor yet;
    /// becomes the comm from the virtual start once one is added.
    pub input: f64,
    pub local_only: bool,
    pub kind: NodeKind,
}

impl TaskNode {
    pub fn regular(id: TaskId, workload: f64) -> Self {
        Self {
            id,
            workload,
            comm_in: BTreeMap::new(),
            input: 0.0,
            local_only: false,
            kind: NodeKind::Regular,
        }
    }

    pub fn virtual_node(id: TaskId, kind: NodeKind) -> Self {
        Self {
            kind,
            ..Self::regular(id, 0.0)
        }
    }

    pub fn with_pred(mut self, pred: TaskId, megabits: f64) -> Self {
        self.comm_in.insert(pred, megabits);
        self
    }

    pub fn with_input(mut self, megabits: f64) -> Self {
        self.input = megabits;
        self
    }

    pub fn local_only(mut self) -> Self {
        self.local_only = true;
        self
    }

    pub fn is_virtual(&self) -> bool {
        self.kind != NodeKind::Regular
    }

    pub fn total_comm_in(&self) -> f64 {
        self.comm_in.values().sum()
    }
}

/// A validated, acyclic workflow graph. Node indices are stable for the
/// lifetime of the value; edges are the `comm_in` keys of each node.
#[derive(Debug, Clone)]
pub struct Wdg {
    nodes: Vec<TaskNode>,
    index: HashMap<TaskId, usize>,
    preds: Vec<Vec<usize>>,
    succs: Vec<Vec<usize>>,
    topo: Vec<usize>,
    start: Option<usize>,
    end: Option<usize>,
    anchors: Anchors,
}

fn check_amount(id: TaskId, field: &str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            field: format!("{id}.{field}"),
            reason: format!("must be finite and >= 0, got {value}"),
        })
    }
}

impl Wdg {
    pub fn new(nodes: Vec<TaskNode>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::MalformedGraph("workflow has no tasks".into()));
        }
        let mut index = HashMap::with_capacity(nodes.len());
        let mut start = None;
        let mut end = None;
        for (ix, node) in nodes.iter().enumerate() {
            if index.insert(node.id, ix).is_some() {
                return Err(Error::DuplicateTask(node.id));
            }
            check_amount(node.id, "workload", node.workload)?;
            check_amount(node.id, "input", node.input)?;
            for &c in node.comm_in.values() {
                check_amount(node.id, "comm_in", c)?;
            }
            match node.kind {
                NodeKind::Regular => {}
                kind => {
                    if node.workload != 0.0 {
                        return Err(Error::MalformedGraph(format!("virtual node {} has workload", node.id)));
                    }
                    let silent_inputs = node.input == 0.0 && node.comm_in.values().all(|&c| c == 0.0);
                    // The end node may carry comm when it stands in for a block's join.
                    if kind != NodeKind::VirtualEnd && !silent_inputs {
                        return Err(Error::MalformedGraph(format!("virtual node {} has input data", node.id)));
                    }
                    let slot = match kind {
                        NodeKind::VirtualStart => &mut start,
                        NodeKind::VirtualEnd => &mut end,
                        _ => continue,
                    };
                    if slot.replace(ix).is_some() {
                        return Err(Error::MalformedGraph(format!("more than one {kind:?} node")));
                    }
                }
            }
        }
        let mut preds = vec![Vec::new(); nodes.len()];
        let mut succs = vec![Vec::new(); nodes.len()];
        for (ix, node) in nodes.iter().enumerate() {
            for pred in node.comm_in.keys() {
                let &p = index.get(pred).ok_or(Error::UnknownTask(*pred))?;
                if p == ix {
                    return Err(Error::CyclicGraph(node.id));
                }
                preds[ix].push(p);
                succs[p].push(ix);
            }
        }
        for list in &mut succs {
            list.sort_by_key(|&s| nodes[s].id);
        }

        let mut indegree: Vec<usize> = preds.iter().map(Vec::len).collect();
        let mut ready: BinaryHeap<Reverse<(TaskId, usize)>> = indegree
            .iter()
            .enumerate()
            .filter(|(_, &d)| d == 0)
            .map(|(ix, _)| Reverse((nodes[ix].id, ix)))
            .collect();
        let mut topo = Vec::with_capacity(nodes.len());
        while let Some(Reverse((_, ix))) = ready.pop() {
            topo.push(ix);
            for &s in &succs[ix] {
                indegree[s] -= 1;
                if indegree[s] == 0 {
                    ready.push(Reverse((nodes[s].id, s)));
                }
            }
        }
        if topo.len() != nodes.len() {
            let stuck = (0..nodes.len()).find(|&ix| indegree[ix] > 0).unwrap();
            return Err(Error::CyclicGraph(nodes[stuck].id));
        }

        let wdg = Self {
            nodes,
            index,
            preds,
            succs,
            topo,
            start,
            end,
            anchors: Anchors::default(),
        };
        wdg.check_endpoints()?;
        Ok(wdg)
    }

    fn check_endpoints(&self) -> Result<()> {
        if let Some(s) = self.start {
            if !self.preds[s].is_empty() {
                return Err(Error::MalformedGraph("virtual start has predecessors".into()));
            }
            if let Some(ix) = (0..self.len()).find(|&ix| ix != s && self.preds[ix].is_empty()) {
                return Err(Error::MalformedGraph(format!(
                    "{} is not reachable from the virtual start",
                    self.nodes[ix].id
                )));
            }
        }
        if let Some(e) = self.end {
            if !self.succs[e].is_empty() {
                return Err(Error::MalformedGraph("virtual end has successors".into()));
            }
            if let Some(ix) = (0..self.len()).find(|&ix| ix != e && self.succs[ix].is_empty()) {
                return Err(Error::MalformedGraph(format!("{} does not reach the virtual end", self.nodes[ix].id)));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, ix: usize) -> &TaskNode {
        &self.nodes[ix]
    }

    pub fn nodes(&self) -> &[TaskNode] {
        &self.nodes
    }

    pub fn into_nodes(self) -> Vec<TaskNode> {
        self.nodes
    }

    pub fn index_of(&self, id: TaskId) -> Result<usize> {
        self.index.get(&id).copied().ok_or(Error::UnknownTask(id))
    }

    pub fn id(&self, ix: usize) -> TaskId {
        self.nodes[ix].id
    }

    pub fn preds(&self, ix: usize) -> &[usize] {
        &self.preds[ix]
    }

    pub fn succs(&self, ix: usize) -> &[usize] {
        &self.succs[ix]
    }

    /// Topological order, smallest id first among ready nodes.
    pub fn topo(&self) -> &[usize] {
        &self.topo
    }

    pub fn start(&self) -> Option<usize> {
        self.start
    }

    pub fn end(&self) -> Option<usize> {
        self.end
    }

    pub fn is_augmented(&self) -> bool {
        self.start.is_some() && self.end.is_some()
    }

    pub fn anchors(&self) -> Anchors {
        self.anchors
    }

    pub fn with_anchors(mut self, anchors: Anchors) -> Self {
        self.anchors = anchors;
        self
    }

    /// Megabits carried by the dependency `from -> to` (0 when absent).
    pub fn comm(&self, from: usize, to: usize) -> f64 {
        self.nodes[to].comm_in.get(&self.nodes[from].id).copied().unwrap_or(0.0)
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.topo
            .iter()
            .flat_map(move |&u| self.succs[u].iter().map(move |&v| (u, v)))
    }

    pub fn edge_count(&self) -> usize {
        self.preds.iter().map(Vec::len).sum()
    }

    /// Indices of regular (non-virtual) tasks in topological order.
    pub fn real_tasks(&self) -> impl Iterator<Item = usize> + '_ {
        self.topo.iter().copied().filter(move |&ix| !self.nodes[ix].is_virtual())
    }

    pub fn real_task_count(&self) -> usize {
        self.nodes.iter().filter(|n| !n.is_virtual()).count()
    }

    pub fn max_id(&self) -> TaskId {
        self.nodes.iter().map(|n| n.id).max().unwrap()
    }

    /// Energy attributes using the total incoming comm as the transfer size.
    pub fn attributes(&self, ix: usize, env: &EnvParams) -> EnergyAttributes {
        let node = &self.nodes[ix];
        compute_energy_attributes(node, node.total_comm_in() + node.input, env)
    }

    /// Copy with every task in `local_set` pinned to the device.
    pub fn with_local_set(&self, local_set: &BTreeSet<TaskId>) -> Result<Self> {
        if local_set.is_empty() {
            return Ok(self.clone());
        }
        let mut out = self.clone();
        for id in local_set {
            let ix = self.index_of(*id)?;
            if out.nodes[ix].kind == NodeKind::Regular {
                out.nodes[ix].local_only = true;
            }
        }
        Ok(out)
    }
}

/// Adds the virtual start before every source and the virtual end after
/// every sink. Graphs that already have both are returned unchanged.
pub fn add_virtual_nodes(wdg: &Wdg) -> Result<Wdg> {
    if wdg.is_augmented() {
        return Ok(wdg.clone());
    }
    let mut next = wdg.max_id().0 + 1;
    let mut nodes = wdg.nodes.clone();
    let start_id = match wdg.start {
        Some(s) => wdg.id(s),
        None => {
            let id = TaskId(next);
            next += 1;
            for ix in 0..nodes.len() {
                if wdg.preds[ix].is_empty() {
                    let input = std::mem::take(&mut nodes[ix].input);
                    nodes[ix].comm_in.insert(id, input);
                }
            }
            nodes.push(TaskNode::virtual_node(id, NodeKind::VirtualStart));
            id
        }
    };
    if wdg.end.is_none() {
        let mut end = TaskNode::virtual_node(TaskId(next), NodeKind::VirtualEnd);
        for ix in 0..wdg.len() {
            if wdg.succs[ix].is_empty() {
                end.comm_in.insert(wdg.id(ix), 0.0);
            }
        }
        if wdg.len() == 1 && wdg.start.is_some() {
            end.comm_in.insert(start_id, 0.0);
        }
        nodes.push(end);
    }
    Ok(Wdg::new(nodes)?.with_anchors(wdg.anchors))
}

/// True when every node has at most one predecessor and one successor.
pub fn is_linear(wdg: &Wdg) -> bool {
    (0..wdg.len()).all(|ix| wdg.preds(ix).len() <= 1 && wdg.succs(ix).len() <= 1)
}
