//! Structured (recursive) workflow descriptions and their conversion to WDGs.

use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::wdg::{NodeKind, TaskId, TaskNode, Wdg};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomicTask {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<u32>,
    pub workload_megacycles: f64,
    /// Input size in megabytes, carried on every incoming dependency.
    #[serde(default)]
    pub data_mb: f64,
    #[serde(default)]
    pub local_only: bool,
}

impl AtomicTask {
    pub fn new(workload_megacycles: f64, data_mb: f64) -> Self {
        Self {
            id: None,
            workload_megacycles,
            data_mb,
            local_only: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum StructuredWorkflow {
    Sequence { children: Vec<StructuredWorkflow> },
    Parallel { branches: Vec<StructuredWorkflow> },
    /// All branches are materialized; only `chosen` keeps its costs.
    Selective { branches: Vec<StructuredWorkflow>, chosen: usize },
    /// The body is unrolled `unroll` times in sequence.
    Iterative { body: Box<StructuredWorkflow>, unroll: usize },
    Atomic(AtomicTask),
}

impl StructuredWorkflow {
    pub fn atomic(workload_megacycles: f64, data_mb: f64) -> Self {
        Self::Atomic(AtomicTask::new(workload_megacycles, data_mb))
    }

    /// Number of tasks after unrolling.
    pub fn task_count(&self) -> usize {
        match self {
            Self::Atomic(_) => 1,
            Self::Sequence { children } => children.iter().map(Self::task_count).sum(),
            Self::Parallel { branches } | Self::Selective { branches, .. } => {
                branches.iter().map(Self::task_count).sum()
            }
            Self::Iterative { body, unroll } => body.task_count() * unroll,
        }
    }

    fn validate(&self, ids: &mut HashSet<u32>) -> Result<()> {
        match self {
            Self::Atomic(t) => {
                if let Some(id) = t.id {
                    if !ids.insert(id) {
                        return Err(Error::DuplicateTask(TaskId(id)));
                    }
                }
                Ok(())
            }
            Self::Sequence { children } => {
                if children.is_empty() {
                    return Err(Error::EmptyStructure);
                }
                children.iter().try_for_each(|c| c.validate(ids))
            }
            Self::Parallel { branches } | Self::Selective { branches, .. } => {
                if branches.is_empty() {
                    return Err(Error::EmptyStructure);
                }
                if branches.len() < 2 {
                    return Err(Error::InvalidStructure("parallel and selective need at least 2 branches".into()));
                }
                if let Self::Selective { chosen, .. } = self {
                    if *chosen >= branches.len() {
                        return Err(Error::InvalidStructure(format!(
                            "chosen branch {chosen} out of {} branches",
                            branches.len()
                        )));
                    }
                }
                branches.iter().try_for_each(|b| b.validate(ids))
            }
            Self::Iterative { body, unroll } => {
                if *unroll == 0 {
                    return Err(Error::InvalidStructure("unroll count must be at least 1".into()));
                }
                body.validate(ids)
            }
        }
    }
}

const MB_TO_MEGABITS: f64 = 8.0;

struct Builder {
    nodes: Vec<TaskNode>,
    /// Per node: input megabits and whether the node lies on a discarded
    /// selective branch.
    data: Vec<(f64, bool)>,
    used: BTreeSet<u32>,
    next: u32,
}

impl Builder {
    fn fresh_id(&mut self, wanted: Option<u32>, first_copy: bool) -> TaskId {
        if let (Some(id), true) = (wanted, first_copy) {
            return TaskId(id);
        }
        while self.used.contains(&self.next) {
            self.next += 1;
        }
        self.used.insert(self.next);
        TaskId(self.next)
    }

    fn push(&mut self, mut node: TaskNode, frontier: &[usize], data: f64, zeroed: bool) -> usize {
        for &p in frontier {
            node.comm_in.insert(self.nodes[p].id, data);
        }
        if frontier.is_empty() {
            node.input = data;
        }
        self.nodes.push(node);
        self.data.push((data, zeroed));
        self.nodes.len() - 1
    }

    /// Collapses a multi-node frontier into a virtual connector so that the
    /// next fork has a single predecessor.
    fn funnel(&mut self, frontier: Vec<usize>) -> Vec<usize> {
        if frontier.len() <= 1 {
            return frontier;
        }
        let id = self.fresh_id(None, false);
        let node = TaskNode::virtual_node(id, NodeKind::VirtualNonoffload);
        vec![self.push(node, &frontier, 0.0, false)]
    }

    fn convert(&mut self, sw: &StructuredWorkflow, frontier: Vec<usize>, first_copy: bool, zeroed: bool) -> Vec<usize> {
        match sw {
            StructuredWorkflow::Atomic(t) => {
                let id = self.fresh_id(t.id, first_copy);
                let mut node = TaskNode::regular(id, t.workload_megacycles);
                node.local_only = t.local_only;
                vec![self.push(node, &frontier, t.data_mb * MB_TO_MEGABITS, zeroed)]
            }
            StructuredWorkflow::Sequence { children } => children
                .iter()
                .fold(frontier, |f, child| self.convert(child, f, first_copy, zeroed)),
            StructuredWorkflow::Parallel { branches } => {
                let frontier = self.funnel(frontier);
                branches
                    .iter()
                    .flat_map(|b| self.convert(b, frontier.clone(), first_copy, zeroed))
                    .collect()
            }
            StructuredWorkflow::Selective { branches, chosen } => {
                let frontier = self.funnel(frontier);
                let mut out = Vec::new();
                for (k, b) in branches.iter().enumerate() {
                    out.extend(self.convert(b, frontier.clone(), first_copy, zeroed || k != *chosen));
                }
                out
            }
            StructuredWorkflow::Iterative { body, unroll } => (0..*unroll)
                .fold(frontier, |f, copy| self.convert(body, f, first_copy && copy == 0, zeroed)),
        }
    }
}

/// Converts a structured workflow into an (unaugmented) WDG.
///
/// Parallel and selective branches hang off a shared fork and feed a shared
/// join; a virtual connector is inserted when a multi-sink frontier would
/// otherwise feed a fork. Iterations are unrolled into a sequence, copies
/// after the first getting fresh ids. Tasks on non-chosen selective branches
/// keep their place in the graph with zero workload and zero comm.
pub fn convert_structure(sw: &StructuredWorkflow) -> Result<Wdg> {
    let mut ids = HashSet::new();
    sw.validate(&mut ids)?;
    let mut b = Builder {
        nodes: Vec::new(),
        data: Vec::new(),
        used: ids.into_iter().collect(),
        next: 1,
    };
    b.convert(sw, Vec::new(), true, false);

    let zeroed: HashSet<TaskId> = b
        .nodes
        .iter()
        .zip(&b.data)
        .filter(|(_, (_, z))| *z)
        .map(|(n, _)| n.id)
        .collect();
    for node in &mut b.nodes {
        if zeroed.contains(&node.id) {
            node.workload = 0.0;
            node.input = 0.0;
            node.comm_in.values_mut().for_each(|c| *c = 0.0);
        } else {
            for (pred, c) in node.comm_in.iter_mut() {
                if zeroed.contains(pred) {
                    *c = 0.0;
                }
            }
        }
    }
    Wdg::new(b.nodes)
}
