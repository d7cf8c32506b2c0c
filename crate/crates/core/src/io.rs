//! Text formats: flat and structured workflow JSON and plan JSON.
//!
//! Flat workflows list nodes and edges; virtual start and end nodes are
//! implicit and recreated on load. Sizes in files are megabytes.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::OffloadPlan;
use crate::structure::{convert_structure, StructuredWorkflow};
use crate::wdg::{add_virtual_nodes, NodeKind, TaskId, TaskNode, Wdg};

const MEGABITS_PER_MB: f64 = 8.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlatNode {
    pub id: u32,
    #[serde(default)]
    pub workload_megacycles: f64,
    #[serde(default, skip_serializing_if = "is_false")]
    pub local_only: bool,
    /// Data received from the device before a source task can start.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub input_mb: f64,
    /// Zero-cost connector pinned to the device.
    #[serde(default, skip_serializing_if = "is_false")]
    pub connector: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlatEdge {
    pub from: u32,
    pub to: u32,
    #[serde(default)]
    pub data_mb: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FlatWorkflow {
    pub nodes: Vec<FlatNode>,
    #[serde(default)]
    pub edges: Vec<FlatEdge>,
}

fn is_false(b: &bool) -> bool {
    !*b
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

impl FlatWorkflow {
    /// Builds the augmented WDG.
    pub fn to_wdg(&self) -> Result<Wdg> {
        let mut nodes: Vec<TaskNode> = self
            .nodes
            .iter()
            .map(|n| {
                if n.connector {
                    TaskNode::virtual_node(TaskId(n.id), NodeKind::VirtualNonoffload)
                } else {
                    let mut t = TaskNode::regular(TaskId(n.id), n.workload_megacycles).with_input(n.input_mb * MEGABITS_PER_MB);
                    t.local_only = n.local_only;
                    t
                }
            })
            .collect();
        let index: std::collections::HashMap<u32, usize> =
            self.nodes.iter().enumerate().map(|(i, n)| (n.id, i)).collect();
        for e in &self.edges {
            if !index.contains_key(&e.from) {
                return Err(Error::UnknownTask(TaskId(e.from)));
            }
            let to = *index.get(&e.to).ok_or(Error::UnknownTask(TaskId(e.to)))?;
            if nodes[to].comm_in.insert(TaskId(e.from), e.data_mb * MEGABITS_PER_MB).is_some() {
                return Err(Error::MalformedGraph(format!("duplicate edge {} -> {}", e.from, e.to)));
            }
        }
        add_virtual_nodes(&Wdg::new(nodes)?)
    }

    /// Flat form of a WDG; the virtual start and end are dropped.
    pub fn from_wdg(wdg: &Wdg) -> Self {
        let mut out = Self::default();
        let is_terminal = |ix: usize| matches!(wdg.node(ix).kind, NodeKind::VirtualStart | NodeKind::VirtualEnd);
        let start_id = wdg.start().map(|s| wdg.id(s));
        for &ix in wdg.topo() {
            if is_terminal(ix) {
                continue;
            }
            let n = wdg.node(ix);
            let from_start = start_id.and_then(|s| n.comm_in.get(&s)).copied().unwrap_or(0.0);
            out.nodes.push(FlatNode {
                id: n.id.0,
                workload_megacycles: n.workload,
                local_only: n.local_only,
                input_mb: (n.input + from_start) / MEGABITS_PER_MB,
                connector: n.kind == NodeKind::VirtualNonoffload,
            });
            for &p in wdg.preds(ix) {
                if !is_terminal(p) {
                    out.edges.push(FlatEdge {
                        from: wdg.id(p).0,
                        to: n.id.0,
                        data_mb: wdg.comm(p, ix) / MEGABITS_PER_MB,
                    });
                }
            }
        }
        out
    }
}

/// Either workflow encoding, told apart by the top-level keys.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum WorkflowFile {
    Flat(FlatWorkflow),
    Structured(StructuredWorkflow),
}

impl WorkflowFile {
    pub fn to_wdg(&self) -> Result<Wdg> {
        match self {
            Self::Flat(f) => f.to_wdg(),
            Self::Structured(s) => add_virtual_nodes(&convert_structure(s)?),
        }
    }
}

pub fn parse_workflow(text: &str) -> Result<Wdg> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let file: WorkflowFile = if value.get("nodes").is_some() {
        WorkflowFile::Flat(serde_json::from_value(value).map_err(|e| Error::Parse(format!("flat workflow: {e}")))?)
    } else if value.get("type").is_some() {
        WorkflowFile::Structured(
            serde_json::from_value(value).map_err(|e| Error::Parse(format!("structured workflow: {e}")))?,
        )
    } else {
        return Err(Error::Parse("expected a `nodes` list or a structured `type`".into()));
    };
    file.to_wdg()
}

pub fn read_workflow(path: &Path) -> Result<Wdg> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    parse_workflow(&text)
}

pub fn workflow_to_json(wdg: &Wdg) -> String {
    serde_json::to_string_pretty(&FlatWorkflow::from_wdg(wdg)).expect("flat workflow serializes")
}

pub fn plan_to_json(plan: &OffloadPlan) -> String {
    serde_json::to_string_pretty(plan).expect("plan serializes")
}

pub fn parse_plan(text: &str) -> Result<OffloadPlan> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}
