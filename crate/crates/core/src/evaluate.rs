//! Ground-truth energy and makespan of a decision vector.
//!
//! Energy: each task pays `y` when offloaded or `z` when local, plus the
//! radio cost of every incoming dependency whose endpoints run on different
//! sides. Virtual nodes sit on the device unless they are the anchored start
//! or end of a sub-branch graph.
//!
//! Makespan: list scheduling on one serial device (earliest-ready first) and
//! `edge_server_count` identical edge servers (Min-Min). A dependency that
//! crosses sides delays its successor by the transfer time.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap};

use serde::{Deserialize, Serialize};

use crate::env::EnvParams;
use crate::error::{Error, Result};
use crate::wdg::{NodeKind, Placement, TaskId, Wdg};

pub type DecisionVector = BTreeMap<TaskId, Placement>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub total_energy: f64,
    pub makespan: f64,
    pub per_task_energy: BTreeMap<TaskId, f64>,
}

#[derive(Debug, Clone, Copy)]
struct InEdge {
    from: usize,
    energy: f64,
    delay: f64,
}

/// Precomputed per-node costs for repeated evaluation of one graph.
#[derive(Debug, Clone)]
pub struct Evaluator<'a> {
    wdg: &'a Wdg,
    env: EnvParams,
    local_energy: Vec<f64>,
    edge_energy: Vec<f64>,
    local_time: Vec<f64>,
    edge_time: Vec<f64>,
    in_edges: Vec<Vec<InEdge>>,
    fixed: Vec<Option<Placement>>,
    offloadable: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Time(f64);

impl Eq for Time {}

impl PartialOrd for Time {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Time {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl<'a> Evaluator<'a> {
    pub fn new(wdg: &'a Wdg, env: &EnvParams) -> Self {
        let n = wdg.len();
        let anchors = wdg.anchors();
        let mut ev = Self {
            wdg,
            env: *env,
            local_energy: vec![0.0; n],
            edge_energy: vec![0.0; n],
            local_time: vec![0.0; n],
            edge_time: vec![0.0; n],
            in_edges: vec![Vec::new(); n],
            fixed: vec![None; n],
            offloadable: Vec::new(),
        };
        for ix in 0..n {
            let node = wdg.node(ix);
            let attrs = wdg.attributes(ix, env);
            ev.local_energy[ix] = attrs.z;
            ev.edge_energy[ix] = attrs.y;
            if !node.is_virtual() {
                ev.local_time[ix] = env.local_time(node.workload);
                ev.edge_time[ix] = env.edge_time(node.workload);
            }
            ev.fixed[ix] = match node.kind {
                NodeKind::Regular if node.local_only => Some(Placement::Local),
                NodeKind::Regular => None,
                NodeKind::VirtualStart => Some(anchors.start),
                NodeKind::VirtualEnd => Some(anchors.end),
                NodeKind::VirtualNonoffload => Some(Placement::Local),
            };
            if node.kind == NodeKind::Regular && !node.local_only {
                ev.offloadable.push(ix);
            }
            ev.in_edges[ix] = wdg
                .preds(ix)
                .iter()
                .map(|&p| {
                    let mb = wdg.comm(p, ix);
                    InEdge {
                        from: p,
                        energy: env.transmission_energy(mb),
                        delay: env.transfer_time(mb),
                    }
                })
                .collect();
        }
        ev.offloadable.sort_by_key(|&ix| wdg.id(ix));
        ev
    }

    pub fn wdg(&self) -> &Wdg {
        self.wdg
    }

    /// Offloadable tasks (regular, not local-only), ordered by id.
    pub fn offloadable(&self) -> &[usize] {
        &self.offloadable
    }

    pub fn all_local(&self) -> Vec<Placement> {
        (0..self.wdg.len())
            .map(|ix| self.fixed[ix].unwrap_or(Placement::Local))
            .collect()
    }

    /// Placements with exactly the given offloadable tasks offloaded.
    pub fn with_offloaded(&self, offloaded: impl Fn(usize) -> bool) -> Vec<Placement> {
        let mut p = self.all_local();
        for (k, &ix) in self.offloadable.iter().enumerate() {
            if offloaded(k) {
                p[ix] = Placement::Offload;
            }
        }
        p
    }

    pub fn placements(&self, d: &DecisionVector) -> Result<Vec<Placement>> {
        let mut out = self.all_local();
        for ix in self.wdg.real_tasks() {
            let id = self.wdg.id(ix);
            let place = *d.get(&id).ok_or(Error::IncompleteDecision(id))?;
            if place == Placement::Offload && self.fixed[ix].is_some() {
                return Err(Error::LocalOnlyOffloaded(id));
            }
            out[ix] = place;
        }
        Ok(out)
    }

    pub fn decisions(&self, placements: &[Placement]) -> DecisionVector {
        self.wdg.real_tasks().map(|ix| (self.wdg.id(ix), placements[ix])).collect()
    }

    pub fn task_energy(&self, placements: &[Placement], ix: usize) -> f64 {
        let own = placements[ix];
        let exec = match own {
            Placement::Local => self.local_energy[ix],
            Placement::Offload => self.edge_energy[ix],
        };
        self.in_edges[ix]
            .iter()
            .filter(|e| placements[e.from] != own)
            .fold(exec, |acc, e| acc + e.energy)
    }

    pub fn energy(&self, placements: &[Placement]) -> f64 {
        (0..self.wdg.len()).map(|ix| self.task_energy(placements, ix)).sum()
    }

    pub fn makespan(&self, placements: &[Placement]) -> f64 {
        let wdg = self.wdg;
        let n = wdg.len();
        let mut waiting: Vec<usize> = (0..n).map(|ix| wdg.preds(ix).len()).collect();
        let mut ready_at = vec![0.0f64; n];
        let mut finish = vec![0.0f64; n];
        let mut local: BinaryHeap<Reverse<(Time, TaskId, usize)>> = BinaryHeap::new();
        let mut remote: Vec<usize> = Vec::new();
        let mut instant: Vec<usize> = Vec::new();
        let mut servers = vec![0.0f64; self.env.edge_server_count];
        let mut device_free = 0.0f64;

        let release = |ix: usize,
                       ready_at: &[f64],
                       local: &mut BinaryHeap<Reverse<(Time, TaskId, usize)>>,
                       remote: &mut Vec<usize>,
                       instant: &mut Vec<usize>| {
            if wdg.node(ix).is_virtual() {
                instant.push(ix);
            } else if placements[ix] == Placement::Local {
                local.push(Reverse((Time(ready_at[ix]), wdg.id(ix), ix)));
            } else {
                remote.push(ix);
            }
        };
        for ix in 0..n {
            if waiting[ix] == 0 {
                release(ix, &ready_at, &mut local, &mut remote, &mut instant);
            }
        }

        let mut done = 0;
        while done < n {
            let ix = if let Some(ix) = instant.pop() {
                finish[ix] = ready_at[ix];
                ix
            } else {
                let local_pick = local.peek().map(|Reverse((t, _, ix))| (t.0.max(device_free), *ix));
                let earliest_server = servers
                    .iter()
                    .enumerate()
                    .min_by(|a, b| a.1.total_cmp(b.1))
                    .map(|(s, &t)| (s, t))
                    .unwrap();
                let remote_pick = remote
                    .iter()
                    .enumerate()
                    .map(|(slot, &ix)| {
                        let start = ready_at[ix].max(earliest_server.1);
                        (start + self.edge_time[ix], start, slot, ix)
                    })
                    .min_by(|a, b| a.0.total_cmp(&b.0).then_with(|| wdg.id(a.3).cmp(&wdg.id(b.3))));
                match (local_pick, remote_pick) {
                    (Some((start, ix)), r) if r.is_none_or(|(_, rs, _, _)| start <= rs) => {
                        local.pop();
                        finish[ix] = start + self.local_time[ix];
                        device_free = finish[ix];
                        ix
                    }
                    (_, Some((end, _, slot, ix))) => {
                        remote.swap_remove(slot);
                        finish[ix] = end;
                        servers[earliest_server.0] = end;
                        ix
                    }
                    (None, None) => unreachable!("acyclic graph always has a ready task"),
                    (Some(_), None) => unreachable!(),
                }
            };
            done += 1;
            for &s in wdg.succs(ix) {
                let crossing = placements[ix] != placements[s];
                let delay = if crossing {
                    self.in_edges[s].iter().find(|e| e.from == ix).map_or(0.0, |e| e.delay)
                } else {
                    0.0
                };
                ready_at[s] = ready_at[s].max(finish[ix] + delay);
                waiting[s] -= 1;
                if waiting[s] == 0 {
                    release(s, &ready_at, &mut local, &mut remote, &mut instant);
                }
            }
        }
        match wdg.end() {
            Some(e) => finish[e],
            None => finish.iter().copied().fold(0.0, f64::max),
        }
    }
}

pub fn plan_energy(wdg: &Wdg, d: &DecisionVector, env: &EnvParams) -> Result<EvalResult> {
    let ev = Evaluator::new(wdg, env);
    let placements = ev.placements(d)?;
    let per_task_energy: BTreeMap<TaskId, f64> = (0..wdg.len())
        .map(|ix| (wdg.id(ix), ev.task_energy(&placements, ix)))
        .collect();
    Ok(EvalResult {
        total_energy: per_task_energy.values().sum(),
        makespan: ev.makespan(&placements),
        per_task_energy,
    })
}

pub fn plan_makespan(wdg: &Wdg, d: &DecisionVector, env: &EnvParams) -> Result<f64> {
    let ev = Evaluator::new(wdg, env);
    Ok(ev.makespan(&ev.placements(d)?))
}

/// Makespan of the plan that keeps every task on the device.
pub fn all_local_makespan(wdg: &Wdg, env: &EnvParams) -> f64 {
    let ev = Evaluator::new(wdg, env);
    ev.makespan(&ev.all_local())
}

pub fn offload_percentage(d: &DecisionVector) -> f64 {
    if d.is_empty() {
        return 0.0;
    }
    d.values().filter(|&&p| p == Placement::Offload).count() as f64 / d.len() as f64
}
