//! Device, edge and link parameters of the offloading environment.
//!
//! Units: CPU speeds in megacycles per second, powers in watts, bandwidth
//! in megabits per second. Energies come out in joules, times in seconds.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::wdg::{NodeKind, TaskNode};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnvParams {
    /// End-device CPU speed.
    pub f_end: f64,
    /// Edge-server CPU speed (all servers are identical).
    pub f_edge: f64,
    /// End-device power while computing.
    pub p_end: f64,
    /// End-device power while waiting for a remote task.
    pub p_idle: f64,
    /// End-device radio power.
    pub p_trans: f64,
    pub bandwidth: f64,
    pub edge_server_count: usize,
}

impl Default for EnvParams {
    /// One UAV and three edge servers, 100 Mbps link.
    fn default() -> Self {
        Self {
            f_end: 1000.0,
            f_edge: 1300.0,
            p_end: 0.7,
            p_idle: 0.03,
            p_trans: 0.1,
            bandwidth: 100.0,
            edge_server_count: 3,
        }
    }
}

impl EnvParams {
    pub fn validate(&self) -> Result<()> {
        let rates = [
            ("f_end", self.f_end),
            ("f_edge", self.f_edge),
            ("p_end", self.p_end),
            ("p_idle", self.p_idle),
            ("p_trans", self.p_trans),
            ("bandwidth", self.bandwidth),
        ];
        for (name, value) in rates {
            if !(value.is_finite() && value > 0.0) {
                return Err(invalid(name, format!("must be finite and > 0, got {value}")));
            }
        }
        if self.edge_server_count == 0 {
            return Err(invalid("edge_server_count", "must be at least 1"));
        }
        Ok(())
    }

    /// Radio energy for moving `megabits` between device and edge.
    pub fn transmission_energy(&self, megabits: f64) -> f64 {
        megabits / self.bandwidth * self.p_trans
    }

    pub fn transfer_time(&self, megabits: f64) -> f64 {
        megabits / self.bandwidth
    }

    pub fn local_time(&self, workload: f64) -> f64 {
        workload / self.f_end
    }

    pub fn edge_time(&self, workload: f64) -> f64 {
        workload / self.f_edge
    }
}

/// Per-task energy figures for the three execution situations.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyAttributes {
    /// Transmission energy of the task's input.
    pub x: f64,
    /// Device idle energy while the task runs remotely.
    pub y: f64,
    /// Device load energy when the task runs locally.
    pub z: f64,
}

pub fn compute_energy_attributes(task: &TaskNode, pred_comm: f64, env: &EnvParams) -> EnergyAttributes {
    if task.kind != NodeKind::Regular {
        return EnergyAttributes::default();
    }
    EnergyAttributes {
        x: env.transmission_energy(pred_comm),
        y: env.edge_time(task.workload) * env.p_idle,
        z: env.local_time(task.workload) * env.p_end,
    }
}
