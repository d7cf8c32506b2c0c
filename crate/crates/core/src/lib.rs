//! Minimum-energy offloading of DAG workflows from a mobile end device to
//! edge servers.
//!
//! A workflow is a [`Wdg`] with virtual start and end nodes. The solvers
//! map offloading decisions to paths in energy-consumption transitive
//! graphs over a main branch and pick the cheapest plan that meets a
//! deadline. [`evaluate`] is the ground truth for energy and makespan;
//! [`baselines`] holds the comparison strategies and the brute-force oracle.

pub mod baselines;
pub mod blocks;
pub mod classify;
pub mod dot;
pub mod env;
pub mod error;
pub mod etg;
pub mod evaluate;
pub mod harness;
pub mod io;
pub mod path;
pub mod reach;
pub mod solver;
pub mod structure;
pub mod wdg;
pub mod workloads;

pub use baselines::{all_in_end, brute_force, ga, greedy, pso, MetaheuristicConfig};
pub use blocks::{detect_blocks, Block};
pub use classify::{classify_edge, EdgeClass};
pub use env::{compute_energy_attributes, EnergyAttributes, EnvParams};
pub use error::{Error, Result};
pub use etg::{select_main_branch, Etg, EtgEdge, EtgSet, MainBranchRule, Weight};
pub use evaluate::{offload_percentage, plan_energy, plan_makespan, DecisionVector, EvalResult, Evaluator};
pub use harness::{RunConfig, Strategy};
pub use path::{dijkstra, ShortestPath};
pub use reach::{transitive_closure, Reachability};
pub use solver::{graph4edge_linear, graph4edge_nonlinear, OffloadPlan, SolveConfig};
pub use structure::{convert_structure, StructuredWorkflow};
pub use wdg::{add_virtual_nodes, is_linear, Placement, TaskId, TaskNode, Wdg};
pub use workloads::{generate, uav_case_study, GenSpec};
