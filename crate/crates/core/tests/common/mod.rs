#![allow(dead_code)]

use proptest::prelude::*;
use wdg_offload::workloads::StructureMix;
use wdg_offload::{add_virtual_nodes, generate, GenSpec, TaskId, TaskNode, Wdg};

/// Arbitrary DAG on `n` nodes: edge i -> j (i < j) for each selected pair.
pub fn dag(n: usize, edges: &[bool], loads: &[f64], data: &[f64]) -> Wdg {
    let mut nodes: Vec<TaskNode> = (0..n)
        .map(|i| TaskNode::regular(TaskId(i as u32 + 1), loads[i]))
        .collect();
    let mut k = 0;
    for j in 0..n {
        for i in 0..j {
            if edges[k] {
                nodes[j] = nodes[j].clone().with_pred(TaskId(i as u32 + 1), data[k]);
            }
            k += 1;
        }
    }
    for (i, node) in nodes.iter_mut().enumerate() {
        if node.comm_in.is_empty() {
            node.input = data[i % data.len()];
        }
    }
    add_virtual_nodes(&Wdg::new(nodes).unwrap()).unwrap()
}

pub fn arb_dag(max_n: usize) -> impl Strategy<Value = Wdg> {
    (2..=max_n).prop_flat_map(|n| {
        let pairs = n * (n - 1) / 2;
        (
            Just(n),
            prop::collection::vec(prop::bool::weighted(0.35), pairs),
            prop::collection::vec(100.0..1500.0f64, n),
            prop::collection::vec(5.0..240.0f64, pairs.max(1)),
        )
            .prop_map(|(n, e, l, d)| dag(n, &e, &l, &d))
    })
}

/// Kinds of generated instances used by the oracle suites.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Linear,
    SingleBlock,
    SerialBlocks,
    Nested,
}

pub const SHAPES: [Shape; 4] = [Shape::Linear, Shape::SingleBlock, Shape::SerialBlocks, Shape::Nested];

pub fn spec_for(shape: Shape, n: usize, seed: u64) -> GenSpec {
    let mut s = GenSpec::new(n, seed);
    match shape {
        Shape::Linear => s = s.sequential(),
        Shape::SingleBlock => {
            s.max_nesting = 1;
            s.structure_mix = StructureMix {
                sequential: 0.5,
                parallel: 0.5,
                selective: 0.0,
                iterative: 0.0,
            };
        }
        Shape::SerialBlocks => {
            s.max_nesting = 1;
            s.structure_mix = StructureMix {
                sequential: 0.3,
                parallel: 0.4,
                selective: 0.1,
                iterative: 0.2,
            };
        }
        Shape::Nested => {
            s.max_nesting = 4;
            s.max_branch_width = 3;
            s.structure_mix = StructureMix {
                sequential: 0.2,
                parallel: 0.5,
                selective: 0.1,
                iterative: 0.2,
            };
        }
    }
    s
}

/// Instance of the given shape with at most 12 offloadable tasks.
pub fn instance(shape: Shape, seed: u64) -> Wdg {
    let n = 4 + (seed % 12) as usize;
    generate(&spec_for(shape, n, seed)).unwrap()
}

pub fn offloadable(w: &Wdg) -> usize {
    w.real_tasks().filter(|&ix| !w.node(ix).local_only).count()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}
