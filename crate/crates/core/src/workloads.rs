//! Seeded random workflows and the UAV parcel-delivery case study.

use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::evaluate::DecisionVector;
use crate::structure::{convert_structure, AtomicTask, StructuredWorkflow};
use crate::wdg::{add_virtual_nodes, Placement, TaskId, TaskNode, Wdg};

/// Relative weights of the composition kinds drawn at each level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructureMix {
    pub sequential: f64,
    pub parallel: f64,
    pub selective: f64,
    pub iterative: f64,
}

impl StructureMix {
    pub const SEQUENTIAL: Self = Self {
        sequential: 1.0,
        parallel: 0.0,
        selective: 0.0,
        iterative: 0.0,
    };

    fn weights(&self) -> [f64; 4] {
        [self.sequential, self.parallel, self.selective, self.iterative]
    }
}

impl Default for StructureMix {
    fn default() -> Self {
        Self {
            sequential: 0.4,
            parallel: 0.4,
            selective: 0.0,
            iterative: 0.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenSpec {
    pub task_count: usize,
    pub local_fraction: f64,
    pub structure_mix: StructureMix,
    pub max_branch_width: usize,
    pub max_nesting: usize,
    /// Megacycles, inclusive.
    pub workload_range: (f64, f64),
    /// Megabytes, inclusive.
    pub data_range: (f64, f64),
    pub seed: u64,
}

impl Default for GenSpec {
    fn default() -> Self {
        Self {
            task_count: 50,
            local_fraction: 0.2,
            structure_mix: StructureMix::default(),
            max_branch_width: 3,
            max_nesting: 3,
            workload_range: (100.0, 1500.0),
            data_range: (0.625, 30.0),
            seed: 0,
        }
    }
}

impl GenSpec {
    pub fn new(task_count: usize, seed: u64) -> Self {
        Self {
            task_count,
            seed,
            ..Self::default()
        }
    }

    pub fn sequential(mut self) -> Self {
        self.structure_mix = StructureMix::SEQUENTIAL;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.task_count == 0 {
            return Err(invalid("task_count", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.local_fraction) {
            return Err(invalid("local_fraction", "must lie in [0, 1]"));
        }
        let w = self.structure_mix.weights();
        if w.iter().any(|&p| !(0.0..=1.0).contains(&p)) || (w.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(invalid("structure_mix", "probabilities must sum to 1"));
        }
        if self.max_branch_width < 2 {
            return Err(invalid("max_branch_width", "must be at least 2"));
        }
        for (field, (lo, hi)) in [("workload_range", self.workload_range), ("data_range", self.data_range)] {
            if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && lo <= hi) {
                return Err(invalid(field, "must be a nonempty non-negative range"));
            }
        }
        Ok(())
    }
}

/// Samples a structured workflow with exactly `task_count` tasks.
pub fn generate_structure(spec: &GenSpec) -> Result<StructuredWorkflow> {
    spec.validate()?;
    let mut g = Generator {
        spec,
        rng: ChaCha8Rng::seed_from_u64(spec.seed),
    };
    Ok(g.node(spec.task_count, 0))
}

/// Random augmented WDG; `⌊local_fraction · n⌋` tasks become local-only.
pub fn generate(spec: &GenSpec) -> Result<Wdg> {
    let sw = generate_structure(spec)?;
    let wdg = convert_structure(&sw)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x5EED_10CA_1000_0000);
    let real: Vec<TaskId> = wdg.real_tasks().map(|ix| wdg.id(ix)).collect();
    let mut sorted = real.clone();
    sorted.sort();
    let k = (spec.local_fraction * real.len() as f64 + 1e-9).floor() as usize;
    let local: BTreeSet<TaskId> = sample(&mut rng, sorted.len(), k).into_iter().map(|i| sorted[i]).collect();
    add_virtual_nodes(&wdg.with_local_set(&local)?)
}

struct Generator<'a> {
    spec: &'a GenSpec,
    rng: ChaCha8Rng,
}

impl Generator<'_> {
    fn atom(&mut self) -> StructuredWorkflow {
        let (wl, wh) = self.spec.workload_range;
        let (dl, dh) = self.spec.data_range;
        StructuredWorkflow::Atomic(AtomicTask::new(self.rng.gen_range(wl..=wh), self.rng.gen_range(dl..=dh)))
    }

    /// Random composition of `n` into `parts` positive sizes.
    fn split(&mut self, n: usize, parts: usize) -> Vec<usize> {
        let mut cuts: Vec<usize> = sample(&mut self.rng, n - 1, parts - 1).into_iter().map(|c| c + 1).collect();
        cuts.sort_unstable();
        let mut sizes = Vec::with_capacity(parts);
        let mut prev = 0;
        for c in cuts.into_iter().chain(std::iter::once(n)) {
            sizes.push(c - prev);
            prev = c;
        }
        sizes
    }

    fn node(&mut self, n: usize, depth: usize) -> StructuredWorkflow {
        if n == 1 {
            return self.atom();
        }
        let nested = depth < self.spec.max_nesting;
        let w = self.spec.structure_mix.weights();
        let mut r = self.rng.gen::<f64>() * w.iter().sum::<f64>();
        let mut kind = 0;
        for (k, &p) in w.iter().enumerate() {
            if r < p {
                kind = k;
                break;
            }
            r -= p;
        }
        let unroll = [2usize, 3].into_iter().rfind(|u| n.is_multiple_of(*u));
        match kind {
            1 | 2 if nested => {
                let width = self.rng.gen_range(2..=self.spec.max_branch_width.min(n));
                let branches = self.split(n, width).into_iter().map(|s| self.node(s, depth + 1)).collect();
                if kind == 1 {
                    StructuredWorkflow::Parallel { branches }
                } else {
                    let chosen = self.rng.gen_range(0..width);
                    StructuredWorkflow::Selective { branches, chosen }
                }
            }
            3 if nested && unroll.is_some() => {
                let u = unroll.unwrap();
                StructuredWorkflow::Iterative {
                    body: Box::new(self.node(n / u, depth + 1)),
                    unroll: u,
                }
            }
            _ => {
                let parts = self.rng.gen_range(2..=n.min(4));
                let children = self.split(n, parts).into_iter().map(|s| self.node(s, depth)).collect();
                StructuredWorkflow::Sequence { children }
            }
        }
    }
}

/// Final parcel-delivery workflow: frame filtering, target detection,
/// segmentation and crop on the UAV, then pose and face recognition in
/// parallel, then landing and handover (pinned to the UAV).
///
/// Pre-processing tasks move large frames and need little compute; the
/// recognition tasks see about a tenth of the data and need a lot.
pub fn uav_case_study() -> (Wdg, DecisionVector) {
    const MB: f64 = 8.0;
    let nodes = vec![
        TaskNode::regular(TaskId(1), 60.0).with_input(30.0 * MB),
        TaskNode::regular(TaskId(2), 80.0).with_pred(TaskId(1), 25.0 * MB),
        TaskNode::regular(TaskId(3), 70.0).with_pred(TaskId(2), 15.0 * MB),
        TaskNode::regular(TaskId(4), 50.0).with_pred(TaskId(3), 10.0 * MB),
        TaskNode::regular(TaskId(5), 1500.0).with_pred(TaskId(4), 1.5 * MB),
        TaskNode::regular(TaskId(6), 1400.0).with_pred(TaskId(4), 1.5 * MB),
        TaskNode::regular(TaskId(7), 100.0)
            .with_pred(TaskId(5), 0.1 * MB)
            .with_pred(TaskId(6), 0.1 * MB)
            .local_only(),
    ];
    let wdg = add_virtual_nodes(&Wdg::new(nodes).expect("case study graph is valid")).expect("augmentable");
    let expected = (1..=7)
        .map(|i| {
            let p = if i == 5 || i == 6 {
                Placement::Offload
            } else {
                Placement::Local
            };
            (TaskId(i), p)
        })
        .collect();
    (wdg, expected)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blocks::detect_blocks;
    use crate::evaluate::offload_percentage;
    use crate::reach::transitive_closure;
    use crate::wdg::is_linear;

    #[test]
    fn same_seed_same_graph() {
        let a = generate(&GenSpec::new(10, 7)).unwrap();
        let b = generate(&GenSpec::new(10, 7)).unwrap();
        assert_eq!(a.nodes(), b.nodes());
        let c = generate(&GenSpec::new(10, 8)).unwrap();
        assert_ne!(a.nodes(), c.nodes());
    }

    #[test]
    fn local_fraction_is_exact() {
        let w = generate(&GenSpec::new(50, 3)).unwrap();
        assert_eq!(w.real_task_count(), 50);
        assert_eq!(w.nodes().iter().filter(|n| n.local_only).count(), 10);
    }

    #[test]
    fn sequential_mix_gives_chain() {
        for seed in 0..5 {
            assert!(is_linear(&generate(&GenSpec::new(30, seed).sequential()).unwrap()));
        }
    }

    #[test]
    fn generated_graphs_decompose() {
        for seed in 0..40 {
            let w = generate(&GenSpec::new(10 + seed as usize * 2, seed)).unwrap();
            detect_blocks(&w, &transitive_closure(&w)).unwrap();
        }
    }

    #[test]
    fn invalid_specs() {
        let mut s = GenSpec::default();
        s.structure_mix.parallel = 0.9;
        assert!(s.validate().is_err());
        let s = GenSpec {
            workload_range: (5.0, 1.0),
            ..GenSpec::default()
        };
        assert!(s.validate().is_err());
    }

    #[test]
    fn case_study_shape() {
        let (w, expected) = uav_case_study();
        assert_eq!(w.real_task_count(), 7);
        assert_eq!(expected[&TaskId(7)], Placement::Local);
        assert!(w.node(w.index_of(TaskId(7)).unwrap()).local_only);
        assert!((offload_percentage(&expected) - 2.0 / 7.0).abs() < 1e-12);
    }
}
