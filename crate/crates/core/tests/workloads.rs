mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;
use wdg_offload::wdg::NodeKind;
use wdg_offload::{
    brute_force, detect_blocks, generate, graph4edge_nonlinear, offload_percentage, transitive_closure,
    uav_case_study, GenSpec, SolveConfig,
};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn generated_graphs_are_valid_and_in_range(n in 10usize..=100, seed in 0u64..1_000_000) {
        let spec = GenSpec::new(n, seed);
        let w = generate(&spec).unwrap();
        prop_assert_eq!(w.real_task_count(), n);
        prop_assert_eq!(w.nodes().iter().filter(|t| t.local_only).count(), n / 5);
        detect_blocks(&w, &transitive_closure(&w)).unwrap();
        let (wl, wh) = spec.workload_range;
        let (dl, dh) = spec.data_range;
        for ix in w.real_tasks() {
            let t = w.node(ix);
            prop_assert!(t.workload >= wl && t.workload <= wh);
            for &mb in t.comm_in.values() {
                prop_assert!(mb >= dl * 8.0 && mb <= dh * 8.0);
            }
        }
        let again = generate(&spec).unwrap();
        prop_assert_eq!(again.nodes(), w.nodes());
    }

    #[test]
    fn every_shape_decomposes(seed in 0u64..1_000_000, n in 10usize..=60) {
        let shape = common::SHAPES[(seed % 4) as usize];
        let w = generate(&common::spec_for(shape, n, seed)).unwrap();
        detect_blocks(&w, &transitive_closure(&w)).unwrap();
        if shape == common::Shape::Linear {
            prop_assert!(wdg_offload::is_linear(&w));
            prop_assert!(w.nodes().iter().all(|t| t.kind != NodeKind::VirtualNonoffload));
        }
    }
}

#[test]
fn case_study_plan_is_certified() {
    let (w, expected) = uav_case_study();
    let cfg = SolveConfig::default();
    let oracle = brute_force(&w, &cfg).unwrap();
    assert_eq!(oracle.decisions, expected);
    let plan = graph4edge_nonlinear(&w, &BTreeSet::new(), &cfg).unwrap();
    assert_eq!(plan.decisions, expected);
    assert!((offload_percentage(&plan.decisions) - 2.0 / 7.0).abs() < 1e-12);
    let deadline = graph4edge_nonlinear(&w, &BTreeSet::new(), &cfg.with_fraction(1.3)).unwrap();
    assert!(deadline.feasible);
    assert_eq!(deadline.decisions, expected);
}
