//! Graphviz export of WDGs (edges coloured by class) and ETG layers.

use std::fmt::Write;

use crate::classify::{classify_indices, EdgeClass};
use crate::etg::{EtgSet, Weight};
use crate::reach::transitive_closure;
use crate::wdg::{NodeKind, TaskId, Wdg};

fn class_color(class: EdgeClass) -> &'static str {
    match class {
        EdgeClass::Ordinary => "black",
        EdgeClass::InBlock => "blue",
        EdgeClass::OutBlock => "darkgreen",
        EdgeClass::OverBlock => "red",
        EdgeClass::Invalid => "gray",
    }
}

pub fn wdg_to_dot(wdg: &Wdg) -> String {
    let reach = transitive_closure(wdg);
    let mut s = String::from("digraph wdg {\n  rankdir=LR;\n");
    for &ix in wdg.topo() {
        let n = wdg.node(ix);
        let (shape, label) = match n.kind {
            NodeKind::Regular if n.local_only => ("box", format!("{}\\n{:.0} Mc\\nlocal", n.id, n.workload)),
            NodeKind::Regular => ("box", format!("{}\\n{:.0} Mc", n.id, n.workload)),
            NodeKind::VirtualStart => ("circle", "Ts".to_string()),
            NodeKind::VirtualEnd => ("doublecircle", "Te".to_string()),
            NodeKind::VirtualNonoffload => ("point", String::new()),
        };
        let _ = writeln!(s, "  n{} [shape={shape}, label=\"{label}\"];", n.id.0);
    }
    for (u, v) in wdg.edges() {
        let class = classify_indices(wdg, &reach, u, v);
        let _ = writeln!(
            s,
            "  n{} -> n{} [color={}, label=\"{:.2} MB\", tooltip=\"{}\"];",
            wdg.id(u).0,
            wdg.id(v).0,
            class_color(class),
            wdg.comm(u, v) / 8.0,
            class.as_str()
        );
    }
    s.push_str("}\n");
    s
}

/// One DOT document per scenario layer. Nodes are main-branch tasks; edges
/// that move into another layer name it in their label.
pub fn etg_set_to_dot(set: &EtgSet, main_branch: &[TaskId]) -> Vec<String> {
    let name = |pos: usize| -> String {
        if pos == 0 {
            "Ts".into()
        } else if pos + 1 == main_branch.len() {
            "Te".into()
        } else {
            main_branch[pos].to_string()
        }
    };
    set.etgs
        .iter()
        .enumerate()
        .map(|(sid, etg)| {
            let mut s = format!("digraph etg_{sid} {{\n  rankdir=LR;\n");
            let mut positions: Vec<usize> = etg.edges.iter().flat_map(|e| [e.head, e.tail]).collect();
            positions.sort_unstable();
            positions.dedup();
            for p in positions {
                let _ = writeln!(s, "  p{p} [label=\"{}\"];", name(p));
            }
            for e in &etg.edges {
                let layer = if e.tail_scenario != sid {
                    format!(" -> S{}", e.tail_scenario)
                } else {
                    String::new()
                };
                match e.weight {
                    Weight::Finite(w) => {
                        let _ = writeln!(s, "  p{} -> p{} [label=\"{w:.4}{layer}\"];", e.head, e.tail);
                    }
                    Weight::Infinite => {
                        let _ = writeln!(s, "  p{} -> p{} [label=\"inf{layer}\", style=dashed];", e.head, e.tail);
                    }
                }
            }
            s.push_str("}\n");
            s
        })
        .collect()
}
