//! Block-relative classification of candidate ETG edges.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::reach::{bits, Reachability};
use crate::wdg::{NodeKind, TaskId, Wdg};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeClass {
    Ordinary,
    InBlock,
    OutBlock,
    OverBlock,
    Invalid,
}

impl EdgeClass {
    pub fn as_str(self) -> &'static str {
        match self {
            EdgeClass::Ordinary => "ordinary",
            EdgeClass::InBlock => "in-block",
            EdgeClass::OutBlock => "out-block",
            EdgeClass::OverBlock => "over-block",
            EdgeClass::Invalid => "invalid",
        }
    }
}

/// Classifies the candidate edge `i -> j` by index.
///
/// * over-block: two unordered nodes both lie between `i` and `j`;
/// * in-block: some node after `i` is unordered with `j`;
/// * out-block: some node unordered with `i` precedes `j`;
/// * ordinary: none of the above.
///
/// Checked in that order. Pairs with no path between them are invalid
/// unless `i` is the virtual start.
pub fn classify_indices(wdg: &Wdg, reach: &Reachability, i: usize, j: usize) -> EdgeClass {
    if i == j || (!reach.reaches(i, j) && wdg.node(i).kind != NodeKind::VirtualStart) {
        return EdgeClass::Invalid;
    }
    let between: Vec<u64> = reach.row(i).iter().zip(reach.col(j)).map(|(r, c)| r & c).collect();
    let members: Vec<usize> = bits(&between).collect();
    for &k in &members {
        let comparable = reach.comparable(k);
        if between.iter().zip(&comparable).any(|(b, c)| b & !c != 0) {
            return EdgeClass::OverBlock;
        }
    }
    let cmp_j = reach.comparable(j);
    if reach.row(i).iter().zip(&cmp_j).any(|(r, c)| r & !c != 0) {
        return EdgeClass::InBlock;
    }
    let cmp_i = reach.comparable(i);
    if reach.col(j).iter().zip(&cmp_i).any(|(r, c)| r & !c != 0) {
        return EdgeClass::OutBlock;
    }
    debug_assert_eq!(cmp_i.len(), reach.words());
    EdgeClass::Ordinary
}

pub fn classify_edge(wdg: &Wdg, reach: &Reachability, i: TaskId, j: TaskId) -> Result<EdgeClass> {
    Ok(classify_indices(wdg, reach, wdg.index_of(i)?, wdg.index_of(j)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reach::transitive_closure;
    use crate::wdg::fixtures::*;

    fn class(w: &Wdg, i: u32, j: u32) -> EdgeClass {
        let r = transitive_closure(w);
        classify_edge(w, &r, TaskId(i), TaskId(j)).unwrap()
    }

    #[test]
    fn single_block_examples() {
        let w = single_block();
        assert_eq!(class(&w, 1, 3), EdgeClass::InBlock);
        assert_eq!(class(&w, 1, 4), EdgeClass::InBlock);
        assert_eq!(class(&w, 3, 8), EdgeClass::OutBlock);
        assert_eq!(class(&w, 4, 8), EdgeClass::OutBlock);
        assert_eq!(class(&w, 1, 8), EdgeClass::OverBlock);
        assert_eq!(class(&w, 2, 8), EdgeClass::OverBlock);
        assert_eq!(class(&w, 1, 2), EdgeClass::Ordinary);
        assert_eq!(class(&w, 3, 4), EdgeClass::Ordinary);
        assert_eq!(class(&w, 7, 8), EdgeClass::Ordinary);
    }

    #[test]
    fn unreachable_pairs_are_invalid() {
        let w = single_block();
        assert_eq!(class(&w, 3, 5), EdgeClass::Invalid);
        assert_eq!(class(&w, 8, 1), EdgeClass::Invalid);
        assert_eq!(class(&w, 4, 4), EdgeClass::Invalid);
    }

    #[test]
    fn virtual_start_edges_are_classified() {
        let w = single_block();
        let r = transitive_closure(&w);
        let s = w.start().unwrap();
        let t3 = w.index_of(TaskId(3)).unwrap();
        assert_eq!(classify_indices(&w, &r, s, t3), EdgeClass::InBlock);
    }
}
