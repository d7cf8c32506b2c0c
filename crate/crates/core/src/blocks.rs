//! Fork/join block detection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reach::Reachability;
use crate::wdg::{TaskId, Wdg};

/// Sub-branches forked from one node and merged at another.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub fork: TaskId,
    pub join: TaskId,
    /// Disjoint branches, each in topological order.
    pub branches: Vec<Vec<TaskId>>,
    /// Index of the smallest enclosing block, if any.
    pub parent: Option<usize>,
}

impl Block {
    pub fn members(&self) -> impl Iterator<Item = TaskId> + '_ {
        self.branches.iter().flatten().copied()
    }
}

/// One block per fork node (out-degree >= 2). The join is the earliest node
/// reached by every successor of the fork; graphs whose successors share
/// several incomparable earliest joins are rejected.
pub fn detect_blocks(wdg: &Wdg, reach: &Reachability) -> Result<Vec<Block>> {
    let n = wdg.len();
    let mut topo_rank = vec![0; n];
    for (rank, &ix) in wdg.topo().iter().enumerate() {
        topo_rank[ix] = rank;
    }
    let mut found: Vec<(usize, usize, Vec<Vec<usize>>)> = Vec::new();
    for &fork in wdg.topo() {
        let succs = wdg.succs(fork);
        if succs.len() < 2 {
            continue;
        }
        let candidates: Vec<usize> = (0..n)
            .filter(|&c| succs.iter().all(|&s| s == c || reach.reaches(s, c)))
            .collect();
        let join = candidates
            .iter()
            .copied()
            .find(|&c| candidates.iter().all(|&o| o == c || reach.reaches(c, o)))
            .ok_or_else(|| {
                Error::MalformedGraph(format!("branches forked at {} have no unique join", wdg.id(fork)))
            })?;

        let interior: Vec<usize> = wdg
            .topo()
            .iter()
            .copied()
            .filter(|&v| reach.reaches(fork, v) && reach.reaches(v, join))
            .collect();
        let mut component = vec![usize::MAX; n];
        let mut branches: Vec<Vec<usize>> = Vec::new();
        for &seed in &interior {
            if component[seed] != usize::MAX {
                continue;
            }
            let id = branches.len();
            let mut stack = vec![seed];
            let mut members = Vec::new();
            component[seed] = id;
            while let Some(v) = stack.pop() {
                members.push(v);
                for &u in wdg.preds(v).iter().chain(wdg.succs(v)) {
                    if u != fork && u != join && component[u] == usize::MAX && interior.contains(&u) {
                        component[u] = id;
                        stack.push(u);
                    }
                }
            }
            members.sort_by_key(|&v| topo_rank[v]);
            branches.push(members);
        }
        found.push((fork, join, branches));
    }

    let interiors: Vec<Vec<usize>> = found
        .iter()
        .map(|(_, _, br)| br.iter().flatten().copied().collect())
        .collect();
    let blocks = found
        .iter()
        .enumerate()
        .map(|(b, (fork, join, branches))| {
            let parent = (0..found.len())
                .filter(|&o| o != b && interiors[o].contains(fork) && interiors[o].contains(join))
                .min_by_key(|&o| interiors[o].len());
            Block {
                fork: wdg.id(*fork),
                join: wdg.id(*join),
                branches: branches.iter().map(|br| br.iter().map(|&v| wdg.id(v)).collect()).collect(),
                parent,
            }
        })
        .collect();
    Ok(blocks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reach::transitive_closure;
    use crate::wdg::fixtures::*;

    fn ids(v: &[u32]) -> Vec<TaskId> {
        v.iter().map(|&i| TaskId(i)).collect()
    }

    #[test]
    fn single_block_region() {
        let w = single_block();
        let blocks = detect_blocks(&w, &transitive_closure(&w)).unwrap();
        assert_eq!(blocks.len(), 1);
        let b = &blocks[0];
        assert_eq!(b.fork, TaskId(2));
        assert_eq!(b.join, TaskId(7));
        assert_eq!(b.branches, vec![ids(&[3, 4]), ids(&[5, 6])]);
        assert_eq!(b.parent, None);
    }

    #[test]
    fn chain_has_no_blocks() {
        let w = chain(6);
        assert!(detect_blocks(&w, &transitive_closure(&w)).unwrap().is_empty());
    }

    #[test]
    fn nested_branches_record_containment() {
        // 1 -> {2 -> {4, 5} -> 6, 3} -> 7
        let w = build(
            &[1.0; 7],
            &[(1, 2, 1.0), (1, 3, 1.0), (2, 4, 1.0), (2, 5, 1.0), (4, 6, 1.0), (5, 6, 1.0), (6, 7, 1.0), (3, 7, 1.0)],
        );
        let blocks = detect_blocks(&w, &transitive_closure(&w)).unwrap();
        assert_eq!(blocks.len(), 2);
        let outer = blocks.iter().position(|b| b.fork == TaskId(1)).unwrap();
        let inner = blocks.iter().find(|b| b.fork == TaskId(2)).unwrap();
        assert_eq!(inner.join, TaskId(6));
        assert_eq!(inner.parent, Some(outer));
        assert_eq!(blocks[outer].join, TaskId(7));
        assert_eq!(blocks[outer].branches, vec![ids(&[2, 4, 5, 6]), ids(&[3])]);
    }

    #[test]
    fn crossing_joins_are_rejected() {
        // 1 forks to 2 and 3; both feed 4 and 5, which are unordered.
        let w = build(
            &[1.0; 6],
            &[(1, 2, 1.0), (1, 3, 1.0), (2, 4, 1.0), (2, 5, 1.0), (3, 4, 1.0), (3, 5, 1.0), (4, 6, 1.0), (5, 6, 1.0)],
        );
        let err = detect_blocks(&w, &transitive_closure(&w)).unwrap_err();
        assert!(matches!(err, Error::MalformedGraph(_)));
    }
}
