//! Transitive reachability over a workflow graph.

use crate::wdg::Wdg;

const WORD: usize = 64;

/// Dense reachability matrix stored as row and column bitsets.
///
/// `reaches(i, j)` holds iff a directed path of length >= 1 leads from `i`
/// to `j`. The relation is irreflexive because the graph is acyclic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reachability {
    n: usize,
    words: usize,
    rows: Vec<u64>,
    cols: Vec<u64>,
}

impl Reachability {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn reaches(&self, i: usize, j: usize) -> bool {
        self.rows[i * self.words + j / WORD] >> (j % WORD) & 1 == 1
    }

    /// Neither node reaches the other (`T_i ↔ T_j`).
    pub fn unordered(&self, i: usize, j: usize) -> bool {
        i != j && !self.reaches(i, j) && !self.reaches(j, i)
    }

    pub fn row(&self, i: usize) -> &[u64] {
        &self.rows[i * self.words..(i + 1) * self.words]
    }

    pub fn col(&self, j: usize) -> &[u64] {
        &self.cols[j * self.words..(j + 1) * self.words]
    }

    pub(crate) fn words(&self) -> usize {
        self.words
    }

    /// Bitset of nodes comparable with `i`, including `i` itself.
    pub(crate) fn comparable(&self, i: usize) -> Vec<u64> {
        let mut out: Vec<u64> = self.row(i).iter().zip(self.col(i)).map(|(r, c)| r | c).collect();
        out[i / WORD] |= 1 << (i % WORD);
        out
    }

    pub fn successors_of(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&j| self.reaches(i, j))
    }
}

pub(crate) fn bits(set: &[u64]) -> impl Iterator<Item = usize> + '_ {
    set.iter().enumerate().flat_map(|(w, &word)| {
        let mut word = word;
        std::iter::from_fn(move || {
            if word == 0 {
                return None;
            }
            let b = word.trailing_zeros() as usize;
            word &= word - 1;
            Some(w * WORD + b)
        })
    })
}

/// Computes the closure by sweeping the topological order backwards.
pub fn transitive_closure(wdg: &Wdg) -> Reachability {
    let n = wdg.len();
    let words = n.div_ceil(WORD).max(1);
    let mut rows = vec![0u64; n * words];
    for &u in wdg.topo().iter().rev() {
        for &s in wdg.succs(u) {
            rows[u * words + s / WORD] |= 1 << (s % WORD);
            for w in 0..words {
                rows[u * words + w] |= rows[s * words + w];
            }
        }
    }
    let mut cols = vec![0u64; n * words];
    for i in 0..n {
        for j in bits(&rows[i * words..(i + 1) * words]).collect::<Vec<_>>() {
            cols[j * words + i / WORD] |= 1 << (i % WORD);
        }
    }
    Reachability { n, words, rows, cols }
}
