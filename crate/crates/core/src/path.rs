//! Single-source shortest paths with deterministic tie-breaking.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Adjacency-list digraph with non-negative finite weights.
#[derive(Debug, Clone, Default)]
pub struct Digraph {
    adj: Vec<Vec<(usize, f64)>>,
}

impl Digraph {
    pub fn new(n: usize) -> Self {
        Self { adj: vec![Vec::new(); n] }
    }

    pub fn add_node(&mut self) -> usize {
        self.adj.push(Vec::new());
        self.adj.len() - 1
    }

    pub fn add_edge(&mut self, from: usize, to: usize, weight: f64) {
        debug_assert!(weight >= 0.0 && weight.is_finite());
        self.adj[from].push((to, weight));
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    pub fn edges_from(&self, u: usize) -> &[(usize, f64)] {
        &self.adj[u]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShortestPath {
    pub nodes: Vec<usize>,
    pub length: f64,
}

#[derive(Debug, Clone)]
pub struct ShortestTree {
    dist: Vec<f64>,
    hops: Vec<usize>,
    prev: Vec<Option<usize>>,
}

impl ShortestTree {
    pub fn dist(&self, v: usize) -> Option<f64> {
        self.dist[v].is_finite().then_some(self.dist[v])
    }

    pub fn hops(&self, v: usize) -> usize {
        self.hops[v]
    }

    pub fn path_to(&self, v: usize) -> Option<ShortestPath> {
        let length = self.dist(v)?;
        let mut nodes = vec![v];
        let mut cur = v;
        while let Some(p) = self.prev[cur] {
            nodes.push(p);
            cur = p;
        }
        nodes.reverse();
        Some(ShortestPath { nodes, length })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Entry {
    dist: f64,
    hops: usize,
    node: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist
            .total_cmp(&other.dist)
            .then(self.hops.cmp(&other.hops))
            .then(self.node.cmp(&other.node))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn same_length(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

/// Dijkstra from `src`. Among equal-length paths the one with fewer hops
/// wins, then the one whose predecessor has the smaller index.
pub fn shortest_tree(g: &Digraph, src: usize) -> ShortestTree {
    let n = g.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut hops = vec![usize::MAX; n];
    let mut prev = vec![None; n];
    let mut settled = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[src] = 0.0;
    hops[src] = 0;
    heap.push(Reverse(Entry { dist: 0.0, hops: 0, node: src }));
    while let Some(Reverse(Entry { node: u, .. })) = heap.pop() {
        if settled[u] {
            continue;
        }
        settled[u] = true;
        for &(v, w) in g.edges_from(u) {
            if settled[v] {
                continue;
            }
            let cand = dist[u] + w;
            let cand_hops = hops[u] + 1;
            let better = if same_length(cand, dist[v]) {
                (cand_hops, u) < (hops[v], prev[v].unwrap_or(usize::MAX))
            } else {
                cand < dist[v]
            };
            if better {
                dist[v] = cand;
                hops[v] = cand_hops;
                prev[v] = Some(u);
                heap.push(Reverse(Entry { dist: cand, hops: cand_hops, node: v }));
            }
        }
    }
    ShortestTree { dist, hops, prev }
}

pub fn dijkstra(g: &Digraph, src: usize, dst: usize) -> Result<ShortestPath> {
    shortest_tree(g, src).path_to(dst).ok_or(Error::Unreachable)
}
