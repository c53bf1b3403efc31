//! Partial orders over event samples, as DAGs on dense indices.
//!
//! Elements are `0..n-1`; event ids live only in optional labels. Edge sets
//! are kept as produced by the generator (often closure-rich) and semantics
//! are taken up to transitive closure: two posets with equal closures are
//! order-equal. The exact extension counter is a memoized dynamic program
//! over downsets and is capped, since it is an oracle rather than the hot
//! path — budgeted counting lives in [`crate::extcount`].

use std::collections::{BTreeSet, HashMap};

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::event_model::Observation;
use crate::relations::{Model, RelationCache, RelationError};

/// Default element cap for [`count_extensions_exact`].
pub const DEFAULT_EXACT_CEILING: usize = 20;

#[derive(Debug, Error)]
pub enum PosetError {
    #[error("edge ({0}, {1}) out of range for {2} elements")]
    EdgeOutOfRange(usize, usize, usize),

    #[error("edge set contains a cycle")]
    CycleDetected,

    #[error("{n} elements exceed the exact-count ceiling of {ceiling}")]
    CeilingExceeded { n: usize, ceiling: usize },

    #[error(transparent)]
    Relation(#[from] RelationError),
}

/// A strict partial order on `0..n-1`, stored as a DAG edge set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Poset {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
    labels: Option<Vec<String>>,
    /// Table row backing each element, when built from an observation.
    origin: Option<Vec<usize>>,
}

impl Poset {
    /// Builds a poset, rejecting out-of-range edges and cycles.
    pub fn new(
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, PosetError> {
        let edges: BTreeSet<(usize, usize)> = edges.into_iter().collect();
        for &(a, b) in &edges {
            if a >= n || b >= n || a == b {
                return Err(PosetError::EdgeOutOfRange(a, b, n));
            }
        }
        let poset = Poset {
            n,
            edges,
            labels: None,
            origin: None,
        };
        if poset.topological_order().is_none() {
            return Err(PosetError::CycleDetected);
        }
        Ok(poset)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Self {
        debug_assert_eq!(labels.len(), self.n);
        self.labels = Some(labels);
        self
    }

    pub fn with_origin(mut self, origin: Vec<usize>) -> Self {
        debug_assert_eq!(origin.len(), self.n);
        self.origin = Some(origin);
        self
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn label(&self, i: usize) -> Option<&str> {
        self.labels.as_ref().map(|l| l[i].as_str())
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Table row of element `i`, when known.
    pub fn origin(&self, i: usize) -> Option<usize> {
        self.origin.as_ref().map(|o| o[i])
    }

    pub fn out_adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(a, b) in &self.edges {
            adj[a].push(b);
        }
        adj
    }

    pub fn in_adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(a, b) in &self.edges {
            adj[b].push(a);
        }
        adj
    }

    /// Kahn's algorithm; `None` when the edge set has a cycle.
    fn topological_order(&self) -> Option<Vec<usize>> {
        let out = self.out_adjacency();
        let mut indegree = vec![0usize; self.n];
        for &(_, b) in &self.edges {
            indegree[b] += 1;
        }
        let mut queue: Vec<usize> = (0..self.n).filter(|&i| indegree[i] == 0).collect();
        let mut order = Vec::with_capacity(self.n);
        while let Some(v) = queue.pop() {
            order.push(v);
            for &w in &out[v] {
                indegree[w] -= 1;
                if indegree[w] == 0 {
                    queue.push(w);
                }
            }
        }
        (order.len() == self.n).then_some(order)
    }

    /// Reachability rows as bit words: bit `b` of `closure[a]` set iff `a < b`.
    fn closure_rows(&self) -> Vec<Vec<u64>> {
        let words = self.n.div_ceil(64).max(1);
        let mut rows = vec![vec![0u64; words]; self.n];
        let out = self.out_adjacency();
        let order = self.topological_order().expect("valid poset");
        for &v in order.iter().rev() {
            // Successor rows are complete before v thanks to reverse
            // topological processing.
            let mut row = vec![0u64; words];
            for &w in &out[v] {
                row[w / 64] |= 1 << (w % 64);
                for (acc, bits) in row.iter_mut().zip(&rows[w]) {
                    *acc |= bits;
                }
            }
            rows[v] = row;
        }
        rows
    }

    /// All pairs `a < b` of the order (the transitive closure of the edges).
    pub fn closure_pairs(&self) -> BTreeSet<(usize, usize)> {
        let rows = self.closure_rows();
        let mut pairs = BTreeSet::new();
        for (a, row) in rows.iter().enumerate() {
            for b in 0..self.n {
                if row[b / 64] >> (b % 64) & 1 == 1 {
                    pairs.insert((a, b));
                }
            }
        }
        pairs
    }

    /// Order equality: same element count and same transitive closure.
    pub fn order_eq(&self, other: &Poset) -> bool {
        self.n == other.n && self.closure_pairs() == other.closure_pairs()
    }

    /// Whether `a < b` holds in the order.
    pub fn precedes(&self, a: usize, b: usize) -> bool {
        let rows = self.closure_rows();
        rows[a][b / 64] >> (b % 64) & 1 == 1
    }

    /// Induced sub-order on `keep` (in the given element order), taking
    /// transitivity into account so relations through dropped elements
    /// survive.
    pub fn restrict(&self, keep: &[usize]) -> Poset {
        let rows = self.closure_rows();
        let mut edges = BTreeSet::new();
        for (i, &a) in keep.iter().enumerate() {
            for (j, &b) in keep.iter().enumerate() {
                if rows[a][b / 64] >> (b % 64) & 1 == 1 {
                    edges.insert((i, j));
                }
            }
        }
        Poset {
            n: keep.len(),
            edges,
            labels: self
                .labels
                .as_ref()
                .map(|l| keep.iter().map(|&k| l[k].clone()).collect()),
            origin: self
                .origin
                .as_ref()
                .map(|o| keep.iter().map(|&k| o[k]).collect()),
        }
    }
}

/// Builds the poset a model induces on an observation.
///
/// Elements follow the observation's order; edges are the generator output,
/// so they always point forward and the result is acyclic by construction.
pub fn build_poset(
    cache: &RelationCache<'_>,
    obs: &Observation,
    model: &Model,
) -> Result<Poset, PosetError> {
    let table = cache.table();
    let members = obs.members();
    let position: HashMap<usize, usize> = members
        .iter()
        .enumerate()
        .map(|(pos, &row)| (row, pos))
        .collect();
    let edges: BTreeSet<(usize, usize)> = cache
        .generate(obs, model)?
        .into_iter()
        .map(|(a, b)| (position[&a], position[&b]))
        .collect();
    let labels = members
        .iter()
        .map(|&r| table.event_id(r).to_string())
        .collect();
    Ok(Poset {
        n: members.len(),
        edges,
        labels: Some(labels),
        origin: Some(members.to_vec()),
    })
}

/// Minimal edge set with the same transitive closure; order-equal to the
/// input.
pub fn transitive_reduction(p: &Poset) -> Poset {
    let rows = p.closure_rows();
    let reaches = |a: usize, b: usize| rows[a][b / 64] >> (b % 64) & 1 == 1;
    let mut edges = BTreeSet::new();
    for a in 0..p.n {
        for b in 0..p.n {
            if reaches(a, b) {
                // (a, b) is redundant iff some c sits strictly between.
                let redundant =
                    (0..p.n).any(|c| c != a && c != b && reaches(a, c) && reaches(c, b));
                if !redundant {
                    edges.insert((a, b));
                }
            }
        }
    }
    Poset {
        n: p.n,
        edges,
        labels: p.labels.clone(),
        origin: p.origin.clone(),
    }
}

/// Weakly connected components, each as its own poset over reindexed
/// elements. Components are ordered by their smallest original element;
/// singleton components are the free vertices.
pub fn connected_components(p: &Poset) -> Vec<Poset> {
    component_members(p)
        .into_iter()
        .map(|members| p.restrict(&members))
        .collect()
}

/// Component membership as sorted original-index lists.
pub fn component_members(p: &Poset) -> Vec<Vec<usize>> {
    let mut undirected = vec![Vec::new(); p.n];
    for &(a, b) in &p.edges {
        undirected[a].push(b);
        undirected[b].push(a);
    }
    let mut seen = vec![false; p.n];
    let mut components = Vec::new();
    for start in 0..p.n {
        if seen[start] {
            continue;
        }
        let mut stack = vec![start];
        let mut members = Vec::new();
        seen[start] = true;
        while let Some(v) = stack.pop() {
            members.push(v);
            for &w in &undirected[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        members.sort_unstable();
        components.push(members);
    }
    components
}

/// Elements with no strict predecessor. In-degree zero suffices on any edge
/// set: an incoming edge witnesses a predecessor, and any predecessor in the
/// closure reaches the element through a chain of edges.
pub fn minimal_elements(p: &Poset) -> BTreeSet<usize> {
    let mut has_pred = vec![false; p.n];
    for &(_, b) in &p.edges {
        has_pred[b] = true;
    }
    (0..p.n).filter(|&i| !has_pred[i]).collect()
}

/// Exact number of linear extensions, by a memoized dynamic program that
/// repeatedly strips minimal elements of the remaining filter.
///
/// Counts stay within `u128` for any `n` at or below the enforced ceiling.
pub fn count_extensions_exact(p: &Poset) -> Result<BigUint, PosetError> {
    count_extensions_exact_with_ceiling(p, DEFAULT_EXACT_CEILING)
}

pub fn count_extensions_exact_with_ceiling(
    p: &Poset,
    ceiling: usize,
) -> Result<BigUint, PosetError> {
    let ceiling = ceiling.min(30);
    if p.n > ceiling {
        return Err(PosetError::CeilingExceeded { n: p.n, ceiling });
    }
    let mut in_masks = vec![0u64; p.n];
    for &(a, b) in &p.edges {
        in_masks[b] |= 1 << a;
    }
    let full: u64 = if p.n == 64 { !0 } else { (1 << p.n) - 1 };
    let mut memo: HashMap<u64, u128> = HashMap::new();
    Ok(BigUint::from(count_filter(full, &in_masks, &mut memo)))
}

/// Extensions of the sub-poset on `remaining`, which is always an up-set, so
/// raw in-edges within the set characterize its minimal elements.
fn count_filter(remaining: u64, in_masks: &[u64], memo: &mut HashMap<u64, u128>) -> u128 {
    if remaining == 0 {
        return 1;
    }
    if let Some(&cached) = memo.get(&remaining) {
        return cached;
    }
    let mut total: u128 = 0;
    let mut bits = remaining;
    while bits != 0 {
        let low = bits & bits.wrapping_neg();
        let x = low.trailing_zeros() as usize;
        bits ^= low;
        if in_masks[x] & remaining == 0 {
            total += count_filter(remaining & !low, in_masks, memo);
        }
    }
    memo.insert(remaining, total);
    total
}
