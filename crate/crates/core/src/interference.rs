//! Conflict graph, independent-set capacity region and max-weight
//! scheduling.

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::topology::{LinkId, Network};

/// Default upper bound on the number of links for independent-set
/// enumeration.
pub const DEFAULT_ENUMERATION_CAP: usize = 24;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InterferenceError {
    #[error("{links} links exceed the enumeration cap of {cap}")]
    TooLarge { links: usize, cap: usize },
    #[error("conflict pair ({0}, {1}) references a missing link or is a self pair")]
    BadConflictPair(usize, usize),
    #[error("mixture weights must be nonnegative and sum to 1 over {expected} vertices")]
    BadMixture { expected: usize },
}

/// Rule deciding which pairs of links cannot be active together.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum InterferenceModel {
    /// Links sharing an endpoint conflict (primary interference).
    #[default]
    NodeExclusive,
    /// Links conflict when an endpoint of one lies within `k` hops of an
    /// endpoint of the other. `k = 0` is the node-exclusive rule.
    KHop { k: usize },
    /// Conflicts given as pairs of link indices.
    Explicit { conflicts: Vec<[usize; 2]> },
}

/// Undirected graph with one vertex per network link.
#[derive(Debug, Clone, PartialEq)]
pub struct ConflictGraph {
    n: usize,
    adjacency: Vec<bool>,
    model: InterferenceModel,
}

impl ConflictGraph {
    pub fn from_pairs(n: usize, pairs: &[[usize; 2]]) -> Result<Self, InterferenceError> {
        let mut adjacency = vec![false; n * n];
        for &[a, b] in pairs {
            if a >= n || b >= n || a == b {
                return Err(InterferenceError::BadConflictPair(a, b));
            }
            adjacency[a * n + b] = true;
            adjacency[b * n + a] = true;
        }
        Ok(ConflictGraph {
            n,
            adjacency,
            model: InterferenceModel::Explicit {
                conflicts: pairs.to_vec(),
            },
        })
    }

    pub fn link_count(&self) -> usize {
        self.n
    }

    pub fn model(&self) -> &InterferenceModel {
        &self.model
    }

    pub fn conflicts(&self, a: LinkId, b: LinkId) -> bool {
        self.adjacency[a.0 * self.n + b.0]
    }

    pub fn neighbors(&self, a: LinkId) -> impl Iterator<Item = LinkId> + '_ {
        (0..self.n)
            .filter(move |&b| self.adjacency[a.0 * self.n + b])
            .map(LinkId)
    }

    /// Conflict edges as `(a, b)` with `a < b`, in lexicographic order.
    pub fn edges(&self) -> Vec<(LinkId, LinkId)> {
        let mut out = Vec::new();
        for a in 0..self.n {
            for b in a + 1..self.n {
                if self.adjacency[a * self.n + b] {
                    out.push((LinkId(a), LinkId(b)));
                }
            }
        }
        out
    }

    pub fn is_independent(&self, set: &[LinkId]) -> bool {
        set.iter()
            .enumerate()
            .all(|(i, &a)| set[i + 1..].iter().all(|&b| !self.conflicts(a, b)))
    }
}

fn hop_distances(network: &Network) -> Vec<Vec<usize>> {
    let n = network.node_count();
    let mut adj = vec![Vec::new(); n];
    for l in network.links() {
        adj[l.src.0].push(l.dst.0);
        adj[l.dst.0].push(l.src.0);
    }
    (0..n)
        .map(|start| {
            let mut dist = vec![usize::MAX; n];
            dist[start] = 0;
            let mut queue = VecDeque::from([start]);
            while let Some(u) = queue.pop_front() {
                for &v in &adj[u] {
                    if dist[v] == usize::MAX {
                        dist[v] = dist[u] + 1;
                        queue.push_back(v);
                    }
                }
            }
            dist
        })
        .collect()
}

pub fn build_conflict_graph(
    network: &Network,
    model: &InterferenceModel,
) -> Result<ConflictGraph, InterferenceError> {
    let n = network.link_count();
    let k = match model {
        InterferenceModel::Explicit { conflicts } => {
            return ConflictGraph::from_pairs(n, conflicts);
        }
        InterferenceModel::NodeExclusive => 0,
        InterferenceModel::KHop { k } => *k,
    };
    let dist = hop_distances(network);
    let links = network.links();
    let mut adjacency = vec![false; n * n];
    for a in 0..n {
        for b in a + 1..n {
            let (la, lb) = (&links[a], &links[b]);
            let close = [la.src, la.dst]
                .iter()
                .any(|u| [lb.src, lb.dst].iter().any(|v| dist[u.0][v.0] <= k));
            adjacency[a * n + b] = close;
            adjacency[b * n + a] = close;
        }
    }
    Ok(ConflictGraph {
        n,
        adjacency,
        model: model.clone(),
    })
}

/// Maximal independent sets of `cg` plus the empty set, each sorted by link
/// index, listed in lexicographic order (the empty set first).
pub fn enumerate_independent_sets(
    cg: &ConflictGraph,
    cap: usize,
) -> Result<Vec<Vec<LinkId>>, InterferenceError> {
    let n = cg.n;
    if n > cap || n > 64 {
        return Err(InterferenceError::TooLarge { links: n, cap });
    }
    let full: u64 = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    // Compatibility masks: links that may share a set with `v`.
    let compat: Vec<u64> = (0..n)
        .map(|a| {
            let mut m = 0u64;
            for b in 0..n {
                if a != b && !cg.adjacency[a * n + b] {
                    m |= 1 << b;
                }
            }
            m
        })
        .collect();

    let mut found: Vec<u64> = Vec::new();
    bron_kerbosch(&compat, 0, full, 0, &mut found);

    let mut sets: Vec<Vec<LinkId>> = found
        .into_iter()
        .filter(|&m| m != 0)
        .map(|m| (0..n).filter(|&i| m >> i & 1 == 1).map(LinkId).collect())
        .collect();
    sets.push(Vec::new());
    sets.sort();
    Ok(sets)
}

/// Maximal cliques of the compatibility relation, with Tomita pivoting.
fn bron_kerbosch(compat: &[u64], r: u64, mut p: u64, mut x: u64, out: &mut Vec<u64>) {
    if p == 0 {
        if x == 0 {
            out.push(r);
        }
        return;
    }
    let px = p | x;
    let pivot = bits(px)
        .max_by_key(|&u| ((p & compat[u]).count_ones(), std::cmp::Reverse(u)))
        .expect("p is non-empty");
    let mut candidates = p & !compat[pivot];
    while candidates != 0 {
        let v = candidates.trailing_zeros() as usize;
        candidates &= candidates - 1;
        bron_kerbosch(compat, r | 1 << v, p & compat[v], x & compat[v], out);
        p &= !(1 << v);
        x |= 1 << v;
    }
}

fn bits(mut m: u64) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if m == 0 {
            None
        } else {
            let i = m.trailing_zeros() as usize;
            m &= m - 1;
            Some(i)
        }
    })
}

/// Per-link rate vector of one independent set: full capacity on its
/// members, zero elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacityVector(pub Vec<f64>);

impl CapacityVector {
    pub fn from_set(network: &Network, set: &[LinkId]) -> Self {
        let mut rates = vec![0.0; network.link_count()];
        for &l in set {
            rates[l.0] = network.link(l).capacity;
        }
        CapacityVector(rates)
    }

    pub fn rates(&self) -> &[f64] {
        &self.0
    }

    /// Links with nonzero rate.
    pub fn support(&self) -> Vec<LinkId> {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &r)| r > 0.0)
            .map(|(i, _)| LinkId(i))
            .collect()
    }

    pub fn weighted_value(&self, prices: &[f64]) -> f64 {
        self.0.iter().zip(prices).map(|(r, p)| r * p).sum()
    }
}

/// Vertices of the capacity region, one per enumerated independent set.
/// The region itself is their convex hull.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacityRegion {
    sets: Vec<Vec<LinkId>>,
    vertices: Vec<CapacityVector>,
    index: HashMap<Vec<LinkId>, usize>,
}

impl CapacityRegion {
    pub fn new(network: &Network, sets: Vec<Vec<LinkId>>) -> Self {
        let vertices = sets
            .iter()
            .map(|s| CapacityVector::from_set(network, s))
            .collect();
        let index = sets
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        CapacityRegion {
            sets,
            vertices,
            index,
        }
    }

    /// Builds the conflict graph and enumerates its region in one step.
    pub fn enumerate(
        network: &Network,
        cg: &ConflictGraph,
        cap: usize,
    ) -> Result<Self, InterferenceError> {
        Ok(Self::new(network, enumerate_independent_sets(cg, cap)?))
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn sets(&self) -> &[Vec<LinkId>] {
        &self.sets
    }

    pub fn vertices(&self) -> &[CapacityVector] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> &CapacityVector {
        &self.vertices[i]
    }

    /// Index of the vertex whose independent set is exactly `support`.
    pub fn find(&self, support: &[LinkId]) -> Option<usize> {
        self.index.get(support).copied()
    }

    /// Convex combination `sum_e beta_e r^e`.
    pub fn mixture(&self, beta: &[f64]) -> Result<Vec<f64>, InterferenceError> {
        let bad = InterferenceError::BadMixture {
            expected: self.vertices.len(),
        };
        if beta.len() != self.vertices.len() || beta.iter().any(|&b| !(b >= 0.0)) {
            return Err(bad);
        }
        if (beta.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(bad);
        }
        let n = self.vertices.first().map_or(0, |v| v.0.len());
        let mut out = vec![0.0; n];
        for (b, v) in beta.iter().zip(&self.vertices) {
            for (o, r) in out.iter_mut().zip(&v.0) {
                *o += b * r;
            }
        }
        Ok(out)
    }
}

/// The region vertex maximizing `prices . r`; ties go to the earliest
/// vertex in enumeration order. Returns the vertex index and its value.
pub fn max_weight_schedule_exact(region: &CapacityRegion, prices: &[f64]) -> (usize, f64) {
    debug_assert!(prices.iter().all(|&p| p >= 0.0));
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in region.vertices.iter().enumerate() {
        let value = v.weighted_value(prices);
        if value > best.1 {
            best = (i, value);
        }
    }
    if region.is_empty() {
        best.1 = 0.0;
    }
    best
}

/// Centralized replay of the distributed max-weight policy: repeatedly
/// schedule the heaviest link (`price * capacity`) that is neither
/// scheduled nor blocked, then block its conflict neighbors. Ties go to the
/// lowest link index. The result is a maximal independent set.
pub fn max_weight_schedule_greedy(
    cg: &ConflictGraph,
    network: &Network,
    prices: &[f64],
) -> CapacityVector {
    debug_assert!(prices.iter().all(|&p| p >= 0.0));
    let n = network.link_count();
    let weight: Vec<f64> = network
        .links()
        .iter()
        .zip(prices)
        .map(|(l, p)| p * l.capacity)
        .collect();
    let mut open = vec![true; n];
    let mut rates = vec![0.0; n];
    loop {
        let mut pick: Option<usize> = None;
        for i in (0..n).filter(|&i| open[i]) {
            if pick.is_none_or(|j| weight[i] > weight[j]) {
                pick = Some(i);
            }
        }
        let Some(i) = pick else { break };
        rates[i] = network.link(LinkId(i)).capacity;
        open[i] = false;
        for nb in cg.neighbors(LinkId(i)) {
            open[nb.0] = false;
        }
    }
    CapacityVector(rates)
}
