//! Node trust estimates and the trust-weighted quantities built from them.
//!
//! Trust of a path is the product of the trust of every *receiving* node
//! along it: the destination is included, the source is not. Sub-path trust
//! for a link is the same product taken over the path prefix ending at that
//! link, which gives the entries of the per-flow trust incidence matrix.

use thiserror::Error;

use crate::topology::{Flow, LinkId, Network, NodeId, Path};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrustError {
    #[error("trust value {value} for node {node} is outside [0, 1]")]
    ValueOutOfRange { node: usize, value: f64 },
    #[error("EWMA weight {0} is outside [0, 1]")]
    AlphaOutOfRange(f64),
    #[error("expected {expected} trust values, got {found}")]
    WrongLength { expected: usize, found: usize },
    #[error("node index {0} out of range")]
    UnknownNode(usize),
}

fn check_unit(node: usize, value: f64) -> Result<(), TrustError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(TrustError::ValueOutOfRange { node, value })
    }
}

/// Per-node trust values maintained by an exponentially weighted moving
/// average across update periods.
#[derive(Debug, Clone, PartialEq)]
pub struct TrustState {
    values: Vec<f64>,
    alpha: f64,
    period_index: u64,
}

impl TrustState {
    /// Seeds the state with raw values (no history), period index 0.
    pub fn new(values: Vec<f64>, alpha: f64) -> Result<Self, TrustError> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(TrustError::AlphaOutOfRange(alpha));
        }
        for (i, &v) in values.iter().enumerate() {
            check_unit(i, v)?;
        }
        Ok(TrustState {
            values,
            alpha,
            period_index: 0,
        })
    }

    /// Every node fully trusted.
    pub fn uniform(nodes: usize, alpha: f64) -> Result<Self, TrustError> {
        Self::new(vec![1.0; nodes], alpha)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, node: NodeId) -> f64 {
        self.values[node.0]
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn period_index(&self) -> u64 {
        self.period_index
    }

    /// Blends fresh samples into the history:
    /// `v <- (1 - alpha) * v_prev + alpha * v_new`.
    ///
    /// Nodes without a fresh sample keep their previous value. Nothing is
    /// applied if any sample is out of range.
    pub fn ewma_update<I>(&self, fresh: I) -> Result<TrustState, TrustError>
    where
        I: IntoIterator<Item = (NodeId, f64)>,
    {
        let fresh: Vec<_> = fresh.into_iter().collect();
        for &(node, v) in &fresh {
            if node.0 >= self.values.len() {
                return Err(TrustError::UnknownNode(node.0));
            }
            check_unit(node.0, v)?;
        }
        let mut values = self.values.clone();
        for (node, v) in fresh {
            let prev = values[node.0];
            // Convex combination of two values in [0,1]; clamp absorbs rounding.
            values[node.0] = ((1.0 - self.alpha) * prev + self.alpha * v).clamp(0.0, 1.0);
        }
        Ok(TrustState {
            values,
            alpha: self.alpha,
            period_index: self.period_index + 1,
        })
    }

    /// [`ewma_update`](Self::ewma_update) with one sample per node, in node order.
    pub fn ewma_update_row(&self, row: &[f64]) -> Result<TrustState, TrustError> {
        if row.len() != self.values.len() {
            return Err(TrustError::WrongLength {
                expected: self.values.len(),
                found: row.len(),
            });
        }
        self.ewma_update(row.iter().enumerate().map(|(i, &v)| (NodeId(i), v)))
    }

    /// Aggregate trust of a path: product over its receiving nodes.
    pub fn path_trust(&self, path: &Path) -> f64 {
        path.receivers().iter().map(|&n| self.value(n)).product()
    }
}

/// `paths x links` matrix of sub-path trust values for one flow.
#[derive(Debug, Clone, PartialEq)]
pub struct TrustIncidenceMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    path_trust: Vec<f64>,
}

impl TrustIncidenceMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, path: usize, link: LinkId) -> f64 {
        self.data[path * self.cols + link.0]
    }

    pub fn row(&self, path: usize) -> &[f64] {
        &self.data[path * self.cols..(path + 1) * self.cols]
    }

    /// Aggregate trust of each path (the entry at its final link).
    pub fn path_trust(&self) -> &[f64] {
        &self.path_trust
    }
}

pub fn trust_incidence(state: &TrustState, flow: &Flow, network: &Network) -> TrustIncidenceMatrix {
    let cols = network.link_count();
    let mut data = vec![0.0; flow.paths.len() * cols];
    let mut path_trust = Vec::with_capacity(flow.paths.len());
    for (k, path) in flow.paths.iter().enumerate() {
        // Running product over the prefix equals the sub-path trust.
        let mut acc = 1.0;
        for (&link, &rx) in path.links().iter().zip(path.receivers()) {
            acc *= state.value(rx);
            data[k * cols + link.0] = acc;
        }
        path_trust.push(acc);
    }
    TrustIncidenceMatrix {
        rows: flow.paths.len(),
        cols,
        data,
        path_trust,
    }
}

/// Trust-weighted delivered rate `sum_k t_k x_k`.
pub fn reliability_lhs(path_trust: &[f64], rates: &[f64]) -> f64 {
    debug_assert_eq!(path_trust.len(), rates.len());
    path_trust.iter().zip(rates).map(|(t, x)| t * x).sum()
}
