//! Multihop network model: nodes, directed links, flows and their
//! multipath route sets, and the 0/1 routing matrices derived from them.

use std::collections::{HashMap, HashSet};
use std::fmt;

use thiserror::Error;

/// Index of a node in [`Network::nodes`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub usize);

/// Index of a link in [`Network::links`]. This is also the column index of
/// every per-link matrix and trace column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LinkId(pub usize);

impl fmt::Display for LinkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "l{}", self.0 + 1)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TopologyError {
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("duplicate node `{0}`")]
    DuplicateNode(String),
    #[error("link {src}->{dst} is a self loop")]
    SelfLoop { src: String, dst: String },
    #[error("duplicate link {src}->{dst}")]
    DuplicateLink { src: String, dst: String },
    #[error("link {src}->{dst} has non-positive capacity {capacity}")]
    NonPositiveCapacity {
        src: String,
        dst: String,
        capacity: f64,
    },
    #[error("path is empty")]
    EmptyPath,
    #[error("path is not contiguous at hop {hop}")]
    NonContiguous { hop: usize },
    #[error("path revisits node `{0}`")]
    LoopDetected(String),
    #[error("link {src}->{dst} does not exist in the network")]
    UnknownLink { src: String, dst: String },
    #[error("path runs {found_src}->{found_dst}, flow expects {want_src}->{want_dst}")]
    EndpointMismatch {
        found_src: String,
        found_dst: String,
        want_src: String,
        want_dst: String,
    },
    #[error("link {0} is not on the path")]
    LinkNotOnPath(LinkId),
    #[error("flow `{flow}`: {reason}")]
    InvalidFlow { flow: String, reason: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub src: NodeId,
    pub dst: NodeId,
    /// Maximum link capacity in kbps.
    pub capacity: f64,
}

impl Link {
    pub fn touches(&self, node: NodeId) -> bool {
        self.src == node || self.dst == node
    }
}

/// Directed multihop wireless network. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    nodes: Vec<String>,
    links: Vec<Link>,
    node_index: HashMap<String, NodeId>,
    link_index: HashMap<(NodeId, NodeId), LinkId>,
}

impl Network {
    /// Builds a network from node names and `(src, dst, capacity)` triples.
    pub fn new<S: AsRef<str>>(nodes: &[S], links: &[(S, S, f64)]) -> Result<Self, TopologyError> {
        let mut node_index = HashMap::with_capacity(nodes.len());
        let mut names = Vec::with_capacity(nodes.len());
        for (i, name) in nodes.iter().enumerate() {
            let name = name.as_ref().to_string();
            if node_index.insert(name.clone(), NodeId(i)).is_some() {
                return Err(TopologyError::DuplicateNode(name));
            }
            names.push(name);
        }

        let mut net = Network {
            nodes: names,
            links: Vec::with_capacity(links.len()),
            node_index,
            link_index: HashMap::with_capacity(links.len()),
        };
        for (src, dst, capacity) in links {
            let (src, dst) = (src.as_ref(), dst.as_ref());
            let s = net.node(src)?;
            let d = net.node(dst)?;
            if s == d {
                return Err(TopologyError::SelfLoop {
                    src: src.into(),
                    dst: dst.into(),
                });
            }
            if !(*capacity > 0.0) || !capacity.is_finite() {
                return Err(TopologyError::NonPositiveCapacity {
                    src: src.into(),
                    dst: dst.into(),
                    capacity: *capacity,
                });
            }
            let id = LinkId(net.links.len());
            if net.link_index.insert((s, d), id).is_some() {
                return Err(TopologyError::DuplicateLink {
                    src: src.into(),
                    dst: dst.into(),
                });
            }
            net.links.push(Link {
                src: s,
                dst: d,
                capacity: *capacity,
            });
        }
        Ok(net)
    }

    pub fn node(&self, name: &str) -> Result<NodeId, TopologyError> {
        self.node_index
            .get(name)
            .copied()
            .ok_or_else(|| TopologyError::UnknownNode(name.to_string()))
    }

    pub fn node_name(&self, id: NodeId) -> &str {
        &self.nodes[id.0]
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    pub fn link(&self, id: LinkId) -> &Link {
        &self.links[id.0]
    }

    pub fn link_between(&self, src: NodeId, dst: NodeId) -> Option<LinkId> {
        self.link_index.get(&(src, dst)).copied()
    }

    pub fn capacities(&self) -> Vec<f64> {
        self.links.iter().map(|l| l.capacity).collect()
    }

    pub fn max_capacity(&self) -> f64 {
        self.links.iter().map(|l| l.capacity).fold(0.0, f64::max)
    }

    /// Human readable `src-dst` label used for trace columns.
    pub fn link_label(&self, id: LinkId) -> String {
        let l = self.link(id);
        format!("{}-{}", self.node_name(l.src), self.node_name(l.dst))
    }
}

/// A validated loop-free route: contiguous links plus the visited nodes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Path {
    links: Vec<LinkId>,
    nodes: Vec<NodeId>,
}

impl Path {
    pub fn links(&self) -> &[LinkId] {
        &self.links
    }

    /// Visited nodes, source first; always `links().len() + 1` entries.
    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn hop_count(&self) -> usize {
        self.links.len()
    }

    pub fn source(&self) -> NodeId {
        self.nodes[0]
    }

    pub fn destination(&self) -> NodeId {
        *self.nodes.last().expect("validated path has nodes")
    }

    pub fn contains(&self, link: LinkId) -> bool {
        self.links.contains(&link)
    }

    pub fn position(&self, link: LinkId) -> Option<usize> {
        self.links.iter().position(|&l| l == link)
    }

    /// Receiving node of each hop, in hop order.
    pub fn receivers(&self) -> &[NodeId] {
        &self.nodes[1..]
    }
}

/// Checks that `hops` forms a contiguous, loop-free route of existing links
/// from `source` to `destination`.
///
/// Checks run in order: contiguity, loops, endpoints, link existence.
pub fn validate_path(
    network: &Network,
    hops: &[(NodeId, NodeId)],
    source: NodeId,
    destination: NodeId,
) -> Result<Path, TopologyError> {
    if hops.is_empty() {
        return Err(TopologyError::EmptyPath);
    }
    for (i, pair) in hops.windows(2).enumerate() {
        if pair[0].1 != pair[1].0 {
            return Err(TopologyError::NonContiguous { hop: i + 1 });
        }
    }

    let mut nodes = Vec::with_capacity(hops.len() + 1);
    nodes.push(hops[0].0);
    nodes.extend(hops.iter().map(|h| h.1));
    let mut seen = HashSet::with_capacity(nodes.len());
    for &n in &nodes {
        if !seen.insert(n) {
            return Err(TopologyError::LoopDetected(network.node_name(n).into()));
        }
    }

    let (first, last) = (nodes[0], *nodes.last().unwrap());
    if first != source || last != destination {
        return Err(TopologyError::EndpointMismatch {
            found_src: network.node_name(first).into(),
            found_dst: network.node_name(last).into(),
            want_src: network.node_name(source).into(),
            want_dst: network.node_name(destination).into(),
        });
    }

    let links = hops
        .iter()
        .map(|&(s, d)| {
            network
                .link_between(s, d)
                .ok_or_else(|| TopologyError::UnknownLink {
                    src: network.node_name(s).into(),
                    dst: network.node_name(d).into(),
                })
        })
        .collect::<Result<Vec<_>, _>>()?;

    Ok(Path { links, nodes })
}

/// Convenience wrapper over [`validate_path`] taking node names.
pub fn path_from_names<S: AsRef<str>>(
    network: &Network,
    hops: &[(S, S)],
    source: &str,
    destination: &str,
) -> Result<Path, TopologyError> {
    let ids = hops
        .iter()
        .map(|(a, b)| Ok((network.node(a.as_ref())?, network.node(b.as_ref())?)))
        .collect::<Result<Vec<_>, TopologyError>>()?;
    validate_path(
        network,
        &ids,
        network.node(source)?,
        network.node(destination)?,
    )
}

/// Prefix of `path` ending with `link`, inclusive.
pub fn subpath(path: &Path, link: LinkId) -> Result<Path, TopologyError> {
    let pos = path
        .position(link)
        .ok_or(TopologyError::LinkNotOnPath(link))?;
    Ok(Path {
        links: path.links[..=pos].to_vec(),
        nodes: path.nodes[..=pos + 1].to_vec(),
    })
}

/// A unicast traffic flow from `source` to `destination` over a fixed set
/// of alternative paths.
#[derive(Debug, Clone, PartialEq)]
pub struct Flow {
    pub name: String,
    pub source: NodeId,
    pub destination: NodeId,
    pub paths: Vec<Path>,
    /// Maximum aggregate rate in kbps.
    pub max_rate: f64,
    /// Minimum trust-weighted delivered rate in kbps.
    pub reliability_threshold: f64,
    /// Per-path end-to-end delay bound, in scaled delay units.
    pub delay_bound: f64,
}

impl Flow {
    pub fn new(
        name: impl Into<String>,
        source: NodeId,
        destination: NodeId,
        paths: Vec<Path>,
        max_rate: f64,
        reliability_threshold: f64,
        delay_bound: f64,
    ) -> Result<Self, TopologyError> {
        let name = name.into();
        let invalid = |reason: String| TopologyError::InvalidFlow {
            flow: name.clone(),
            reason,
        };
        if !(max_rate >= 0.0) {
            return Err(invalid(format!("max rate {max_rate} is negative")));
        }
        if !(reliability_threshold >= 0.0 && reliability_threshold <= max_rate) {
            return Err(invalid(format!(
                "reliability threshold {reliability_threshold} outside [0, {max_rate}]"
            )));
        }
        if !(delay_bound > 0.0) {
            return Err(invalid(format!(
                "delay bound {delay_bound} must be positive"
            )));
        }
        for (k, p) in paths.iter().enumerate() {
            if p.source() != source || p.destination() != destination {
                return Err(invalid(format!("path {} has mismatched endpoints", k + 1)));
            }
        }
        Ok(Flow {
            name,
            source,
            destination,
            paths,
            max_rate,
            reliability_threshold,
            delay_bound,
        })
    }

    pub fn path_count(&self) -> usize {
        self.paths.len()
    }

    /// Links used by any of the flow's paths, in link order.
    pub fn used_links(&self, network: &Network) -> Vec<bool> {
        let mut used = vec![false; network.link_count()];
        for p in &self.paths {
            for l in p.links() {
                used[l.0] = true;
            }
        }
        used
    }
}

/// Dense `paths x links` 0/1 incidence matrix of one flow.
#[derive(Debug, Clone, PartialEq)]
pub struct RoutingMatrix {
    rows: usize,
    cols: usize,
    data: Vec<u8>,
}

impl RoutingMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, path: usize, link: LinkId) -> u8 {
        self.data[path * self.cols + link.0]
    }

    pub fn row(&self, path: usize) -> &[u8] {
        &self.data[path * self.cols..(path + 1) * self.cols]
    }
}

pub fn routing_matrix(flow: &Flow, network: &Network) -> RoutingMatrix {
    let cols = network.link_count();
    let mut data = vec![0u8; flow.paths.len() * cols];
    for (k, p) in flow.paths.iter().enumerate() {
        for l in p.links() {
            data[k * cols + l.0] = 1;
        }
    }
    RoutingMatrix {
        rows: flow.paths.len(),
        cols,
        data,
    }
}
