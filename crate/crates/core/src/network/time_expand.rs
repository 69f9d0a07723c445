use std::collections::{BTreeMap, VecDeque};

use super::{RelayNetwork, SOURCE};
use crate::error::{Error, Result};

/// A node of the time-expanded network.
///
/// `Copy { vertex, layer }` is `v[k]` for `k` in `1..=L+1`; the virtual source
/// sits before layer 1 and each virtual destination after layer `L + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TeNode {
    VirtualSource,
    Copy { vertex: usize, layer: usize },
    VirtualDestination(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TeEdge {
    pub from: TeNode,
    pub to: TeNode,
    /// Virtual error-free links carry no power and are excluded from rate terms.
    pub lossless: bool,
}

/// The network unfolded over `L + 1` stages, `L = B + |V| - 2`.
#[derive(Debug, Clone)]
pub struct TimeExpandedNetwork {
    pub block_count: usize,
    pub depth: usize,
    pub vertex_count: usize,
    pub destinations: Vec<usize>,
    pub edges: Vec<TeEdge>,
}

/// Unfolds `net` for `blocks` message blocks.
///
/// Channel edges `(u[k], v[k+1])` are replicated for `k = 1..=L`. The source
/// chain `s_TE → s[1] → … → s[L+1]` and each destination chain
/// `d[1] → … → d[L+1] → d_TE` are lossless.
pub fn time_expand(net: &RelayNetwork, blocks: usize) -> Result<TimeExpandedNetwork> {
    if blocks == 0 {
        return Err(Error::arg("blocks", "must be at least 1"));
    }
    let depth = blocks + net.vertex_count() - 2;
    let mut edges = Vec::new();
    edges.push(TeEdge {
        from: TeNode::VirtualSource,
        to: TeNode::Copy { vertex: SOURCE, layer: 1 },
        lossless: true,
    });
    for k in 1..=depth {
        for &(u, v) in net.edges() {
            edges.push(TeEdge {
                from: TeNode::Copy { vertex: u, layer: k },
                to: TeNode::Copy { vertex: v, layer: k + 1 },
                lossless: false,
            });
        }
        edges.push(TeEdge {
            from: TeNode::Copy { vertex: SOURCE, layer: k },
            to: TeNode::Copy { vertex: SOURCE, layer: k + 1 },
            lossless: true,
        });
        for d in net.destinations().iter() {
            edges.push(TeEdge {
                from: TeNode::Copy { vertex: d, layer: k },
                to: TeNode::Copy { vertex: d, layer: k + 1 },
                lossless: true,
            });
        }
    }
    for d in net.destinations().iter() {
        edges.push(TeEdge {
            from: TeNode::Copy { vertex: d, layer: depth + 1 },
            to: TeNode::VirtualDestination(d),
            lossless: true,
        });
    }
    Ok(TimeExpandedNetwork {
        block_count: blocks,
        depth,
        vertex_count: net.vertex_count(),
        destinations: net.destinations().iter().collect(),
        edges,
    })
}

impl TimeExpandedNetwork {
    /// Number of vertex-copy layers, `L + 1`.
    pub fn layer_count(&self) -> usize {
        self.depth + 1
    }

    /// Layer index of a node: 0 for the virtual source, `L + 2` for virtual destinations.
    pub fn layer_of(&self, node: TeNode) -> usize {
        match node {
            TeNode::VirtualSource => 0,
            TeNode::Copy { layer, .. } => layer,
            TeNode::VirtualDestination(_) => self.depth + 2,
        }
    }

    pub fn nodes(&self) -> Vec<TeNode> {
        let mut nodes = vec![TeNode::VirtualSource];
        for k in 1..=self.layer_count() {
            for v in 1..=self.vertex_count {
                nodes.push(TeNode::Copy { vertex: v, layer: k });
            }
        }
        nodes.extend(self.destinations.iter().map(|&d| TeNode::VirtualDestination(d)));
        nodes
    }

    pub fn layer(&self, k: usize) -> Vec<TeNode> {
        (1..=self.vertex_count)
            .map(|v| TeNode::Copy { vertex: v, layer: k })
            .collect()
    }

    pub fn channel_edges(&self) -> impl Iterator<Item = &TeEdge> {
        self.edges.iter().filter(|e| !e.lossless)
    }

    /// Kahn's algorithm over the expanded graph; `None` would indicate a cycle.
    pub fn topological_order(&self) -> Option<Vec<TeNode>> {
        let nodes = self.nodes();
        let mut indeg: BTreeMap<TeNode, usize> = nodes.iter().map(|&n| (n, 0)).collect();
        let mut succ: BTreeMap<TeNode, Vec<TeNode>> = BTreeMap::new();
        for e in &self.edges {
            *indeg.get_mut(&e.to)? += 1;
            succ.entry(e.from).or_default().push(e.to);
        }
        let mut queue: VecDeque<TeNode> =
            indeg.iter().filter(|(_, &d)| d == 0).map(|(&n, _)| n).collect();
        let mut order = Vec::with_capacity(nodes.len());
        while let Some(n) = queue.pop_front() {
            order.push(n);
            for &w in succ.get(&n).map(Vec::as_slice).unwrap_or(&[]) {
                let d = indeg.get_mut(&w)?;
                *d -= 1;
                if *d == 0 {
                    queue.push_back(w);
                }
            }
        }
        (order.len() == nodes.len()).then_some(order)
    }
}
