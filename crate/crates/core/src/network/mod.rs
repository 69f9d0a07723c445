//! Relay networks with interference: orthogonal outgoing links, superposing
//! incoming links.
//!
//! Vertices are numbered `1..=|V|` with the source fixed at vertex 1. A network
//! is either Gaussian (a transmit power per edge) or finite-field (a nonzero
//! coefficient per edge plus a symmetric DMC per receiving node).

mod cuts;
mod schema;
mod time_expand;
mod vertex_set;

use std::collections::{BTreeMap, VecDeque};

use crate::error::{Error, Result};
use crate::finite_field::{is_prime, SymmetricDmc};

pub(crate) use cuts::cut_member_sets;
pub use cuts::{cut_boundaries, enumerate_cuts, Cut, MAX_CUT_ENUMERATION_VERTICES};
pub use schema::{ChannelSpec, EdgeSpec, NetworkSpec};
pub use time_expand::{time_expand, TeEdge, TeNode, TimeExpandedNetwork};
pub use vertex_set::VertexSet;

/// Directed edge `(from, to)`.
pub type Edge = (usize, usize);

/// The source vertex id.
pub const SOURCE: usize = 1;

/// Largest supported vertex count (vertex sets are 64-bit masks).
pub const MAX_VERTICES: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub enum ChannelModel {
    Gaussian {
        powers: BTreeMap<Edge, f64>,
    },
    FiniteField {
        field_size: u32,
        coeffs: BTreeMap<Edge, u32>,
        channels: BTreeMap<usize, SymmetricDmc>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelayNetwork {
    vertex_count: usize,
    destinations: VertexSet,
    edges: Vec<Edge>,
    in_nbrs: Vec<VertexSet>,
    out_nbrs: Vec<VertexSet>,
    model: ChannelModel,
}

impl RelayNetwork {
    /// Builds a Gaussian network from `(from, to, power)` triples.
    pub fn gaussian(
        vertex_count: usize,
        destinations: &[usize],
        edges: &[(usize, usize, f64)],
    ) -> Result<Self> {
        let mut powers = BTreeMap::new();
        for &(u, v, p) in edges {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::InvalidNetwork(format!(
                    "edge ({u},{v}) has negative or non-finite power {p}"
                )));
            }
            if powers.insert((u, v), p).is_some() {
                return Err(Error::InvalidNetwork(format!(
                    "parallel edge ({u},{v}) is not allowed"
                )));
            }
        }
        let edge_list: Vec<Edge> = powers.keys().copied().collect();
        Self::assemble(
            vertex_count,
            destinations,
            edge_list,
            ChannelModel::Gaussian { powers },
        )
    }

    /// Builds a finite-field network over the prime field `F_q` from
    /// `(from, to, beta)` triples and one channel per non-source vertex.
    pub fn finite_field(
        vertex_count: usize,
        destinations: &[usize],
        field_size: u32,
        edges: &[(usize, usize, u32)],
        channels: BTreeMap<usize, SymmetricDmc>,
    ) -> Result<Self> {
        if !is_prime(field_size) {
            return Err(Error::InvalidNetwork(format!(
                "field size {field_size} is not prime"
            )));
        }
        let mut coeffs = BTreeMap::new();
        for &(u, v, beta) in edges {
            if beta % field_size == 0 {
                return Err(Error::InvalidNetwork(format!(
                    "edge ({u},{v}) has zero coefficient"
                )));
            }
            if coeffs.insert((u, v), beta % field_size).is_some() {
                return Err(Error::InvalidNetwork(format!(
                    "parallel edge ({u},{v}) is not allowed"
                )));
            }
        }
        for v in 2..=vertex_count {
            match channels.get(&v) {
                None => {
                    return Err(Error::InvalidNetwork(format!(
                        "vertex {v} has no channel"
                    )))
                }
                Some(ch) if ch.input_size() != field_size as usize => {
                    return Err(Error::InvalidNetwork(format!(
                        "channel at vertex {v} has input size {}, field size is {field_size}",
                        ch.input_size()
                    )))
                }
                _ => {}
            }
        }
        if let Some(&v) = channels.keys().find(|&&v| v == SOURCE || v > vertex_count) {
            return Err(Error::InvalidNetwork(format!(
                "channel given for vertex {v}, which is not a receiving vertex"
            )));
        }
        let edge_list: Vec<Edge> = coeffs.keys().copied().collect();
        Self::assemble(
            vertex_count,
            destinations,
            edge_list,
            ChannelModel::FiniteField {
                field_size,
                coeffs,
                channels,
            },
        )
    }

    fn assemble(
        vertex_count: usize,
        destinations: &[usize],
        edges: Vec<Edge>,
        model: ChannelModel,
    ) -> Result<Self> {
        if vertex_count < 2 {
            return Err(Error::InvalidNetwork(format!(
                "vertex count must be at least 2, got {vertex_count}"
            )));
        }
        if vertex_count > MAX_VERTICES {
            return Err(Error::guard(
                "vertex count",
                vertex_count as f64,
                MAX_VERTICES as f64,
            ));
        }
        if destinations.is_empty() {
            return Err(Error::InvalidNetwork("destination set is empty".into()));
        }
        let mut dest = VertexSet::EMPTY;
        for &d in destinations {
            if d == SOURCE {
                return Err(Error::InvalidNetwork(
                    "source cannot be a destination".into(),
                ));
            }
            if d < 1 || d > vertex_count {
                return Err(Error::InvalidNetwork(format!(
                    "destination {d} out of range"
                )));
            }
            dest.insert(d);
        }
        let mut in_nbrs = vec![VertexSet::EMPTY; vertex_count + 1];
        let mut out_nbrs = vec![VertexSet::EMPTY; vertex_count + 1];
        for &(u, v) in &edges {
            if u < 1 || u > vertex_count || v < 1 || v > vertex_count {
                return Err(Error::InvalidNetwork(format!(
                    "edge ({u},{v}) references a missing vertex"
                )));
            }
            if u == v {
                return Err(Error::InvalidNetwork(format!("self-loop at vertex {u}")));
            }
            if v == SOURCE {
                return Err(Error::InvalidNetwork(format!(
                    "source has incoming edge ({u},{v})"
                )));
            }
            if dest.contains(u) {
                return Err(Error::InvalidNetwork(format!(
                    "destination has outgoing edge ({u},{v})"
                )));
            }
            in_nbrs[v].insert(u);
            out_nbrs[u].insert(v);
        }

        let net = RelayNetwork {
            vertex_count,
            destinations: dest,
            edges,
            in_nbrs,
            out_nbrs,
            model,
        };
        net.check_reachability()?;
        Ok(net)
    }

    fn check_reachability(&self) -> Result<()> {
        let forward = self.reach(SOURCE, |v| self.out_nbrs[v]);
        for v in 2..=self.vertex_count {
            if !forward.contains(v) {
                return Err(Error::InvalidNetwork(format!(
                    "vertex {v} is not reachable from the source"
                )));
            }
        }
        let mut backward = VertexSet::EMPTY;
        for d in self.destinations.iter() {
            backward = backward.union(self.reach(d, |v| self.in_nbrs[v]));
        }
        for v in self.relays() {
            if !backward.contains(v) {
                return Err(Error::InvalidNetwork(format!(
                    "relay {v} does not reach any destination"
                )));
            }
        }
        Ok(())
    }

    fn reach(&self, start: usize, next: impl Fn(usize) -> VertexSet) -> VertexSet {
        let mut seen = VertexSet::singleton(start);
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for w in next(u).iter() {
                if !seen.contains(w) {
                    seen.insert(w);
                    queue.push_back(w);
                }
            }
        }
        seen
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn source(&self) -> usize {
        SOURCE
    }

    pub fn all_vertices(&self) -> VertexSet {
        VertexSet::full(self.vertex_count)
    }

    pub fn destinations(&self) -> VertexSet {
        self.destinations
    }

    /// Vertices that are neither the source nor a destination.
    pub fn relays(&self) -> impl Iterator<Item = usize> + '_ {
        (2..=self.vertex_count).filter(|&v| !self.destinations.contains(v))
    }

    /// Edges sorted by `(from, to)`.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u >= 1 && u <= self.vertex_count && self.out_nbrs[u].contains(v)
    }

    pub fn edge_index(&self, u: usize, v: usize) -> Option<usize> {
        self.edges.binary_search(&(u, v)).ok()
    }

    /// In-neighbourhood `Δ(v)`.
    pub fn in_neighbors(&self, v: usize) -> VertexSet {
        self.in_nbrs[v]
    }

    /// Out-neighbourhood `Θ(v)`.
    pub fn out_neighbors(&self, v: usize) -> VertexSet {
        self.out_nbrs[v]
    }

    pub fn model(&self) -> &ChannelModel {
        &self.model
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self.model, ChannelModel::Gaussian { .. })
    }

    /// Transmit power `P_{u,v}`, `None` for absent edges or finite-field networks.
    pub fn power(&self, u: usize, v: usize) -> Option<f64> {
        match &self.model {
            ChannelModel::Gaussian { powers } => powers.get(&(u, v)).copied(),
            _ => None,
        }
    }

    pub(crate) fn require_gaussian(&self) -> Result<&BTreeMap<Edge, f64>> {
        match &self.model {
            ChannelModel::Gaussian { powers } => Ok(powers),
            _ => Err(Error::InvalidNetwork(
                "operation requires a Gaussian network".into(),
            )),
        }
    }

    pub fn field_size(&self) -> Option<u32> {
        match &self.model {
            ChannelModel::FiniteField { field_size, .. } => Some(*field_size),
            _ => None,
        }
    }

    /// Channel coefficient `β_{u,v}` of a finite-field network.
    pub fn coefficient(&self, u: usize, v: usize) -> Option<u32> {
        match &self.model {
            ChannelModel::FiniteField { coeffs, .. } => coeffs.get(&(u, v)).copied(),
            _ => None,
        }
    }

    pub fn channel(&self, v: usize) -> Option<&SymmetricDmc> {
        match &self.model {
            ChannelModel::FiniteField { channels, .. } => channels.get(&v),
            _ => None,
        }
    }

    /// Vertices ordered so that every vertex appears after all of its
    /// in-neighbours, or `None` if the graph has a directed cycle.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let n = self.vertex_count;
        let mut indeg: Vec<usize> = (0..=n).map(|v| if v == 0 { 0 } else { self.in_nbrs[v].len() }).collect();
        let mut queue: VecDeque<usize> = (1..=n).filter(|&v| indeg[v] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            for w in self.out_nbrs[u].iter() {
                indeg[w] -= 1;
                if indeg[w] == 0 {
                    queue.push_back(w);
                }
            }
        }
        (order.len() == n).then_some(order)
    }
}

#[cfg(test)]
pub(crate) use tests::diamond;

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn diamond(p: f64) -> RelayNetwork {
        RelayNetwork::gaussian(4, &[4], &[(1, 2, p), (1, 3, p), (2, 4, p), (3, 4, p)]).unwrap()
    }

    #[test]
    fn minimal_and_diamond_networks_build() {
        let single = RelayNetwork::gaussian(2, &[2], &[(1, 2, 15.0)]).unwrap();
        assert_eq!(single.edges().len(), 1);
        let d = diamond(15.0);
        assert_eq!(d.edges(), &[(1, 2), (1, 3), (2, 4), (3, 4)]);
        assert_eq!(d.in_neighbors(4), [2, 3].into_iter().collect());
        assert_eq!(d.relays().collect::<Vec<_>>(), vec![2, 3]);
        assert_eq!(d.power(2, 4), Some(15.0));
        assert_eq!(d.power(1, 4), None);
    }

    #[test]
    fn rejects_degree_rule_violations() {
        let err = RelayNetwork::gaussian(
            4,
            &[4],
            &[(1, 2, 1.0), (2, 4, 1.0), (4, 2, 1.0), (1, 3, 1.0), (3, 4, 1.0)],
        )
        .unwrap_err();
        assert!(err.to_string().contains("destination has outgoing edge"), "{err}");
        let err = RelayNetwork::gaussian(3, &[3], &[(1, 2, 1.0), (2, 1, 1.0), (2, 3, 1.0)])
            .unwrap_err();
        assert!(err.to_string().contains("source has incoming edge"), "{err}");
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(RelayNetwork::gaussian(0, &[1], &[]).is_err());
        assert!(RelayNetwork::gaussian(2, &[], &[(1, 2, 1.0)]).is_err());
        assert!(RelayNetwork::gaussian(2, &[2], &[(1, 2, -1.0)]).is_err());
        assert!(RelayNetwork::gaussian(2, &[2], &[(1, 2, 1.0), (1, 2, 2.0)]).is_err());
        // unreachable relay
        assert!(RelayNetwork::gaussian(3, &[2], &[(1, 2, 1.0), (3, 2, 1.0)]).is_err());
        // relay that reaches no destination
        assert!(RelayNetwork::gaussian(3, &[2], &[(1, 2, 1.0), (1, 3, 1.0)]).is_err());
        let ch = BTreeMap::from([(2, SymmetricDmc::identity(2).unwrap())]);
        let err = RelayNetwork::finite_field(2, &[2], 2, &[(1, 2, 0)], ch).unwrap_err();
        assert!(err.to_string().contains("zero coefficient"));
    }

    #[test]
    fn cycles_among_relays_are_allowed() {
        let net = RelayNetwork::gaussian(
            4,
            &[4],
            &[(1, 2, 1.0), (2, 3, 1.0), (3, 2, 1.0), (3, 4, 1.0)],
        )
        .unwrap();
        assert!(net.topological_order().is_none());
        assert!(diamond(1.0).topological_order().is_some());
    }
}

