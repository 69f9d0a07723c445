use std::collections::BTreeMap;

use super::{RelayNetwork, VertexSet, SOURCE};
use crate::error::{Error, Result};

/// Exhaustive cut enumeration is limited to this many vertices.
pub const MAX_CUT_ENUMERATION_VERTICES: usize = 24;

/// A cut `S` together with its boundaries.
///
/// `boundary_out` holds the vertices of `S` with an edge leaving `S`,
/// `boundary_in` the vertices of `S^c` with an edge arriving from `S`, and
/// `incoming_across[v]` is `Δ_S(v) = Δ(v) ∩ S` for every `v` in `boundary_in`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cut {
    pub members: VertexSet,
    pub boundary_out: VertexSet,
    pub boundary_in: VertexSet,
    pub incoming_across: BTreeMap<usize, VertexSet>,
}

impl Cut {
    pub fn complement(&self, net: &RelayNetwork) -> VertexSet {
        self.members.complement(net.vertex_count())
    }
}

fn is_cut(net: &RelayNetwork, members: VertexSet) -> bool {
    members.contains(SOURCE)
        && members.is_subset(net.all_vertices())
        && !net.destinations().is_subset(members)
}

/// Computes `S̄`, `S̄^c` and `Δ_S(v)` for the member set `S`.
pub fn cut_boundaries(net: &RelayNetwork, members: VertexSet) -> Result<Cut> {
    if !members.contains(SOURCE) {
        return Err(Error::InvalidCut(format!("{members} does not contain the source")));
    }
    if !is_cut(net, members) {
        return Err(Error::InvalidCut(format!(
            "{members} leaves no destination outside"
        )));
    }
    Ok(boundaries_unchecked(net, members))
}

pub(crate) fn boundaries_unchecked(net: &RelayNetwork, members: VertexSet) -> Cut {
    let mut boundary_out = VertexSet::EMPTY;
    let mut boundary_in = VertexSet::EMPTY;
    let mut incoming_across = BTreeMap::new();
    for &(u, v) in net.edges() {
        if members.contains(u) && !members.contains(v) {
            boundary_out.insert(u);
            boundary_in.insert(v);
        }
    }
    for v in boundary_in.iter() {
        incoming_across.insert(v, net.in_neighbors(v).intersection(members));
    }
    Cut {
        members,
        boundary_out,
        boundary_in,
        incoming_across,
    }
}

/// Every cut of the network, ordered by member bitmask.
///
/// For a single destination there are exactly `2^{|V|-2}` cuts.
pub fn enumerate_cuts(net: &RelayNetwork) -> Result<Vec<Cut>> {
    Ok(cut_member_sets(net)?
        .into_iter()
        .map(|m| boundaries_unchecked(net, m))
        .collect())
}

/// Member sets of every cut, ordered by bitmask.
pub(crate) fn cut_member_sets(net: &RelayNetwork) -> Result<Vec<VertexSet>> {
    let n = net.vertex_count();
    if n > MAX_CUT_ENUMERATION_VERTICES {
        return Err(Error::guard(
            "vertex count for cut enumeration",
            n as f64,
            MAX_CUT_ENUMERATION_VERTICES as f64,
        ));
    }
    // vertex 1 is bit 0; remaining vertices range over all 2^{n-1} patterns
    let sets = (0..(1u64 << (n - 1)))
        .map(|rest| VertexSet::from_bits((rest << 1) | 1))
        .filter(|&m| is_cut(net, m))
        .collect();
    Ok(sets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::diamond;

    fn set(vs: &[usize]) -> VertexSet {
        vs.iter().copied().collect()
    }

    #[test]
    fn two_node_network_has_one_cut() {
        let net = RelayNetwork::gaussian(2, &[2], &[(1, 2, 15.0)]).unwrap();
        let cuts = enumerate_cuts(&net).unwrap();
        assert_eq!(cuts.len(), 1);
        assert_eq!(cuts[0].members, set(&[1]));
    }

    #[test]
    fn diamond_cuts_and_boundaries() {
        let net = diamond(15.0);
        let members: Vec<VertexSet> =
            enumerate_cuts(&net).unwrap().into_iter().map(|c| c.members).collect();
        assert_eq!(
            members,
            vec![set(&[1]), set(&[1, 2]), set(&[1, 3]), set(&[1, 2, 3])]
        );

        let c = cut_boundaries(&net, set(&[1])).unwrap();
        assert_eq!(c.boundary_out, set(&[1]));
        assert_eq!(c.boundary_in, set(&[2, 3]));
        assert_eq!(c.incoming_across[&2], set(&[1]));
        assert_eq!(c.incoming_across[&3], set(&[1]));

        let c = cut_boundaries(&net, set(&[1, 2, 3])).unwrap();
        assert_eq!(c.boundary_out, set(&[2, 3]));
        assert_eq!(c.boundary_in, set(&[4]));
        assert_eq!(c.incoming_across[&4], set(&[2, 3]));

        let c = cut_boundaries(&net, set(&[1, 2])).unwrap();
        assert_eq!(c.boundary_out, set(&[1, 2]));
        assert_eq!(c.boundary_in, set(&[3, 4]));
        assert_eq!(c.incoming_across[&3], set(&[1]));
        assert_eq!(c.incoming_across[&4], set(&[2]));
    }

    #[test]
    fn rejects_invalid_cuts() {
        let net = diamond(1.0);
        assert!(cut_boundaries(&net, set(&[2])).is_err());
        assert!(cut_boundaries(&net, set(&[1, 4])).is_err());
    }

    #[test]
    fn five_node_single_destination_net_has_eight_cuts() {
        let net = RelayNetwork::gaussian(
            5,
            &[5],
            &[(1, 2, 1.0), (1, 3, 1.0), (2, 4, 1.0), (3, 4, 1.0), (4, 5, 1.0)],
        )
        .unwrap();
        let brute = (0u64..32)
            .map(VertexSet::from_bits)
            .filter(|s| s.contains(1) && !s.contains(5))
            .count();
        assert_eq!(brute, 8);
        assert_eq!(enumerate_cuts(&net).unwrap().len(), brute);
    }

    #[test]
    fn multiple_destinations_need_only_one_outside() {
        let net = RelayNetwork::gaussian(3, &[2, 3], &[(1, 2, 1.0), (1, 3, 1.0)]).unwrap();
        let members: Vec<VertexSet> =
            enumerate_cuts(&net).unwrap().into_iter().map(|c| c.members).collect();
        assert_eq!(members, vec![set(&[1]), set(&[1, 2]), set(&[1, 3])]);
    }
}
