//! Cut-set upper bound, lattice-achievable rate and their gap for Gaussian
//! relay networks, plus the cut functional `ξ` used in the time-expanded
//! error analysis.
//!
//! All rates are in bits per channel use.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::network::{cut_member_sets, Edge, RelayNetwork, TimeExpandedNetwork, VertexSet, SOURCE};

/// Relative tolerance for declaring two cut values tied.
const TIE_TOL: f64 = 1e-12;

/// Cut-state count times layer count allowed in [`te_mincut`].
pub const MAX_TE_STATES: f64 = 65_536.0;
/// Layer-pair transitions allowed in [`te_mincut`].
pub const MAX_TE_TRANSITIONS: f64 = 268_435_456.0;

/// `½ log2(1 + x)`.
pub fn gaussian_capacity(snr: f64) -> f64 {
    0.5 * (1.0 + snr).log2()
}

/// Bound contributions of one cut.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CutTerms {
    pub members: VertexSet,
    pub upper: f64,
    pub achievable: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateReport {
    pub upper_bound: f64,
    pub achievable: f64,
    pub gap_bound: f64,
    /// One entry per cut, ordered by member bitmask.
    pub per_cut: Vec<CutTerms>,
    pub upper_argmin: Vec<VertexSet>,
    pub achievable_argmin: Vec<VertexSet>,
}

/// Upper-bound term of a cut: `Σ_{v∈S̄^c} ½log2(1 + (Σ_{u∈Δ_S(v)} √P_{u,v})²)`.
fn upper_term(net: &RelayNetwork, powers: &BTreeMap<Edge, f64>, members: VertexSet) -> f64 {
    members
        .complement(net.vertex_count())
        .iter()
        .map(|v| {
            let crossing = net.in_neighbors(v).intersection(members);
            if crossing.is_empty() {
                return 0.0;
            }
            let amplitude: f64 = crossing.iter().map(|u| powers[&(u, v)].sqrt()).sum();
            gaussian_capacity(amplitude * amplitude)
        })
        .sum()
}

/// Achievable term of a cut:
/// `Σ_{v∈S̄^c} [½log2((1/Σ_{u∈Δ(v)} P_{u,v} + 1) · max_{u∈Δ_S(v)} P_{u,v})]^+`.
fn achievable_term(net: &RelayNetwork, powers: &BTreeMap<Edge, f64>, members: VertexSet) -> f64 {
    members
        .complement(net.vertex_count())
        .iter()
        .map(|v| {
            let crossing = net.in_neighbors(v).intersection(members);
            let strongest = crossing.iter().map(|u| powers[&(u, v)]).fold(0.0, f64::max);
            if strongest <= 0.0 {
                return 0.0;
            }
            let total: f64 = net.in_neighbors(v).iter().map(|u| powers[&(u, v)]).sum();
            (0.5 * ((1.0 / total + 1.0) * strongest).log2()).max(0.0)
        })
        .sum()
}

fn argmin(per_cut: &[CutTerms], value: impl Fn(&CutTerms) -> f64) -> (f64, Vec<VertexSet>) {
    let best = per_cut.iter().map(&value).fold(f64::INFINITY, f64::min);
    let tol = TIE_TOL * best.abs().max(1.0);
    let cuts = per_cut
        .iter()
        .filter(|c| value(c) - best <= tol)
        .map(|c| c.members)
        .collect();
    (best, cuts)
}

/// Evaluates both bounds on every cut.
pub fn rate_report(net: &RelayNetwork) -> Result<RateReport> {
    let powers = net.require_gaussian()?;
    let members = cut_member_sets(net)?;
    if members.is_empty() {
        return Err(Error::InvalidNetwork("network has no cuts".into()));
    }
    let per_cut: Vec<CutTerms> = members
        .par_iter()
        .map(|&m| CutTerms {
            members: m,
            upper: upper_term(net, powers, m),
            achievable: achievable_term(net, powers, m),
        })
        .collect();
    let (upper_bound, upper_argmin) = argmin(&per_cut, |c| c.upper);
    let (achievable, achievable_argmin) = argmin(&per_cut, |c| c.achievable);
    Ok(RateReport {
        upper_bound,
        achievable,
        gap_bound: gaussian_gap_bound(net)?,
        per_cut,
        upper_argmin,
        achievable_argmin,
    })
}

pub fn gaussian_upper_bound(net: &RelayNetwork) -> Result<f64> {
    Ok(rate_report(net)?.upper_bound)
}

pub fn gaussian_achievable(net: &RelayNetwork) -> Result<f64> {
    Ok(rate_report(net)?.achievable)
}

/// `Σ_{v≠s} log2 |Δ(v)|`.
pub fn gaussian_gap_bound(net: &RelayNetwork) -> Result<f64> {
    net.require_gaussian()?;
    Ok((1..=net.vertex_count())
        .filter(|&v| v != SOURCE)
        .map(|v| net.in_neighbors(v).len())
        .filter(|&d| d > 0)
        .map(|d| (d as f64).log2())
        .sum())
}

/// Nonnegative per-edge rates `R_{u,v}`; absent edges have rate 0.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeRates {
    vertex_count: usize,
    dense: Vec<f64>,
}

impl EdgeRates {
    pub fn new(net: &RelayNetwork, rates: &BTreeMap<Edge, f64>) -> Result<Self> {
        let n = net.vertex_count();
        let mut dense = vec![0.0; (n + 1) * (n + 1)];
        for (&(u, v), &r) in rates {
            if !net.has_edge(u, v) {
                return Err(Error::arg("rates", format!("({u},{v}) is not an edge")));
            }
            if !(r.is_finite() && r >= 0.0) {
                return Err(Error::arg("rates", format!("rate {r} on ({u},{v}) is not nonnegative")));
            }
            dense[u * (n + 1) + v] = r;
        }
        Ok(EdgeRates {
            vertex_count: n,
            dense,
        })
    }

    /// The same rate on every edge.
    pub fn uniform(net: &RelayNetwork, rate: f64) -> Result<Self> {
        Self::new(net, &net.edges().iter().map(|&e| (e, rate)).collect())
    }

    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.dense[u * (self.vertex_count + 1) + v]
    }
}

/// `ξ(S1, S2) = Σ_{v∈S2^c} max_{u∈S1} R_{u,v}`.
pub fn xi(rates: &EdgeRates, s1: VertexSet, s2: VertexSet) -> f64 {
    s2.complement(rates.vertex_count)
        .iter()
        .map(|v| s1.iter().map(|u| rates.get(u, v)).fold(0.0, f64::max))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubmodularCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Compares `Σ_k ξ(S_k, S_{k+1})` (indices cyclic) with `Σ_k ξ(S'_k, S'_k)`,
/// where `S'_k` holds the vertices lying in at least `k` of the cuts.
pub fn verify_submodular_chain(
    net: &RelayNetwork,
    cuts: &[VertexSet],
    rates: &EdgeRates,
) -> Result<SubmodularCheck> {
    if cuts.is_empty() {
        return Err(Error::arg("cuts", "sequence is empty"));
    }
    for &c in cuts {
        crate::network::cut_boundaries(net, c)?;
    }
    let len = cuts.len();
    let lhs: f64 = (0..len).map(|k| xi(rates, cuts[k], cuts[(k + 1) % len])).sum();
    let rhs: f64 = (1..=len)
        .map(|k| {
            let level: VertexSet = net
                .all_vertices()
                .iter()
                .filter(|&v| cuts.iter().filter(|c| c.contains(v)).count() >= k)
                .collect();
            xi(rates, level, level)
        })
        .sum();
    Ok(SubmodularCheck {
        lhs,
        rhs,
        holds: lhs >= rhs - TIE_TOL * rhs.abs().max(1.0),
    })
}

/// Minimum over time-expanded cuts of the summed per-layer crossing rates.
///
/// A time-expanded cut keeps every source copy inside and every copy of some
/// destination `d` outside, so it is a sequence of per-layer sets
/// `S[1..=L+1]` with `s ∈ S[k]`, `d ∉ S[k]`, costing `Σ_k ξ(S[k], S[k+1])`.
/// Solved as a shortest path over layer states.
pub fn te_mincut(te: &TimeExpandedNetwork, rates: &EdgeRates) -> Result<f64> {
    let n = te.vertex_count;
    if rates.vertex_count != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: rates.vertex_count,
        });
    }
    let per_dest = 1u64 << (n - 2);
    let states = per_dest as f64 * te.layer_count() as f64;
    if states > MAX_TE_STATES {
        return Err(Error::guard("time-expanded cut states", states, MAX_TE_STATES));
    }
    let transitions = (per_dest as f64).powi(2) * te.depth as f64;
    if transitions > MAX_TE_TRANSITIONS {
        return Err(Error::guard("time-expanded cut transitions", transitions, MAX_TE_TRANSITIONS));
    }
    let mut best = f64::INFINITY;
    for &d in &te.destinations {
        let layer: Vec<VertexSet> = (0..(1u64 << (n - 1)))
            .map(|rest| VertexSet::from_bits((rest << 1) | 1))
            .filter(|s| !s.contains(d))
            .collect();
        let cost: Vec<f64> = layer
            .iter()
            .flat_map(|&a| layer.iter().map(move |&b| xi(rates, a, b)))
            .collect();
        let m = layer.len();
        let mut dist = vec![0.0; m];
        for _ in 0..te.depth {
            dist = (0..m)
                .map(|b| (0..m).map(|a| dist[a] + cost[a * m + b]).fold(f64::INFINITY, f64::min))
                .collect();
        }
        best = best.min(dist.into_iter().fold(f64::INFINITY, f64::min));
    }
    Ok(best)
}

/// `min_S ξ(S, S)` over the cuts of `net`, the per-layer cost of a steady cut.
pub fn steady_cut_min(net: &RelayNetwork, rates: &EdgeRates) -> Result<f64> {
    Ok(cut_member_sets(net)?
        .into_iter()
        .map(|s| xi(rates, s, s))
        .fold(f64::INFINITY, f64::min))
}

/// Bracket `[max(0, L − |Γ| + 2)·m, L·m]` on [`te_mincut`], `m` from [`steady_cut_min`].
pub fn te_mincut_bracket(net: &RelayNetwork, te: &TimeExpandedNetwork, rates: &EdgeRates) -> Result<(f64, f64)> {
    let m = steady_cut_min(net, rates)?;
    let cuts = cut_member_sets(net)?.len() as f64;
    let depth = te.depth as f64;
    Ok(((depth - cuts + 2.0).max(0.0) * m, depth * m))
}

/// `max(0, L − |Γ| + 1)·m`: a walk of `L` cut transitions leaves at most
/// `|Γ| − 1` of them outside cycles, and every cycle transition costs at least `m`.
pub fn te_mincut_loop_bound(net: &RelayNetwork, te: &TimeExpandedNetwork, rates: &EdgeRates) -> Result<f64> {
    let m = steady_cut_min(net, rates)?;
    let cuts = cut_member_sets(net)?.len() as f64;
    Ok((te.depth as f64 - cuts + 1.0).max(0.0) * m)
}

/// Difference between the coherent upper-bound term and the clamped
/// achievable term for a sender subset `A` of a MAC with powers sorted
/// descending, the achievable side using the strongest member `l = min A`.
/// Never exceeds `log2 K`.
pub fn mac_term_gap(powers: &[f64], subset: &[usize]) -> Result<f64> {
    if subset.is_empty() {
        return Err(Error::arg("subset", "must be nonempty"));
    }
    if powers.windows(2).any(|w| w[0] < w[1]) || powers.iter().any(|&p| !(p >= 0.0)) {
        return Err(Error::arg("powers", "must be nonnegative and sorted descending"));
    }
    if subset.iter().any(|&j| j >= powers.len()) {
        return Err(Error::arg("subset", "index out of range"));
    }
    let amplitude: f64 = subset.iter().map(|&j| powers[j].sqrt()).sum();
    let l = *subset.iter().min().unwrap();
    let total: f64 = powers.iter().sum();
    let achievable = if powers[l] > 0.0 {
        (0.5 * ((1.0 / total + 1.0) * powers[l]).log2()).max(0.0)
    } else {
        0.0
    };
    Ok(gaussian_capacity(amplitude * amplitude) - achievable)
}

/// `(min a − min b, max (a − b))`; the first never exceeds the second.
pub fn min_difference_bound(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    let min = |x: &[f64]| x.iter().copied().fold(f64::INFINITY, f64::min);
    let max_diff = a.iter().zip(b).map(|(x, y)| x - y).fold(f64::NEG_INFINITY, f64::max);
    Ok((min(a) - min(b), max_diff))
}
