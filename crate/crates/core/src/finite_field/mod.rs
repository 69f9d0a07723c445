//! Prime-field arithmetic, symmetric channels and linear codes.

mod code;
mod dmc;
mod field;

pub use code::{LinearCode, MAX_ML_CODEWORDS};
pub use dmc::SymmetricDmc;
pub use field::{is_prime, PrimeField};

use crate::error::{Error, Result};
use crate::network::{enumerate_cuts, RelayNetwork};

/// Capacity of a symmetric channel in bits.
pub fn dmc_capacity(ch: &SymmetricDmc) -> f64 {
    ch.capacity()
}

/// Multicast capacity `min_S Σ_{v ∈ S̄^c} C_v` of a finite-field network.
pub fn ff_capacity(net: &RelayNetwork) -> Result<f64> {
    if net.field_size().is_none() {
        return Err(Error::InvalidNetwork("network is not in finite-field mode".into()));
    }
    let cuts = enumerate_cuts(net)?;
    cuts.iter()
        .map(|c| {
            c.boundary_in
                .iter()
                .map(|v| net.channel(v).map_or(0.0, SymmetricDmc::capacity))
                .sum::<f64>()
        })
        .reduce(f64::min)
        .ok_or_else(|| Error::InvalidNetwork("network has no cuts".into()))
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;

    fn identity_diamond() -> RelayNetwork {
        let channels: BTreeMap<usize, SymmetricDmc> =
            (2..=4).map(|v| (v, SymmetricDmc::identity(2).unwrap())).collect();
        RelayNetwork::finite_field(4, &[4], 2, &[(1, 2, 1), (1, 3, 1), (2, 4, 1), (3, 4, 1)], channels)
            .unwrap()
    }

    #[test]
    fn diamond_over_f2_has_unit_capacity() {
        assert!((ff_capacity(&identity_diamond()).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_link_bsc() {
        let mut channels = BTreeMap::new();
        channels.insert(2, SymmetricDmc::bsc(0.11).unwrap());
        let net = RelayNetwork::finite_field(2, &[2], 2, &[(1, 2, 1)], channels).unwrap();
        let h = -0.11 * 0.11f64.log2() - 0.89 * 0.89f64.log2();
        assert!((ff_capacity(&net).unwrap() - (1.0 - h)).abs() < 1e-12);
    }

    #[test]
    fn series_path_is_bottlenecked_by_weakest_link() {
        let eps = [0.01, 0.2, 0.05];
        let channels: BTreeMap<usize, SymmetricDmc> = eps
            .iter()
            .enumerate()
            .map(|(i, &e)| (i + 2, SymmetricDmc::bsc(e).unwrap()))
            .collect();
        let net =
            RelayNetwork::finite_field(4, &[4], 2, &[(1, 2, 1), (2, 3, 1), (3, 4, 1)], channels.clone())
                .unwrap();
        let weakest = channels.values().map(SymmetricDmc::capacity).fold(f64::INFINITY, f64::min);
        assert!((ff_capacity(&net).unwrap() - weakest).abs() < 1e-12);
    }

    #[test]
    fn gaussian_network_is_rejected() {
        let net = RelayNetwork::gaussian(2, &[2], &[(1, 2, 1.0)]).unwrap();
        assert!(ff_capacity(&net).is_err());
    }
}
