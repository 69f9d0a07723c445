use std::f64::consts::{E, PI};

use rayon::prelude::*;
use serde::Serialize;

use super::Lattice;
use crate::error::{Error, Result};
use crate::rng::{stream, tag};

/// Smallest sample count accepted by the Monte Carlo moment estimators.
pub const MIN_MOMENT_SAMPLES: usize = 10_000;

const CHUNK: usize = 4096;

/// Monte Carlo estimate of the per-dimension second moment of the Voronoi region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SecondMoment {
    pub value: f64,
    pub stderr: f64,
    /// Largest folded norm seen, a lower bound on the covering radius.
    pub max_norm: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LatticeGeometry {
    pub second_moment: f64,
    pub second_moment_stderr: f64,
    pub effective_radius: f64,
    pub covering_radius_lb: f64,
    pub covering_radius_ub: f64,
    /// `G(Λ) = σ²(Λ) / Vol^{2/n}`.
    pub nsm: f64,
    pub nsm_stderr: f64,
}

/// Volume of the `n`-dimensional unit ball.
pub fn unit_ball_volume(n: usize) -> f64 {
    let mut v = [1.0, 2.0];
    for k in 2..=n {
        v[k % 2] *= 2.0 * PI / k as f64;
    }
    v[n % 2]
}

/// Samples uniform points of the fundamental parallelepiped and folds them
/// into the Voronoi region. Chunks draw from independent streams
/// `(seed, chunk, index)` and are summed in chunk order, so the estimate does
/// not depend on the worker count.
pub fn second_moment(lat: &Lattice, samples: usize, seed: u64) -> Result<SecondMoment> {
    if samples < MIN_MOMENT_SAMPLES {
        return Err(Error::InsufficientSamples(format!(
            "second moment needs at least {MIN_MOMENT_SAMPLES} samples, got {samples}"
        )));
    }
    let n = lat.dimension() as f64;
    let chunks = samples.div_ceil(CHUNK);
    let partial: Vec<(f64, f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream(seed, &[tag::CHUNK, c as u64]);
            let count = CHUNK.min(samples - c * CHUNK);
            let (mut sum, mut sq, mut max) = (0.0, 0.0, 0.0f64);
            for _ in 0..count {
                let x = lat.sample_voronoi(&mut rng);
                let e: f64 = x.iter().map(|v| v * v).sum();
                let per_dim = e / n;
                sum += per_dim;
                sq += per_dim * per_dim;
                max = max.max(e.sqrt());
            }
            (sum, sq, max)
        })
        .collect();
    let (sum, sq, max_norm) = partial
        .into_iter()
        .fold((0.0, 0.0, 0.0f64), |(a, b, m), (x, y, z)| (a + x, b + y, m.max(z)));
    let count = samples as f64;
    let value = sum / count;
    let var = (sq / count - value * value).max(0.0) * count / (count - 1.0);
    Ok(SecondMoment {
        value,
        stderr: (var / count).sqrt(),
        max_norm,
        samples,
    })
}

/// Second moment, radii and normalized second moment.
///
/// The covering radius is bracketed by the deepest sampled point and by the
/// nearest-plane bound `½ (Σ ‖b*_i‖²)^{1/2}`.
pub fn geometry(lat: &Lattice, samples: usize, seed: u64) -> Result<LatticeGeometry> {
    let m = second_moment(lat, samples, seed)?;
    let n = lat.dimension();
    let scale = lat.volume().powf(2.0 / n as f64);
    let ub = 0.5 * lat.gram_schmidt_norms().iter().map(|b| b * b).sum::<f64>().sqrt();
    Ok(LatticeGeometry {
        second_moment: m.value,
        second_moment_stderr: m.stderr,
        effective_radius: (lat.volume() / unit_ball_volume(n)).powf(1.0 / n as f64),
        covering_radius_lb: m.max_norm,
        covering_radius_ub: ub,
        nsm: m.value / scale,
        nsm_stderr: m.stderr / scale,
    })
}

/// Volume-to-noise ratio `Vol^{2/n} / (2πe σ²)`.
pub fn vnr(code_lattice: &Lattice, noise_variance: f64) -> Result<f64> {
    if !(noise_variance > 0.0) {
        return Err(Error::arg("noise_variance", format!("{noise_variance} is not positive")));
    }
    let n = code_lattice.dimension() as f64;
    Ok(code_lattice.volume().powf(2.0 / n) / (2.0 * PI * E * noise_variance))
}

/// Poltyrev exponent in nats:
/// `0` for `μ ≤ 1`, `½[(μ−1) − ln μ]` on `(1, 2]`, `½ ln(eμ/4)` on `[2, 4]`
/// and `μ/8` for `μ ≥ 4`.
pub fn poltyrev_exponent(mu: f64) -> Result<f64> {
    if !(mu > 0.0) {
        return Err(Error::arg("mu", format!("{mu} is not positive")));
    }
    Ok(if mu <= 1.0 {
        0.0
    } else if mu <= 2.0 {
        0.5 * ((mu - 1.0) - mu.ln())
    } else if mu <= 4.0 {
        0.5 * (E * mu / 4.0).ln()
    } else {
        mu / 8.0
    })
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    use super::*;
    use crate::lattice::Preset;

    #[test]
    fn unit_ball_volumes() {
        assert_eq!(unit_ball_volume(0), 1.0);
        assert_eq!(unit_ball_volume(1), 2.0);
        assert!((unit_ball_volume(2) - PI).abs() < 1e-12);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-12);
        assert!((unit_ball_volume(8) - PI.powi(4) / 24.0).abs() < 1e-12);
    }

    #[test]
    fn scaled_interval_second_moment() {
        let lat = Lattice::scaled_integer(1, 3.0).unwrap();
        let m = second_moment(&lat, 50_000, 1).unwrap();
        assert!((m.value - 9.0 / 12.0).abs() < 3.0 * m.stderr, "{m:?}");
    }

    #[test]
    fn a2_normalized_second_moment() {
        let g = geometry(&Preset::A2.lattice().unwrap(), 200_000, 3).unwrap();
        let exact = 5.0 / (36.0 * 3f64.sqrt());
        assert!((g.nsm - exact).abs() < 3.0 * g.nsm_stderr, "{g:?}");
        assert!(g.nsm >= 1.0 / (2.0 * PI * E) - 3.0 * g.nsm_stderr);
        let r_cov = 1.0 / 3f64.sqrt();
        assert!(g.covering_radius_lb <= r_cov + 1e-12 && r_cov <= g.covering_radius_ub);
        assert!(g.covering_radius_lb > 0.95 * r_cov);
    }

    #[test]
    fn estimate_is_reproducible() {
        let lat = Preset::D4.lattice().unwrap();
        assert_eq!(second_moment(&lat, 20_000, 9).unwrap(), second_moment(&lat, 20_000, 9).unwrap());
        assert!(second_moment(&lat, 100, 9).is_err());
    }

    #[test]
    fn folded_samples_fill_orthants_uniformly() {
        for lat in [Preset::A2.lattice().unwrap(), Preset::D4.lattice().unwrap()] {
            let n = lat.dimension();
            let cells = 1usize << n;
            let mut counts = vec![0usize; cells];
            let mut rng = stream(17, &[n as u64]);
            let draws = 400 * cells;
            for _ in 0..draws {
                let x = lat.sample_voronoi(&mut rng);
                let cell = x.iter().enumerate().fold(0, |acc, (i, &v)| acc | (((v > 0.0) as usize) << i));
                counts[cell] += 1;
            }
            let expected = draws as f64 / cells as f64;
            let stat: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
            let p = 1.0 - ChiSquared::new((cells - 1) as f64).unwrap().cdf(stat);
            assert!(p > 1e-3, "p = {p}");
        }
    }

    #[test]
    fn vnr_and_exponent_examples() {
        let z = Lattice::scaled_integer(4, 1.0).unwrap();
        assert!((vnr(&z, 1.0 / (2.0 * PI * E)).unwrap() - 1.0).abs() < 1e-12);
        assert!(vnr(&z, 0.0).is_err());
        assert_eq!(poltyrev_exponent(1.0).unwrap(), 0.0);
        assert!((poltyrev_exponent(2.0).unwrap() - 0.5 * (1.0 - 2f64.ln())).abs() < 1e-12);
        assert!((poltyrev_exponent(2.0).unwrap() - 0.153_426).abs() < 1e-5);
    }

    #[test]
    fn exponent_is_continuous_at_boundaries() {
        for b in [1.0, 2.0, 4.0] {
            let lo = poltyrev_exponent(b - 1e-9).unwrap();
            let hi = poltyrev_exponent(b + 1e-9).unwrap();
            assert!((lo - hi).abs() < 1e-8, "{b}");
        }
    }

    proptest! {
        #[test]
        fn exponent_positive_and_increasing_above_threshold(a in 1.0001f64..20.0, d in 1e-3f64..5.0) {
            let ea = poltyrev_exponent(a).unwrap();
            prop_assert!(ea > 0.0);
            prop_assert!(poltyrev_exponent(a + d).unwrap() > ea);
        }

        #[test]
        fn exponent_zero_below_threshold(mu in 1e-6f64..1.0) {
            prop_assert_eq!(poltyrev_exponent(mu).unwrap(), 0.0);
        }
    }
}
