//! Dithered nested-lattice transmission over a `K`-user Gaussian MAC with
//! MMSE scaling and Euclidean lattice decoding of the modular sum `T`.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::poltyrev_exponent;
use crate::nested::{rate_targets, LatticeChain};
use crate::rng::{stream, tag};
use crate::stats::{binomial_stderr, chi_square_uniform, contingency_test, ks_two_sample, TestResult};

pub const MIN_MAC_TRIALS: usize = 1_000;
pub const MIN_NOISE_TRIALS: usize = 10_000;
/// Samples per cell required by the uniformity test on `T`.
pub const MIN_SAMPLES_PER_LEADER: usize = 50;

const ENERGY_BINS: usize = 4;

/// Channel and receiver settings of a MAC run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MacConfig {
    /// Per-dimension noise variance; the physical model has 1.
    pub noise_variance: f64,
    /// Replaces the MMSE coefficient.
    pub alpha: Option<f64>,
    /// Per-level message indices held fixed instead of drawn uniformly.
    pub fixed_messages: Option<Vec<u64>>,
}

impl Default for MacConfig {
    fn default() -> Self {
        MacConfig {
            noise_variance: 1.0,
            alpha: None,
            fixed_messages: None,
        }
    }
}

impl MacConfig {
    /// `α = ΣP / (ΣP + N)` unless overridden.
    pub fn alpha(&self, powers: &[f64]) -> f64 {
        self.alpha.unwrap_or_else(|| {
            let total: f64 = powers.iter().sum();
            total / (total + self.noise_variance)
        })
    }

    fn validate(&self, chain: &LatticeChain) -> Result<()> {
        if !(self.noise_variance >= 0.0 && self.noise_variance.is_finite()) {
            return Err(Error::arg("noise_variance", "must be nonnegative and finite"));
        }
        if let Some(a) = self.alpha {
            if !(0.0..=1.0).contains(&a) {
                return Err(Error::arg("alpha", format!("{a} is outside [0, 1]")));
            }
        }
        if let Some(m) = &self.fixed_messages {
            if m.len() != chain.user_count() {
                return Err(Error::DimensionMismatch {
                    expected: chain.user_count(),
                    actual: m.len(),
                });
            }
            for (i, &w) in m.iter().enumerate() {
                if w >= chain.leader_count(i) {
                    return Err(Error::arg("fixed_messages", format!("index {w} out of range at level {}", i + 1)));
                }
            }
        }
        Ok(())
    }
}

/// `[Σ_j (W_j − Q_j(W_j + U_j))] mod Λ_top` over `(level, leader, dither)` inputs.
///
/// The `j = top` term contributes `W_top` only, since `Q_top(·) ∈ Λ_top`.
pub fn modular_sum(chain: &LatticeChain, top: usize, inputs: &[(usize, &[f64], &[f64])]) -> Result<Vec<f64>> {
    let n = chain.dimension();
    let mut acc = vec![0.0; n];
    for &(level, w, u) in inputs {
        if level < top || level >= chain.user_count() {
            return Err(Error::arg("level", format!("level {} is coarser than the reduction lattice", level + 1)));
        }
        if w.len() != n || u.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: w.len().min(u.len()),
            });
        }
        for (a, &x) in acc.iter_mut().zip(w) {
            *a += x;
        }
        if level != top {
            let shifted: Vec<f64> = w.iter().zip(u).map(|(a, b)| a + b).collect();
            let q = chain.shaping(level).nearest_point(&shifted)?;
            for (a, x) in acc.iter_mut().zip(q) {
                *a -= x;
            }
        }
    }
    chain.shaping(top).mod_lattice(&acc)
}

/// `T = [W_1 + Σ_{j≥2} (W_j − Q_j(W_j + U_j))] mod Λ_1` for one leader and one dither per level.
pub fn compute_t(chain: &LatticeChain, messages: &[Vec<f64>], dithers: &[Vec<f64>]) -> Result<Vec<f64>> {
    let k = chain.user_count();
    if messages.len() != k || dithers.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            actual: messages.len().min(dithers.len()),
        });
    }
    let inputs: Vec<(usize, &[f64], &[f64])> =
        (0..k).map(|i| (i, messages[i].as_slice(), dithers[i].as_slice())).collect();
    modular_sum(chain, 0, &inputs)
}

/// All signals of one MAC use.
#[derive(Debug, Clone, PartialEq)]
pub struct MacTrial {
    pub message_indices: Vec<u64>,
    pub messages: Vec<Vec<f64>>,
    pub dithers: Vec<Vec<f64>>,
    pub inputs: Vec<Vec<f64>>,
    pub noise: Vec<f64>,
    pub received: Vec<f64>,
    /// `Ỹ = (αY − ΣU) mod Λ_1`.
    pub processed: Vec<f64>,
    pub alpha: f64,
    pub t_true: Vec<f64>,
    pub t_index: u64,
    pub t_decoded: u64,
    /// `Z̃ = −(1−α) ΣX + α Z`.
    pub effective_noise: Vec<f64>,
}

impl MacTrial {
    pub fn is_error(&self) -> bool {
        self.t_index != self.t_decoded
    }
}

/// Runs one MAC use drawing all randomness from `rng`.
pub fn mac_trial<R: Rng + ?Sized>(chain: &LatticeChain, cfg: &MacConfig, rng: &mut R) -> Result<MacTrial> {
    let n = chain.dimension();
    let k = chain.user_count();
    let alpha = cfg.alpha(chain.target_powers());
    let message_indices: Vec<u64> = match &cfg.fixed_messages {
        Some(m) => m.clone(),
        None => (0..k).map(|i| rng.random_range(0..chain.leader_count(i))).collect(),
    };
    let messages = message_indices
        .iter()
        .enumerate()
        .map(|(i, &w)| chain.leader(i, w))
        .collect::<Result<Vec<_>>>()?;
    let dithers: Vec<Vec<f64>> = (0..k).map(|i| chain.sample_dither(i, rng)).collect();
    let inputs = (0..k)
        .map(|i| chain.encode(i, message_indices[i], &dithers[i]))
        .collect::<Result<Vec<_>>>()?;
    let sd = cfg.noise_variance.sqrt();
    let noise: Vec<f64> = (0..n).map(|_| sd * rng.sample::<f64, _>(StandardNormal)).collect();
    let sum_x: Vec<f64> = (0..n).map(|t| inputs.iter().map(|x| x[t]).sum()).collect();
    let received: Vec<f64> = sum_x.iter().zip(&noise).map(|(a, b)| a + b).collect();
    let pre: Vec<f64> = (0..n)
        .map(|t| alpha * received[t] - dithers.iter().map(|u| u[t]).sum::<f64>())
        .collect();
    let processed = chain.shaping(0).mod_lattice(&pre)?;
    let t_true = compute_t(chain, &messages, &dithers)?;
    let t_index = chain.coset_index(0, &t_true)?;
    let t_decoded = chain.decode_index(0, &processed)?;
    let effective_noise = (0..n).map(|t| -(1.0 - alpha) * sum_x[t] + alpha * noise[t]).collect();
    Ok(MacTrial {
        message_indices,
        messages,
        dithers,
        inputs,
        noise,
        received,
        processed,
        alpha,
        t_true,
        t_index,
        t_decoded,
        effective_noise,
    })
}

fn trial_rng(seed: u64, t: usize) -> crate::rng::StreamRng {
    stream(seed, &[tag::TRIAL, t as u64])
}

/// Error-rate estimate together with the exponential bound at the chain's rate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MacReport {
    pub users: usize,
    pub dimension: usize,
    pub rate: f64,
    pub rate_target: f64,
    pub backoff: f64,
    pub trials: usize,
    pub errors: u64,
    pub error_rate: f64,
    pub stderr: f64,
    /// `exp(−n E_P(2^{2(R_1* − R_1)}))`.
    pub bound: f64,
}

pub fn simulate_mac(chain: &LatticeChain, cfg: &MacConfig, trials: usize, seed: u64) -> Result<MacReport> {
    if trials < MIN_MAC_TRIALS {
        return Err(Error::InsufficientSamples(format!(
            "MAC simulation needs at least {MIN_MAC_TRIALS} trials, got {trials}"
        )));
    }
    cfg.validate(chain)?;
    let errors: u64 = (0..trials)
        .into_par_iter()
        .map(|t| mac_trial(chain, cfg, &mut trial_rng(seed, t)).map(|tr| tr.is_error() as u64))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum();
    let rate = chain.rate(0);
    let rate_target = rate_targets(chain.target_powers())?[0];
    let mu = 2f64.powf(2.0 * (rate_target - rate));
    let bound = (-(chain.dimension() as f64) * poltyrev_exponent(mu)?).exp();
    let error_rate = errors as f64 / trials as f64;
    Ok(MacReport {
        users: chain.user_count(),
        dimension: chain.dimension(),
        rate,
        rate_target,
        backoff: rate_target - rate,
        trials,
        errors,
        error_rate,
        stderr: binomial_stderr(error_rate, trials as u64),
        bound,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseStats {
    pub trials: usize,
    /// Empirical `(1/n) E‖Z̃‖²`.
    pub variance: f64,
    pub stderr: f64,
    /// `ΣP / (ΣP + 1)`.
    pub bound: f64,
    /// `(1−α)² Σσ²(Λ_j) + α² N`, exact for inputs uniform over the Voronoi regions.
    pub predicted: f64,
}

pub fn effective_noise_stats(chain: &LatticeChain, cfg: &MacConfig, trials: usize, seed: u64) -> Result<NoiseStats> {
    if trials < MIN_NOISE_TRIALS {
        return Err(Error::InsufficientSamples(format!(
            "noise statistics need at least {MIN_NOISE_TRIALS} trials, got {trials}"
        )));
    }
    cfg.validate(chain)?;
    let n = chain.dimension() as f64;
    let energies = (0..trials)
        .into_par_iter()
        .map(|t| {
            let tr = mac_trial(chain, cfg, &mut trial_rng(seed, t))?;
            Ok(tr.effective_noise.iter().map(|z| z * z).sum::<f64>() / n)
        })
        .collect::<Result<Vec<f64>>>()?;
    let count = trials as f64;
    let variance = energies.iter().sum::<f64>() / count;
    let var = energies.iter().map(|e| (e - variance).powi(2)).sum::<f64>() / (count - 1.0);
    let total: f64 = chain.target_powers().iter().sum();
    let alpha = cfg.alpha(chain.target_powers());
    let dither_power: f64 = chain.achieved_powers().iter().sum();
    Ok(NoiseStats {
        trials,
        variance,
        stderr: (var / count).sqrt(),
        bound: total / (total + 1.0),
        predicted: (1.0 - alpha).powi(2) * dither_power + alpha * alpha * cfg.noise_variance,
    })
}

/// Uniformity of `T` over `C_1` and homogeneity of the binned per-dimension
/// energy of `Z̃` across the values of `T`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndependenceReport {
    pub trials: usize,
    pub cells: usize,
    pub uniformity: TestResult,
    /// Absent when fewer than two values of `T` or energy bins were observed.
    pub independence: Option<TestResult>,
}

pub fn test_t_independence(chain: &LatticeChain, cfg: &MacConfig, trials: usize, seed: u64) -> Result<IndependenceReport> {
    cfg.validate(chain)?;
    let cells = chain.leader_count(0);
    if cells < 2 {
        return Err(Error::InsufficientSamples("C_1 has a single leader".into()));
    }
    if (trials as u64) < MIN_SAMPLES_PER_LEADER as u64 * cells {
        return Err(Error::InsufficientSamples(format!(
            "{trials} trials give fewer than {MIN_SAMPLES_PER_LEADER} samples for each of {cells} leaders"
        )));
    }
    let n = chain.dimension() as f64;
    let samples = (0..trials)
        .into_par_iter()
        .map(|t| {
            let tr = mac_trial(chain, cfg, &mut trial_rng(seed, t))?;
            Ok((tr.t_index, tr.effective_noise.iter().map(|z| z * z).sum::<f64>() / n))
        })
        .collect::<Result<Vec<(u64, f64)>>>()?;
    let mut counts = vec![0u64; cells as usize];
    for &(t, _) in &samples {
        counts[t as usize] += 1;
    }
    let uniformity = chi_square_uniform(&counts)?;
    let mut sorted: Vec<f64> = samples.iter().map(|s| s.1).collect();
    sorted.sort_by(f64::total_cmp);
    let edges: Vec<f64> = (1..ENERGY_BINS).map(|q| sorted[q * sorted.len() / ENERGY_BINS]).collect();
    let mut table = vec![vec![0u64; ENERGY_BINS]; cells as usize];
    for &(t, e) in &samples {
        let bin = edges.iter().filter(|&&b| e >= b).count();
        table[t as usize][bin] += 1;
    }
    let independence = match contingency_test(&table) {
        Ok(r) => Some(r),
        Err(Error::InsufficientSamples(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(IndependenceReport {
        trials,
        cells: cells as usize,
        uniformity,
        independence,
    })
}

/// Two-sample test that the first coordinate of `X_i = (W + U_i) mod Λ_i`
/// has the same law for two messages.
pub fn encode_independence(chain: &LatticeChain, level: usize, messages: (u64, u64), samples: usize, seed: u64) -> Result<TestResult> {
    let draw = |msg: u64, branch: u64| -> Result<Vec<f64>> {
        let mut rng = stream(seed, &[tag::DITHER, level as u64, branch]);
        (0..samples)
            .map(|_| {
                let u = chain.sample_dither(level, &mut rng);
                Ok(chain.encode(level, msg, &u)?[0])
            })
            .collect()
    };
    ks_two_sample(&draw(messages.0, 0)?, &draw(messages.1, 1)?)
}

/// Empirical `Pr{T(W) = T(W')}` when exactly the users in `pattern` see
/// independent uniform leaders under `W` and `W'`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollisionEstimate {
    /// Bit `i` set when user `i + 1` distinguishes the two messages.
    pub pattern: u64,
    pub draws: usize,
    pub probability: f64,
    pub stderr: f64,
    /// `2^{−n max_{i∈A} R_i}`, and `1` for the empty pattern.
    pub bound: f64,
}

pub const MAX_PATTERN_USERS: usize = 16;

pub fn distinguishability_prob(chain: &LatticeChain, pattern: u64, draws: usize, seed: u64) -> Result<CollisionEstimate> {
    let k = chain.user_count();
    if k > MAX_PATTERN_USERS {
        return Err(Error::guard("pattern users", k as f64, MAX_PATTERN_USERS as f64));
    }
    if pattern >> k != 0 {
        return Err(Error::arg("pattern", format!("bits beyond {k} users")));
    }
    if draws == 0 {
        return Err(Error::InsufficientSamples("no draws".into()));
    }
    let hits: u64 = (0..draws)
        .into_par_iter()
        .map(|t| -> Result<u64> {
            let mut rng = stream(seed, &[tag::MAPPING, pattern, t as u64]);
            let mut w = Vec::with_capacity(k);
            let mut w2 = Vec::with_capacity(k);
            let mut u = Vec::with_capacity(k);
            for i in 0..k {
                let a = rng.random_range(0..chain.leader_count(i));
                let b = if pattern >> i & 1 == 1 { rng.random_range(0..chain.leader_count(i)) } else { a };
                w.push(chain.leader(i, a)?);
                w2.push(chain.leader(i, b)?);
                u.push(chain.sample_dither(i, &mut rng));
            }
            let t1 = chain.coset_index(0, &compute_t(chain, &w, &u)?)?;
            let t2 = chain.coset_index(0, &compute_t(chain, &w2, &u)?)?;
            Ok((t1 == t2) as u64)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum();
    let probability = hits as f64 / draws as f64;
    let n = chain.dimension() as f64;
    let bound = (0..k)
        .filter(|i| pattern >> i & 1 == 1)
        .map(|i| chain.rate(i))
        .fold(None, |m: Option<f64>, r| Some(m.map_or(r, |m| m.max(r))))
        .map_or(1.0, |r| 2f64.powf(-n * r));
    Ok(CollisionEstimate {
        pattern,
        draws,
        probability,
        stderr: binomial_stderr(probability, draws as u64),
        bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Preset;
    use crate::nested::{build_chain, CodeSpec, ShapingBase};

    fn scalar_chain(powers: &[f64], p: u32) -> LatticeChain {
        let code = CodeSpec::from_generator(p, 1, vec![vec![1]]).unwrap();
        build_chain(ShapingBase::preset(Preset::Zn(1)).unwrap(), powers, code, f64::INFINITY).unwrap()
    }

    /// Λ_1 = 6Z, Λ_2 = 3Z, Λ_C = Z.
    fn six_three_chain() -> LatticeChain {
        scalar_chain(&[3.0, 0.75], 3)
    }

    fn wrap(x: f64, m: f64) -> f64 {
        // Voronoi cell (−m/2, m/2]
        x - m * (x / m - 0.5).ceil()
    }

    #[test]
    fn six_three_chain_shape() {
        let c = six_three_chain();
        assert_eq!(c.multipliers(), &[2, 1]);
        assert!((c.shaping(0).volume() - 6.0).abs() < 1e-9);
        assert!((c.code_lattice().volume() - 1.0).abs() < 1e-9);
        assert_eq!(c.leader_count(0), 6);
        assert_eq!(c.leader_count(1), 3);
    }

    #[test]
    fn single_user_t_is_the_message() {
        let c = scalar_chain(&[3.0], 3);
        let w = vec![c.leader(0, 2).unwrap()];
        let u = vec![vec![0.7]];
        assert_eq!(compute_t(&c, &w, &u).unwrap(), w[0]);
    }

    #[test]
    fn zero_dither_inside_voronoi_gives_plain_sum() {
        let c = six_three_chain();
        let w = vec![vec![2.0], vec![1.0]];
        let t = compute_t(&c, &w, &[vec![0.0], vec![0.0]]).unwrap();
        assert!((t[0] - wrap(3.0, 6.0)).abs() < 1e-12);
    }

    #[test]
    fn scalar_t_matches_hand_computation() {
        let c = six_three_chain();
        let mut rng = stream(5, &[]);
        for _ in 0..500 {
            let a = rng.random_range(0..6);
            let b = rng.random_range(0..3);
            let w1 = c.leader(0, a).unwrap()[0];
            let w2 = c.leader(1, b).unwrap()[0];
            let u2: f64 = rng.random_range(-1.5..1.5);
            let q2 = 3.0 * ((w2 + u2) / 3.0 - 0.5).ceil();
            let expect = wrap(w1 + w2 - q2, 6.0);
            let t = compute_t(&c, &[vec![w1], vec![w2]], &[vec![0.1], vec![u2]]).unwrap();
            assert!((t[0] - expect).abs() < 1e-9, "{w1} {w2} {u2}");
        }
    }

    #[test]
    fn trial_identities_hold() {
        let c = six_three_chain();
        let cfg = MacConfig::default();
        let mut rng = stream(2, &[]);
        for _ in 0..200 {
            let tr = mac_trial(&c, &cfg, &mut rng).unwrap();
            assert!(tr.t_index < c.leader_count(0));
            assert!(c.code_lattice().contains(&tr.t_true).unwrap());
            let sum: Vec<f64> = tr.t_true.iter().zip(&tr.effective_noise).map(|(a, b)| a + b).collect();
            let diff: Vec<f64> = sum.iter().zip(&tr.processed).map(|(a, b)| a - b).collect();
            assert!(c.shaping(0).contains(&diff).unwrap());
            let lam = c.shaping(0).point(&[4]);
            let moved: Vec<f64> = tr.processed.iter().zip(&lam).map(|(a, b)| a + b).collect();
            assert_eq!(c.decode_index(0, &moved).unwrap(), tr.t_decoded);
        }
    }

    #[test]
    fn noiseless_unscaled_channel_is_exact() {
        let code = CodeSpec::random(5, 4, 2, 3).unwrap();
        let c = build_chain(ShapingBase::preset(Preset::D4).unwrap(), &[15.0, 15.0], code, 1.0).unwrap();
        let cfg = MacConfig {
            noise_variance: 0.0,
            alpha: Some(1.0),
            fixed_messages: None,
        };
        let r = simulate_mac(&c, &cfg, 2000, 1).unwrap();
        assert_eq!(r.errors, 0);
    }

    #[test]
    fn simulation_is_deterministic() {
        let c = six_three_chain();
        let cfg = MacConfig::default();
        assert_eq!(simulate_mac(&c, &cfg, 1000, 4).unwrap(), simulate_mac(&c, &cfg, 1000, 4).unwrap());
        assert!(simulate_mac(&c, &cfg, 10, 4).is_err());
    }

    #[test]
    fn over_rate_single_user_fails_often() {
        // R* = 2 at P = 15; (3/4) log2 11 ≈ 2.59 lies 0.59 bits above
        let code = CodeSpec::random(11, 4, 3, 0).unwrap();
        let base = ShapingBase::preset(Preset::Zn(4)).unwrap();
        let c = build_chain(base, &[15.0], code, 1.0).unwrap();
        assert!(c.rate(0) > 2.5);
        let r = simulate_mac(&c, &MacConfig::default(), 2000, 3).unwrap();
        assert!(r.error_rate > 0.2, "{r:?}");
        assert_eq!(r.bound, 1.0);
    }

    #[test]
    fn effective_noise_variance_oracles() {
        let c = scalar_chain(&[15.0], 3);
        let s = effective_noise_stats(&c, &MacConfig::default(), 20_000, 1).unwrap();
        assert!((s.bound - 15.0 / 16.0).abs() < 1e-12);
        assert!(s.variance <= s.bound + 3.0 * s.stderr);
        assert!((s.variance - s.predicted).abs() < 3.0 * s.stderr, "{s:?}");
        let one = MacConfig {
            alpha: Some(1.0),
            ..MacConfig::default()
        };
        let s = effective_noise_stats(&c, &one, 20_000, 1).unwrap();
        assert!((s.variance - 1.0).abs() < 3.0 * s.stderr);
        let zero = MacConfig {
            alpha: Some(0.0),
            ..MacConfig::default()
        };
        let c2 = six_three_chain();
        let s = effective_noise_stats(&c2, &zero, 20_000, 1).unwrap();
        let dithers: f64 = c2.achieved_powers().iter().sum();
        assert!((s.variance - dithers).abs() < 3.0 * s.stderr, "{s:?}");
    }

    #[test]
    fn t_is_uniform_and_fixed_message_is_not() {
        let c = six_three_chain();
        let r = test_t_independence(&c, &MacConfig::default(), 10_000, 8).unwrap();
        assert!(r.uniformity.p_value > 1e-3, "{r:?}");
        assert!(r.independence.unwrap().p_value > 1e-3, "{r:?}");
        let single = scalar_chain(&[3.0], 3);
        let fixed = MacConfig {
            fixed_messages: Some(vec![1]),
            ..MacConfig::default()
        };
        let e = test_t_independence(&single, &fixed, 10_000, 8).unwrap();
        assert!(e.uniformity.p_value < 1e-3);
        assert!(e.independence.is_none());
        assert!(test_t_independence(&c, &MacConfig::default(), 100, 8).is_err());
    }

    #[test]
    fn encoder_output_ignores_message() {
        let c = six_three_chain();
        assert!(encode_independence(&c, 0, (0, 5), 4000, 2).unwrap().p_value > 1e-3);
    }

    #[test]
    fn collision_probabilities_follow_coarsest_distinguishing_user() {
        let c = six_three_chain();
        let empty = distinguishability_prob(&c, 0, 2000, 1).unwrap();
        assert_eq!(empty.probability, 1.0);
        assert_eq!(empty.bound, 1.0);
        let first = distinguishability_prob(&c, 0b01, 40_000, 1).unwrap();
        assert!((first.probability - 1.0 / 6.0).abs() < 4.0 * first.stderr, "{first:?}");
        assert!((first.bound - 1.0 / 6.0).abs() < 1e-12);
        let second = distinguishability_prob(&c, 0b10, 40_000, 1).unwrap();
        assert!((second.bound - 1.0 / 3.0).abs() < 1e-12);
        assert!(second.probability <= second.bound + 3.0 * second.stderr);
        let both = distinguishability_prob(&c, 0b11, 40_000, 1).unwrap();
        assert!(both.probability <= both.bound + 3.0 * both.stderr);
        assert!(distinguishability_prob(&c, 0b100, 10, 1).is_err());
    }
}
