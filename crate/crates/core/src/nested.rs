//! Nested lattice chains `Λ_1 ⊆ … ⊆ Λ_K ⊆ Λ_C` built from one base lattice.
//!
//! The shaping lattices are integer multiples `Λ_i = m_i Λ_K` of
//! `Λ_K = a_K Λ_base`, and the coding lattice is the Construction-A lattice
//! `Λ_C = (a_K/p) {x G_base : x ∈ Z^n, x mod p ∈ C}` of a linear `[n, k]`
//! code `C` over `F_p`. Coset leaders `C_i = Λ_C mod Λ_i` are indexed by the
//! code message and the `Λ_K`-coset offset, without enumeration.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::finite_field::PrimeField;
use crate::lattice::{second_moment, Lattice, LatticeSpec, Preset};
use crate::rng::{stream, tag};

/// Explicit coset-leader enumeration is limited to this many leaders.
pub const MAX_LEADER_ENUMERATION: u64 = 1 << 20;

/// Coset indices must fit comfortably in 64 bits.
const MAX_LEADER_COUNT: f64 = 9.0e15;

const RANK_RETRIES: usize = 64;

/// A base lattice together with its per-dimension second moment.
#[derive(Debug, Clone)]
pub struct ShapingBase {
    pub lattice: Lattice,
    pub second_moment: f64,
}

impl ShapingBase {
    /// A preset with its closed-form second moment `G · Vol^{2/n}`.
    pub fn preset(preset: Preset) -> Result<Self> {
        let lattice = preset.lattice()?;
        let n = lattice.dimension() as f64;
        let second_moment = preset.reference_nsm() * lattice.volume().powf(2.0 / n);
        Ok(ShapingBase {
            lattice,
            second_moment,
        })
    }

    /// Any lattice, with a Monte Carlo second moment.
    pub fn estimated(lattice: Lattice, samples: usize, seed: u64) -> Result<Self> {
        let second_moment = second_moment(&lattice, samples, seed)?.value;
        Ok(ShapingBase {
            lattice,
            second_moment,
        })
    }
}

/// Construction-A code data: reduced row echelon generator and pivot columns.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeSpec {
    pub p: u32,
    pub rows: Vec<Vec<u32>>,
    pub pivots: Vec<usize>,
}

impl CodeSpec {
    /// Row-reduces a `k × n` generator of full row rank.
    pub fn from_generator(p: u32, n: usize, rows: Vec<Vec<u32>>) -> Result<Self> {
        let field = PrimeField::new(p)?;
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::arg("code", format!("rows must have length {n}")));
        }
        let reduced: Vec<Vec<u32>> = rows.iter().map(|r| r.iter().map(|&x| x % p).collect()).collect();
        let (rref, pivots) = field.row_echelon(&reduced);
        if pivots.len() != rows.len() {
            return Err(Error::arg("code", "generator does not have full row rank"));
        }
        Ok(CodeSpec {
            p,
            rows: rref,
            pivots,
        })
    }

    /// Uniformly random full-rank `k × n` generator from the stream `(seed, code)`.
    pub fn random(p: u32, n: usize, k: usize, seed: u64) -> Result<Self> {
        PrimeField::new(p)?;
        if k > n {
            return Err(Error::arg("k", format!("code dimension {k} exceeds {n}")));
        }
        let mut rng = stream(seed, &[tag::CODE, p as u64, n as u64, k as u64]);
        for _ in 0..RANK_RETRIES {
            let rows: Vec<Vec<u32>> = (0..k).map(|_| (0..n).map(|_| rng.random_range(0..p)).collect()).collect();
            if let Ok(code) = Self::from_generator(p, n, rows) {
                return Ok(code);
            }
        }
        Err(Error::arg("code", "no full-rank generator found after retries"))
    }

    pub fn dimension(&self) -> usize {
        self.rows.len()
    }

    /// Codeword of message `m`, lifted to `[0, p)`.
    fn codeword(&self, field: PrimeField, m: &[u32], n: usize) -> Vec<i64> {
        let mut c = vec![0u32; n];
        for (row, &mi) in self.rows.iter().zip(m) {
            for (cj, &r) in c.iter_mut().zip(row) {
                *cj = field.add(*cj, field.mul(mi, r));
            }
        }
        c.into_iter().map(i64::from).collect()
    }
}

#[derive(Debug, Clone)]
pub struct LatticeChain {
    base: ShapingBase,
    field: PrimeField,
    code: CodeSpec,
    scale: f64,
    multipliers: Vec<u64>,
    shaping: Vec<Lattice>,
    code_lattice: Lattice,
    target_powers: Vec<f64>,
    achieved_powers: Vec<f64>,
    leader_counts: Vec<u64>,
}

/// Power matching outcome per level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelReport {
    pub level: usize,
    pub multiplier: u64,
    pub target_power: f64,
    pub achieved_power: f64,
    pub rate: f64,
    pub rate_target: f64,
    pub leader_count: u64,
    /// `R_i − R_K − ½ log2(P_i / P_K)`.
    pub ladder_slack: f64,
}

/// Largest `a ≤ √(p / s)` with `a² s ≤ p` in floating point.
fn scale_for(power: f64, second_moment: f64) -> f64 {
    let mut a = (power / second_moment).sqrt();
    while a * a * second_moment > power {
        a = f64::from_bits(a.to_bits() - 1);
    }
    a
}

/// Builds the chain for powers `P_1 ≥ … ≥ P_K > 0`.
///
/// `Λ_K` matches `P_K` from below; each coarser level takes the largest
/// multiple `m_i` of `m_{i+1}` with `m_i² σ²(Λ_K) ≤ P_i`, which keeps the
/// chain nested. A level whose power falls outside `[P_i − δ, P_i]` is an
/// error that reports the nearest achievable power.
pub fn build_chain(base: ShapingBase, powers: &[f64], code: CodeSpec, tolerance: f64) -> Result<LatticeChain> {
    let n = base.lattice.dimension();
    if powers.is_empty() {
        return Err(Error::arg("powers", "need at least one user"));
    }
    if powers.iter().any(|&p| !(p > 0.0 && p.is_finite())) {
        return Err(Error::arg("powers", "must be positive and finite"));
    }
    if powers.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::arg("powers", "must be sorted descending"));
    }
    if !(tolerance >= 0.0) {
        return Err(Error::arg("tolerance", "must be nonnegative"));
    }
    if code.rows.iter().any(|r| r.len() != n) {
        return Err(Error::arg("code", format!("code length differs from lattice dimension {n}")));
    }
    let field = PrimeField::new(code.p)?;
    let k_users = powers.len();
    let p_k = powers[k_users - 1];
    let scale = scale_for(p_k, base.second_moment);
    let sigma_k = scale * scale * base.second_moment;
    let mut multipliers = vec![1u64; k_users];
    for i in (0..k_users - 1).rev() {
        let step = (powers[i] / (sigma_k * (multipliers[i + 1] as f64).powi(2))).sqrt().floor().max(1.0);
        multipliers[i] = multipliers[i + 1] * step as u64;
    }
    let achieved_powers: Vec<f64> =
        multipliers.iter().map(|&m| (m * m) as f64 * sigma_k).collect();
    for (i, (&target, &achieved)) in powers.iter().zip(&achieved_powers).enumerate() {
        if achieved > target || achieved < target - tolerance {
            return Err(Error::InfeasibleTolerance {
                level: i + 1,
                target,
                achievable: achieved,
            });
        }
    }
    let coarsest = base.lattice.scaled(scale)?;
    let shaping = multipliers
        .iter()
        .map(|&m| coarsest.scaled(m as f64))
        .collect::<Result<Vec<_>>>()?;
    let mut integer_basis = vec![vec![0.0; n]; n];
    let mut next = 0;
    for row in &code.rows {
        integer_basis[next] = row.iter().map(|&x| x as f64).collect();
        next += 1;
    }
    for j in (0..n).filter(|j| !code.pivots.contains(j)) {
        integer_basis[next][j] = code.p as f64;
        next += 1;
    }
    let g = base.lattice.generator();
    let step = scale / code.p as f64;
    let code_rows: Vec<Vec<f64>> = integer_basis
        .iter()
        .map(|x| (0..n).map(|j| step * (0..n).map(|i| x[i] * g[(i, j)]).sum::<f64>()).collect())
        .collect();
    let code_lattice = Lattice::new(code_rows)?;
    let mut leader_counts = Vec::with_capacity(k_users);
    for &m in &multipliers {
        let count = (code.p as f64).powi(code.dimension() as i32) * (m as f64).powi(n as i32);
        if count > MAX_LEADER_COUNT {
            return Err(Error::guard("coset leader count", count, MAX_LEADER_COUNT));
        }
        leader_counts.push((code.p as u64).pow(code.dimension() as u32) * m.pow(n as u32));
    }
    Ok(LatticeChain {
        base,
        field,
        code,
        scale,
        multipliers,
        shaping,
        code_lattice,
        target_powers: powers.to_vec(),
        achieved_powers,
        leader_counts,
    })
}

/// `R_i* = [½ log2(P_i / ΣP_j + P_i)]^+` for powers sorted descending.
pub fn rate_targets(powers: &[f64]) -> Result<Vec<f64>> {
    if powers.iter().any(|&p| !(p >= 0.0 && p.is_finite())) {
        return Err(Error::arg("powers", "must be nonnegative and finite"));
    }
    if powers.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::arg("powers", "must be sorted descending"));
    }
    let total: f64 = powers.iter().sum();
    if total <= 0.0 {
        return Err(Error::arg("powers", "all powers are zero"));
    }
    Ok(powers
        .iter()
        .map(|&p| if p > 0.0 { (0.5 * (p / total + p).log2()).max(0.0) } else { 0.0 })
        .collect())
}

/// The Construction-A rate grid point `(k/n) log2 p` closest to `target` from
/// below, over primes `p ≤ max_prime` and `1 ≤ k ≤ n`. Returns `(p, k, rate)`.
pub fn rate_grid_below(n: usize, target: f64, max_prime: u32) -> Option<(u32, usize, f64)> {
    let mut best: Option<(u32, usize, f64)> = None;
    for p in (2..=max_prime).filter(|&p| crate::finite_field::is_prime(p)) {
        for k in 1..=n {
            let rate = k as f64 / n as f64 * (p as f64).log2();
            if rate <= target && best.is_none_or(|(_, _, b)| rate > b) {
                best = Some((p, k, rate));
            }
        }
    }
    best
}

/// Coset leaders of one level in index order.
#[derive(Debug, Clone, PartialEq)]
pub struct CosetLeaderSet {
    pub level: usize,
    pub leaders: Vec<Vec<f64>>,
}

impl LatticeChain {
    pub fn user_count(&self) -> usize {
        self.shaping.len()
    }

    pub fn dimension(&self) -> usize {
        self.base.lattice.dimension()
    }

    pub fn base(&self) -> &ShapingBase {
        &self.base
    }

    pub fn code(&self) -> &CodeSpec {
        &self.code
    }

    /// `a_K` with `Λ_K = a_K Λ_base`.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn multipliers(&self) -> &[u64] {
        &self.multipliers
    }

    /// Shaping lattice of level `i` (0-based; level 0 is the coarsest `Λ_1`).
    pub fn shaping(&self, i: usize) -> &Lattice {
        &self.shaping[i]
    }

    pub fn code_lattice(&self) -> &Lattice {
        &self.code_lattice
    }

    pub fn target_powers(&self) -> &[f64] {
        &self.target_powers
    }

    /// `σ²(Λ_i)` per level.
    pub fn achieved_powers(&self) -> &[f64] {
        &self.achieved_powers
    }

    /// `|C_i| = p^k m_i^n`.
    pub fn leader_count(&self, i: usize) -> u64 {
        self.leader_counts[i]
    }

    /// `R_i = (1/n) log2 |C_i|`.
    pub fn rate(&self, i: usize) -> f64 {
        let n = self.dimension() as f64;
        self.code.dimension() as f64 / n * (self.code.p as f64).log2() + (self.multipliers[i] as f64).log2()
    }

    pub fn rates(&self) -> Vec<f64> {
        (0..self.user_count()).map(|i| self.rate(i)).collect()
    }

    /// `ρ_i = (Vol(Λ_i)/Vol(Λ_C))^{1/n}`.
    pub fn partitioning_ratio(&self, i: usize) -> f64 {
        (self.shaping[i].volume() / self.code_lattice.volume()).powf(1.0 / self.dimension() as f64)
    }

    pub fn report(&self) -> Result<Vec<LevelReport>> {
        let targets = rate_targets(&self.target_powers)?;
        let last = self.user_count() - 1;
        Ok((0..self.user_count())
            .map(|i| LevelReport {
                level: i + 1,
                multiplier: self.multipliers[i],
                target_power: self.target_powers[i],
                achieved_power: self.achieved_powers[i],
                rate: self.rate(i),
                rate_target: targets[i],
                leader_count: self.leader_counts[i],
                ladder_slack: self.rate(i)
                    - self.rate(last)
                    - 0.5 * (self.target_powers[i] / self.target_powers[last]).log2(),
            })
            .collect())
    }

    /// Checks that every basis vector of `Λ_i` lies in `Λ_{i+1}` and in `Λ_C`.
    pub fn verify_nesting(&self) -> Result<bool> {
        for (i, lat) in self.shaping.iter().enumerate() {
            for row in lat.basis_rows() {
                if let Some(finer) = self.shaping.get(i + 1) {
                    if !finer.contains(&row)? {
                        return Ok(false);
                    }
                }
                if !self.code_lattice.contains(&row)? {
                    return Ok(false);
                }
            }
        }
        for row in self.code_lattice.basis_rows() {
            // Λ_C must not be coarser than Λ_K: p times every code vector is in Λ_K
            let scaled: Vec<f64> = row.iter().map(|x| x * self.code.p as f64).collect();
            if !self.shaping[self.user_count() - 1].contains(&scaled)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn check_level(&self, i: usize) -> Result<()> {
        if i >= self.user_count() {
            return Err(Error::arg("level", format!("level {} out of 1..={}", i + 1, self.user_count())));
        }
        Ok(())
    }

    /// Integer Construction-A coordinates `x` with `y = (a_K/p) x G_base`.
    fn integer_coordinates(&self, y: &[f64]) -> Result<Vec<i64>> {
        let c = self.base.lattice.coordinates(y);
        let factor = self.code.p as f64 / self.scale;
        let x: Vec<f64> = c.iter().map(|v| v * factor).collect();
        if x.iter().any(|v| (v - v.round()).abs() > 1e-6 * v.abs().max(1.0)) {
            return Err(Error::arg("point", "not a point of the coding lattice"));
        }
        Ok(x.iter().map(|v| v.round() as i64).collect())
    }

    /// Canonical index in `[0, |C_i|)` of the coset `y + Λ_i` for `y ∈ Λ_C`.
    ///
    /// The index is `msg + p^k · off`, where `msg` is the code message (read at
    /// the pivot columns, base-`p` little-endian) and `off` is the offset of
    /// `(x − lift(codeword))/p` modulo `m_i`, base-`m_i` little-endian.
    pub fn coset_index(&self, i: usize, y: &[f64]) -> Result<u64> {
        self.check_level(i)?;
        let n = self.dimension();
        if y.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: y.len(),
            });
        }
        let x = self.integer_coordinates(y)?;
        let p = self.code.p as i64;
        let msg: Vec<u32> = self.code.pivots.iter().map(|&j| x[j].rem_euclid(p) as u32).collect();
        let word = self.code.codeword(self.field, &msg, n);
        let m = self.multipliers[i] as i64;
        let mut offset = 0u64;
        for j in (0..n).rev() {
            let diff = x[j] - word[j];
            if diff.rem_euclid(p) != 0 {
                return Err(Error::arg("point", "not a point of the coding lattice"));
            }
            offset = offset * m as u64 + (diff / p).rem_euclid(m) as u64;
        }
        let msg_count = (self.code.p as u64).pow(self.code.dimension() as u32);
        Ok(self.field.index_of(&msg) + msg_count * offset)
    }

    /// The coset leader with the given index, reduced into the Voronoi region of `Λ_i`.
    pub fn leader(&self, i: usize, index: u64) -> Result<Vec<f64>> {
        self.check_level(i)?;
        if index >= self.leader_counts[i] {
            return Err(Error::arg(
                "message_index",
                format!("{index} out of range for {} leaders", self.leader_counts[i]),
            ));
        }
        let n = self.dimension();
        let msg_count = (self.code.p as u64).pow(self.code.dimension() as u32);
        let msg = self.field.digits(index % msg_count, self.code.dimension());
        let word = self.code.codeword(self.field, &msg, n);
        let m = self.multipliers[i];
        let mut rest = index / msg_count;
        let p = self.code.p as i64;
        let x: Vec<f64> = word
            .iter()
            .map(|&w| {
                let off = (rest % m) as i64;
                rest /= m;
                (w + p * off) as f64
            })
            .collect();
        let g = self.base.lattice.generator();
        let step = self.scale / self.code.p as f64;
        let point: Vec<f64> = (0..n).map(|j| step * (0..n).map(|t| x[t] * g[(t, j)]).sum::<f64>()).collect();
        self.shaping[i].mod_lattice(&point)
    }

    /// All leaders of level `i` in index order.
    pub fn coset_leaders(&self, i: usize) -> Result<CosetLeaderSet> {
        self.check_level(i)?;
        let count = self.leader_counts[i];
        if count > MAX_LEADER_ENUMERATION {
            return Err(Error::guard(
                "coset leader enumeration",
                count as f64,
                MAX_LEADER_ENUMERATION as f64,
            ));
        }
        Ok(CosetLeaderSet {
            level: i + 1,
            leaders: (0..count).map(|t| self.leader(i, t)).collect::<Result<_>>()?,
        })
    }

    /// `Q_C(y) mod Λ_i` as a canonical leader index.
    pub fn decode_index(&self, i: usize, y: &[f64]) -> Result<u64> {
        let q = self.code_lattice.nearest_point(y)?;
        self.coset_index(i, &q)
    }

    /// `X_i = (leader + U_i) mod Λ_i`.
    pub fn encode(&self, i: usize, message_index: u64, dither: &[f64]) -> Result<Vec<f64>> {
        let w = self.leader(i, message_index)?;
        if dither.len() != w.len() {
            return Err(Error::DimensionMismatch {
                expected: w.len(),
                actual: dither.len(),
            });
        }
        if self.shaping[i].nearest_coefficients(dither)?.iter().any(|&c| c != 0) {
            return Err(Error::arg("dither", "outside the Voronoi region of the shaping lattice"));
        }
        let sum: Vec<f64> = w.iter().zip(dither).map(|(a, b)| a + b).collect();
        self.shaping[i].mod_lattice(&sum)
    }

    /// A dither uniform over the Voronoi region of `Λ_i`.
    pub fn sample_dither<R: Rng + ?Sized>(&self, i: usize, rng: &mut R) -> Vec<f64> {
        self.shaping[i].sample_voronoi(rng)
    }
}

/// Chain description file.
///
/// ```json
/// {"base": {"preset": "Zn", "dimension": 2}, "powers": [12.0], "p": 3, "k": 1,
///  "tolerance": 1e-9, "seed": 0}
/// ```
///
/// `code` optionally fixes the `k × n` generator instead of drawing it from `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainConfig {
    pub base: LatticeSpec,
    pub powers: Vec<f64>,
    pub p: u32,
    pub k: usize,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub code: Option<Vec<Vec<u32>>>,
    /// Monte Carlo samples for the second moment of a non-preset base.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub moment_samples: Option<usize>,
}

fn default_tolerance() -> f64 {
    1e-9
}

const DEFAULT_MOMENT_SAMPLES: usize = 1_000_000;

impl ChainConfig {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| {
            let msg = e.to_string();
            let field = msg
                .split('`')
                .nth(1)
                .map_or_else(|| "chain".to_string(), str::to_string);
            Error::schema(field, msg)
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("chain config serializes")
    }

    pub fn build(&self) -> Result<LatticeChain> {
        let lattice = self.base.build()?;
        let n = lattice.dimension();
        let preset = match (&self.base.preset, self.base.scale) {
            (Some(name), None) => Some(Preset::parse(name, self.base.dimension)?),
            _ => None,
        };
        let base = match preset {
            Some(p) => ShapingBase::preset(p)?,
            None => ShapingBase::estimated(
                lattice,
                self.moment_samples.unwrap_or(DEFAULT_MOMENT_SAMPLES),
                self.seed,
            )?,
        };
        if self.k > n {
            return Err(Error::schema("k", format!("code dimension {} exceeds {n}", self.k)));
        }
        let code = match &self.code {
            Some(rows) => {
                if rows.len() != self.k {
                    return Err(Error::schema("code", format!("expected {} rows", self.k)));
                }
                CodeSpec::from_generator(self.p, n, rows.clone())?
            }
            None => CodeSpec::random(self.p, n, self.k, self.seed)?,
        };
        build_chain(base, &self.powers, code, self.tolerance)
    }
}
