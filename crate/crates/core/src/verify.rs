//! Seeded property suites over random instances: bound sandwiches, cut
//! inequalities, lattice geometry, chain construction, MAC simulation,
//! collision probabilities and finite-field codes.

use std::collections::BTreeMap;
use std::fmt;

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::finite_field::{dmc_capacity, ff_capacity, LinearCode, SymmetricDmc};
use crate::lattice::{second_moment, Lattice, Preset};
use crate::mac_sim::{
    distinguishability_prob, effective_noise_stats, encode_independence, simulate_mac, test_t_independence, MacConfig,
};
use crate::nested::{build_chain, rate_grid_below, rate_targets, CodeSpec, LatticeChain, ShapingBase};
use crate::net_sim::{run_network, trace_trial, FiniteFieldScheme, SimConfig};
use crate::network::{cut_member_sets, time_expand, RelayNetwork, TimeExpandedNetwork, VertexSet};
use crate::rate_bounds::{
    mac_term_gap, min_difference_bound, rate_report, steady_cut_min, te_mincut, te_mincut_bracket, te_mincut_loop_bound, verify_submodular_chain, xi,
    EdgeRates,
};
use crate::rng::{stream, tag, StreamRng};

/// Tolerance of the bound sandwich.
pub const GAP_TOL: f64 = 1e-9;
/// Tolerance of exact equalities between bounds.
pub const EQUALITY_TOL: f64 = 1e-12;
/// Significance level of the statistical checks.
pub const ALPHA: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Suite {
    Gap,
    SingleInDegree,
    MacTerms,
    Submodular,
    TeMincut,
    Lattice,
    Chain,
    Crypto,
    Mac,
    Collision,
    FiniteField,
}

impl Suite {
    pub const ALL: [Suite; 11] = [
        Suite::Gap,
        Suite::SingleInDegree,
        Suite::MacTerms,
        Suite::Submodular,
        Suite::TeMincut,
        Suite::Lattice,
        Suite::Chain,
        Suite::Crypto,
        Suite::Mac,
        Suite::Collision,
        Suite::FiniteField,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Gap => "gap",
            Suite::SingleInDegree => "single-in-degree",
            Suite::MacTerms => "mac-terms",
            Suite::Submodular => "submodular",
            Suite::TeMincut => "te-mincut",
            Suite::Lattice => "lattice",
            Suite::Chain => "chain",
            Suite::Crypto => "crypto",
            Suite::Mac => "mac",
            Suite::Collision => "collision",
            Suite::FiniteField => "finite-field",
        }
    }

    pub fn parse(name: &str) -> Result<Vec<Suite>> {
        if name == "all" {
            return Ok(Suite::ALL.to_vec());
        }
        Suite::ALL
            .iter()
            .find(|s| s.name() == name)
            .map(|&s| vec![s])
            .ok_or_else(|| Error::arg("suite", format!("unknown suite `{name}`")))
    }

    /// Instance count used when none is given.
    pub fn default_count(self) -> usize {
        match self {
            Suite::Gap => 100,
            Suite::SingleInDegree => 20,
            Suite::MacTerms => 10_000,
            Suite::Submodular => 50,
            Suite::TeMincut => 20,
            Suite::Lattice => 10_000,
            Suite::Chain => 50,
            Suite::Crypto => 10_000,
            Suite::Mac => 10_000,
            Suite::Collision => 20_000,
            Suite::FiniteField => 1_000,
        }
    }

    pub fn run(self, count: usize, seed: u64) -> Result<SuiteReport> {
        let mut r = SuiteReport::new(self.name());
        let rng = &mut stream(seed, &[tag::VERIFY, self as u64]);
        match self {
            Suite::Gap => gap_suite(&mut r, count, rng)?,
            Suite::SingleInDegree => single_in_degree_suite(&mut r, count, rng)?,
            Suite::MacTerms => mac_term_suite(&mut r, count, rng)?,
            Suite::Submodular => submodular_suite(&mut r, count, rng)?,
            Suite::TeMincut => te_mincut_suite(&mut r, count, rng)?,
            Suite::Lattice => lattice_suite(&mut r, count, seed)?,
            Suite::Chain => chain_suite(&mut r, count, rng)?,
            Suite::Crypto => crypto_suite(&mut r, count, seed)?,
            Suite::Mac => mac_suite(&mut r, count, seed)?,
            Suite::Collision => collision_suite(&mut r, count, seed)?,
            Suite::FiniteField => finite_field_suite(&mut r, count, seed)?,
        }
        Ok(r)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Outcome of one suite: counted property cases plus named checks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub cases: u64,
    pub violations: u64,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    fn new(suite: &str) -> Self {
        SuiteReport {
            suite: suite.to_string(),
            cases: 0,
            violations: 0,
            checks: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0 && self.checks.iter().all(|c| c.passed)
    }

    fn case(&mut self, ok: bool) {
        self.cases += 1;
        self.violations += (!ok) as u64;
    }

    fn check(&mut self, name: &str, passed: bool, detail: String) {
        self.checks.push(Check {
            name: name.to_string(),
            passed,
            detail,
        });
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} cases={} violations={}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.suite,
            self.cases,
            self.violations
        )?;
        for c in &self.checks {
            write!(f, "\n  {} {}: {}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.detail)?;
        }
        Ok(())
    }
}

fn log_uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

/// Random single-destination Gaussian network on `vertices` vertices.
///
/// Destination is the last vertex. Every vertex gets an edge from some lower
/// vertex and every relay an edge to some higher one, so the network is valid;
/// relay-to-relay back edges appear with probability 0.1.
pub fn random_gaussian_network<R: Rng + ?Sized>(rng: &mut R, vertices: usize, lo: f64, hi: f64) -> Result<RelayNetwork> {
    if vertices < 2 {
        return Err(Error::arg("vertices", "need at least 2"));
    }
    let dest = vertices;
    let mut edges: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for v in 2..=vertices {
        for u in 1..v {
            if rng.random_bool(0.5) {
                edges.insert((u, v), 0.0);
            }
        }
        if !(1..v).any(|u| edges.contains_key(&(u, v))) {
            edges.insert((rng.random_range(1..v), v), 0.0);
        }
    }
    for u in 2..dest {
        if !(u + 1..=dest).any(|w| edges.contains_key(&(u, w))) {
            edges.insert((u, rng.random_range(u + 1..=dest)), 0.0);
        }
        for w in 2..u {
            if rng.random_bool(0.1) {
                edges.insert((u, w), 0.0);
            }
        }
    }
    let list: Vec<(usize, usize, f64)> = edges.keys().map(|&(u, v)| (u, v, log_uniform(rng, lo, hi))).collect();
    RelayNetwork::gaussian(vertices, &[dest], &list)
}

/// Random network where every vertex has exactly one incoming edge: a path
/// to a single destination, or a tree whose leaves are the destinations.
pub fn random_single_in_degree_network<R: Rng + ?Sized>(rng: &mut R, vertices: usize, lo: f64, hi: f64) -> Result<RelayNetwork> {
    if vertices < 2 {
        return Err(Error::arg("vertices", "need at least 2"));
    }
    let parent: Vec<usize> = if rng.random_bool(0.5) {
        (2..=vertices).map(|v| v - 1).collect()
    } else {
        (2..=vertices).map(|v| rng.random_range(1..v)).collect()
    };
    let leaves: Vec<usize> = (2..=vertices).filter(|v| !parent.contains(v)).collect();
    let list: Vec<(usize, usize, f64)> = parent
        .iter()
        .zip(2..)
        .map(|(&u, v)| (u, v, log_uniform(rng, lo, hi)))
        .collect();
    RelayNetwork::gaussian(vertices, &leaves, &list)
}

fn random_rates<R: Rng + ?Sized>(rng: &mut R, net: &RelayNetwork) -> Result<EdgeRates> {
    let rates = net.edges().iter().map(|&e| (e, rng.random_range(0.0..2.0))).collect();
    EdgeRates::new(net, &rates)
}

fn gap_suite(r: &mut SuiteReport, count: usize, rng: &mut StreamRng) -> Result<()> {
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..count {
        let v = rng.random_range(2..=8);
        let net = random_gaussian_network(rng, v, 0.1, 100.0)?;
        let rep = rate_report(&net)?;
        let diff = rep.upper_bound - rep.achievable;
        worst = worst.max((-diff).max(diff - rep.gap_bound));
        r.case(diff >= -GAP_TOL && diff <= rep.gap_bound + GAP_TOL);
    }
    r.check(
        "0 <= UB - Ach <= sum log2 |in(v)|",
        r.violations == 0,
        format!("worst excess {worst:.3e}"),
    );
    Ok(())
}

fn single_in_degree_suite(r: &mut SuiteReport, count: usize, rng: &mut StreamRng) -> Result<()> {
    let mut worst = 0.0f64;
    for _ in 0..count {
        let v = rng.random_range(2..=8);
        let net = random_single_in_degree_network(rng, v, 0.1, 100.0)?;
        let rep = rate_report(&net)?;
        let diff = (rep.upper_bound - rep.achievable).abs();
        worst = worst.max(diff);
        r.case(diff <= EQUALITY_TOL && rep.gap_bound == 0.0);
    }
    r.check("UB = Ach", r.violations == 0, format!("largest |UB - Ach| {worst:.3e}"));
    Ok(())
}

fn mac_term_suite(r: &mut SuiteReport, count: usize, rng: &mut StreamRng) -> Result<()> {
    let (mut gap_bad, mut diff_bad) = (0u64, 0u64);
    for _ in 0..count {
        let k = rng.random_range(1..=6);
        let mut powers: Vec<f64> = (0..k)
            .map(|_| if rng.random_bool(0.05) { 0.0 } else { log_uniform(rng, 1e-3, 1e3) })
            .collect();
        powers.sort_by(|a, b| b.total_cmp(a));
        let mask = rng.random_range(1..(1u32 << k));
        let subset: Vec<usize> = (0..k).filter(|j| mask >> j & 1 == 1).collect();
        let g = mac_term_gap(&powers, &subset)?;
        let ok_gap = g <= (k as f64).log2() + EQUALITY_TOL;
        let len = rng.random_range(1..=6);
        let a: Vec<f64> = (0..len).map(|_| rng.random_range(-10.0..10.0)).collect();
        let b: Vec<f64> = (0..len).map(|_| rng.random_range(-10.0..10.0)).collect();
        let (lhs, rhs) = min_difference_bound(&a, &b)?;
        let ok_diff = lhs <= rhs + EQUALITY_TOL;
        gap_bad += (!ok_gap) as u64;
        diff_bad += (!ok_diff) as u64;
        r.case(ok_gap && ok_diff);
    }
    r.check("MAC term gap <= log2 K", gap_bad == 0, format!("{gap_bad} violations"));
    r.check("min a - min b <= max (a - b)", diff_bad == 0, format!("{diff_bad} violations"));
    Ok(())
}

fn submodular_suite(r: &mut SuiteReport, count: usize, rng: &mut StreamRng) -> Result<()> {
    let (mut pairs, mut seqs) = (0u64, 0u64);
    let (mut pair_bad, mut seq_bad) = (0u64, 0u64);
    for _ in 0..count {
        let net = random_gaussian_network(rng, 4, 0.1, 100.0)?;
        let rates = random_rates(rng, &net)?;
        let cuts = cut_member_sets(&net)?;
        for &a in &cuts {
            for &b in &cuts {
                let c = verify_submodular_chain(&net, &[a, b], &rates)?;
                pairs += 1;
                pair_bad += (!c.holds) as u64;
                r.case(c.holds);
            }
        }
    }
    for _ in 0..count * 20 {
        let v = rng.random_range(3..=6);
        let net = random_gaussian_network(rng, v, 0.1, 100.0)?;
        let rates = random_rates(rng, &net)?;
        let cuts = cut_member_sets(&net)?;
        let seq: Vec<VertexSet> = (0..3).map(|_| *cuts.choose(rng).expect("cuts")).collect();
        let c = verify_submodular_chain(&net, &seq, &rates)?;
        seqs += 1;
        seq_bad += (!c.holds) as u64;
        r.case(c.holds);
    }
    r.check(
        "ordered cut pairs on |V| = 4",
        pair_bad == 0,
        format!("{pairs} pairs, {pair_bad} violations"),
    );
    r.check(
        "random length-3 cut sequences",
        seq_bad == 0,
        format!("{seqs} sequences, {seq_bad} violations"),
    );
    Ok(())
}

/// Cheapest sequence of `L + 1` cuts of a single-destination network, by enumeration.
pub fn te_mincut_exhaustive(net: &RelayNetwork, te: &TimeExpandedNetwork, rates: &EdgeRates) -> Result<f64> {
    if net.destinations().len() != 1 {
        return Err(Error::arg("network", "exhaustive search needs a single destination"));
    }
    let cuts = cut_member_sets(net)?;
    let layers = te.layer_count();
    let total = (cuts.len() as f64).powi(layers as i32);
    if total > 1e7 {
        return Err(Error::guard("cut sequences", total, 1e7));
    }
    let mut best = f64::INFINITY;
    let mut idx = vec![0usize; layers];
    loop {
        let cost: f64 = idx.windows(2).map(|w| xi(rates, cuts[w[0]], cuts[w[1]])).sum();
        best = best.min(cost);
        let mut t = 0;
        while t < layers {
            idx[t] += 1;
            if idx[t] < cuts.len() {
                break;
            }
            idx[t] = 0;
            t += 1;
        }
        if t == layers {
            return Ok(best);
        }
    }
}

fn te_mincut_suite(r: &mut SuiteReport, count: usize, rng: &mut StreamRng) -> Result<()> {
    let (mut dp_bad, mut bracket_bad, mut loop_bad) = (0u64, 0u64, 0u64);
    let mut worst = 0.0f64;
    for _ in 0..count {
        let net = random_gaussian_network(rng, 4, 0.1, 100.0)?;
        let rates = random_rates(rng, &net)?;
        for blocks in 1..=2 {
            // L = B + 2 ≤ 4
            let te = time_expand(&net, blocks)?;
            let dp = te_mincut(&te, &rates)?;
            let brute = te_mincut_exhaustive(&net, &te, &rates)?;
            let ok = (dp - brute).abs() <= GAP_TOL * brute.abs().max(1.0);
            dp_bad += (!ok) as u64;
            r.case(ok);
            let (lo, hi) = te_mincut_bracket(&net, &te, &rates)?;
            let ok = lo - GAP_TOL <= dp && dp <= hi + GAP_TOL;
            worst = worst.max(lo - dp);
            bracket_bad += (!ok) as u64;
            r.case(ok);
        }
        let v = rng.random_range(3..=5);
        let net = random_gaussian_network(rng, v, 0.1, 100.0)?;
        let rates = random_rates(rng, &net)?;
        let te = time_expand(&net, rng.random_range(1..=4))?;
        let dp = te_mincut(&te, &rates)?;
        let lo = te_mincut_loop_bound(&net, &te, &rates)?;
        let hi = te.depth as f64 * steady_cut_min(&net, &rates)?;
        let ok = lo - GAP_TOL <= dp && dp <= hi + GAP_TOL;
        loop_bad += (!ok) as u64;
        r.case(ok);
    }
    r.check("layer DP equals exhaustive search", dp_bad == 0, format!("{dp_bad} mismatches"));
    r.check(
        "(L - |Γ| + 2) m <= te min-cut <= L m on |V| = 4",
        bracket_bad == 0,
        format!("{bracket_bad} violations, largest shortfall {worst:.3e}"),
    );
    r.check(
        "(L - |Γ| + 1) m <= te min-cut <= L m",
        loop_bad == 0,
        format!("{loop_bad} violations"),
    );
    Ok(())
}

/// Monte Carlo moment checks and the mod-nesting identity on `points` random points.
fn lattice_suite(r: &mut SuiteReport, points: usize, seed: u64) -> Result<()> {
    for n in [1usize, 2, 4, 8] {
        let m = second_moment(&Lattice::scaled_integer(n, 1.0)?, 200_000, seed ^ n as u64)?;
        let ok = (m.value - 1.0 / 12.0).abs() <= 3.0 * m.stderr;
        r.check(
            &format!("Z^{n} second moment = 1/12"),
            ok,
            format!("{:.6} ± {:.2e}", m.value, m.stderr),
        );
    }
    let a2 = Preset::A2.lattice()?;
    let m = second_moment(&a2, 1_000_000, seed)?;
    // G = σ² / V^{2/n} with n = 2
    let scale = a2.volume();
    let (g, se) = (m.value / scale, m.stderr / scale);
    r.check(
        "A2 normalized second moment = 0.080188",
        (g - 0.080_188).abs() <= 3.0 * se,
        format!("{g:.6} ± {se:.2e}"),
    );
    let chain = build_chain(
        ShapingBase::preset(Preset::A2)?,
        &[36.0, 9.0, 4.0, 1.0],
        CodeSpec::random(3, 2, 1, seed)?,
        f64::INFINITY,
    )?;
    let mut rng = stream(seed, &[tag::VERIFY, 100]);
    let mut worst = 0.0f64;
    for _ in 0..points {
        let x: Vec<f64> = (0..2).map(|_| rng.random_range(-50.0..50.0)).collect();
        let coarse = chain.shaping(0).mod_lattice(&x)?;
        for l in 1..chain.user_count() {
            let lat = chain.shaping(l);
            let a = lat.mod_lattice(&coarse)?;
            let b = lat.mod_lattice(&x)?;
            let d = a.iter().zip(&b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
            worst = worst.max(d);
            r.case(d <= 1e-9);
        }
    }
    r.check(
        "(x mod Λ_1) mod Λ_l = x mod Λ_l",
        r.violations == 0,
        format!("largest deviation {worst:.3e}"),
    );
    Ok(())
}

fn chain_suite(r: &mut SuiteReport, count: usize, rng: &mut StreamRng) -> Result<()> {
    for n in [1usize, 2, 4, 8] {
        let chain = build_chain(
            ShapingBase::preset(Preset::Zn(n))?,
            &[48.0, 12.0],
            CodeSpec::random(3, n, 1, 0)?,
            1e-9,
        )?;
        let d = chain.rate(0) - chain.rate(1);
        r.check(&format!("P = (48, 12) over Z^{n}: R_1 - R_2 = 1"), d == 1.0, format!("{d}"));
    }
    let presets = [Preset::Zn(1), Preset::Zn(2), Preset::A2, Preset::D4, Preset::Zn(3)];
    let (mut power_bad, mut nest_bad) = (0u64, 0u64);
    for _ in 0..count {
        let base = *presets.choose(rng).expect("presets");
        let k = rng.random_range(1..=3);
        let mut powers: Vec<f64> = (0..k).map(|_| log_uniform(rng, 0.5, 200.0)).collect();
        powers.sort_by(|a, b| b.total_cmp(a));
        let p = *[2u32, 3, 5, 7].choose(rng).expect("primes");
        let dim = rng.random_range(0..=base.dimension());
        let code = CodeSpec::random(p, base.dimension(), dim, rng.random())?;
        let chain = build_chain(ShapingBase::preset(base)?, &powers, code, f64::INFINITY)?;
        let ok_power = chain
            .achieved_powers()
            .iter()
            .zip(&powers)
            .all(|(&a, &t)| a > 0.0 && a <= t);
        let ok_nest = chain.verify_nesting()?;
        power_bad += (!ok_power) as u64;
        nest_bad += (!ok_nest) as u64;
        r.case(ok_power && ok_nest);
    }
    r.check("σ²(Λ_i) in (0, P_i]", power_bad == 0, format!("{power_bad} violations"));
    r.check("basis vectors nest", nest_bad == 0, format!("{nest_bad} violations"));
    Ok(())
}

/// `Λ_1 = 6Z`, `Λ_2 = 3Z`, `Λ_C = Z`: six leaders at the coarse level.
pub fn scalar_six_chain() -> Result<LatticeChain> {
    let code = CodeSpec::from_generator(3, 1, vec![vec![1]])?;
    build_chain(ShapingBase::preset(Preset::Zn(1))?, &[3.0, 0.75], code, f64::INFINITY)
}

fn crypto_suite(r: &mut SuiteReport, trials: usize, seed: u64) -> Result<()> {
    let chain = scalar_six_chain()?;
    let rep = test_t_independence(&chain, &MacConfig::default(), trials, seed)?;
    r.check(
        "T uniform over C_1 (6 leaders)",
        rep.uniformity.p_value > ALPHA,
        format!("p = {:.4}", rep.uniformity.p_value),
    );
    let indep = rep.independence.map_or(0.0, |t| t.p_value);
    r.check("energy of Z̃ homogeneous across T", indep > ALPHA, format!("p = {indep:.4}"));
    let enc = encode_independence(&chain, 0, (0, 5), trials, seed)?;
    r.check(
        "encoder output independent of message",
        enc.p_value > ALPHA,
        format!("KS p = {:.4}", enc.p_value),
    );
    let code = CodeSpec::from_generator(3, 1, vec![vec![1]])?;
    let single = build_chain(ShapingBase::preset(Preset::Zn(1))?, &[3.0], code, f64::INFINITY)?;
    let fixed = MacConfig {
        fixed_messages: Some(vec![1]),
        ..MacConfig::default()
    };
    let neg = test_t_independence(&single, &fixed, trials, seed)?;
    r.check(
        "fixed message fails uniformity",
        neg.uniformity.p_value <= ALPHA,
        format!("p = {:.3e}", neg.uniformity.p_value),
    );
    Ok(())
}

/// Equal-power two-user E8 chain with its coarse rate from the grid below `R_1* − backoff`.
pub fn backoff_chain(backoff: f64, seed: u64) -> Result<LatticeChain> {
    let powers = [15.0, 15.0];
    let target = rate_targets(&powers)?[0] - backoff;
    let (p, k, _) = rate_grid_below(8, target, 127)
        .ok_or_else(|| Error::arg("backoff", "no grid rate below the target"))?;
    build_chain(
        ShapingBase::preset(Preset::E8)?,
        &powers,
        CodeSpec::random(p, 8, k, seed)?,
        f64::INFINITY,
    )
}

fn mac_suite(r: &mut SuiteReport, trials: usize, seed: u64) -> Result<()> {
    let noiseless = MacConfig {
        noise_variance: 0.0,
        alpha: Some(1.0),
        fixed_messages: None,
    };
    let chain = backoff_chain(0.25, seed)?;
    let z = simulate_mac(&chain, &noiseless, trials, seed)?;
    r.check("zero noise, α = 1: no errors", z.errors == 0, format!("{} errors", z.errors));
    let s = effective_noise_stats(&chain, &MacConfig::default(), trials.max(10_000), seed)?;
    r.check(
        "(1/n) E|Z̃|² <= ΣP/(ΣP+1)",
        s.variance <= s.bound + 3.0 * s.stderr,
        format!("{:.6} ± {:.2e} vs {:.6}", s.variance, s.stderr, s.bound),
    );
    let low = simulate_mac(&backoff_chain(0.75, seed)?, &MacConfig::default(), trials, seed)?;
    let high = simulate_mac(&chain, &MacConfig::default(), trials, seed)?;
    r.check(
        "error rate lower at larger backoff",
        low.error_rate < high.error_rate,
        format!(
            "backoff {:.4}: {:.4}, backoff {:.4}: {:.4}",
            low.backoff, low.error_rate, high.backoff, high.error_rate
        ),
    );
    Ok(())
}

fn collision_suite(r: &mut SuiteReport, draws: usize, seed: u64) -> Result<()> {
    let chain = scalar_six_chain()?;
    for pattern in 0..4u64 {
        let e = distinguishability_prob(&chain, pattern, draws, seed)?;
        let ok = if pattern == 0 {
            e.probability == 1.0
        } else {
            e.probability <= e.bound + 3.0 * e.stderr
        };
        r.check(
            &format!("pattern {pattern:#04b}"),
            ok,
            format!("{:.5} ± {:.1e}, bound {:.5}", e.probability, e.stderr, e.bound),
        );
    }
    Ok(())
}

fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

/// Error rate of exhaustive ML decoding of `code` over `channel`.
pub fn code_error_rate(code: &LinearCode, channel: &SymmetricDmc, trials: usize, seed: u64) -> Result<f64> {
    let q = code.field().order();
    let mut errors = 0usize;
    for t in 0..trials {
        let mut rng = stream(seed, &[tag::VERIFY, 200, t as u64]);
        let msg: Vec<u32> = (0..code.dimension()).map(|_| rng.random_range(0..q)).collect();
        let y: Vec<usize> = code
            .encode(&msg)
            .iter()
            .map(|&x| channel.sample(x as usize, &mut rng))
            .collect();
        errors += (code.ml_decode(&y, channel)? != msg) as usize;
    }
    Ok(errors as f64 / trials as f64)
}

fn finite_field_suite(r: &mut SuiteReport, trials: usize, seed: u64) -> Result<()> {
    let bsc = SymmetricDmc::bsc(0.11)?;
    let c = dmc_capacity(&bsc);
    let exact = 1.0 - binary_entropy(0.11);
    r.check("BSC(0.11) capacity", (c - exact).abs() < 1e-6, format!("{c:.9} vs {exact:.9}"));
    let ch = |_| SymmetricDmc::identity(2);
    let channels: BTreeMap<usize, SymmetricDmc> = [2, 3, 4].into_iter().map(|v| Ok((v, ch(v)?))).collect::<Result<_>>()?;
    let diamond = RelayNetwork::finite_field(4, &[4], 2, &[(1, 2, 1), (1, 3, 1), (2, 4, 1), (3, 4, 1)], channels)?;
    let cap = ff_capacity(&diamond)?;
    r.check("F_2 identity diamond capacity = 1", (cap - 1.0).abs() < 1e-12, format!("{cap}"));
    let good = LinearCode::random(24, 12, 2, seed)?;
    let e = code_error_rate(&good, &SymmetricDmc::bsc(0.02)?, trials, seed)?;
    r.check("[24,12] on BSC(0.02): error < 0.1", e < 0.1, format!("{e:.4}"));
    let bad = LinearCode::random(16, 14, 2, seed)?;
    let e = code_error_rate(&bad, &bsc, trials, seed)?;
    r.check("[16,14] on BSC(0.11): error > 0.5", e > 0.5, format!("{e:.4}"));
    let codes = FiniteFieldScheme::random_codes(&diamond, 16, 1.0, seed)?;
    let scheme = FiniteFieldScheme::new(&diamond, codes)?;
    let cfg = SimConfig {
        blocks: 1,
        messages: 4,
        trials: 100,
        seed,
    };
    let out = run_network(&diamond, &scheme, cfg)?;
    r.check(
        "noiseless diamond: no end-to-end errors",
        out.errors == 0 && out.e1_trials == 0,
        format!("{} errors, {} decode-error trials", out.errors, out.e1_trials),
    );
    let k = scheme.code(4).expect("code").dimension();
    let f = scheme.code(4).expect("code").field();
    let mut sum_ok = true;
    for t in 0..10 {
        let tr = trace_trial(&diamond, &scheme, cfg, t)?;
        for h in tr.hops.iter().filter(|h| h.vertex == 4) {
            let xor: Vec<u32> = f
                .digits(h.inputs[0].1, k)
                .iter()
                .zip(f.digits(h.inputs[1].1, k))
                .map(|(a, b)| a ^ b)
                .collect();
            sum_ok &= h.t_true == f.index_of(&xor) && h.t_hat == h.t_true;
        }
    }
    r.check("T_d = W_{2,4} + W_{3,4} over F_2", sum_ok, "10 traced trials".into());
    Ok(())
}

/// Runs the named suites, using each suite's default count when `count` is `None`.
pub fn run_suites(suites: &[Suite], count: Option<usize>, seed: u64) -> Result<Vec<SuiteReport>> {
    suites
        .iter()
        .map(|s| s.run(count.unwrap_or_else(|| s.default_count()), seed))
        .collect()
}
