//! Multicast over the time-expanded network: every receiving node decodes a
//! modular sum of its inputs, forwards it through independent uniform random
//! mappings, and each destination recovers the source message by replaying
//! the deterministic network under every candidate message.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::finite_field::{LinearCode, PrimeField};
use crate::lattice::Preset;
use crate::mac_sim::modular_sum;
use crate::nested::{build_chain, rate_grid_below, CodeSpec, LatticeChain, ShapingBase};
use crate::network::{time_expand, RelayNetwork, SOURCE};
use crate::rng::{stream, tag, StreamRng};
use crate::stats::binomial_stderr;

/// Exhaustive replay decoding covers at most this many candidate messages `M^B`.
pub const MAX_REPLAY_CANDIDATES: u64 = 1 << 16;

/// One hop of the network code: how a receiving node combines and decodes
/// the symbols arriving on its incoming edges.
///
/// Symbols are indices: edge symbols index the codebook of an edge, node
/// symbols index the set of values the node can decode.
pub trait HopScheme: Sync {
    /// Per-trial randomness known to every node, such as dithers.
    type Trial: Sync;

    fn blocklength(&self) -> usize;
    fn node_alphabet(&self, v: usize) -> u64;
    fn edge_alphabet(&self, u: usize, v: usize) -> u64;

    fn prepare(&self, seed: u64, trial: u64, layers: usize) -> Result<Self::Trial>;

    /// Noiseless combination at `v[k+1]` of symbols sent from layer `k`.
    fn combine(&self, tr: &Self::Trial, v: usize, layer: usize, inputs: &[(usize, u64)]) -> Result<u64>;

    /// Physical transmission and decoding at `v[k+1]`.
    fn transmit(
        &self,
        tr: &Self::Trial,
        v: usize,
        layer: usize,
        inputs: &[(usize, u64)],
        rng: &mut StreamRng,
    ) -> Result<u64>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimConfig {
    pub blocks: usize,
    /// Messages per block, `2^{nR}`.
    pub messages: u64,
    pub trials: usize,
    pub seed: u64,
}

/// Per-vertex decode error count over all trials and layers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeErrors {
    pub vertex: usize,
    pub errors: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimOutcome {
    pub trials: usize,
    pub blocks: usize,
    pub messages: u64,
    /// Source rate `log2(M) / n` in bits per dimension.
    pub rate: f64,
    /// Trials with a decode error at some node (`E_1`).
    pub e1_trials: u64,
    /// Trials without `E_1` where a destination saw another consistent message (`E_2`).
    pub e2_trials: u64,
    /// Trials where some destination had more than one consistent message.
    pub ambiguous_trials: u64,
    pub node_errors: Vec<NodeErrors>,
    /// End-to-end error count per destination.
    pub destination_errors: Vec<NodeErrors>,
    /// Trials with an error at any destination.
    pub errors: u64,
    pub error_rate: f64,
    pub stderr: f64,
}

/// One node decoding step of a traced trial.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HopRecord {
    /// Receiving layer `k + 1`.
    pub layer: usize,
    pub vertex: usize,
    pub inputs: Vec<(usize, u64)>,
    pub t_true: u64,
    pub t_hat: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialTrace {
    pub messages: Vec<u64>,
    pub hops: Vec<HopRecord>,
    /// Per destination: the unique consistent message, if there is one.
    pub decoded: Vec<(usize, Option<Vec<u64>>)>,
    pub consistent: Vec<(usize, u64)>,
}

struct TrialResult {
    node_errors: Vec<u64>,
    dest_errors: Vec<bool>,
    e1: bool,
    ambiguous: bool,
}

/// Uniform random function value `f_{u[k],v[k+1]}(x)`, independent across
/// trials, edges, layers and arguments.
fn mapping(seed: u64, trial: u64, edge: usize, layer: usize, x: u64, size: u64) -> u64 {
    stream(seed, &[tag::MAPPING, trial, edge as u64, layer as u64, x]).random_range(0..size)
}

struct Engine<'a, S: HopScheme> {
    net: &'a RelayNetwork,
    scheme: &'a S,
    cfg: SimConfig,
    depth: usize,
    /// Receiving vertices with their incoming edges `(u, edge index)`.
    receivers: Vec<(usize, Vec<(usize, usize)>)>,
    destinations: Vec<usize>,
}

impl<'a, S: HopScheme> Engine<'a, S> {
    fn new(net: &'a RelayNetwork, scheme: &'a S, cfg: SimConfig) -> Result<Self> {
        if cfg.messages == 0 {
            return Err(Error::arg("messages", "need at least one message per block"));
        }
        let candidates = (cfg.messages as f64).powi(cfg.blocks as i32);
        if candidates > MAX_REPLAY_CANDIDATES as f64 {
            return Err(Error::guard("replay candidates M^B", candidates, MAX_REPLAY_CANDIDATES as f64));
        }
        let te = time_expand(net, cfg.blocks)?;
        let mut receivers = Vec::new();
        for v in 2..=net.vertex_count() {
            let ins: Vec<(usize, usize)> = net
                .in_neighbors(v)
                .iter()
                .map(|u| (u, net.edge_index(u, v).expect("edge exists")))
                .collect();
            if !ins.is_empty() {
                receivers.push((v, ins));
            }
        }
        Ok(Engine {
            net,
            scheme,
            cfg,
            depth: te.depth,
            receivers,
            destinations: net.destinations().iter().collect(),
        })
    }

    /// Symbol mapped onto edge `(u, v)` at sending layer `k`.
    fn edge_symbol(&self, trial: u64, u: usize, v: usize, edge: usize, layer: usize, state: &[u64], block: &[u64]) -> u64 {
        let size = self.scheme.edge_alphabet(u, v);
        let x = if u == SOURCE { block.get(layer - 1).copied().unwrap_or(0) } else { state[u] };
        mapping(self.cfg.seed, trial, edge, layer, x, size)
    }

    fn inputs(&self, trial: u64, v: usize, ins: &[(usize, usize)], layer: usize, state: &[u64], block: &[u64]) -> Vec<(usize, u64)> {
        ins.iter()
            .map(|&(u, e)| (u, self.edge_symbol(trial, u, v, e, layer, state, block)))
            .collect()
    }

    /// Deterministic next state of every node from layer `k` to `k + 1`.
    fn replay_step(&self, tr: &S::Trial, trial: u64, layer: usize, state: &[u64], block: &[u64]) -> Result<Vec<u64>> {
        let mut next = vec![0u64; self.net.vertex_count() + 1];
        for (v, ins) in &self.receivers {
            let inputs = self.inputs(trial, *v, ins, layer, state, block);
            next[*v] = self.scheme.combine(tr, *v, layer, &inputs)?;
        }
        Ok(next)
    }

    #[allow(clippy::type_complexity)]
    fn run_trial(&self, trial: u64, keep_hops: bool) -> Result<(TrialResult, Vec<u64>, Vec<HopRecord>, Vec<(usize, Vec<Vec<u64>>)>)> {
        let tr = self.scheme.prepare(self.cfg.seed, trial, self.depth)?;
        let mut msg_rng = stream(self.cfg.seed, &[tag::MESSAGE, trial]);
        let block: Vec<u64> = (0..self.cfg.blocks).map(|_| msg_rng.random_range(0..self.cfg.messages)).collect();
        let n_v = self.net.vertex_count();
        let mut state = vec![0u64; n_v + 1];
        // observed[d][k] for receiving layers k = 2..=L+1
        let mut observed = vec![vec![0u64; self.depth + 2]; n_v + 1];
        let mut node_errors = vec![0u64; n_v + 1];
        let mut hops = Vec::new();
        for layer in 1..=self.depth {
            let mut next = vec![0u64; n_v + 1];
            for (v, ins) in &self.receivers {
                let inputs = self.inputs(trial, *v, ins, layer, &state, &block);
                let t_true = self.scheme.combine(&tr, *v, layer, &inputs)?;
                let mut noise = stream(self.cfg.seed, &[tag::NOISE, trial, *v as u64, layer as u64]);
                let t_hat = self.scheme.transmit(&tr, *v, layer, &inputs, &mut noise)?;
                if t_hat != t_true {
                    node_errors[*v] += 1;
                }
                next[*v] = t_hat;
                observed[*v][layer + 1] = t_hat;
                if keep_hops {
                    hops.push(HopRecord {
                        layer: layer + 1,
                        vertex: *v,
                        inputs,
                        t_true,
                        t_hat,
                    });
                }
            }
            state = next;
        }
        let e1 = node_errors.iter().any(|&c| c > 0);
        let mut matches: Vec<Vec<Vec<u64>>> = vec![Vec::new(); self.destinations.len()];
        let start = vec![0u64; n_v + 1];
        let alive: Vec<bool> = vec![true; self.destinations.len()];
        let mut prefix = Vec::with_capacity(self.cfg.blocks);
        self.search(&tr, trial, &observed, 1, &start, &alive, &mut prefix, &mut matches)?;
        let dest_errors: Vec<bool> = matches.iter().map(|m| !(m.len() == 1 && m[0] == block)).collect();
        let ambiguous = matches.iter().any(|m| m.len() > 1);
        let consistent = self.destinations.iter().copied().zip(matches).collect();
        Ok((
            TrialResult {
                node_errors,
                dest_errors,
                e1,
                ambiguous,
            },
            block,
            hops,
            consistent,
        ))
    }

    /// Depth-first replay over candidate blocks. `layer` is the next sending
    /// layer; a branch dies once no destination's observed sums match. At
    /// most two consistent messages are kept per destination.
    #[allow(clippy::too_many_arguments)]
    fn search(
        &self,
        tr: &S::Trial,
        trial: u64,
        observed: &[Vec<u64>],
        layer: usize,
        state: &[u64],
        alive: &[bool],
        prefix: &mut Vec<u64>,
        matches: &mut [Vec<Vec<u64>>],
    ) -> Result<()> {
        if layer > self.depth {
            for (i, &a) in alive.iter().enumerate() {
                if a && matches[i].len() < 2 {
                    matches[i].push(prefix.clone());
                }
            }
            return Ok(());
        }
        let choices = if layer <= self.cfg.blocks { self.cfg.messages } else { 1 };
        for w in 0..choices {
            if layer <= self.cfg.blocks {
                prefix.push(w);
            }
            let next = self.replay_step(tr, trial, layer, state, prefix)?;
            let still: Vec<bool> = self
                .destinations
                .iter()
                .zip(alive)
                .map(|(&d, &a)| a && next[d] == observed[d][layer + 1])
                .collect();
            if still.iter().any(|&a| a) {
                self.search(tr, trial, observed, layer + 1, &next, &still, prefix, matches)?;
            }
            if layer <= self.cfg.blocks {
                prefix.pop();
            }
        }
        Ok(())
    }
}

/// Runs `cfg.trials` independent multicast sessions.
pub fn run_network<S: HopScheme>(net: &RelayNetwork, scheme: &S, cfg: SimConfig) -> Result<SimOutcome> {
    if cfg.trials == 0 {
        return Err(Error::InsufficientSamples("no trials".into()));
    }
    let engine = Engine::new(net, scheme, cfg)?;
    let results = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| engine.run_trial(t, false).map(|r| r.0))
        .collect::<Result<Vec<_>>>()?;
    let n_v = net.vertex_count();
    let mut node_errors = vec![0u64; n_v + 1];
    let mut dest_errors = vec![0u64; engine.destinations.len()];
    let (mut e1, mut e2, mut amb, mut errors) = (0, 0, 0, 0);
    for r in &results {
        for (a, b) in node_errors.iter_mut().zip(&r.node_errors) {
            *a += b;
        }
        for (a, &b) in dest_errors.iter_mut().zip(&r.dest_errors) {
            *a += b as u64;
        }
        let any = r.dest_errors.iter().any(|&b| b);
        e1 += r.e1 as u64;
        e2 += (!r.e1 && any) as u64;
        amb += r.ambiguous as u64;
        errors += any as u64;
    }
    let error_rate = errors as f64 / cfg.trials as f64;
    Ok(SimOutcome {
        trials: cfg.trials,
        blocks: cfg.blocks,
        messages: cfg.messages,
        rate: (cfg.messages as f64).log2() / scheme.blocklength() as f64,
        e1_trials: e1,
        e2_trials: e2,
        ambiguous_trials: amb,
        node_errors: engine
            .receivers
            .iter()
            .map(|(v, _)| NodeErrors {
                vertex: *v,
                errors: node_errors[*v],
            })
            .collect(),
        destination_errors: engine
            .destinations
            .iter()
            .zip(dest_errors)
            .map(|(&vertex, errors)| NodeErrors { vertex, errors })
            .collect(),
        errors,
        error_rate,
        stderr: binomial_stderr(error_rate, cfg.trials as u64),
    })
}

/// Full record of one trial, including every hop.
pub fn trace_trial<S: HopScheme>(net: &RelayNetwork, scheme: &S, cfg: SimConfig, trial: u64) -> Result<TrialTrace> {
    let engine = Engine::new(net, scheme, cfg)?;
    let (_, messages, hops, consistent) = engine.run_trial(trial, true)?;
    Ok(TrialTrace {
        messages,
        hops,
        decoded: consistent
            .iter()
            .map(|(d, m)| (*d, (m.len() == 1).then(|| m[0].clone())))
            .collect(),
        consistent: consistent.iter().map(|(d, m)| (*d, m.len() as u64)).collect(),
    })
}

/// Nested lattice chain of one receiving node, with the in-neighbor served by each level.
#[derive(Debug, Clone)]
pub struct NodeChain {
    pub chain: LatticeChain,
    pub inputs: Vec<usize>,
}

/// In-neighbors of `v` by descending power, ties by ascending vertex.
fn ordered_inputs(net: &RelayNetwork, v: usize) -> Vec<(usize, f64)> {
    let mut ins: Vec<(usize, f64)> = net
        .in_neighbors(v)
        .iter()
        .map(|u| (u, net.power(u, v).expect("gaussian edge")))
        .collect();
    ins.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    ins
}

/// Lattice scheme of a Gaussian network: one chain per receiving node.
#[derive(Debug, Clone)]
pub struct LatticeScheme {
    nodes: Vec<Option<NodeChain>>,
    /// `(level, edge index)` per `(u, v)`.
    levels: BTreeMap<(usize, usize), (usize, usize)>,
    alphas: Vec<f64>,
    noise_variance: f64,
    n: usize,
}

impl LatticeScheme {
    /// Assigns each node's chain to its incoming edges by descending power.
    /// Every chain's target powers must equal the node's sorted edge powers.
    pub fn new(net: &RelayNetwork, chains: BTreeMap<usize, LatticeChain>, noise_variance: f64) -> Result<Self> {
        if !net.is_gaussian() {
            return Err(Error::InvalidNetwork("lattice scheme needs a Gaussian network".into()));
        }
        if !(noise_variance >= 0.0 && noise_variance.is_finite()) {
            return Err(Error::arg("noise_variance", "must be nonnegative and finite"));
        }
        let mut nodes = vec![None; net.vertex_count() + 1];
        let mut levels = BTreeMap::new();
        let mut alphas = vec![0.0; net.vertex_count() + 1];
        let mut chains = chains;
        let mut n = None;
        for v in 2..=net.vertex_count() {
            let ins = ordered_inputs(net, v);
            if ins.is_empty() {
                continue;
            }
            let chain = chains
                .remove(&v)
                .ok_or_else(|| Error::arg("chains", format!("no chain for vertex {v}")))?;
            if chain.user_count() != ins.len() {
                return Err(Error::arg(
                    "chains",
                    format!("vertex {v} has {} inputs, chain has {} levels", ins.len(), chain.user_count()),
                ));
            }
            for ((u, p), &target) in ins.iter().zip(chain.target_powers()) {
                if (p - target).abs() > 1e-9 * p.max(1.0) {
                    return Err(Error::arg(
                        "chains",
                        format!("vertex {v}: edge from {u} has power {p}, chain level targets {target}"),
                    ));
                }
            }
            match n {
                None => n = Some(chain.dimension()),
                Some(d) if d != chain.dimension() => {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        actual: chain.dimension(),
                    })
                }
                _ => {}
            }
            for (level, (u, _)) in ins.iter().enumerate() {
                levels.insert((*u, v), (level, net.edge_index(*u, v).expect("edge exists")));
            }
            let total: f64 = ins.iter().map(|x| x.1).sum();
            alphas[v] = total / (total + noise_variance);
            nodes[v] = Some(NodeChain {
                chain,
                inputs: ins.iter().map(|x| x.0).collect(),
            });
        }
        if let Some(&v) = chains.keys().next() {
            return Err(Error::arg("chains", format!("vertex {v} receives nothing")));
        }
        Ok(LatticeScheme {
            nodes,
            levels,
            alphas,
            noise_variance,
            n: n.ok_or_else(|| Error::InvalidNetwork("no receiving vertex".into()))?,
        })
    }

    pub fn node(&self, v: usize) -> Option<&NodeChain> {
        self.nodes.get(v).and_then(Option::as_ref)
    }

    /// Rate `R_{u,v}` of each edge.
    pub fn edge_rates(&self) -> BTreeMap<(usize, usize), f64> {
        self.levels
            .iter()
            .map(|(&(u, v), &(level, _))| ((u, v), self.node(v).expect("chain").chain.rate(level)))
            .collect()
    }

    fn chain(&self, v: usize) -> &LatticeChain {
        &self.nodes[v].as_ref().expect("receiving vertex").chain
    }
}

/// Chains for every receiving node of `net` with edge rates `b` bits below
/// the per-edge targets `[½ log2((1/ΣP + 1) P_{u,v})]^+`.
///
/// All levels of a node share the Construction-A code chosen for its weakest
/// input from the rate grid `(k/n) log2 p`, `p ≤ max_prime`.
pub fn design_chains(net: &RelayNetwork, base: Preset, backoff: f64, max_prime: u32, seed: u64) -> Result<BTreeMap<usize, LatticeChain>> {
    let n = base.dimension();
    let mut out = BTreeMap::new();
    for v in 2..=net.vertex_count() {
        let ins = ordered_inputs(net, v);
        if ins.is_empty() {
            continue;
        }
        let powers: Vec<f64> = ins.iter().map(|x| x.1).collect();
        let total: f64 = powers.iter().sum();
        let weakest = powers[powers.len() - 1];
        let target = (0.5 * ((1.0 / total + 1.0) * weakest).log2()).max(0.0) - backoff;
        let (p, k, _) = rate_grid_below(n, target, max_prime)
            .ok_or_else(|| Error::arg("backoff", format!("no code rate at or below {target} for vertex {v}")))?;
        let code = CodeSpec::random(p, n, k, seed ^ v as u64)?;
        out.insert(v, build_chain(ShapingBase::preset(base)?, &powers, code, f64::INFINITY)?);
    }
    Ok(out)
}

pub struct LatticeTrial {
    /// `dithers[k - 1][edge]` for sending layer `k`.
    dithers: Vec<Vec<Vec<f64>>>,
}

impl HopScheme for LatticeScheme {
    type Trial = LatticeTrial;

    fn blocklength(&self) -> usize {
        self.n
    }

    fn node_alphabet(&self, v: usize) -> u64 {
        self.chain(v).leader_count(0)
    }

    fn edge_alphabet(&self, u: usize, v: usize) -> u64 {
        self.chain(v).leader_count(self.levels[&(u, v)].0)
    }

    fn prepare(&self, seed: u64, trial: u64, layers: usize) -> Result<LatticeTrial> {
        let edges = self.levels.len();
        let mut dithers = vec![vec![Vec::new(); edges]; layers];
        for (&(_, v), &(level, e)) in &self.levels {
            for (k, row) in dithers.iter_mut().enumerate() {
                let mut rng = stream(seed, &[tag::DITHER, trial, e as u64, k as u64 + 1]);
                row[e] = self.chain(v).sample_dither(level, &mut rng);
            }
        }
        Ok(LatticeTrial { dithers })
    }

    fn combine(&self, tr: &LatticeTrial, v: usize, layer: usize, inputs: &[(usize, u64)]) -> Result<u64> {
        let chain = self.chain(v);
        let mut leaders = Vec::with_capacity(inputs.len());
        for &(u, idx) in inputs {
            let (level, e) = self.levels[&(u, v)];
            leaders.push((level, chain.leader(level, idx)?, e));
        }
        let args: Vec<(usize, &[f64], &[f64])> = leaders
            .iter()
            .map(|(level, w, e)| (*level, w.as_slice(), tr.dithers[layer - 1][*e].as_slice()))
            .collect();
        chain.coset_index(0, &modular_sum(chain, 0, &args)?)
    }

    fn transmit(&self, tr: &LatticeTrial, v: usize, layer: usize, inputs: &[(usize, u64)], rng: &mut StreamRng) -> Result<u64> {
        let chain = self.chain(v);
        let n = self.n;
        let alpha = self.alphas[v];
        let sd = self.noise_variance.sqrt();
        let mut pre = vec![0.0; n];
        for &(u, idx) in inputs {
            let (level, e) = self.levels[&(u, v)];
            let dither = &tr.dithers[layer - 1][e];
            let x = chain.encode(level, idx, dither)?;
            for t in 0..n {
                pre[t] += alpha * x[t] - dither[t];
            }
        }
        for p in pre.iter_mut() {
            *p += alpha * sd * rng.sample::<f64, _>(StandardNormal);
        }
        let processed = chain.shaping(0).mod_lattice(&pre)?;
        chain.decode_index(0, &processed)
    }
}

/// Finite-field scheme: node `v` uses the linear code `F_v`, every incoming
/// edge is pre-scaled by `β_{u,v}^{-1}` so the MAC output is `F_v Σ_u W_{u,v}`.
#[derive(Debug, Clone)]
pub struct FiniteFieldScheme {
    net: RelayNetwork,
    field: PrimeField,
    codes: Vec<Option<LinearCode>>,
    n: usize,
}

impl FiniteFieldScheme {
    pub fn new(net: &RelayNetwork, codes: BTreeMap<usize, LinearCode>) -> Result<Self> {
        let q = net
            .field_size()
            .ok_or_else(|| Error::InvalidNetwork("finite-field scheme needs a finite-field network".into()))?;
        let field = PrimeField::new(q)?;
        let mut slots = vec![None; net.vertex_count() + 1];
        let mut codes = codes;
        let mut n = None;
        for v in 2..=net.vertex_count() {
            if net.in_neighbors(v).is_empty() {
                continue;
            }
            let code = codes
                .remove(&v)
                .ok_or_else(|| Error::arg("codes", format!("no code for vertex {v}")))?;
            if code.field().order() != q {
                return Err(Error::arg("codes", format!("code at vertex {v} is over F_{}", code.field().order())));
            }
            if code.codeword_count() > crate::finite_field::MAX_ML_CODEWORDS {
                return Err(Error::guard(
                    "ML codewords",
                    code.codeword_count() as f64,
                    crate::finite_field::MAX_ML_CODEWORDS as f64,
                ));
            }
            match n {
                None => n = Some(code.blocklength()),
                Some(d) if d != code.blocklength() => {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        actual: code.blocklength(),
                    })
                }
                _ => {}
            }
            slots[v] = Some(code);
        }
        if let Some(&v) = codes.keys().next() {
            return Err(Error::arg("codes", format!("vertex {v} receives nothing")));
        }
        Ok(FiniteFieldScheme {
            net: net.clone(),
            field,
            codes: slots,
            n: n.ok_or_else(|| Error::InvalidNetwork("no receiving vertex".into()))?,
        })
    }

    /// Random `[n, k_v]` codes with `k_v` the largest dimension whose rate stays
    /// below `fraction · C_v`.
    pub fn random_codes(net: &RelayNetwork, n: usize, fraction: f64, seed: u64) -> Result<BTreeMap<usize, LinearCode>> {
        let q = net
            .field_size()
            .ok_or_else(|| Error::InvalidNetwork("finite-field network expected".into()))?;
        let mut out = BTreeMap::new();
        for v in 2..=net.vertex_count() {
            if net.in_neighbors(v).is_empty() {
                continue;
            }
            let cap = net.channel(v).expect("channel").capacity();
            let k = ((fraction * cap * n as f64) / (q as f64).log2()).floor() as usize;
            out.insert(v, LinearCode::random(n, k.min(n), q, seed ^ v as u64)?);
        }
        Ok(out)
    }

    pub fn code(&self, v: usize) -> Option<&LinearCode> {
        self.codes.get(v).and_then(Option::as_ref)
    }

    fn code_of(&self, v: usize) -> &LinearCode {
        self.codes[v].as_ref().expect("receiving vertex")
    }

    /// `X_{u,v} = β_{u,v}^{-1} F_v W_{u,v}`.
    pub fn edge_input(&self, u: usize, v: usize, w: u64) -> Vec<u32> {
        let code = self.code_of(v);
        let msg = self.field.digits(w, code.dimension());
        let beta = self.net.coefficient(u, v).expect("edge");
        let inv = self.field.inv(beta).expect("nonzero coefficient");
        self.field.scale_vec(inv, &code.encode(&msg))
    }

    /// `X_v = Σ_u β_{u,v} X_{u,v}`.
    pub fn mac_output(&self, v: usize, inputs: &[(usize, u64)]) -> Vec<u32> {
        let mut x = vec![0u32; self.n];
        for &(u, w) in inputs {
            let beta = self.net.coefficient(u, v).expect("edge");
            x = self.field.add_vec(&x, &self.field.scale_vec(beta, &self.edge_input(u, v, w)));
        }
        x
    }
}

impl HopScheme for FiniteFieldScheme {
    type Trial = ();

    fn blocklength(&self) -> usize {
        self.n
    }

    fn node_alphabet(&self, v: usize) -> u64 {
        self.code_of(v).codeword_count()
    }

    fn edge_alphabet(&self, _u: usize, v: usize) -> u64 {
        self.code_of(v).codeword_count()
    }

    fn prepare(&self, _seed: u64, _trial: u64, _layers: usize) -> Result<()> {
        Ok(())
    }

    /// `T_v = Σ_u W_{u,v}` over `F_q^{k_v}`.
    fn combine(&self, _tr: &(), v: usize, _layer: usize, inputs: &[(usize, u64)]) -> Result<u64> {
        let k = self.code_of(v).dimension();
        let mut t = vec![0u32; k];
        for &(_, w) in inputs {
            t = self.field.add_vec(&t, &self.field.digits(w, k));
        }
        Ok(self.field.index_of(&t))
    }

    fn transmit(&self, _tr: &(), v: usize, _layer: usize, inputs: &[(usize, u64)], rng: &mut StreamRng) -> Result<u64> {
        let channel = self.net.channel(v).expect("channel");
        let y: Vec<usize> = self
            .mac_output(v, inputs)
            .iter()
            .map(|&x| channel.sample(x as usize, rng))
            .collect();
        self.code_of(v).ml_decode_index(&y, channel)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finite_field::SymmetricDmc;
    use crate::network::NetworkSpec;

    fn link(power: f64) -> RelayNetwork {
        RelayNetwork::gaussian(2, &[2], &[(1, 2, power)]).unwrap()
    }

    fn diamond() -> RelayNetwork {
        RelayNetwork::gaussian(4, &[4], &[(1, 2, 15.0), (1, 3, 15.0), (2, 4, 15.0), (3, 4, 15.0)]).unwrap()
    }

    fn cfg(blocks: usize, messages: u64, trials: usize) -> SimConfig {
        SimConfig {
            blocks,
            messages,
            trials,
            seed: 11,
        }
    }

    #[test]
    fn noiseless_link_has_no_errors() {
        let net = link(15.0);
        let chains = design_chains(&net, Preset::Zn(2), 0.5, 31, 1).unwrap();
        let scheme = LatticeScheme::new(&net, chains, 0.0).unwrap();
        let out = run_network(&net, &scheme, cfg(2, 3, 300)).unwrap();
        assert_eq!(out.e1_trials, 0);
        // distinct messages can collide in the random source mapping
        assert_eq!(out.errors, out.e2_trials);
        assert_eq!(out.errors, out.ambiguous_trials);
    }

    #[test]
    fn replay_decoder_recovers_noiseless_diamond() {
        let net = diamond();
        let chains = design_chains(&net, Preset::A2, 0.5, 31, 2).unwrap();
        let scheme = LatticeScheme::new(&net, chains, 0.0).unwrap();
        let c = cfg(2, 4, 40);
        for t in 0..40 {
            let tr = trace_trial(&net, &scheme, c, t).unwrap();
            assert!(tr.hops.iter().all(|h| h.t_true == h.t_hat));
            let (d, count) = tr.consistent[0];
            assert_eq!(d, 4);
            assert!(count >= 1);
            if count == 1 {
                assert_eq!(tr.decoded[0].1.as_ref(), Some(&tr.messages));
            }
        }
    }

    #[test]
    fn runs_are_deterministic() {
        let net = diamond();
        let chains = design_chains(&net, Preset::Zn(2), 0.5, 31, 2).unwrap();
        let scheme = LatticeScheme::new(&net, chains, 1.0).unwrap();
        let a = run_network(&net, &scheme, cfg(2, 4, 50)).unwrap();
        let b = run_network(&net, &scheme, cfg(2, 4, 50)).unwrap();
        assert_eq!(a, b);
        assert!(a.errors <= a.e1_trials + a.e2_trials);
    }

    #[test]
    fn rate_above_cut_set_bound_fails() {
        // UB of a P = 3 link is 1 bit; 2^{2·2} messages per block at n = 2 is 2 bits
        let net = link(3.0);
        let chains = design_chains(&net, Preset::Zn(2), 0.0, 31, 1).unwrap();
        let scheme = LatticeScheme::new(&net, chains, 1.0).unwrap();
        let out = run_network(&net, &scheme, cfg(1, 16, 200)).unwrap();
        assert!(out.error_rate > 0.5, "{out:?}");
    }

    #[test]
    fn guard_and_mismatch_errors() {
        let net = link(15.0);
        let chains = design_chains(&net, Preset::Zn(2), 0.5, 31, 1).unwrap();
        let scheme = LatticeScheme::new(&net, chains.clone(), 1.0).unwrap();
        assert!(matches!(run_network(&net, &scheme, cfg(3, 100, 1)), Err(Error::Guard { .. })));
        let other = link(7.0);
        assert!(LatticeScheme::new(&other, chains, 1.0).is_err());
    }

    fn ff_diamond(eps: f64) -> RelayNetwork {
        let text = format!(
            r#"{{"mode": "finite-field", "vertices": 4, "destinations": [4], "field_size": 2,
                "edges": [{{"from": 1, "to": 2, "coeff": 1}}, {{"from": 1, "to": 3, "coeff": 1}},
                          {{"from": 2, "to": 4, "coeff": 1}}, {{"from": 3, "to": 4, "coeff": 1}}],
                "channels": {{"2": {{"type": "qsc", "q": 2, "eps": {eps}}},
                              "3": {{"type": "qsc", "q": 2, "eps": {eps}}},
                              "4": {{"type": "qsc", "q": 2, "eps": {eps}}}}}}}"#
        );
        NetworkSpec::parse(&text).unwrap().build().unwrap()
    }

    #[test]
    fn finite_field_sum_is_exact_without_noise() {
        let net = ff_diamond(0.0);
        let codes = FiniteFieldScheme::random_codes(&net, 6, 0.5, 3).unwrap();
        let scheme = FiniteFieldScheme::new(&net, codes).unwrap();
        let c = cfg(2, 4, 50);
        for t in 0..20 {
            let tr = trace_trial(&net, &scheme, c, t).unwrap();
            for h in tr.hops.iter().filter(|h| h.vertex == 4) {
                let k = scheme.code(4).unwrap().dimension();
                let f = PrimeField::new(2).unwrap();
                let xor: Vec<u32> = f
                    .digits(h.inputs[0].1, k)
                    .iter()
                    .zip(f.digits(h.inputs[1].1, k))
                    .map(|(a, b)| a ^ b)
                    .collect();
                assert_eq!(h.t_hat, f.index_of(&xor));
                assert_eq!(h.t_hat, h.t_true);
            }
        }
        let out = run_network(&net, &scheme, c).unwrap();
        assert_eq!(out.e1_trials, 0);
    }

    #[test]
    fn prescaling_identity() {
        let mut channels = std::collections::BTreeMap::new();
        channels.insert(2, SymmetricDmc::identity(5).unwrap());
        channels.insert(3, SymmetricDmc::identity(5).unwrap());
        let net = RelayNetwork::finite_field(3, &[3], 5, &[(1, 2, 3), (1, 3, 2), (2, 3, 4)], channels).unwrap();
        let mut codes = std::collections::BTreeMap::new();
        codes.insert(2, LinearCode::random(4, 2, 5, 1).unwrap());
        codes.insert(3, LinearCode::random(4, 2, 5, 2).unwrap());
        let scheme = FiniteFieldScheme::new(&net, codes).unwrap();
        let f = PrimeField::new(5).unwrap();
        for (a, b) in [(0, 0), (3, 17), (24, 24), (7, 11)] {
            let x = scheme.mac_output(3, &[(1, a), (2, b)]);
            let t = f.add_vec(&f.digits(a, 2), &f.digits(b, 2));
            assert_eq!(x, scheme.code(3).unwrap().encode(&t));
        }
    }

    #[test]
    fn noisy_single_link_below_capacity() {
        let mut channels = std::collections::BTreeMap::new();
        channels.insert(2, SymmetricDmc::bsc(0.02).unwrap());
        let net = RelayNetwork::finite_field(2, &[2], 2, &[(1, 2, 1)], channels).unwrap();
        let codes = FiniteFieldScheme::random_codes(&net, 16, 0.8, 5).unwrap();
        let scheme = FiniteFieldScheme::new(&net, codes).unwrap();
        let k = scheme.code(2).unwrap().dimension() as u32;
        assert!(k >= 8);
        // source mapping collisions add about M / 2^k to the error rate
        let out = run_network(&net, &scheme, cfg(1, 1 << (k - 6), 300)).unwrap();
        assert!(out.error_rate < 0.1, "{out:?}");
        assert!(out.e1_trials as f64 / 300.0 < 0.1, "{out:?}");
    }
}
