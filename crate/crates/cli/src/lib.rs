//! Command-line front end for the `relaynet` library.

pub mod output;

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use relaynet::finite_field::ff_capacity;
use relaynet::lattice::Preset;
use relaynet::mac_sim::{simulate_mac, MacConfig};
use relaynet::nested::{ChainConfig, LatticeChain};
use relaynet::net_sim::{design_chains, run_network, FiniteFieldScheme, LatticeScheme, SimConfig, SimOutcome};
use relaynet::network::{NetworkSpec, RelayNetwork};
use relaynet::rate_bounds::rate_report;
use relaynet::verify::{run_suites, Suite};
use relaynet::Error;

use output::{render, Format, Table};

pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_NOT_FOUND: i32 = 2;
pub const EXIT_SCHEMA: i32 = 3;
pub const EXIT_GUARD: i32 = 4;
pub const EXIT_VALIDATION: i32 = 5;

#[derive(Debug, Parser, Serialize)]
#[command(name = "relaynet", version, about = "Relay network bounds and nested lattice code simulations")]
pub struct Cli {
    /// Master seed for every random stream.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Cut-set upper bound, achievable rate and gap of a Gaussian network.
    Bounds(BoundsArgs),
    /// Nested lattice chain operations.
    #[command(subcommand)]
    Chain(ChainCommand),
    /// Monte Carlo error rate of the K-user lattice MAC.
    SimMac(SimMacArgs),
    /// End-to-end simulation of the lattice scheme over a Gaussian network.
    SimNet(SimNetArgs),
    /// Cut-set capacity of a finite-field network.
    FfCapacity(NetworkArgs),
    /// End-to-end simulation of random linear codes over a finite-field network.
    SimFf(SimFfArgs),
    /// Seeded property suites.
    Verify(VerifyArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct NetworkArgs {
    #[arg(long)]
    pub network: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct BoundsArgs {
    #[arg(long)]
    pub network: PathBuf,
    /// One row per cut instead of the summary.
    #[arg(long)]
    pub per_cut: bool,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChainCommand {
    /// Builds a chain and reports its levels.
    Build(ChainBuildArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct ChainBuildArgs {
    #[arg(long)]
    pub config: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct SimMacArgs {
    /// Chain description file.
    #[arg(long)]
    pub chain: PathBuf,
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    /// Replaces the MMSE coefficient.
    #[arg(long)]
    pub alpha_override: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub noise_var: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct SimNetArgs {
    #[arg(long)]
    pub network: PathBuf,
    /// Directory holding `<v>.json` chain files for every receiving vertex.
    #[arg(long, conflicts_with_all = ["base", "backoff", "max_prime"])]
    pub chains: Option<PathBuf>,
    /// Base lattice for designed chains: `Zn:<n>`, `A2`, `D4` or `E8`.
    #[arg(long, default_value = "E8")]
    pub base: String,
    /// Rate backoff of the weakest input below its target, bits per dimension.
    #[arg(long, default_value_t = 0.5)]
    pub backoff: f64,
    #[arg(long, default_value_t = 127)]
    pub max_prime: u32,
    #[arg(long, default_value_t = 1.0)]
    pub noise_var: f64,
    #[command(flatten)]
    pub sim: SimArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct SimArgs {
    #[arg(long, default_value_t = 1)]
    pub blocks: usize,
    /// Source messages per block.
    #[arg(long, default_value_t = 4)]
    pub messages: u64,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct SimFfArgs {
    #[arg(long)]
    pub network: PathBuf,
    #[arg(long, default_value_t = 16)]
    pub blocklength: usize,
    /// Code rate as a fraction of each receiver's channel capacity.
    #[arg(long, default_value_t = 0.5)]
    pub fraction: f64,
    #[command(flatten)]
    pub sim: SimArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct VerifyArgs {
    /// Suite name or `all`.
    #[arg(long, default_value = "all")]
    pub suite: String,
    /// Instance source; only `random` is supported.
    #[arg(long, default_value = "random")]
    pub networks: String,
    /// Instances per suite; each suite's default when absent.
    #[arg(long)]
    pub count: Option<usize>,
}

/// Failure with its exit code and a one-line diagnostic.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Schema { .. } => EXIT_SCHEMA,
            Error::Guard { .. } => EXIT_GUARD,
            _ => EXIT_VALIDATION,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

fn validation(message: impl Into<String>) -> CliError {
    CliError {
        code: EXIT_VALIDATION,
        message: message.into(),
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError {
        code: EXIT_NOT_FOUND,
        message: if e.kind() == io::ErrorKind::NotFound {
            format!("file not found: {}", path.display())
        } else {
            format!("cannot read {}: {e}", path.display())
        },
    })
}

fn load_network(path: &Path) -> Result<RelayNetwork, CliError> {
    Ok(NetworkSpec::parse(&read_file(path)?)?.build()?)
}

fn load_chain(path: &Path) -> Result<LatticeChain, CliError> {
    Ok(ChainConfig::parse(&read_file(path)?)?.build()?)
}

/// `Zn:<n>`, `A2`, `D4` or `E8`.
pub fn parse_preset(text: &str) -> Result<Preset, CliError> {
    let (name, dim) = match text.split_once(':') {
        Some((name, d)) => (name, Some(d.parse::<usize>().map_err(|_| validation(format!("invalid `base` dimension `{d}`")))?)),
        None => (text, None),
    };
    Ok(Preset::parse(name, dim)?)
}

/// Parses `args` and runs the command, returning the rendered output.
pub fn run_args<I, T>(args: I) -> Result<String, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError {
        code: if e.use_stderr() { EXIT_VALIDATION } else { 0 },
        message: e.to_string(),
    })?;
    run(&cli)
}

/// Runs `cli` on its own thread pool and writes the output to `--out` when given.
pub fn run(cli: &Cli) -> Result<String, CliError> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        pool = pool.num_threads(t);
    }
    let pool = pool.build().map_err(|e| validation(format!("invalid `threads`: {e}")))?;
    let (table, verdict) = pool.install(|| execute(cli))?;
    let text = render(&table, cli, cli.format);
    if let Some(path) = &cli.out {
        fs::write(path, &text).map_err(|e| validation(format!("cannot write {}: {e}", path.display())))?;
    }
    match verdict {
        Some(message) => Err(CliError {
            code: EXIT_VERIFY_FAILED,
            message: format!("{message}\n{text}"),
        }),
        None => Ok(text),
    }
}

/// Result table and, for a failed verification, its diagnostic.
fn execute(cli: &Cli) -> Result<(Table, Option<String>), CliError> {
    let table = match &cli.command {
        Command::Bounds(a) => cmd_bounds(a)?,
        Command::Chain(ChainCommand::Build(a)) => cmd_chain(a)?,
        Command::SimMac(a) => cmd_sim_mac(a, cli.seed)?,
        Command::SimNet(a) => cmd_sim_net(a, cli.seed)?,
        Command::FfCapacity(a) => cmd_ff(a)?,
        Command::SimFf(a) => cmd_sim_ff(a, cli.seed)?,
        Command::Verify(a) => return cmd_verify(a, cli.seed),
    };
    Ok((table, None))
}

pub fn cmd_bounds(a: &BoundsArgs) -> Result<Table, CliError> {
    let net = load_network(&a.network)?;
    let rep = rate_report(&net)?;
    if a.per_cut {
        let mut t = Table::new(&["cut", "upper", "achievable"]);
        for c in &rep.per_cut {
            t.push(vec![c.members.to_string().into(), c.upper.into(), c.achievable.into()]);
        }
        return Ok(t);
    }
    let join = |sets: &[relaynet::network::VertexSet]| sets.iter().map(ToString::to_string).collect::<Vec<_>>().join(";");
    let mut t = Table::new(&["upper_bound", "achievable", "gap", "gap_bound", "upper_argmin", "achievable_argmin"]);
    t.push(vec![
        rep.upper_bound.into(),
        rep.achievable.into(),
        (rep.upper_bound - rep.achievable).into(),
        rep.gap_bound.into(),
        join(&rep.upper_argmin).into(),
        join(&rep.achievable_argmin).into(),
    ]);
    Ok(t)
}

pub fn cmd_chain(a: &ChainBuildArgs) -> Result<Table, CliError> {
    let chain = load_chain(&a.config)?;
    let mut t = Table::new(&[
        "level",
        "multiplier",
        "target_power",
        "achieved_power",
        "rate",
        "rate_target",
        "leader_count",
        "ladder_slack",
    ]);
    for l in chain.report()? {
        t.push(vec![
            l.level.into(),
            l.multiplier.into(),
            l.target_power.into(),
            l.achieved_power.into(),
            l.rate.into(),
            l.rate_target.into(),
            l.leader_count.into(),
            l.ladder_slack.into(),
        ]);
    }
    Ok(t)
}

pub fn cmd_sim_mac(a: &SimMacArgs, seed: u64) -> Result<Table, CliError> {
    let chain = load_chain(&a.chain)?;
    let cfg = MacConfig {
        noise_variance: a.noise_var,
        alpha: a.alpha_override,
        fixed_messages: None,
    };
    let r = simulate_mac(&chain, &cfg, a.trials, seed)?;
    let mut t = Table::new(&[
        "users",
        "dimension",
        "alpha",
        "rate",
        "rate_target",
        "backoff",
        "trials",
        "errors",
        "error_rate",
        "stderr",
        "bound",
    ]);
    t.push(vec![
        r.users.into(),
        r.dimension.into(),
        cfg.alpha(chain.target_powers()).into(),
        r.rate.into(),
        r.rate_target.into(),
        r.backoff.into(),
        r.trials.into(),
        r.errors.into(),
        r.error_rate.into(),
        r.stderr.into(),
        r.bound.into(),
    ]);
    Ok(t)
}

fn outcome_table(o: &SimOutcome) -> Table {
    let list = |v: &[relaynet::net_sim::NodeErrors]| {
        v.iter().map(|e| format!("{}:{}", e.vertex, e.errors)).collect::<Vec<_>>().join(";")
    };
    let mut t = Table::new(&[
        "trials",
        "blocks",
        "messages",
        "rate",
        "errors",
        "error_rate",
        "stderr",
        "e1_trials",
        "e2_trials",
        "ambiguous_trials",
        "node_errors",
        "destination_errors",
    ]);
    t.push(vec![
        o.trials.into(),
        o.blocks.into(),
        o.messages.into(),
        o.rate.into(),
        o.errors.into(),
        o.error_rate.into(),
        o.stderr.into(),
        o.e1_trials.into(),
        o.e2_trials.into(),
        o.ambiguous_trials.into(),
        list(&o.node_errors).into(),
        list(&o.destination_errors).into(),
    ]);
    t
}

fn sim_config(a: &SimArgs, seed: u64) -> SimConfig {
    SimConfig {
        blocks: a.blocks,
        messages: a.messages,
        trials: a.trials,
        seed,
    }
}

pub fn cmd_sim_net(a: &SimNetArgs, seed: u64) -> Result<Table, CliError> {
    let net = load_network(&a.network)?;
    let chains = match &a.chains {
        Some(dir) => {
            let mut out = BTreeMap::new();
            for v in 2..=net.vertex_count() {
                if net.in_neighbors(v).is_empty() {
                    continue;
                }
                out.insert(v, load_chain(&dir.join(format!("{v}.json")))?);
            }
            out
        }
        None => design_chains(&net, parse_preset(&a.base)?, a.backoff, a.max_prime, seed)?,
    };
    let scheme = LatticeScheme::new(&net, chains, a.noise_var)?;
    Ok(outcome_table(&run_network(&net, &scheme, sim_config(&a.sim, seed))?))
}

pub fn cmd_ff(a: &NetworkArgs) -> Result<Table, CliError> {
    let net = load_network(&a.network)?;
    let mut t = Table::new(&["field_size", "capacity"]);
    t.push(vec![
        u64::from(net.field_size().unwrap_or(0)).into(),
        ff_capacity(&net)?.into(),
    ]);
    Ok(t)
}

pub fn cmd_sim_ff(a: &SimFfArgs, seed: u64) -> Result<Table, CliError> {
    let net = load_network(&a.network)?;
    let codes = FiniteFieldScheme::random_codes(&net, a.blocklength, a.fraction, seed)?;
    let scheme = FiniteFieldScheme::new(&net, codes)?;
    Ok(outcome_table(&run_network(&net, &scheme, sim_config(&a.sim, seed))?))
}

pub fn cmd_verify(a: &VerifyArgs, seed: u64) -> Result<(Table, Option<String>), CliError> {
    if a.networks != "random" {
        return Err(validation(format!("unsupported `networks` source `{}`", a.networks)));
    }
    let suites = Suite::parse(&a.suite)?;
    let reports = run_suites(&suites, a.count, seed)?;
    let mut t = Table::new(&["suite", "check", "passed", "cases", "violations", "detail"]);
    let mut failed = Vec::new();
    for r in &reports {
        if !r.passed() {
            failed.push(r.suite.clone());
        }
        t.push(vec![
            r.suite.clone().into(),
            "all".into(),
            r.passed().into(),
            r.cases.into(),
            r.violations.into(),
            "".into(),
        ]);
        for c in &r.checks {
            t.push(vec![
                r.suite.clone().into(),
                c.name.clone().into(),
                c.passed.into(),
                "".into(),
                "".into(),
                c.detail.clone().into(),
            ]);
        }
    }
    let verdict = (!failed.is_empty()).then(|| format!("verification failed: {}", failed.join(", ")));
    Ok((t, verdict))
}

/// Entry point: prints the output or a diagnostic, returning the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match run_args(args) {
        Ok(text) => {
            let mut stdout = io::stdout().lock();
            let _ = stdout.write_all(text.as_bytes());
            0
        }
        Err(e) if e.code == 0 => {
            print!("{}", e.message);
            0
        }
        Err(e) => {
            let mut lines = e.message.lines();
            eprintln!("error: {}", lines.next().unwrap_or(""));
            if e.code == EXIT_VERIFY_FAILED {
                for l in lines {
                    println!("{l}");
                }
            }
            e.code
        }
    }
}
