//! Acceptance criteria, one pass/fail line each.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use relaynet::network::{enumerate_cuts, RelayNetwork};
use relaynet::rate_bounds::rate_report;
use relaynet::verify::{Suite, SuiteReport};

const SEED: u64 = 20_240_601;

type Criterion = (u32, &'static str, Box<dyn Fn() -> Outcome>);

struct Outcome {
    passed: bool,
    detail: String,
}

fn suites(list: &[(Suite, usize)]) -> Outcome {
    let reports: Vec<SuiteReport> = list
        .iter()
        .map(|&(s, n)| s.run(n, SEED).unwrap_or_else(|e| panic!("{} suite: {e}", s.name())))
        .collect();
    Outcome {
        passed: reports.iter().all(SuiteReport::passed),
        detail: reports.iter().map(ToString::to_string).collect::<Vec<_>>().join("\n"),
    }
}

fn bound_sandwich() -> Outcome {
    let t = Instant::now();
    let mut o = suites(&[(Suite::Gap, 100)]);
    let secs = t.elapsed().as_secs_f64();
    o.passed &= secs < 10.0;
    o.detail = format!("{} ({secs:.2} s)", o.detail);
    o
}

fn diamond_golden() -> Outcome {
    let net = RelayNetwork::gaussian(4, &[4], &[(1, 2, 15.0), (1, 3, 15.0), (2, 4, 15.0), (3, 4, 15.0)]).unwrap();
    // the four cuts {1}, {1,2}, {1,3}, {1,2,3} evaluated by hand
    let c = |snr: f64| 0.5 * (1.0 + snr).log2();
    let ub = [2.0 * c(15.0), c(15.0) + c(15.0), c(15.0) + c(15.0), c(60.0)]
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let a = |p: f64, total: f64| (0.5 * ((1.0 / total + 1.0) * p).log2()).max(0.0);
    let ach = [
        2.0 * a(15.0, 15.0),
        a(15.0, 15.0) + a(15.0, 30.0),
        a(15.0, 15.0) + a(15.0, 30.0),
        a(15.0, 30.0),
    ]
    .into_iter()
    .fold(f64::INFINITY, f64::min);
    assert_eq!(enumerate_cuts(&net).unwrap().len(), 4);
    let r = rate_report(&net).unwrap();
    let closed = (0.5 * 61f64.log2(), 0.5 * 15.5f64.log2());
    let passed = (r.upper_bound - ub).abs() <= 1e-9
        && (r.achievable - ach).abs() <= 1e-9
        && (ub - closed.0).abs() <= 1e-12
        && (ach - closed.1).abs() <= 1e-12
        && (r.gap_bound - 1.0).abs() <= 1e-9;
    Outcome {
        passed,
        detail: format!(
            "UB {:.12} (oracle {ub:.12}), Ach {:.12} (oracle {ach:.12}), gap bound {}",
            r.upper_bound, r.achievable, r.gap_bound
        ),
    }
}

fn workspace() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").canonicalize().unwrap()
}

fn run_cli(args: &[&str]) -> (Option<i32>, Vec<u8>) {
    let o = Command::new(env!("CARGO_BIN_EXE_relaynet"))
        .args(args)
        .current_dir(workspace())
        .output()
        .expect("binary runs");
    (o.status.code(), o.stdout)
}

fn determinism() -> Outcome {
    let runs: [&[&str]; 6] = [
        &["verify", "--suite", "crypto", "--count", "2000", "--seed", "3"],
        &["sim-mac", "--chain", "data/mac_e8.json", "--trials", "5000", "--seed", "3"],
        &["sim-mac", "--chain", "data/mac_scalar.json", "--trials", "5000", "--seed", "3", "--noise-var", "0.5"],
        &["sim-net", "--network", "data/diamond.json", "--chains", "data/chains", "--messages", "16", "--trials", "300", "--seed", "3"],
        &["sim-net", "--network", "data/diamond.json", "--backoff", "0.75", "--blocks", "2", "--messages", "8", "--trials", "200", "--seed", "3"],
        &["sim-ff", "--network", "data/ff_diamond_bsc.json", "--messages", "4", "--trials", "500", "--seed", "3"],
    ];
    let mut lines = Vec::new();
    let mut passed = true;
    for args in runs {
        let outs: Vec<(Option<i32>, Vec<u8>)> = ["1", "1", "2", "8"]
            .iter()
            .map(|t| {
                let mut a = args.to_vec();
                a.extend(["--threads", t]);
                run_cli(&a)
            })
            .collect();
        let ok = outs.iter().all(|o| o.0 == Some(0) && o.1 == outs[0].1 && !o.1.is_empty());
        passed &= ok;
        lines.push(format!("{} {}", if ok { "same" } else { "DIFFER" }, args[0..3].join(" ")));
    }
    Outcome {
        passed,
        detail: lines.join("; "),
    }
}

fn main() {
    let criteria: Vec<Criterion> = vec![
        (1, "bound sandwich on 100 random networks", Box::new(bound_sandwich)),
        (2, "diamond golden values", Box::new(diamond_golden)),
        (3, "single in-degree equality", Box::new(|| suites(&[(Suite::SingleInDegree, 20)]))),
        (4, "MAC term inequalities", Box::new(|| suites(&[(Suite::MacTerms, 10_000)]))),
        (5, "submodularity and time-expanded min-cut", Box::new(|| suites(&[(Suite::Submodular, 50), (Suite::TeMincut, 20)]))),
        (6, "lattice geometry", Box::new(|| suites(&[(Suite::Lattice, 10_000)]))),
        (7, "chain construction", Box::new(|| suites(&[(Suite::Chain, 50)]))),
        (8, "uniformity of T and encoder independence", Box::new(|| suites(&[(Suite::Crypto, 10_000)]))),
        (9, "MAC simulation", Box::new(|| suites(&[(Suite::Mac, 10_000)]))),
        (10, "collision probabilities", Box::new(|| suites(&[(Suite::Collision, 20_000)]))),
        (11, "finite-field codes and networks", Box::new(|| suites(&[(Suite::FiniteField, 1_000)]))),
        (12, "determinism across reruns and thread counts", Box::new(determinism)),
    ];
    let mut failed = BTreeMap::new();
    for (n, name, f) in criteria {
        let o = f();
        println!("criterion {n}: {} - {name}", if o.passed { "PASS" } else { "FAIL" });
        for l in o.detail.lines() {
            println!("    {l}");
        }
        if !o.passed {
            failed.insert(n, name);
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
