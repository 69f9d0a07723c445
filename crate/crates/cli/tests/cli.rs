use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use relaynet_cli::output::CsvDocument;

fn workspace() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").canonicalize().unwrap()
}

fn relaynet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_relaynet"))
        .args(args)
        .current_dir(workspace())
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn diamond_bounds_match_golden_file() {
    let o = relaynet(&["bounds", "--network", "data/diamond.json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let golden = std::fs::read_to_string(workspace().join("crates/cli/tests/golden/diamond_bounds.csv")).unwrap();
    assert_eq!(stdout(&o), golden);
}

#[test]
fn diamond_bounds_match_closed_forms() {
    let o = relaynet(&["bounds", "--network", "data/diamond.json"]);
    let doc = CsvDocument::parse(&stdout(&o)).unwrap();
    // (√15 + √15)² = 60 at the destination; 15·(1 + 1/30) = 15.5 for the achievable term
    let ub = 0.5 * 61f64.log2();
    let ach = 0.5 * 15.5f64.log2();
    assert!((doc.get_f64(0, "upper_bound").unwrap() - ub).abs() < 1e-9);
    assert!((doc.get_f64(0, "achievable").unwrap() - ach).abs() < 1e-9);
    assert_eq!(doc.get_f64(0, "gap_bound"), Some(1.0));
    assert_eq!(doc.config["seed"], 0);
    assert_eq!(doc.config["command"]["bounds"]["network"], "data/diamond.json");
}

#[test]
fn per_cut_rows_cover_every_cut() {
    let o = relaynet(&["bounds", "--network", "data/diamond.json", "--per-cut"]);
    let doc = CsvDocument::parse(&stdout(&o)).unwrap();
    assert_eq!(doc.records.len(), 4);
    let ub = (0..4).map(|i| doc.get_f64(i, "upper").unwrap()).fold(f64::INFINITY, f64::min);
    assert!((ub - 0.5 * 61f64.log2()).abs() < 1e-9);
}

#[test]
fn missing_file_exits_with_not_found() {
    let o = relaynet(&["bounds", "--network", "missing.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("file not found"));
    assert_eq!(stderr(&o).lines().count(), 1);
}

#[test]
fn schema_violation_names_the_field() {
    let path = Path::new(env!("CARGO_TARGET_TMPDIR")).join("bad_network.json");
    std::fs::write(
        &path,
        r#"{"vertices": 2, "destinations": [2], "mode": "gaussian", "edges": [], "weights": 1}"#,
    )
    .unwrap();
    let o = relaynet(&["bounds", "--network", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("`weights`"));
}

#[test]
fn replay_guard_exits_with_guard_code() {
    let o = relaynet(&[
        "sim-net", "--network", "data/diamond.json", "--blocks", "2", "--messages", "300", "--trials", "10",
    ]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("guard exceeded"));
}

#[test]
fn invalid_network_exits_with_validation_code() {
    let path = Path::new(env!("CARGO_TARGET_TMPDIR")).join("unreachable.json");
    std::fs::write(
        &path,
        r#"{"vertices": 3, "destinations": [3], "mode": "gaussian", "edges": [{"from": 1, "to": 3, "power": 1.0}]}"#,
    )
    .unwrap();
    let o = relaynet(&["bounds", "--network", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(5), "{}", stderr(&o));
}

#[test]
fn gap_suite_passes() {
    let o = relaynet(&["verify", "--suite", "gap", "--networks", "random", "--count", "100", "--seed", "7"]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    let doc = CsvDocument::parse(&stdout(&o)).unwrap();
    assert_eq!(doc.get(0, "passed"), Some("true"));
    assert_eq!(doc.get(0, "cases"), Some("100"));
}

#[test]
fn unknown_suite_is_rejected() {
    let o = relaynet(&["verify", "--suite", "everything"]);
    assert_eq!(o.status.code(), Some(5));
}

#[test]
fn simulations_are_identical_across_thread_counts() {
    let runs: [&[&str]; 3] = [
        &["sim-mac", "--chain", "data/mac_e8.json", "--trials", "2000", "--seed", "5"],
        &[
            "sim-net", "--network", "data/diamond.json", "--chains", "data/chains", "--messages", "16", "--trials", "200",
            "--seed", "5",
        ],
        &["sim-ff", "--network", "data/ff_diamond_bsc.json", "--messages", "4", "--trials", "300", "--seed", "5"],
    ];
    for args in runs {
        let outputs: Vec<String> = ["1", "2", "5"]
            .iter()
            .map(|t| {
                let mut a = args.to_vec();
                a.extend(["--threads", t]);
                let o = relaynet(&a);
                assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
                stdout(&o)
            })
            .collect();
        assert!(outputs.windows(2).all(|w| w[0] == w[1]), "{args:?}");
    }
}

#[test]
fn out_flag_writes_the_printed_document() {
    let path = Path::new(env!("CARGO_TARGET_TMPDIR")).join("chain.csv");
    let p = path.to_str().unwrap();
    let o = relaynet(&["chain", "build", "--config", "data/mac_scalar.json", "--out", p]);
    assert_eq!(o.status.code(), Some(0));
    let written = std::fs::read_to_string(&path).unwrap();
    assert_eq!(written, stdout(&o));
    let doc = CsvDocument::parse(&written).unwrap();
    assert_eq!(doc.get(0, "leader_count"), Some("6"));
    assert_eq!(doc.get(1, "leader_count"), Some("3"));
}

#[test]
fn config_echo_reruns_to_the_same_output() {
    let o = relaynet(&["sim-mac", "--chain", "data/mac_scalar.json", "--trials", "1000", "--seed", "9"]);
    let text = stdout(&o);
    let doc = CsvDocument::parse(&text).unwrap();
    let c = &doc.config["command"]["sim-mac"];
    let trials = c["trials"].to_string();
    let seed = doc.config["seed"].to_string();
    let again = relaynet(&["sim-mac", "--chain", c["chain"].as_str().unwrap(), "--trials", &trials, "--seed", &seed]);
    assert_eq!(stdout(&again), text);
}

#[test]
fn json_format_carries_config_and_rows() {
    let o = relaynet(&["ff-capacity", "--network", "data/ff_diamond.json", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["rows"][0]["capacity"], 1.0);
    assert_eq!(v["config"]["format"], "json");
}

#[test]
fn inputs_are_not_modified() {
    let path = workspace().join("data/diamond.json");
    let before = std::fs::read(&path).unwrap();
    relaynet(&["bounds", "--network", "data/diamond.json"]);
    assert_eq!(std::fs::read(&path).unwrap(), before);
}
