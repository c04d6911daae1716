use std::path::Path;
use std::process::Command;

use mobiledger_cli::run_sim;

fn scenario(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn bench(out: &Path, args: &[&str]) -> serde_json::Value {
    let status = Command::new(env!("CARGO_BIN_EXE_bench"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap()
}

fn csv_rows(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path).unwrap().records().map(Result::unwrap).collect()
}

#[test]
fn memory_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let summary = bench(dir.path(), &["memory", "--max-blocks", "100", "--payload-chars", "20"]);
    assert_eq!(summary["max_blocks"], 100);
    assert_eq!(summary["groups"].as_array().unwrap().len(), 3);
    // 101 samples (0..=100 blocks) for each grouping
    assert_eq!(csv_rows(&dir.path().join("memory.csv")).len(), 303);
}

#[test]
fn pow_writes_trials_and_histogram() {
    let dir = tempfile::tempdir().unwrap();
    let summary = bench(dir.path(), &["pow", "--trials", "200", "--difficulty", "1"]);
    assert_eq!(summary["trials"], 200);
    assert!(summary["goodness_of_fit"]["p_value"].is_number());
    assert_eq!(csv_rows(&dir.path().join("pow_trials.csv")).len(), 200);
    let hist = csv_rows(&dir.path().join("pow_histogram.csv"));
    let total: u64 = hist.iter().map(|r| r[2].parse::<u64>().unwrap()).sum();
    assert_eq!(total, 200);
}

#[test]
fn verify_writes_one_row_per_combination() {
    let dir = tempfile::tempdir().unwrap();
    let summary = bench(
        dir.path(),
        &["verify", "--blocks", "5,10", "--tx", "1,3", "--workers", "1,2"],
    );
    assert_eq!(csv_rows(&dir.path().join("verify.csv")).len(), 8);
    assert!(summary["host_cores"].as_u64().unwrap() >= 1);
}

#[test]
fn bad_difficulty_is_an_error() {
    let out = Command::new(env!("CARGO_BIN_EXE_bench"))
        .args(["--out", "/nonexistent-dir-never-created", "pow", "--difficulty", "65"])
        .output()
        .unwrap();
    assert!(!out.status.success());
}

#[test]
fn sample_scenarios_converge() {
    for name in ["five_nodes_three_gateways.json", "busy_network.json"] {
        let dir = tempfile::tempdir().unwrap();
        let report = run_sim(&scenario(name), Some(dir.path())).unwrap();
        assert!(report.consistent, "{name}");
        assert!(report.stats.mined_blocks >= 1, "{name}");
        assert_eq!(csv_rows(&dir.path().join("nodes.csv")).len(), 5);
        let lengths: Vec<usize> = report.nodes.values().map(|n| n.chain_length).collect();
        assert!(lengths.iter().all(|&l| l == lengths[0]), "{name}: {lengths:?}");
    }
}

#[test]
fn five_node_scenario_mines_once() {
    let report = run_sim(&scenario("five_nodes_three_gateways.json"), None).unwrap();
    assert_eq!(report.cluster_blocks, 1);
    assert!(report.nodes.values().all(|n| n.chain_length == 1));
}

#[test]
fn sim_binary_prints_report() {
    let out = Command::new(env!("CARGO_BIN_EXE_sim"))
        .args(["run", "--scenario"])
        .arg(scenario("busy_network.json"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["consistent"], true);
}
