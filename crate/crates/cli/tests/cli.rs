//! Black-box tests of the experiment runner.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_weldedtrees"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(output: &Output) -> String {
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    String::from_utf8(output.stdout.clone()).unwrap()
}

fn tmp(name: &str) -> PathBuf {
    let mut path = std::env::temp_dir();
    path.push(format!("weldedtrees-cli-{}-{name}", std::process::id()));
    path
}

/// Data rows of a CSV document (neither comments nor the header).
fn data_rows(text: &str) -> Vec<&str> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .collect()
}

#[test]
fn gen_graph_is_deterministic_and_reports_counts() {
    let file_a = tmp("graph-a");
    let file_b = tmp("graph-b");
    let out_a = run(&[
        "gen-graph",
        "--n",
        "4",
        "--seed",
        "7",
        "--out",
        file_a.to_str().unwrap(),
    ]);
    let out_b = run(&[
        "gen-graph",
        "--n",
        "4",
        "--seed",
        "7",
        "--out",
        file_b.to_str().unwrap(),
    ]);
    assert!(stdout(&out_a).contains("n=4 vertices=62 edges=92"));
    assert_eq!(
        std::fs::read(&file_a).unwrap(),
        std::fs::read(&file_b).unwrap()
    );
    assert!(stdout(&out_b).contains("vertices=62"));
    std::fs::remove_file(file_a).ok();
    std::fs::remove_file(file_b).ok();
}

#[test]
fn gen_graph_rejects_height_zero() {
    let output = run(&["gen-graph", "--n", "0"]);
    assert!(!output.status.success());
    assert!(String::from_utf8_lossy(&output.stderr).contains("usage"));
}

#[test]
fn walk_sweep_bodies_are_byte_identical_across_runs() {
    let args = ["walk-sweep", "--n-range", "2..3", "--trials", "2", "--seed", "5"];
    let first = stdout(&run(&args));
    let second = stdout(&run(&args));
    assert_eq!(first, second);
    assert!(first.contains("# command=walk-sweep"));
    assert!(first.lines().any(|l| l == "n,seed,T,p"));
    assert!(first.contains("# crossing n=2"));
    assert!(!data_rows(&first).is_empty());
}

#[test]
fn walk_sweep_finds_a_crossing_at_every_height() {
    let text = stdout(&run(&[
        "walk-sweep", "--n-range", "2..10", "--trials", "1", "--seed", "1",
    ]));
    let crossings: Vec<&str> = text
        .lines()
        .filter(|l| l.starts_with("# crossing"))
        .collect();
    assert_eq!(crossings.len(), 9);
    for line in crossings {
        assert!(!line.contains("t_hat=none"), "{line}");
    }
}

#[test]
fn walk_sweep_empty_range_is_header_only() {
    let text = stdout(&run(&["walk-sweep", "--n-range", "5..4", "--trials", "3"]));
    assert!(text.lines().any(|l| l == "n,seed,T,p"));
    assert!(data_rows(&text).is_empty());
}

#[test]
fn traversal_zero_trials_is_header_only() {
    let text = stdout(&run(&["traversal", "--n", "3", "--trials", "0"]));
    assert!(
        text.lines()
            .any(|l| l == "n,seed,b,epsilon,T_or_range,calls,qubits,success")
    );
    assert!(data_rows(&text).is_empty());
}

#[test]
fn traversal_rows_carry_the_run_parameters() {
    let text = stdout(&run(&[
        "traversal", "--n", "3", "--trials", "4", "--b", "8", "--epsilon", "0.25",
    ]));
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 4);
    for row in rows {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields[0], "3");
        assert_eq!(fields[2], "8");
        assert_eq!(fields[3], "0.25");
        assert_eq!(fields[4], "6..18");
        assert!(fields[7] == "0" || fields[7] == "1");
    }
}

#[test]
fn flood_reports_exact_bit_counts() {
    let text = stdout(&run(&["flood", "--n-range", "1..2", "--b", "4"]));
    let rows = data_rows(&text);
    // Every vertex transmits once over all ports: bits = b * 2|E|.
    assert_eq!(rows, vec!["1,4,64", "2,4,160"]);
}

#[test]
fn config_file_feeds_defaults_and_flags_win() {
    let cfg = tmp("config");
    std::fs::write(&cfg, "n=3\nseed=9\ntrials=1\n# comment line\n").unwrap();
    let text = stdout(&run(&[
        "walk-sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--n",
        "2",
    ]));
    assert!(text.contains("# n=2"), "flag should beat the file");
    assert!(text.contains("# seed=9"), "file should beat the default");
    assert!(text.contains("# trials=1"));
    std::fs::remove_file(cfg).ok();
}

#[test]
fn lower_bound_emits_rate_rows_and_ignores_thread_count() {
    let base = [
        "lower-bound", "--n", "3", "--t", "2", "--trials", "200", "--seed", "11",
    ];
    let single = stdout(&run(&[&base[..], &["--threads", "1"]].concat()));
    let multi = stdout(&run(&[&base[..], &["--threads", "4"]].concat()));
    assert_eq!(single, multi);
    let rows = data_rows(&single);
    assert_eq!(rows.len(), 1);
    let fields: Vec<&str> = rows[0].split(',').collect();
    assert_eq!(fields[..4], ["3", "2", "paths", "200"]);
    let rate: f64 = fields[5].parse().unwrap();
    assert!((0.0..=1.0).contains(&rate));
}

#[test]
fn uniformity_rows_parse() {
    let text = stdout(&run(&[
        "uniformity", "--n", "3", "--t", "3", "--trials", "3000", "--seed", "2",
    ]));
    let rows = data_rows(&text);
    assert!(!rows.is_empty());
    for row in rows {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields[1], "paths-3");
        let p: f64 = fields[6].parse().unwrap();
        assert!((0.0..=1.0).contains(&p));
    }
}

#[test]
fn gap_table_shows_flooding_doubling() {
    let text = stdout(&run(&[
        "gap-table", "--n-range", "4..5", "--trials", "30", "--t", "4", "--seed", "3",
    ]));
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 2);
    let bits: Vec<f64> = rows
        .iter()
        .map(|r| r.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    let ratio = bits[1] / bits[0];
    assert!((1.8..=2.2).contains(&ratio), "flood ratio {ratio}");
    let quantum: f64 = rows[0].split(',').nth(1).unwrap().parse().unwrap();
    assert!(quantum > 0.0);
}
