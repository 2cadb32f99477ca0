use std::path::Path;
use std::process::Command;

use infoplan_bench::record::{read_csv, HEADER};

fn infoplan(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_infoplan")).args(args).output().unwrap()
}

fn temp_dir(name: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("infoplan-cli-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

#[test]
fn small_audit_writes_csv_and_plot() {
    let dir = temp_dir("audit");
    let cfg = dir.join("small.json");
    write(
        &cfg,
        r#"{ "audit": { "discrete_instances": 20, "particle_instances": 20, "value_trees": 5, "oracle_trees": 5 } }"#,
    );
    let out = infoplan(&[
        "bench",
        "bounds-audit",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "3",
        "--out",
        dir.to_str().unwrap(),
        "--plot",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = dir.join("bounds-audit.csv");
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next().unwrap(), HEADER.join(","));
    // 20 discrete instances give 2 checks each, 20 particle instances 3 each.
    assert_eq!(read_csv(&csv).unwrap().len(), 40 + 60 + 5 + 5);
    assert!(dir.join("bounds-audit.svg").exists());
}

#[test]
fn timing_run_is_reproducible() {
    let dir = temp_dir("timing");
    let cfg = dir.join("tiny.json");
    write(&cfg, r#"{ "planner": { "iterations": 50 }, "particles": 8, "sweep": [1, 2] }"#);
    let run = |sub: &str| {
        let out_dir = dir.join(sub);
        let out = infoplan(&[
            "bench",
            "time-vs-K",
            "--config",
            cfg.to_str().unwrap(),
            "--trials",
            "3",
            "--jobs",
            "2",
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        read_csv(&out_dir.join("time-vs-K.csv")).unwrap()
    };
    let (a, b) = (run("a"), run("b"));
    assert_eq!(a.len(), 2 * 3 * 2);
    let key = |r: &infoplan_bench::record::TrialRecord| (r.planner.clone(), r.seed, r.sweep_value, r.chosen_action);
    assert_eq!(a.iter().map(key).collect::<Vec<_>>(), b.iter().map(key).collect::<Vec<_>>());
}

#[test]
fn bad_input_exits_with_code_two() {
    let dir = temp_dir("bad");
    let cfg = dir.join("bad.json");
    write(&cfg, r#"{ "planner": { "iterationz": 5 } }"#);
    let out = infoplan(&["bench", "time-vs-N", "--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("iterationz"));

    let out = infoplan(&["bench", "time-vs-N", "--trials", "0", "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let out = infoplan(&["bench", "no-such-experiment"]);
    assert!(!out.status.success());
}

#[test]
fn config_subcommand_prints_the_preset() {
    let out = infoplan(&["config", "total-return", "--paper-scale"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["planner"]["budget_s"], 1.0);
    assert_eq!(v["trials"], 1000);
}
