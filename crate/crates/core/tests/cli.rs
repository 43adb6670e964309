use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn nettomo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nettomo"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn bench_prints_summary() {
    let out = nettomo(&["bench", "--suite", "rs-locate", "--trials", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let last = text.lines().last().unwrap();
    assert!(
        last.starts_with("summary op=locate-adversary-rs trials=5 successes=5"),
        "{last}"
    );
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(nettomo(&["bogus"]).status.code(), Some(1));
    assert_eq!(nettomo(&["bench", "--nope"]).status.code(), Some(1));
    assert_eq!(
        nettomo(&["bench", "--suite", "missing"]).status.code(),
        Some(1)
    );
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", "unknown_key = 3\n");
    assert_eq!(
        nettomo(&["gen-net", "--config", &cfg]).status.code(),
        Some(1)
    );
}

#[test]
fn incompatible_config_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", "z = 2\nC = 4\n");
    let out = nettomo(&["locate", "--alg", "adversary-rlnc", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn scale_cap_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.toml",
        "profile = \"locate-adv\"\nz = 3\nC = 7\nnodes = 9\nmax_subsets = 1000\ntrials = 2\n",
    );
    let out = nettomo(&["locate", "--alg", "adversary-rlnc", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8(out.stderr)
        .unwrap()
        .contains("exceeds configured cap"));
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for d in [&a, &b] {
        let out = nettomo(&["simulate", "--seed", "7", "--out", d.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
    }
    for f in ["network.txt", "assignment.txt", "traces.jsonl"] {
        let x = fs::read(a.join(f)).unwrap();
        assert!(!x.is_empty(), "{f}");
        assert_eq!(x, fs::read(b.join(f)).unwrap(), "{f}");
    }
    let c = dir.path().join("c");
    nettomo(&["simulate", "--seed", "8", "--out", c.to_str().unwrap()]);
    assert_ne!(
        fs::read(a.join("traces.jsonl")).unwrap(),
        fs::read(c.join("traces.jsonl")).unwrap()
    );
}

#[test]
fn locate_from_dumps() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.toml",
        "op = \"locate-erasure\"\nt = 5\nn = 12\np_f = 0.05\n",
    );
    let sim = dir.path().join("sim");
    let s = sim.to_str().unwrap();
    assert!(
        nettomo(&["simulate", "--config", &cfg, "--seed", "3", "--out", s])
            .status
            .success()
    );
    let traces = sim.join("traces.jsonl");
    let net = sim.join("network.txt");
    let out = nettomo(&[
        "locate",
        "--alg",
        "erasure",
        "--config",
        &cfg,
        "--seed",
        "3",
        "--format",
        "json-lines",
        "--traces",
        traces.to_str().unwrap(),
        "--network",
        net.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let reports: Vec<serde_json::Value> = text
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert!(!reports.is_empty());
    for r in reports {
        assert_eq!(r["recovered"]["kind"], "edge-set");
    }
}

#[test]
fn json_lines_experiment_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", "trials = 4\nn = 64\n");
    let run = || {
        nettomo(&[
            "locate",
            "--alg",
            "random-rlnc",
            "--config",
            &cfg,
            "--format",
            "json-lines",
        ])
        .stdout
    };
    let a = run();
    assert_eq!(a, run());
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().count(), 5);
    let summary: serde_json::Value = serde_json::from_str(text.lines().last().unwrap()).unwrap();
    assert_eq!(summary["summary"]["trials"], 4);
}

#[test]
fn gen_net_writes_parseable_networks() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("nets");
    let status = nettomo(&["gen-net", "--count", "3", "--out", out.to_str().unwrap()]).status;
    assert!(status.success());
    for i in 0..3 {
        let text = fs::read_to_string(out.join(format!("net{i}.txt"))).unwrap();
        nettomo::netgraph::parse_network(&text).unwrap();
    }
}
