//! End-to-end checks of the binary's flag handling, exit-code contract, and
//! output determinism. Sample sizes are kept small; the statistical behavior
//! itself is covered by the library and acceptance suites.

use std::path::Path;
use std::process::{Command, Output};

fn dpaudit(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_dpaudit"));
    cmd.args(args);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("failed to spawn dpaudit")
}

#[test]
fn missing_mechanism_is_a_usage_error() {
    let out = dpaudit(&["audit", "--out", "/tmp/never-written.csv"], &[]);
    assert_eq!(out.status.code(), Some(64), "{out:?}");
}

#[test]
fn unknown_flags_are_rejected() {
    let out = dpaudit(&["audit", "--mechanism", "rna-lap", "--frobnicate", "1"], &[]);
    assert_eq!(out.status.code(), Some(64));
    let out = dpaudit(&["definitely-not-a-command"], &[]);
    assert_eq!(out.status.code(), Some(64));
}

#[test]
fn help_lists_every_subcommand_and_exits_zero() {
    let out = dpaudit(&["--help"], &[]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    for cmd in ["audit", "synthetic-mse", "estimate", "poly-table"] {
        assert!(text.contains(cmd), "help is missing '{cmd}'");
    }
}

#[test]
fn compliant_mechanism_exits_zero_and_writes_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("rna.csv");
    let out = dpaudit(
        &[
            "audit",
            "--mechanism", "rna-lap",
            "--eps0", "0.5",
            "--n", "3000",
            "--trials", "3",
            "--seed", "7",
            "--eps-grid", "0.5:0.5:1",
            "--out", out_path.to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(&out_path).unwrap();
    assert!(csv.starts_with("epsilon,delta_hat,stderr,trials,n,category"));
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn violating_mechanism_exits_two_with_a_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("wrong.csv");
    let out = dpaudit(
        &[
            "audit",
            "--mechanism", "histogram-wrong-noise",
            "--eps0", "0.5",
            "--n", "5000",
            "--trials", "3",
            "--seed", "7",
            "--eps-grid", "0.5:0.5:1",
            "--out", out_path.to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    let cert = std::fs::read_to_string(out_path.with_extension("cert")).unwrap();
    assert!(cert.contains("margin="));
    let margin: f64 = cert
        .lines()
        .find_map(|l| l.strip_prefix("margin="))
        .unwrap()
        .parse()
        .unwrap();
    assert!(margin > 0.0);
}

#[test]
fn reports_are_byte_identical_across_reruns() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, seed: &str| {
        let out_path = dir.path().join(name);
        let out = dpaudit(
            &[
                "audit",
                "--mechanism", "mtgm",
                "--eps0", "0.5",
                "--delta0", "0.2",
                "--n", "2000",
                "--trials", "4",
                "--seed", seed,
                "--eps-grid", "0.2:0.8:3",
                "--out", out_path.to_str().unwrap(),
            ],
            &[],
        );
        assert!(out.status.code().is_some());
        std::fs::read(&out_path).unwrap()
    };
    let a = run("a.csv", "11");
    let b = run("b.csv", "11");
    let c = run("c.csv", "12");
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn synthetic_sweep_writes_one_row_per_budget() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("mse.csv");
    let out = dpaudit(
        &[
            "synthetic-mse",
            "--s", "20",
            "--n-grid", "500,1000",
            "--trials", "5",
            "--seed", "3",
            "--out", out_path.to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(&out_path).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.starts_with("n,mse_plugin,mse_minimax,se_plugin,se_minimax"));
}

#[test]
fn poly_table_is_idempotent_and_guards_the_degree_cap() {
    let dir = tempfile::tempdir().unwrap();
    let cache_path = dir.path().join("table.txt");
    let args = [
        "--cache", cache_path.to_str().unwrap(),
        "poly-table", "--k", "9",
    ];
    let out = dpaudit(&args, &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout).to_string();
    assert!(text.contains("sup_error"));
    let first = std::fs::read(&cache_path).unwrap();

    let out = dpaudit(&args, &[]);
    assert_eq!(out.status.code(), Some(0));
    let second = std::fs::read(&cache_path).unwrap();
    assert_eq!(first, second, "rebuild must be a byte-level no-op");

    let out = dpaudit(
        &["--cache", cache_path.to_str().unwrap(), "poly-table", "--k", "61"],
        &[],
    );
    assert_eq!(out.status.code(), Some(64));
    assert!(String::from_utf8_lossy(&out.stderr).contains("precision"));
}

#[test]
fn cache_path_can_come_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cache_path = dir.path().join("env-table.txt");
    let out = dpaudit(
        &["poly-table", "--k", "4"],
        &[("DPAUDIT_CACHE", cache_path.to_str().unwrap())],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(cache_path.exists());
}

#[test]
fn estimate_reads_histogram_files() {
    let dir = tempfile::tempdir().unwrap();
    let write_hist = |name: &str, rows: &str| -> String {
        let path = dir.path().join(name);
        std::fs::write(&path, format!("n=1000\n{rows}")).unwrap();
        path.to_str().unwrap().to_string()
    };
    let p = write_hist("p.txt", "0,700\n1,300\n");
    let q = write_hist("q.txt", "0,300\n1,700\n");
    let out = dpaudit(&["estimate", "--p-hist", &p, "--q-hist", &q, "--eps", "0.0"], &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("plug-in"), "{text}");
    assert!(text.contains("0.4"), "plug-in TV should be ~0.4: {text}");
}

#[test]
fn missing_input_file_is_an_io_error() {
    let out = dpaudit(
        &[
            "estimate",
            "--p-hist", "/nonexistent/p.txt",
            "--q-hist", "/nonexistent/q.txt",
            "--eps", "0.4",
        ],
        &[],
    );
    assert_eq!(out.status.code(), Some(74));
}

#[test]
fn config_file_provides_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("mech.conf");
    std::fs::write(&config_path, "kind = mtgm\neps0 = 0.5\ndelta0 = 0.2\n").unwrap();
    let out_path = dir.path().join("r.csv");
    let out = dpaudit(
        &[
            "audit",
            "--config", config_path.to_str().unwrap(),
            "--n", "2000",
            "--trials", "2",
            "--seed", "5",
            "--eps-grid", "0.5:0.5:1",
            "--out", out_path.to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(Path::new(&out_path).exists());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("mtgm"), "{text}");
}
