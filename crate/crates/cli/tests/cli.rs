use std::path::Path;
use std::process::{Command, Output};

use bellrmt_core::engine::io::{load_results, OutputFormat};

fn bellrmt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bellrmt"))
        .args(args)
        .env_remove("BELLRMT_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn analytic_prints_reference_table() {
    let o = bellrmt(&["analytic"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let a2 = v["mean_a2_hs"].as_f64().unwrap();
    assert!((a2 - 1.08343618).abs() < 1e-4);
    assert!((v["mean_ainf_hs"].as_f64().unwrap() - 0.930115).abs() < 1e-6);
    for k in ["2", "3", "6", "12"] {
        assert!(v["mean_ainf_structured"][k].is_f64());
    }
    assert!((v["catalan"].as_f64().unwrap() - 0.9159656).abs() < 1e-7);
}

#[test]
fn maxent_sweep_always_violates() {
    let o = bellrmt(&["sweep", "--ensemble", "maxent", "--n-min", "2", "--n-max", "8"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "ensemble,k,N,samples,mean,std,stderr,violation_fraction,seed"
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    let ns: Vec<&str> = rows.iter().map(|r| r[2]).collect();
    assert_eq!(ns, ["2", "3", "4", "6", "8"]);
    for r in &rows {
        assert_eq!(r[0], "maxent");
        assert_eq!(r[1], "");
        assert!(r[4].parse::<f64>().unwrap() < 1.0);
        assert_eq!(r[5], "0");
        assert_eq!(r[7], "1");
    }
    assert_eq!(rows[0][4], "0.792893218813");
}

#[test]
fn repeated_invocation_is_byte_identical() {
    let args = [
        "sweep", "--ensemble", "hs", "--n-min", "2", "--n-max", "2", "--samples", "10", "--seed", "7",
    ];
    let a = bellrmt(&args);
    let b = bellrmt(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(stdout(&a).lines().count(), 2);
    let c = bellrmt(&[
        "sweep", "--ensemble", "hs", "--n-min", "2", "--n-max", "2", "--samples", "10", "--seed", "8",
    ]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn thread_env_fallback_matches_flag() {
    let base = [
        "sweep", "--ensemble", "hs,structured", "--k", "3", "--n-grid", "list:3,9", "--samples",
        "25",
    ];
    let flag = bellrmt(&[&base[..], &["--threads", "1"]].concat());
    let env = Command::new(env!("CARGO_BIN_EXE_bellrmt"))
        .args(base)
        .env("BELLRMT_THREADS", "3")
        .output()
        .unwrap();
    assert_eq!(env.status.code(), Some(0));
    assert_eq!(flag.stdout, env.stdout);
    let bad = Command::new(env!("CARGO_BIN_EXE_bellrmt"))
        .args(base)
        .env("BELLRMT_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
    assert!(stderr(&bad).contains("BELLRMT_THREADS"));
}

#[test]
fn usage_errors_name_the_flag() {
    let cases: [(&[&str], &str); 7] = [
        (&["sweep", "--bogus"], "--bogus"),
        (&["sweep", "--samples", "1"], "--samples"),
        (&["sweep", "--ensemble", "structured"], "--k"),
        (&["sweep", "--ensemble", "hs", "--k", "2"], "--k"),
        (&["sweep", "--n-grid", "list:1,4"], "N = 1"),
        (&["sweep", "--n-grid", "geometric"], "--n-grid"),
        (&["sweep", "--ensemble", "lattice"], "--ensemble"),
    ];
    for (args, needle) in cases {
        let o = bellrmt(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(stderr(&o).contains(needle), "{args:?}: {}", stderr(&o));
    }
    assert_eq!(bellrmt(&["sweep", "--n-min", "9", "--n-max", "4"]).status.code(), Some(2));
    assert_eq!(bellrmt(&["hist", "--ensemble", "hs", "--n", "1"]).status.code(), Some(2));
    assert_eq!(bellrmt(&[]).status.code(), Some(2));
}

#[test]
fn unwritable_output_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("missing").join("r.csv");
    let o = bellrmt(&[
        "sweep", "--ensemble", "maxent", "--n-min", "2", "--n-max", "3", "--out",
        path_str(&out),
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn config_file_with_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"ensembles": ["hs", "structured:2"], "n_grid": [2, 4], "samples_per_point": 5, "master_seed": 3}"#,
    )
    .unwrap();
    let o = bellrmt(&["sweep", "--config", path_str(&cfg), "--samples", "6"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 4);
    for r in &rows {
        let f: Vec<&str> = r.split(',').collect();
        assert_eq!(f[3], "6");
        assert_eq!(f[8], "3");
    }
    assert!(rows[2].starts_with("structured,2,2,"));

    std::fs::write(&cfg, r#"{"samples": 5}"#).unwrap();
    let o = bellrmt(&["sweep", "--config", path_str(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--config"));
}

#[test]
fn csv_and_json_outputs_load_back() {
    let dir = tempfile::tempdir().unwrap();
    for (format, name) in [("csv", "r.csv"), ("json", "r.json")] {
        let out = dir.path().join(name);
        let o = bellrmt(&[
            "sweep", "--ensemble", "hs,maxent", "--n-grid", "list:2,6", "--samples", "40",
            "--bins", "8", "--format", format, "--out", path_str(&out),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let r = load_results(&out, format.parse::<OutputFormat>().unwrap()).unwrap();
        assert_eq!(r.points.len(), 4);
        for p in &r.points {
            assert_eq!(p.histogram.counts.len(), 8);
            assert_eq!(p.histogram.total(), 40);
        }
    }
    let hist = std::fs::read_to_string(dir.path().join("r.csv.hist.csv")).unwrap();
    assert_eq!(hist.lines().next().unwrap(), "ensemble,k,N,bin_lo,bin_hi,count");
}

#[test]
fn hist_subcommand_conserves_counts() {
    let o = bellrmt(&[
        "hist", "--ensemble", "structured", "--k", "2", "--n", "12", "--samples", "300", "--bins",
        "20", "--seed", "5",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "ensemble,k,N,bin_lo,bin_hi,count");
    let counts: Vec<u64> = lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            assert_eq!(&f[..3], ["structured", "2", "12"]);
            f[5].parse().unwrap()
        })
        .collect();
    assert_eq!(counts.len(), 20);
    assert_eq!(counts.iter().sum::<u64>(), 300);
}

#[test]
fn validate_passes() {
    let o = bellrmt(&["validate"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = stdout(&o);
    assert!(text.lines().all(|l| l.starts_with("PASS ")));
    for needle in ["lue", "c_k", "ks", "metropolis vs wishart N=50", "sqrt"] {
        assert!(text.contains(needle), "{needle}");
    }
}
