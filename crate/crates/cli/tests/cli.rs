use std::path::Path;
use std::process::{Command, Output};

fn dtil(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_dtil"));
    cmd.args(args);
    if let Some(t) = threads {
        cmd.env("DTIL_THREADS", t);
    }
    cmd.output().expect("spawn dtil")
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn identities_pass() {
    let out = dtil(&["check", "identities", "--samples", "2000", "--seed", "3"], None);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("identity_failures = 0"));
    assert!(text.contains("quartic_violations = 0"));
}

#[test]
fn minimize_is_bit_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "n = 4\nseed = 5\namplitude = 0.02\nflow.max_steps = 15\n").unwrap();
    let mut results = Vec::new();
    for t in ["1", "4"] {
        let snap = dir.path().join(format!("out{t}.snap"));
        let trace = dir.path().join(format!("trace{t}.csv"));
        let out = dtil(
            &["minimize", "--config", arg(&cfg), "--out", arg(&snap), "--trace", arg(&trace)],
            Some(t),
        );
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        results.push((std::fs::read(&snap).unwrap(), std::fs::read(&trace).unwrap()));
    }
    assert_eq!(results[0].0, results[1].0);
    assert_eq!(results[0].1, results[1].1);
    let trace = String::from_utf8(results[0].1.clone()).unwrap();
    assert!(trace.contains("# seed = 5"));
    assert!(trace.lines().any(|l| l.starts_with("step,L,")));
}

#[test]
fn zero_start_takes_no_steps() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("zero.cfg");
    std::fs::write(&cfg, "n = 4\ninit = zero\n").unwrap();
    let snap = dir.path().join("z.snap");
    let trace = dir.path().join("z.csv");
    let out = dtil(&["minimize", "--config", arg(&cfg), "--out", arg(&snap), "--trace", arg(&trace)], None);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&trace).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[1].starts_with("0,"));

    let mono = dtil(&["monotonicity", "--in", arg(&snap), "--center", "0,0,0,0,0,0", "--radii", "1,1.5,2"], None);
    assert!(mono.status.success());
    let res = dtil(&["residuals", "--in", arg(&snap)], None);
    assert!(String::from_utf8(res.stdout).unwrap().contains("r1_norm = 0.00000000000000000e0"));
}

#[test]
fn bad_config_reports_every_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "n = 2\nflow.backtrack = 3\nbogus = 1\n").unwrap();
    let out = dtil(&["minimize", "--config", arg(&cfg), "--out", "x", "--trace", "y"], None);
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 3"), "{err}");
    assert!(err.contains("bogus"), "{err}");
}

#[test]
fn malformed_snapshot_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("junk.snap");
    std::fs::write(&p, b"not a snapshot").unwrap();
    let out = dtil(&["residuals", "--in", arg(&p)], None);
    assert!(!out.status.success());
    assert!(String::from_utf8(out.stderr).unwrap().contains("error"));
}

#[test]
fn synthetic_sequence_yields_one_atom() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("seq");
    let out = dtil(
        &[
            "synth", "sequence", "--n", "8", "--spacing", "0.5", "--center", "2,2,2,2,2,2", "--width", "0.5",
            "--mass", "1", "--factors", "1,0.7,0.5,0.35", "--prefix", arg(&prefix),
        ],
        None,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let files: Vec<String> = String::from_utf8(out.stdout).unwrap().lines().map(String::from).collect();
    assert_eq!(files.len(), 4);
    let report = dtil(&["concentrate", "--seq", &files.join(","), "--epsilon", "0.5", "--r0", "1", "--rungs", "2"], None);
    assert!(report.status.success(), "{}", String::from_utf8_lossy(&report.stderr));
    let text = String::from_utf8(report.stdout).unwrap();
    assert!(text.contains("atoms: 1"), "{text}");
}
