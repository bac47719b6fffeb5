use std::path::Path;
use std::process::{Command, Output};

fn dpsk_in(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dpsk-in")).args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn complexity_prints_the_table() {
    let out = dpsk_in(&["complexity"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.starts_with("M,W,L,I,joint,separate\n"));
    assert!(text.contains("4,4,2,0,1024,1056\n"));
    assert!(text.contains("4,4,2,10,11264,6496\n"));
}

#[test]
fn out_writes_csv_and_resolved_config() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("noise.csv");
    let out = dpsk_in(&[
        "noise",
        "--length",
        "50",
        "--W",
        "1",
        "--seed",
        "9",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 51);
    assert!(text.lines().skip(1).all(|l| l.split(',').nth(1) == Some("0")));
    let cfg = std::fs::read_to_string(dir.path().join("noise.config.toml")).unwrap();
    assert!(cfg.contains("experiment = \"noise_dump\""));
    assert!(cfg.contains("seed = 9"));
    assert!(cfg.contains("W = 1"));
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "seed = 4\nA = 0.1\nseq_length = 300\nn_sequences = 2\nsnr_db = [1.0, 2.0]\n",
    )
    .unwrap();
    let out = dpsk_in(&["air", "--config", cfg.to_str().unwrap(), "--seed", "5", "--snr", "0"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 1);
    assert!(rows[0].starts_with("0.1,10,0.9,4,0,"));
    assert!(rows[0].ends_with(",300,2,5"));
}

#[test]
fn reruns_and_thread_counts_agree() {
    let args = |threads: &'static str| {
        vec![
            "ber",
            "--depth",
            "200",
            "--iterations",
            "1",
            "--snr",
            "1",
            "--max-frames",
            "4",
            "--designs",
            "joint,separate",
            "--threads",
            threads,
        ]
    };
    let a = dpsk_in(&args("1"));
    let b = dpsk_in(&args("3"));
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(stdout(&a).lines().count(), 1 + 2 * 2);
}

#[test]
fn invalid_config_exits_with_one() {
    for args in [
        vec!["air", "--A", "0"],
        vec!["ber", "--depth", "7"],
        vec!["noise", "--snr", "1,2"],
        vec!["ber", "--designs", "turbo"],
        vec!["air", "--threads", "0"],
        vec!["air", "--no-such-flag"],
    ] {
        let out = dpsk_in(&args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "unknown_key = 3\n").unwrap();
    assert_eq!(
        dpsk_in(&["air", "--config", cfg.to_str().unwrap()]).status.code(),
        Some(1)
    );
}

#[test]
fn io_failures_exit_with_two() {
    let missing = Path::new("/nonexistent-dir/run.toml");
    assert_eq!(
        dpsk_in(&["air", "--config", missing.to_str().unwrap()]).status.code(),
        Some(2)
    );
    let out = dpsk_in(&["complexity", "--out", "/nonexistent-dir/c.csv"]);
    assert_eq!(out.status.code(), Some(2));
}
