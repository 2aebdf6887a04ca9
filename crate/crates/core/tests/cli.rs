use std::path::Path;
use std::process::{Command, Output};

use qspkit::metrics::sup_error;
use qspkit::qspmodel::read_sequences;

fn qspkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qspkit"))
        .args(args)
        .env("QSPKIT_JOBS", "1")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn field<'a>(text: &'a str, key: &str) -> &'a str {
    text.lines()
        .find_map(|l| l.strip_prefix(key)?.strip_prefix('='))
        .unwrap_or_else(|| panic!("no {key} in {text}"))
}

fn find(dir: &Path, extra: &[&str]) -> (Output, String) {
    let out = dir.join("angles.json");
    let out = out.to_str().unwrap().to_string();
    let mut args = vec!["find-angles", "--tau", "10", "--out", &out];
    args.extend_from_slice(extra);
    (qspkit(&args), out)
}

#[test]
fn gqsp_prony_reaches_machine_precision() {
    let dir = tempfile::tempdir().unwrap();
    let (o, path) = find(
        dir.path(),
        &[
            "--convention",
            "gqsp",
            "--method",
            "prony",
            "--degree",
            "34",
        ],
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let text = stdout(&o);
    assert_eq!(field(&text, "method"), "g.p.c");
    assert_eq!(field(&text, "queries"), "136");
    let eps: f64 = field(&text, "epsilon").parse().unwrap();
    assert!(eps <= 1e-11, "{eps}");

    let seqs = read_sequences(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert!((sup_error(&seqs, 10.0).unwrap() - eps).abs() <= 1e-15);

    let v = qspkit(&["verify", "--in", &path, "--tau", "10"]);
    assert_eq!(v.status.code(), Some(0));
    assert_eq!(field(&stdout(&v), "ok"), "true");
    // the wrong tau fails the tolerance check
    let v = qspkit(&["verify", "--in", &path, "--tau", "11"]);
    assert_eq!(v.status.code(), Some(3));
    assert_eq!(field(&stdout(&v), "ok"), "false");
}

#[test]
fn bad_arguments_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    for extra in [
        &[
            "--convention",
            "gqsp",
            "--method",
            "prony",
            "--degree",
            "33",
        ][..],
        &[
            "--convention",
            "gqsp",
            "--method",
            "prony",
            "--decomp",
            "halve",
            "--degree",
            "34",
        ],
        &[
            "--convention",
            "wz",
            "--method",
            "prony",
            "--decomp",
            "carve",
            "--degree",
            "10",
        ],
        &["--convention", "wy", "--method", "prony", "--degree", "10"],
        &["--convention", "wz", "--method", "drf", "--degree", "0"],
    ] {
        let (o, _) = find(dir.path(), extra);
        assert_eq!(o.status.code(), Some(1), "{extra:?}");
    }
    assert_eq!(qspkit(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(qspkit(&["--help"]).status.code(), Some(0));
}

#[test]
fn method_failure_exits_with_two() {
    // a capitalization this large pushes the target above modulus one
    let dir = tempfile::tempdir().unwrap();
    let (o, _) = find(
        dir.path(),
        &[
            "--convention",
            "wz",
            "--method",
            "drf",
            "--decomp",
            "halve-cap",
            "--eps-cap",
            "0.9",
            "--degree",
            "10",
        ],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("precondition"));
}

#[test]
fn verify_rejects_malformed_files() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    for body in [
        "not json",
        r#"[{"convention": "wx", "d_plus": 3, "d_minus": 0, "phi": [0.0], "alpha": 1, "weight_re": 1, "weight_im": 0}]"#,
    ] {
        std::fs::write(&bad, body).unwrap();
        let o = qspkit(&["verify", "--in", bad.to_str().unwrap(), "--tau", "1"]);
        assert_eq!(o.status.code(), Some(1), "{body}");
    }
    let missing = dir.path().join("missing.json");
    assert_eq!(
        qspkit(&["verify", "--in", missing.to_str().unwrap(), "--tau", "1"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn bench_sweep_writes_csv_and_jsonl() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("sweep.csv");
    let o = qspkit(&[
        "bench",
        "sweep",
        "--methods",
        "g.p.c,wz.drf.h",
        "--dmin",
        "8",
        "--dmax",
        "16",
        "--dstep",
        "4",
        "--trials",
        "2",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert_eq!(field(&stdout(&o), "records"), "6");
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(
        header.contains("method") && header.contains("epsilon"),
        "{header}"
    );
    assert_eq!(lines.count(), 6);
    let jsonl = std::fs::read_to_string(csv.with_extension("jsonl")).unwrap();
    for line in jsonl.lines() {
        serde_json::from_str::<serde_json::Value>(line).unwrap();
    }
    assert_eq!(jsonl.lines().count(), 6);

    let o = qspkit(&["bench", "sweep", "--methods", "g.p.h"]);
    assert_eq!(o.status.code(), Some(1));
}
