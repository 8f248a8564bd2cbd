use std::path::Path;
use std::process::Command;

use finger::bench::{read_records, write_records, BenchRecord, CSV_HEADER, SCHEMA_VERSION};

fn finger(dir: &Path, args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_finger"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = finger(dir, args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn prepare(dir: &Path) {
    ok(
        dir,
        &[
            "gen",
            "--n",
            "2000",
            "--queries",
            "100",
            "--dim",
            "24",
            "--base-out",
            "b.fvecs",
            "--query-out",
            "q.fvecs",
        ],
    );
    ok(
        dir,
        &[
            "gt",
            "--base",
            "b.fvecs",
            "--queries",
            "q.fvecs",
            "--k",
            "10",
            "--out",
            "gt.ivecs",
        ],
    );
}

#[test]
fn pipeline_produces_parseable_records() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    prepare(d);
    let build = ok(
        d,
        &[
            "build",
            "--base",
            "b.fvecs",
            "--m",
            "8",
            "--ef-construction",
            "60",
            "--out",
            "g.bin",
        ],
    );
    assert!(build.contains("edges"));
    let train = ok(
        d,
        &[
            "train", "--base", "b.fvecs", "--graph", "g.bin", "--rank", "8", "--out", "i.bin",
        ],
    );
    assert!(train.contains("corr") && train.contains("index_bytes"));
    ok(
        d,
        &[
            "bench",
            "--base",
            "b.fvecs",
            "--queries",
            "q.fvecs",
            "--gt",
            "gt.ivecs",
            "--graph",
            "g.bin",
            "--index",
            "i.bin",
            "--efs",
            "20,60",
            "--repeats",
            "1",
            "--workers",
            "2",
            "--out",
            "bench.csv",
        ],
    );
    let records = read_records(std::fs::File::open(d.join("bench.csv")).unwrap()).unwrap();
    assert_eq!(records.len(), 6);
    for r in &records {
        assert!((0.0..=1.0).contains(&r.recall) && r.throughput_qps > 0.0);
        assert_eq!(r.workers, 2);
    }
    for pair in records.chunks(3) {
        let (exact, finger) = (&pair[0], &pair[1]);
        assert_eq!(
            (exact.algorithm.as_str(), finger.algorithm.as_str()),
            ("exact-greedy", "finger")
        );
        assert!(finger.effective_calls < exact.exact_calls);
    }

    let config = d.join("c.toml");
    std::fs::write(
        &config,
        "base = \"b.fvecs\"\nqueries = \"q.fvecs\"\ngraph = \"g.bin\"\nefs = [100]\n",
    )
    .unwrap();
    let json = ok(d, &["stats", "--config", "c.toml", "--index", "i.bin"]);
    let profile: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(profile["steps"][0]["exceeding"], 0);
    assert_eq!(profile["efs"], 100);

    ok(
        d,
        &[
            "ablate",
            "--base",
            "b.fvecs",
            "--queries",
            "q.fvecs",
            "--gt",
            "gt.ivecs",
            "--graph",
            "g.bin",
            "--index",
            "i.bin",
            "--ablation-ranks",
            "8",
            "--ablation-pairs",
            "500",
            "--out",
            "ablate.csv",
        ],
    );
    let rows = read_records(std::fs::File::open(d.join("ablate.csv")).unwrap()).unwrap();
    let labels: Vec<_> = rows.iter().map(|r| r.algorithm.as_str()).collect();
    assert_eq!(
        labels,
        ["finger", "finger-no-matching", "rplsh", "rplsh+matching"]
    );
    assert!(rows.iter().all(|r| r.approx_error.is_some()));
}

#[test]
fn exhaustive_beam_finds_everything() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        d,
        &[
            "gen",
            "--n",
            "300",
            "--queries",
            "20",
            "--dim",
            "8",
            "--base-out",
            "b.fvecs",
            "--query-out",
            "q.fvecs",
        ],
    );
    let csv = ok(
        d,
        &[
            "bench",
            "--base",
            "b.fvecs",
            "--queries",
            "q.fvecs",
            "--efs",
            "300",
            "--rank",
            "4",
            "--repeats",
            "1",
        ],
    );
    let records = read_records(csv.as_bytes()).unwrap();
    assert_eq!(records[0].algorithm, "exact-greedy");
    assert_eq!(records[0].recall, 1.0);
}

#[test]
fn failures_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = finger(dir.path(), &["bench", "--base", "missing.fvecs"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.fvecs"));
    std::fs::write(dir.path().join("bad.fvecs"), [1u8, 0, 0]).unwrap();
    let out = finger(
        dir.path(),
        &["build", "--base", "bad.fvecs", "--out", "g.bin"],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("truncated at byte 0"));
}

#[test]
fn csv_schema_round_trip() {
    let rec = BenchRecord {
        schema_version: SCHEMA_VERSION,
        algorithm: "finger".into(),
        efs: 100,
        k: 10,
        rank: Some(16),
        queries: 5,
        recall: 0.98,
        exact_calls: 12.5,
        approx_calls: 40.0,
        effective_calls: 22.5,
        approx_error: None,
        workers: 4,
        throughput_qps: 1234.5,
        elapsed_s: 0.004,
    };
    let none = BenchRecord {
        rank: None,
        approx_error: Some(0.25),
        ..rec.clone()
    };
    let mut buf = Vec::new();
    write_records(&mut buf, &[rec.clone(), none.clone()]).unwrap();
    assert!(String::from_utf8_lossy(&buf).starts_with(&CSV_HEADER.join(",")));
    assert_eq!(read_records(buf.as_slice()).unwrap(), vec![rec, none]);

    let renamed = String::from_utf8(buf)
        .unwrap()
        .replacen("recall", "recall10", 1);
    assert!(read_records(renamed.as_bytes()).is_err());
}
