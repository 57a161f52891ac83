use std::path::Path;
use std::process::{Command, Output};

fn qcse(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qcse"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("QCSE_DETERMINISTIC", "1")
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn train_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = qcse(
        &["train", "--synthetic", "low-resource", "--layers", "1", "--epochs", "3"],
        &out,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["loss.csv", "accuracy.csv", "params.json", "manifest.json"] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let loss = std::fs::read_to_string(out.join("loss.csv")).unwrap();
    let mut lines = loss.lines();
    assert_eq!(lines.next(), Some("epoch,mean_loss,accuracy"));
    assert_eq!(lines.count(), 3);
    let acc = std::fs::read_to_string(out.join("accuracy.csv")).unwrap();
    assert!(acc.starts_with("epoch,train_accuracy,test_accuracy"));

    // the manifest is itself a valid config and reproduces the run
    let again = dir.path().join("again");
    let o = qcse(
        &["train", "--config", out.join("manifest.json").to_str().unwrap()],
        &again,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        std::fs::read(out.join("loss.csv")).unwrap(),
        std::fs::read(again.join("loss.csv")).unwrap()
    );
}

#[test]
fn too_few_qubits_is_a_capacity_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = qcse(
        &[
            "train",
            "--synthetic",
            "sentences=40,vocab=31,len=4",
            "--qubits",
            "4",
            "--epochs",
            "1",
        ],
        &dir.path().join("run"),
    );
    assert!(!o.status.success());
    let msg = stderr(&o);
    assert!(msg.starts_with("error:"), "{msg}");
    assert!(msg.contains('4'), "{msg}");
    assert!(!dir.path().join("run").join("loss.csv").exists());
}

#[test]
fn bad_flags_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["train", "--method", "nope"],
        vec!["train", "--layers", "2-1"],
        vec!["train", "--synthetic", "foo=1"],
        vec!["train", "--update", "sometimes"],
    ] {
        let o = qcse(&args, &dir.path().join("run"));
        assert!(!o.status.success(), "{args:?} should fail");
    }
}

#[test]
fn depth_sweep_table_has_parameter_counts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep");
    let o = qcse(
        &[
            "depth-sweep",
            "--synthetic",
            "sentences=12,vocab=34,len=4",
            "--qubits",
            "6",
            "--layers",
            "1-3",
            "--epochs",
            "1",
            "--baseline",
            "d=20,50",
        ],
        &out,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let mut reader = csv::Reader::from_path(out.join("table.csv")).unwrap();
    let headers = reader.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let (model, params) = (col("model"), col("params"));
    let rows: Vec<(String, usize)> = reader
        .records()
        .map(|r| {
            let r = r.unwrap();
            (r[model].to_owned(), r[params].parse().unwrap())
        })
        .collect();
    assert_eq!(
        rows,
        vec![
            ("QCSE".into(), 17),
            ("QCSE".into(), 34),
            ("QCSE".into(), 51),
            ("CBOW".into(), 680),
            ("CBOW".into(), 1700),
        ]
    );
    assert!(out.join("table.txt").is_file());
    assert!(out.join("layers-2").join("loss.csv").is_file());
    assert!(out.join("cbow-d50").join("loss.csv").is_file());
}

#[test]
fn method_sweep_and_compare_write_merged_curves() {
    let dir = tempfile::tempdir().unwrap();
    let sweep = dir.path().join("methods");
    let o = qcse(
        &["method-sweep", "--synthetic", "low-resource", "--layers", "1", "--epochs", "2"],
        &sweep,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(sweep.join("method_sweep.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap().matches("_loss").count(), 5);
    assert_eq!(csv.lines().count(), 3);

    let cmp = dir.path().join("compare");
    let o = qcse(
        &["compare-baseline", "--synthetic", "low-resource", "--layers", "1", "--epochs", "2"],
        &cmp,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let header = std::fs::read_to_string(cmp.join("compare.csv")).unwrap();
    assert!(header.starts_with("epoch,qcse_loss,qcse_accuracy,cbow_d20_loss,cbow_d20_accuracy"));
}

#[test]
fn gen_corpus_writes_sentences_and_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let text = dir.path().join("corpus.txt");
    let pairs = dir.path().join("pairs.tsv");
    let o = Command::new(env!("CARGO_BIN_EXE_qcse"))
        .args(["gen-corpus", "--synthetic", "table", "--seed", "42", "--out"])
        .arg(&text)
        .arg("--pairs")
        .arg(&pairs)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let body = std::fs::read_to_string(&text).unwrap();
    assert_eq!(body.lines().count(), 300);
    assert!(body.lines().all(|l| l.split_whitespace().count() == 4));
    assert_eq!(std::fs::read_to_string(&pairs).unwrap().lines().count(), 1200);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("|V| = 34"), "{stdout}");

    // the written corpus trains like any text file
    let o = qcse(
        &["train", "--corpus", text.to_str().unwrap(), "--layers", "1", "--epochs", "1"],
        &dir.path().join("run"),
    );
    assert!(o.status.success(), "{}", stderr(&o));
}
