//! Acceptance suite. Each test prints one `PASS`/`FAIL` line to stderr
//! (bypassing output capture) and then asserts.
//!
//! Run with `cargo test -p qcse-cli --test acceptance --release`.

use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use qcse_core::context::{ContextEncoding, ContextWindow, EncodingSchedule};
use qcse_core::corpus::{qubits_for_vocab, target_bits, SyntheticSpec};
use qcse_core::experiment::{
    cmd_method_sweep, prepare_dataset, run_experiment, CorpusSource, ModelSpec, RunConfig,
};
use qcse_core::model::{build_ansatz_ops, build_encoding_ops, count_gates, AnsatzParams, ModelConfig};
use qcse_core::qsim::{GateOp, StateVector};
use qcse_core::train::{fit, gradient, EncodedPair, GradMode, TrainSettings};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[path = "../../core/tests/common/dense_oracle.rs"]
mod dense_oracle;

fn report(id: u32, name: &str, ok: bool, detail: &str) {
    let status = if ok { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "[{status}] criterion {id:>2} {name}: {detail}");
}

fn random_gate(m: usize, rng: &mut ChaCha8Rng) -> GateOp {
    let q = rng.gen_range(0..m);
    let other = (q + rng.gen_range(1..m)) % m;
    let angle = rng.gen_range(-10.0..10.0);
    match rng.gen_range(0..9) {
        0 => GateOp::H(q),
        1 => GateOp::X(q),
        2 => GateOp::Y(q),
        3 => GateOp::Z(q),
        4 => GateOp::RX(q, angle),
        5 => GateOp::RZ(q, angle),
        6 => GateOp::CNOT { control: q, target: other },
        7 => GateOp::CZ { control: q, target: other },
        _ => GateOp::CRZ {
            control: q,
            target: other,
            angle,
        },
    }
}

#[test]
fn criterion_01_simulator_matches_dense_oracle() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let m = rng.gen_range(2..=4);
        let len = rng.gen_range(1..=30);
        let ops: Vec<GateOp> = (0..len).map(|_| random_gate(m, &mut rng)).collect();
        // random normalized start state
        let raw: Vec<Complex64> = (0..1 << m)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let norm = raw.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        let init: Vec<Complex64> = raw.iter().map(|a| a / norm).collect();
        let mut state = StateVector::from_amplitudes(init.clone()).unwrap();
        let mut reference = init;
        for op in &ops {
            state.apply(op).unwrap();
            reference = dense_oracle::matvec(&dense_oracle::dense(m, op), &reference);
        }
        for (a, b) in state.amplitudes().iter().zip(&reference) {
            worst = worst.max((a - b).norm());
        }
    }
    let elapsed = start.elapsed();
    let ok = worst < 1e-12 && elapsed < Duration::from_secs(10);
    report(
        1,
        "simulator vs dense oracle",
        ok,
        &format!("1000 circuits, max deviation {worst:.2e}, {:.2}s", elapsed.as_secs_f64()),
    );
    assert!(ok);
}

#[test]
fn criterion_02_parameter_counts() {
    let counts: Vec<usize> = (1..=8)
        .map(|layers| ModelConfig::new(6, layers, ContextEncoding::ExpDecaySin).num_params())
        .collect();
    let five = ModelConfig::new(5, 3, ContextEncoding::ExpDecaySin).num_params();
    let ok = counts == [17, 34, 51, 68, 85, 102, 119, 136] && five == 42;
    report(2, "parameter counts", ok, &format!("m=6: {counts:?}, m=5 M=3: {five}"));
    assert!(ok);
}

#[test]
fn criterion_03_gate_count_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut checked = 0;
    let mut mismatches = Vec::new();
    for m in 2..=8 {
        for big_m in 1..=8 {
            for l in 1..=4 {
                let schedule = EncodingSchedule::from_layers(m, vec![vec![0.3; 2 * m]; l]).unwrap();
                let built = build_encoding_ops(&schedule, m).unwrap().len()
                    + build_ansatz_ops(&AnsatzParams::random(m, big_m, &mut rng)).len();
                let formula = (3 * m - 1) * (big_m + l) + m;
                if built != formula || count_gates(m, big_m, l).total != formula {
                    mismatches.push((m, big_m, l));
                }
                checked += 1;
            }
        }
    }
    let ok = mismatches.is_empty();
    report(
        3,
        "gate count formula",
        ok,
        &format!("{checked} (m, M, L) triples, mismatches {mismatches:?}"),
    );
    assert!(ok);
}

#[test]
fn criterion_04_qubit_count_rule() {
    let got = [31, 27, 34].map(qubits_for_vocab);
    let ok = got == [5, 5, 6];
    report(4, "qubit count rule", ok, &format!("|V| = 31, 27, 34 -> m = {got:?}"));
    assert!(ok);
}

#[test]
fn criterion_05_parameter_shift_matches_finite_differences() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for i in 0..20 {
        let m = rng.gen_range(2..=4);
        let layers = rng.gen_range(1..=3);
        let v = rng.gen_range(2..=(1usize << m));
        let n = rng.gen_range(1..=4);
        let window = ContextWindow::new((0..n).map(|_| rng.gen_range(0..v)).collect(), v).unwrap();
        let target = target_bits(rng.gen_range(0..v), m).unwrap();
        let params = AnsatzParams::random(m, layers, &mut rng);
        let cfg = ModelConfig::new(m, layers, ContextEncoding::ALL[i % 5]);
        let ps = gradient(&window, &target, &params, &cfg, &TrainSettings::default()).unwrap();
        let fd_settings = TrainSettings {
            grad_mode: GradMode::FiniteDifference,
            ..Default::default()
        };
        let fd = gradient(&window, &target, &params, &cfg, &fd_settings).unwrap();
        for (a, b) in ps.iter().zip(&fd) {
            worst = worst.max((a - b).abs());
        }
    }
    let elapsed = start.elapsed();
    let ok = worst < 1e-4 && elapsed < Duration::from_secs(60);
    report(
        5,
        "parameter shift vs finite differences",
        ok,
        &format!("20 configs, max |diff| {worst:.2e}, {:.2}s", elapsed.as_secs_f64()),
    );
    assert!(ok);
}

fn table_config(seed: u64, layers: usize) -> RunConfig {
    RunConfig {
        corpus: CorpusSource::Synthetic(SyntheticSpec::table_scale(seed)),
        model: ModelSpec {
            qubits: Some(6),
            layers,
            method: ContextEncoding::ExpDecaySin,
            ..Default::default()
        },
        training: TrainSettings {
            seed,
            ..Default::default()
        },
        ..Default::default()
    }
}

#[test]
fn criterion_06_training_reduces_loss() {
    let start = Instant::now();
    let cfg = table_config(42, 6);
    let data = prepare_dataset(&cfg).unwrap();
    let model = cfg.model.resolve(data.vocab.len()).unwrap();
    let result = run_experiment(&data, &model, &cfg.training).unwrap();
    let loss = |epoch: usize| result.records[epoch - 1].mean_loss;
    let (first, tenth, last) = (loss(1), loss(10), loss(50));
    let drop = (first - last) / first;
    let ok = data.vocab.len() == 34
        && data.num_pairs() + data.dropped_pairs == 1200
        && drop >= 0.05
        && last <= tenth;
    report(
        6,
        "training reduces loss",
        ok,
        &format!(
            "|V| = {}, pairs {}, loss {first:.4} -> {tenth:.4} (epoch 10) -> {last:.4}, drop {:.1}%, {:.0}s",
            data.vocab.len(),
            data.num_pairs(),
            100.0 * drop,
            start.elapsed().as_secs_f64()
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_07_deeper_ansatz_is_more_accurate() {
    let start = Instant::now();
    let seeds = [1u64, 2, 3, 4, 5];
    let final_accuracy = |seed: u64, layers: usize| {
        let cfg = table_config(seed, layers);
        let data = prepare_dataset(&cfg).unwrap();
        let model = cfg.model.resolve(data.vocab.len()).unwrap();
        let result = run_experiment(&data, &model, &cfg.training).unwrap();
        result.final_record().unwrap().accuracy
    };
    let shallow: Vec<f64> = seeds.iter().map(|&s| final_accuracy(s, 1)).collect();
    let deep: Vec<f64> = seeds.iter().map(|&s| final_accuracy(s, 6)).collect();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (a1, a6) = (mean(&shallow), mean(&deep));
    let ok = a6 > a1;
    report(
        7,
        "depth trend over 5 seeds",
        ok,
        &format!(
            "mean accuracy M=1 {:.2}% {shallow:.3?}, M=6 {:.2}% {deep:.3?}, {:.0}s",
            100.0 * a1,
            100.0 * a6,
            start.elapsed().as_secs_f64()
        ),
    );
    assert!(ok);
}

fn moving_average(values: &[f64], window: usize) -> Vec<f64> {
    values
        .windows(window)
        .map(|w| w.iter().sum::<f64>() / window as f64)
        .collect()
}

#[test]
fn criterion_08_method_sweep() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let mut details = Vec::new();
    let mut ok = true;
    for (label, spec, pairs) in [
        ("128 pairs", SyntheticSpec::low_resource_scale(42), 128),
        ("1200 pairs", SyntheticSpec::table_scale(42), 1200),
    ] {
        let cfg = RunConfig {
            corpus: CorpusSource::Synthetic(spec),
            out_dir: dir.path().join(label.replace(' ', "-")),
            ..Default::default()
        };
        let data = prepare_dataset(&cfg).unwrap();
        let results = cmd_method_sweep(&cfg).unwrap();
        let finite = results
            .iter()
            .all(|r| r.records.iter().all(|x| x.mean_loss.is_finite()));
        let monotone: Vec<&str> = results
            .iter()
            .filter(|r| {
                let losses: Vec<f64> = r.records.iter().map(|x| x.mean_loss).collect();
                moving_average(&losses, 5).windows(2).all(|w| w[1] <= w[0])
            })
            .map(|r| r.model.method.name())
            .collect();
        let csv = std::fs::read_to_string(cfg.out_dir.join("method_sweep.csv")).unwrap();
        let curves = csv.lines().next().unwrap().matches("_loss").count();
        ok &= data.num_pairs() + data.dropped_pairs == pairs
            && results.len() == 5
            && curves == 5
            && finite
            && !monotone.is_empty();
        details.push(format!(
            "{label}: {} curves, finite {finite}, non-increasing MA5 {monotone:?}",
            results.len()
        ));
    }
    report(
        8,
        "method sweep",
        ok,
        &format!("{}; {:.0}s", details.join("; "), start.elapsed().as_secs_f64()),
    );
    assert!(ok);
}

#[test]
fn criterion_09_overfit_single_pair() {
    let cfg = ModelConfig::new(2, 2, ContextEncoding::ExpDecaySin);
    let pair = EncodedPair::new(
        &ContextWindow::new(vec![0, 3], 4).unwrap(),
        target_bits(1, 2).unwrap(),
        &cfg,
    )
    .unwrap();
    let settings = TrainSettings {
        epochs: 200,
        ..Default::default()
    };
    let init = AnsatzParams::random(2, 2, &mut ChaCha8Rng::seed_from_u64(42));
    let (_, params) = fit(std::slice::from_ref(&pair), &[], init, &settings).unwrap();
    let final_loss = pair.loss(&params).unwrap();
    let ok = final_loss < 0.2;
    report(9, "overfit one pair", ok, &format!("loss after 200 epochs {final_loss:.2e}"));
    assert!(ok);
}

fn run_cli(out: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_qcse"))
        .args(["train", "--synthetic", "low-resource", "--seed", "7", "--layers", "2"])
        .args(["--epochs", "10", "--out"])
        .arg(out)
        .env("QCSE_DETERMINISTIC", "1")
        .output()
        .unwrap()
}

#[test]
fn criterion_10_deterministic_runs() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let ra = run_cli(&a);
    let rb = run_cli(&b);
    let ok_status = ra.status.success() && rb.status.success();
    let la = std::fs::read(a.join("loss.csv")).unwrap_or_default();
    let lb = std::fs::read(b.join("loss.csv")).unwrap_or_default();
    let ok = ok_status && !la.is_empty() && la == lb;
    report(
        10,
        "deterministic runs",
        ok,
        &format!("exit ok {ok_status}, loss.csv {} bytes, identical {}", la.len(), la == lb),
    );
    assert!(ok, "{}", String::from_utf8_lossy(&ra.stderr));
}
