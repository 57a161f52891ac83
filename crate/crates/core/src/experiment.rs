//! Experiment runner: corpus preparation, train/test split, training runs,
//! sweeps and the on-disk artifacts (CSV curves, parameters, manifests).

use std::io::Write;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baseline::cbow_train;
use crate::context::{ContextEncoding, EncodingHyperparams};
use crate::corpus::{
    extract_pairs, generate_synthetic_corpus, qubits_for_vocab, read_corpus, Boundary, Sentence,
    SyntheticSpec, TrainPair, Vocabulary,
};
use crate::error::{Error, Result};
use crate::model::{AnsatzParams, ModelConfig, ParamsDocument};
use crate::train::{fit, EncodedPair, TrainRecord, TrainSettings};

pub const MANIFEST_VERSION: u32 = 1;

/// Where the sentences come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum CorpusSource {
    /// Plain text, one sentence per line.
    File { path: PathBuf },
    Synthetic(SyntheticSpec),
}

impl Default for CorpusSource {
    fn default() -> Self {
        CorpusSource::Synthetic(SyntheticSpec::table_scale(42))
    }
}

impl CorpusSource {
    pub fn load(&self) -> Result<Vec<Sentence>> {
        match self {
            CorpusSource::File { path } => read_corpus(path),
            CorpusSource::Synthetic(spec) => generate_synthetic_corpus(spec),
        }
    }
}

/// Model shape before the vocabulary is known; `qubits: None` means
/// `⌈log₂|V|⌉`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelSpec {
    pub qubits: Option<usize>,
    pub layers: usize,
    pub method: ContextEncoding,
    pub hyperparams: EncodingHyperparams,
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self {
            qubits: None,
            layers: 3,
            method: ContextEncoding::ExpDecaySin,
            hyperparams: EncodingHyperparams::default(),
        }
    }
}

impl ModelSpec {
    pub fn resolve(&self, vocab_size: usize) -> Result<ModelConfig> {
        let cfg = ModelConfig {
            num_qubits: self
                .qubits
                .unwrap_or_else(|| qubits_for_vocab(vocab_size).max(2)),
            ansatz_layers: self.layers,
            method: self.method,
            hyperparams: self.hyperparams,
        };
        cfg.validate(vocab_size)?;
        Ok(cfg)
    }
}

/// Everything needed to reproduce a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub corpus: CorpusSource,
    pub window_radius: usize,
    pub boundary: Boundary,
    pub model: ModelSpec,
    pub training: TrainSettings,
    /// CBOW vector dimensions to train alongside the quantum model.
    pub baseline_dims: Vec<usize>,
    /// Ansatz depths for depth sweeps.
    pub sweep_layers: Vec<usize>,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            corpus: CorpusSource::default(),
            window_radius: 2,
            boundary: Boundary::Truncate,
            model: ModelSpec::default(),
            training: TrainSettings::default(),
            baseline_dims: Vec::new(),
            sweep_layers: (1..=8).collect(),
            out_dir: PathBuf::from("runs/latest"),
        }
    }
}

impl RunConfig {
    /// Reads a config document; a run manifest is accepted too, in which
    /// case its embedded config is used.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        let inner = match value.get("config") {
            Some(cfg) if value.get("manifest_version").is_some() => cfg.clone(),
            _ => value,
        };
        Ok(serde_json::from_value(inner)?)
    }
}

/// Corpus turned into pairs and split.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub vocab: Vocabulary,
    pub num_sentences: usize,
    pub num_tokens: usize,
    /// Pairs without any context word are dropped.
    pub dropped_pairs: usize,
    pub train: Vec<TrainPair>,
    pub test: Vec<TrainPair>,
}

impl Dataset {
    pub fn num_pairs(&self) -> usize {
        self.train.len() + self.test.len()
    }

    pub fn all_pairs(&self) -> impl Iterator<Item = &TrainPair> {
        self.train.iter().chain(&self.test)
    }
}

pub fn prepare_dataset(cfg: &RunConfig) -> Result<Dataset> {
    let sentences = cfg.corpus.load()?;
    let vocab = match cfg.boundary {
        Boundary::Truncate => Vocabulary::build(&sentences)?,
        Boundary::Pad => Vocabulary::build_with_pad(&sentences)?,
    };
    let all = extract_pairs(&sentences, &vocab, cfg.window_radius, cfg.boundary)?;
    let total = all.len();
    let mut pairs: Vec<TrainPair> = all.into_iter().filter(|p| !p.context.is_empty()).collect();
    let dropped_pairs = total - pairs.len();
    if pairs.is_empty() {
        return Err(Error::InvalidInput("corpus yields no pairs with context".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.training.seed);
    rng.set_stream(0);
    pairs.shuffle(&mut rng);
    let n_train = ((pairs.len() as f64 * cfg.training.train_test_split).round() as usize)
        .clamp(1, pairs.len());
    let test = pairs.split_off(n_train);
    Ok(Dataset {
        vocab,
        num_sentences: sentences.len(),
        num_tokens: sentences.iter().map(Vec::len).sum(),
        dropped_pairs,
        train: pairs,
        test,
    })
}

pub fn encode_pairs(pairs: &[TrainPair], vocab_size: usize, cfg: &ModelConfig) -> Result<Vec<EncodedPair>> {
    pairs
        .par_iter()
        .map(|p| EncodedPair::from_pair(p, vocab_size, cfg))
        .collect()
}

/// Output of one quantum training run.
#[derive(Clone, Debug)]
pub struct ExperimentResult {
    pub model: ModelConfig,
    pub records: Vec<TrainRecord>,
    pub params: AnsatzParams,
}

impl ExperimentResult {
    pub fn final_record(&self) -> Option<&TrainRecord> {
        self.records.last()
    }
}

/// Trains one model on a prepared dataset. Initial angles come from the
/// training seed, so a fixed seed reproduces the run exactly.
pub fn run_experiment(
    data: &Dataset,
    model: &ModelConfig,
    settings: &TrainSettings,
) -> Result<ExperimentResult> {
    model.validate(data.vocab.len())?;
    let train = encode_pairs(&data.train, data.vocab.len(), model)?;
    let test = encode_pairs(&data.test, data.vocab.len(), model)?;
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    rng.set_stream(1);
    let init = AnsatzParams::random(model.num_qubits, model.ansatz_layers, &mut rng);
    let (records, params) = fit(&train, &test, init, settings)?;
    Ok(ExperimentResult {
        model: *model,
        records,
        params,
    })
}

/// Applies `QCSE_DETERMINISTIC` / `QCSE_THREADS` to the global thread pool.
/// Returns the thread count in effect.
pub fn init_thread_pool_from_env() -> Result<usize> {
    let deterministic = std::env::var("QCSE_DETERMINISTIC")
        .map(|v| v == "1" || v.eq_ignore_ascii_case("true"))
        .unwrap_or(false);
    let threads = if deterministic {
        Some(1)
    } else {
        match std::env::var("QCSE_THREADS") {
            Ok(v) => Some(v.parse::<usize>().map_err(|_| {
                Error::Config(format!("QCSE_THREADS must be a positive integer, got '{v}'"))
            })?),
            Err(_) => None,
        }
    };
    if let Some(n) = threads {
        // A pool may already exist when called twice in one process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    Ok(rayon::current_num_threads())
}

#[derive(Serialize)]
struct LossRow {
    epoch: usize,
    mean_loss: f64,
    accuracy: f64,
}

#[derive(Serialize)]
struct AccuracyRow {
    epoch: usize,
    train_accuracy: f64,
    test_accuracy: f64,
}

/// `epoch,mean_loss,accuracy`
pub fn write_loss_csv(path: impl AsRef<Path>, records: &[TrainRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(LossRow {
            epoch: r.epoch,
            mean_loss: r.mean_loss,
            accuracy: r.accuracy,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// `epoch,train_accuracy,test_accuracy`
pub fn write_accuracy_csv(path: impl AsRef<Path>, records: &[TrainRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(AccuracyRow {
            epoch: r.epoch,
            train_accuracy: r.train_accuracy,
            test_accuracy: r.accuracy,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Per-epoch curves side by side: `epoch,<name>_loss,<name>_accuracy,...`.
/// Series shorter than the longest leave their cells empty.
pub fn write_merged_csv(path: impl AsRef<Path>, series: &[(String, &[TrainRecord])]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["epoch".to_owned()];
    for (name, _) in series {
        header.push(format!("{name}_loss"));
        header.push(format!("{name}_accuracy"));
    }
    w.write_record(&header)?;
    let rows = series.iter().map(|(_, r)| r.len()).max().unwrap_or(0);
    for i in 0..rows {
        let mut row = vec![(i + 1).to_string()];
        for (_, records) in series {
            match records.get(i) {
                Some(r) => {
                    row.push(r.mean_loss.to_string());
                    row.push(r.accuracy.to_string());
                }
                None => row.extend([String::new(), String::new()]),
            }
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Dataset facts recorded in every manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub vocab_size: usize,
    pub num_sentences: usize,
    pub num_tokens: usize,
    pub num_pairs: usize,
    pub train_pairs: usize,
    pub test_pairs: usize,
    pub dropped_pairs: usize,
}

impl From<&Dataset> for DatasetSummary {
    fn from(d: &Dataset) -> Self {
        Self {
            vocab_size: d.vocab.len(),
            num_sentences: d.num_sentences,
            num_tokens: d.num_tokens,
            num_pairs: d.num_pairs(),
            train_pairs: d.train.len(),
            test_pairs: d.test.len(),
            dropped_pairs: d.dropped_pairs,
        }
    }
}

/// Written as `manifest.json` into every run directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub manifest_version: u32,
    pub command: String,
    pub config: RunConfig,
    pub dataset: DatasetSummary,
    pub results: serde_json::Value,
    pub artifacts: Vec<String>,
}

impl RunManifest {
    fn write(&self, dir: &Path) -> Result<()> {
        let mut f = std::fs::File::create(dir.join("manifest.json"))?;
        f.write_all(serde_json::to_string_pretty(self)?.as_bytes())?;
        f.write_all(b"\n")?;
        Ok(())
    }
}

fn final_metrics(model: &ModelConfig, records: &[TrainRecord]) -> serde_json::Value {
    let last = records.last();
    serde_json::json!({
        "model": model,
        "num_params": model.num_params(),
        "final_loss": last.map(|r| r.mean_loss),
        "final_accuracy": last.map(|r| r.accuracy),
        "final_train_accuracy": last.map(|r| r.train_accuracy),
    })
}

/// Writes the four training artifacts of one quantum run into `dir`.
fn write_run_artifacts(dir: &Path, result: &ExperimentResult) -> Result<Vec<String>> {
    std::fs::create_dir_all(dir)?;
    write_loss_csv(dir.join("loss.csv"), &result.records)?;
    write_accuracy_csv(dir.join("accuracy.csv"), &result.records)?;
    ParamsDocument::new(&result.model, &result.params).save(dir.join("params.json"))?;
    Ok(vec!["loss.csv".into(), "accuracy.csv".into(), "params.json".into()])
}

/// Summary of a `train` run.
#[derive(Clone, Debug)]
pub struct TrainSummary {
    pub dataset: DatasetSummary,
    pub result: ExperimentResult,
}

pub fn cmd_train(cfg: &RunConfig) -> Result<TrainSummary> {
    let data = prepare_dataset(cfg)?;
    let model = cfg.model.resolve(data.vocab.len())?;
    let result = run_experiment(&data, &model, &cfg.training)?;
    let mut artifacts = write_run_artifacts(&cfg.out_dir, &result)?;
    artifacts.push("manifest.json".into());
    let dataset = DatasetSummary::from(&data);
    RunManifest {
        manifest_version: MANIFEST_VERSION,
        command: "train".into(),
        config: cfg.clone(),
        dataset: dataset.clone(),
        results: final_metrics(&model, &result.records),
        artifacts,
    }
    .write(&cfg.out_dir)?;
    Ok(TrainSummary { dataset, result })
}

/// Trains every context encoding on the same split. Each method gets its own
/// subdirectory; `method_sweep.csv` holds the curves side by side.
pub fn cmd_method_sweep(cfg: &RunConfig) -> Result<Vec<ExperimentResult>> {
    let data = prepare_dataset(cfg)?;
    let results = ContextEncoding::ALL
        .par_iter()
        .map(|&method| {
            let spec = ModelSpec { method, ..cfg.model };
            let model = spec.resolve(data.vocab.len())?;
            run_experiment(&data, &model, &cfg.training)
        })
        .collect::<Result<Vec<_>>>()?;

    std::fs::create_dir_all(&cfg.out_dir)?;
    let mut artifacts = Vec::new();
    for r in &results {
        let name = r.model.method.name();
        for a in write_run_artifacts(&cfg.out_dir.join(name), r)? {
            artifacts.push(format!("{name}/{a}"));
        }
    }
    let series: Vec<(String, &[TrainRecord])> = results
        .iter()
        .map(|r| (r.model.method.name().replace('-', "_"), r.records.as_slice()))
        .collect();
    write_merged_csv(cfg.out_dir.join("method_sweep.csv"), &series)?;
    artifacts.extend(["method_sweep.csv".into(), "manifest.json".into()]);
    let summaries: serde_json::Map<String, serde_json::Value> = results
        .iter()
        .map(|r| (r.model.method.name().to_owned(), final_metrics(&r.model, &r.records)))
        .collect();
    RunManifest {
        manifest_version: MANIFEST_VERSION,
        command: "method-sweep".into(),
        config: cfg.clone(),
        dataset: DatasetSummary::from(&data),
        results: serde_json::Value::Object(summaries),
        artifacts,
    }
    .write(&cfg.out_dir)?;
    Ok(results)
}

/// One row of the depth-sweep comparison table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub model: String,
    /// Ansatz depth; empty for the classical baseline.
    pub layers: Option<usize>,
    /// Qubit count for the quantum model, vector dimension for CBOW.
    pub width: usize,
    pub params: usize,
    pub training_words: usize,
    pub accuracy: f64,
    pub final_loss: f64,
}

pub fn write_table_csv(path: impl AsRef<Path>, rows: &[TableRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Fixed-width text rendering of the table.
pub fn render_table(rows: &[TableRow]) -> String {
    let mut out = format!(
        "{:<6} {:>6} {:>6} {:>7} {:>8} {:>10} {:>10}\n",
        "model", "layers", "width", "params", "words", "accuracy%", "loss"
    );
    for r in rows {
        let layers = r.layers.map_or_else(|| "--".to_owned(), |l| l.to_string());
        out.push_str(&format!(
            "{:<6} {:>6} {:>6} {:>7} {:>8} {:>10.2} {:>10.4}\n",
            r.model,
            layers,
            r.width,
            r.params,
            r.training_words,
            100.0 * r.accuracy,
            r.final_loss
        ));
    }
    out
}

fn baseline_row(data: &Dataset, dim: usize, settings: &TrainSettings) -> Result<(TableRow, Vec<TrainRecord>)> {
    let (model, records) = cbow_train(&data.train, &data.test, data.vocab.len(), dim, settings)?;
    let last = records.last().copied();
    Ok((
        TableRow {
            model: "CBOW".into(),
            layers: None,
            width: dim,
            params: model.num_params(),
            training_words: data.num_tokens,
            accuracy: last.map_or(0.0, |r| r.accuracy),
            final_loss: last.map_or(f64::NAN, |r| r.mean_loss),
        },
        records,
    ))
}

/// Trains the quantum model at every depth in `cfg.sweep_layers` (plus any
/// CBOW baselines) and writes `table.csv` / `table.txt`.
pub fn cmd_depth_sweep(cfg: &RunConfig) -> Result<Vec<TableRow>> {
    if cfg.sweep_layers.is_empty() {
        return Err(Error::Config("depth sweep needs at least one layer count".into()));
    }
    let data = prepare_dataset(cfg)?;
    let results = cfg
        .sweep_layers
        .par_iter()
        .map(|&layers| {
            let model = ModelSpec { layers, ..cfg.model }.resolve(data.vocab.len())?;
            run_experiment(&data, &model, &cfg.training)
        })
        .collect::<Result<Vec<_>>>()?;
    let baselines = cfg
        .baseline_dims
        .par_iter()
        .map(|&d| baseline_row(&data, d, &cfg.training))
        .collect::<Result<Vec<_>>>()?;

    std::fs::create_dir_all(&cfg.out_dir)?;
    let mut artifacts = Vec::new();
    let mut rows = Vec::new();
    for r in &results {
        let sub = format!("layers-{}", r.model.ansatz_layers);
        for a in write_run_artifacts(&cfg.out_dir.join(&sub), r)? {
            artifacts.push(format!("{sub}/{a}"));
        }
        let last = r.final_record().copied();
        rows.push(TableRow {
            model: "QCSE".into(),
            layers: Some(r.model.ansatz_layers),
            width: r.model.num_qubits,
            params: r.model.num_params(),
            training_words: data.num_tokens,
            accuracy: last.map_or(0.0, |x| x.accuracy),
            final_loss: last.map_or(f64::NAN, |x| x.mean_loss),
        });
    }
    for (row, records) in &baselines {
        let sub = format!("cbow-d{}", row.width);
        std::fs::create_dir_all(cfg.out_dir.join(&sub))?;
        write_loss_csv(cfg.out_dir.join(&sub).join("loss.csv"), records)?;
        artifacts.push(format!("{sub}/loss.csv"));
        rows.push(row.clone());
    }
    write_table_csv(cfg.out_dir.join("table.csv"), &rows)?;
    std::fs::write(cfg.out_dir.join("table.txt"), render_table(&rows))?;
    artifacts.extend(["table.csv".into(), "table.txt".into(), "manifest.json".into()]);
    RunManifest {
        manifest_version: MANIFEST_VERSION,
        command: "depth-sweep".into(),
        config: cfg.clone(),
        dataset: DatasetSummary::from(&data),
        results: serde_json::to_value(&rows)?,
        artifacts,
    }
    .write(&cfg.out_dir)?;
    Ok(rows)
}

/// Side-by-side quantum and CBOW curves.
#[derive(Clone, Debug)]
pub struct Comparison {
    pub quantum: ExperimentResult,
    pub baselines: Vec<(usize, Vec<TrainRecord>)>,
    pub rows: Vec<TableRow>,
}

/// Trains the quantum model and each CBOW baseline (default `d = 20`) on
/// the same split and writes `compare.csv`.
pub fn cmd_compare_baseline(cfg: &RunConfig) -> Result<Comparison> {
    let data = prepare_dataset(cfg)?;
    let model = cfg.model.resolve(data.vocab.len())?;
    let dims = if cfg.baseline_dims.is_empty() {
        vec![20]
    } else {
        cfg.baseline_dims.clone()
    };
    let quantum = run_experiment(&data, &model, &cfg.training)?;
    let baselines = dims
        .par_iter()
        .map(|&d| baseline_row(&data, d, &cfg.training))
        .collect::<Result<Vec<_>>>()?;

    let mut artifacts = write_run_artifacts(&cfg.out_dir, &quantum)?;
    let mut series: Vec<(String, &[TrainRecord])> = vec![("qcse".into(), quantum.records.as_slice())];
    for (row, records) in &baselines {
        series.push((format!("cbow_d{}", row.width), records.as_slice()));
    }
    write_merged_csv(cfg.out_dir.join("compare.csv"), &series)?;
    artifacts.extend(["compare.csv".into(), "manifest.json".into()]);

    let last = quantum.final_record().copied();
    let mut rows = vec![TableRow {
        model: "QCSE".into(),
        layers: Some(model.ansatz_layers),
        width: model.num_qubits,
        params: model.num_params(),
        training_words: data.num_tokens,
        accuracy: last.map_or(0.0, |x| x.accuracy),
        final_loss: last.map_or(f64::NAN, |x| x.mean_loss),
    }];
    rows.extend(baselines.iter().map(|(r, _)| r.clone()));
    RunManifest {
        manifest_version: MANIFEST_VERSION,
        command: "compare-baseline".into(),
        config: cfg.clone(),
        dataset: DatasetSummary::from(&data),
        results: serde_json::to_value(&rows)?,
        artifacts,
    }
    .write(&cfg.out_dir)?;
    Ok(Comparison {
        quantum,
        baselines: baselines.into_iter().map(|(r, rec)| (r.width, rec)).collect(),
        rows,
    })
}

/// Writes a synthetic corpus, and optionally its pairs, to disk.
pub fn cmd_gen_corpus(
    spec: &SyntheticSpec,
    path: impl AsRef<Path>,
    pairs_path: Option<&Path>,
    window_radius: usize,
) -> Result<DatasetSummary> {
    let sentences = generate_synthetic_corpus(spec)?;
    if let Some(parent) = path.as_ref().parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    crate::corpus::write_corpus(&path, &sentences)?;
    let vocab = Vocabulary::build(&sentences)?;
    let pairs = extract_pairs(&sentences, &vocab, window_radius, Boundary::Truncate)?;
    if let Some(p) = pairs_path {
        let f = std::io::BufWriter::new(std::fs::File::create(p)?);
        crate::corpus::write_pairs(f, &pairs)?;
    }
    Ok(DatasetSummary {
        vocab_size: vocab.len(),
        num_sentences: sentences.len(),
        num_tokens: sentences.iter().map(Vec::len).sum(),
        num_pairs: pairs.len(),
        train_pairs: pairs.len(),
        test_pairs: 0,
        dropped_pairs: 0,
    })
}
