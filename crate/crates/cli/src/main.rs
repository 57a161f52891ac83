use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qcse_core::context::ContextEncoding;
use qcse_core::corpus::SyntheticSpec;
use qcse_core::experiment::{
    cmd_compare_baseline, cmd_depth_sweep, cmd_gen_corpus, cmd_method_sweep, cmd_train,
    init_thread_pool_from_env, render_table, CorpusSource, RunConfig,
};
use qcse_core::train::{GradMode, UpdateMode};
use qcse_core::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "qcse", version, about = "Quantum context-sensitive word embedding experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train one model and write loss/accuracy curves, parameters and a manifest.
    Train(RunArgs),
    /// Train across ansatz depths and write a comparison table.
    DepthSweep(RunArgs),
    /// Train every context encoding on the same corpus.
    MethodSweep(RunArgs),
    /// Train the quantum model next to CBOW baselines.
    CompareBaseline(RunArgs),
    /// Write a synthetic corpus, one sentence per line.
    GenCorpus(GenArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// JSON run configuration (or a previous run's manifest.json).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Plain-text corpus, one sentence per line.
    #[arg(long, conflicts_with = "synthetic")]
    corpus: Option<PathBuf>,
    /// Synthetic corpus: `table`, `low-resource`, or `sentences=N,vocab=V,len=L[,seed=S]`.
    #[arg(long)]
    synthetic: Option<String>,
    #[arg(long)]
    qubits: Option<usize>,
    /// Ansatz depth; for depth-sweep a range (`1-8`) or list (`1,4,6`).
    #[arg(long)]
    layers: Option<String>,
    #[arg(long)]
    method: Option<ContextEncoding>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// `parameter-shift` or `finite-difference`.
    #[arg(long)]
    grad_mode: Option<GradMode>,
    /// Optimiser stepping: `per-sample` or `full-batch`.
    #[arg(long)]
    update: Option<String>,
    /// CBOW dimensions, e.g. `d=20,50`.
    #[arg(long)]
    baseline: Option<String>,
    /// Fraction of pairs used for training.
    #[arg(long)]
    split: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GenArgs {
    /// `table`, `low-resource`, or `sentences=N,vocab=V,len=L[,seed=S]`.
    #[arg(long, default_value = "table")]
    synthetic: String,
    #[arg(long)]
    seed: Option<u64>,
    /// Output text file.
    #[arg(long)]
    out: PathBuf,
    /// Also dump `center<TAB>context` lines here.
    #[arg(long)]
    pairs: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    window: usize,
}

fn parse_synthetic(spec: &str, seed: u64) -> Result<SyntheticSpec> {
    match spec.trim() {
        "table" | "english" => return Ok(SyntheticSpec::table_scale(seed)),
        "low-resource" | "fulani" => return Ok(SyntheticSpec::low_resource_scale(seed)),
        _ => {}
    }
    let mut out = SyntheticSpec::table_scale(seed);
    for part in spec.split(',').filter(|p| !p.trim().is_empty()) {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected key=value in synthetic spec, got '{part}'")))?;
        let parse = |v: &str| {
            v.trim()
                .parse::<u64>()
                .map_err(|_| Error::Config(format!("bad number '{v}' for '{key}'")))
        };
        match key.trim() {
            "sentences" => out.num_sentences = parse(value)? as usize,
            "vocab" => out.vocab_size = parse(value)? as usize,
            "len" => out.sentence_len = parse(value)? as usize,
            "seed" => out.seed = parse(value)?,
            other => return Err(Error::Config(format!("unknown synthetic key '{other}'"))),
        }
    }
    Ok(out)
}

fn parse_layers(spec: &str) -> Result<Vec<usize>> {
    let bad = || Error::Config(format!("cannot parse layer spec '{spec}'"));
    let num = |s: &str| s.trim().parse::<usize>().map_err(|_| bad());
    let spec = spec.trim();
    let layers: Vec<usize> = if let Some((a, b)) = spec.split_once("..").or_else(|| spec.split_once('-')) {
        let (lo, hi) = (num(a)?, num(b.trim_start_matches('='))?);
        if lo > hi {
            return Err(bad());
        }
        (lo..=hi).collect()
    } else {
        spec.split(',').map(num).collect::<Result<_>>()?
    };
    if layers.is_empty() {
        return Err(bad());
    }
    Ok(layers)
}

fn parse_dims(spec: &str) -> Result<Vec<usize>> {
    spec.trim()
        .trim_start_matches("d=")
        .split(',')
        .map(|d| {
            d.trim()
                .trim_start_matches("d=")
                .parse::<usize>()
                .map_err(|_| Error::Config(format!("bad baseline dimension '{d}'")))
        })
        .collect()
}

/// Config file first, then flags on top.
fn build_config(args: &RunArgs, sweep: bool) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.training.seed = seed;
        if let CorpusSource::Synthetic(spec) = &mut cfg.corpus {
            spec.seed = seed;
        }
    }
    if let Some(path) = &args.corpus {
        cfg.corpus = CorpusSource::File { path: path.clone() };
    }
    if let Some(spec) = &args.synthetic {
        cfg.corpus = CorpusSource::Synthetic(parse_synthetic(spec, cfg.training.seed)?);
    }
    if let Some(q) = args.qubits {
        cfg.model.qubits = Some(q);
    }
    if let Some(layers) = &args.layers {
        let parsed = parse_layers(layers)?;
        if sweep {
            cfg.sweep_layers = parsed;
        } else if parsed.len() == 1 {
            cfg.model.layers = parsed[0];
        } else {
            return Err(Error::Config(format!(
                "--layers takes a single depth here, got '{layers}'"
            )));
        }
    }
    if let Some(m) = args.method {
        cfg.model.method = m;
    }
    if let Some(e) = args.epochs {
        cfg.training.epochs = e;
    }
    if let Some(lr) = args.lr {
        cfg.training.learning_rate = lr;
    }
    if let Some(g) = args.grad_mode {
        cfg.training.grad_mode = g;
    }
    if let Some(u) = &args.update {
        cfg.training.update = match u.as_str() {
            "per-sample" => UpdateMode::PerSample,
            "full-batch" => UpdateMode::FullBatch,
            other => return Err(Error::Config(format!("unknown update mode '{other}'"))),
        };
    }
    if let Some(b) = &args.baseline {
        cfg.baseline_dims = parse_dims(b)?;
    }
    if let Some(s) = args.split {
        cfg.training.train_test_split = s;
    }
    if let Some(out) = &args.out {
        cfg.out_dir = out.clone();
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    let threads = init_thread_pool_from_env()?;
    log::info!("using {threads} worker thread(s)");
    match cli.command {
        Command::Train(args) => {
            let cfg = build_config(&args, false)?;
            let summary = cmd_train(&cfg)?;
            let last = summary.result.final_record();
            println!(
                "trained {} params on {} pairs (|V| = {}, m = {}): final loss {:.4}, accuracy {:.2}%",
                summary.result.model.num_params(),
                summary.dataset.train_pairs,
                summary.dataset.vocab_size,
                summary.result.model.num_qubits,
                last.map_or(f64::NAN, |r| r.mean_loss),
                100.0 * last.map_or(0.0, |r| r.accuracy),
            );
            println!("artifacts in {}", cfg.out_dir.display());
        }
        Command::DepthSweep(args) => {
            let cfg = build_config(&args, true)?;
            let rows = cmd_depth_sweep(&cfg)?;
            print!("{}", render_table(&rows));
            println!("artifacts in {}", cfg.out_dir.display());
        }
        Command::MethodSweep(args) => {
            let cfg = build_config(&args, false)?;
            for r in cmd_method_sweep(&cfg)? {
                let last = r.final_record();
                println!(
                    "{:<18} final loss {:.4}, accuracy {:.2}%",
                    r.model.method.name(),
                    last.map_or(f64::NAN, |x| x.mean_loss),
                    100.0 * last.map_or(0.0, |x| x.accuracy)
                );
            }
            println!("artifacts in {}", cfg.out_dir.display());
        }
        Command::CompareBaseline(args) => {
            let cfg = build_config(&args, false)?;
            let cmp = cmd_compare_baseline(&cfg)?;
            print!("{}", render_table(&cmp.rows));
            println!("artifacts in {}", cfg.out_dir.display());
        }
        Command::GenCorpus(args) => {
            let spec = parse_synthetic(&args.synthetic, args.seed.unwrap_or(42))?;
            let spec = SyntheticSpec {
                seed: args.seed.unwrap_or(spec.seed),
                ..spec
            };
            let s = cmd_gen_corpus(&spec, &args.out, args.pairs.as_deref(), args.window)?;
            println!(
                "{} sentences, {} tokens, |V| = {}, {} pairs -> {}",
                s.num_sentences,
                s.num_tokens,
                s.vocab_size,
                s.num_pairs,
                args.out.display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
