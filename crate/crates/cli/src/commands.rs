//! Subcommands of the `ethereal` binary.

use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand};
use ethereal_core::booleanizer::{booleanize, booleanize_grayscale, fit_quantile_bins};
use ethereal_core::ethereal::ethereal_train_with;
use ethereal_core::eval::{accuracy, include_heatmap, predict_all, tradeoff_trace};
use ethereal_core::sparse::compress;
use ethereal_core::{ClauseBank, Encoding, ExclusionSchedule, Hyperparams, LiteralMatrix, TrainingTrace};

use crate::config::{verify_hash, Manifest, Resolver};
use crate::datasets::split_indices;
use crate::formats;

#[derive(Debug, Parser)]
#[command(name = "ethereal", version, about = "Tsetlin machine training with shared-literal exclusion")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Turn a raw CSV or IDX image set into a literal matrix.
    Booleanize(BooleanizeArgs),
    /// Train a model and export its include lists.
    Train(TrainArgs),
    /// Write per-sample predictions of a model.
    Infer(InferArgs),
    /// Print accuracy and size metrics of a model.
    Eval(EvalArgs),
    /// Per-literal include counts of one class from a bank dump.
    Heatmap(HeatmapArgs),
    /// Accuracy against includes per clause from a training trace.
    Tradeoff(TradeoffArgs),
}

#[derive(Debug, Args)]
pub struct BooleanizeArgs {
    /// Raw CSV, label in the last column.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// The CSV starts with a header row.
    #[arg(long)]
    pub header: bool,
    #[arg(long)]
    pub bins: Option<usize>,
    /// `thermometer` or `onehot`.
    #[arg(long)]
    pub encoding: Option<String>,
    /// Hold out this fraction of rows; bins are fitted on the rest only.
    #[arg(long)]
    pub test_fraction: Option<f64>,
    #[arg(long)]
    pub split_seed: Option<u64>,
    #[arg(long)]
    pub test_out: Option<PathBuf>,
    /// IDX image and label files (optionally gzipped).
    #[arg(long, num_args = 2, value_names = ["IMAGES", "LABELS"])]
    pub idx: Option<Vec<PathBuf>>,
    /// Grayscale threshold for IDX input.
    #[arg(long)]
    pub threshold: Option<u8>,
    /// Keep only the first this many IDX samples.
    #[arg(long)]
    pub limit: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Evaluation set for the trace and best-epoch choice; defaults to `--data`.
    #[arg(long)]
    pub test: Option<PathBuf>,
    #[arg(long)]
    pub clauses: Option<usize>,
    #[arg(long = "T")]
    pub threshold: Option<u32>,
    #[arg(long)]
    pub s: Option<f64>,
    /// Total automaton states `2N`.
    #[arg(long)]
    pub states: Option<u32>,
    #[arg(long)]
    pub epochs: Option<u32>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub ethereal: bool,
    #[arg(long)]
    pub warmup: Option<u32>,
    #[arg(long)]
    pub interval: Option<u32>,
    /// Matched literals of firing clauses always step towards include.
    #[arg(long)]
    pub boost: bool,
    /// `best` (most accurate after-training epoch) or `final`.
    #[arg(long)]
    pub export: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Also write the exported automaton states.
    #[arg(long)]
    pub bank_dump: Option<PathBuf>,
    #[arg(long)]
    pub quiet: bool,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct HeatmapArgs {
    #[arg(long)]
    pub bank_dump: Option<PathBuf>,
    #[arg(long)]
    pub class: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TradeoffArgs {
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Booleanize(a) => booleanize_cmd(a),
        Command::Train(a) => train_cmd(a),
        Command::Infer(a) => infer_cmd(a),
        Command::Eval(a) => eval_cmd(a),
        Command::Heatmap(a) => heatmap_cmd(a),
        Command::Tradeoff(a) => tradeoff_cmd(a),
    }
}

fn parse_encoding(s: &str) -> Result<Encoding> {
    match s {
        "thermometer" => Ok(Encoding::Thermometer),
        "onehot" | "one-hot" => Ok(Encoding::OneHot),
        other => bail!("unknown encoding `{other}` (expected thermometer or onehot)"),
    }
}

fn encoding_name(e: Encoding) -> &'static str {
    match e {
        Encoding::Thermometer => "thermometer",
        Encoding::OneHot => "onehot",
    }
}

fn load_lit(r: &mut Resolver, key: &str, path: &Path) -> Result<LiteralMatrix> {
    verify_hash(r, key, path)?;
    formats::read_lit(path).with_context(|| format!("reading {}", path.display()))
}

fn booleanize_cmd(a: BooleanizeArgs) -> Result<()> {
    let mut r = Resolver::new(a.config.as_deref())?;
    let (idx_images, idx_labels) = match a.idx {
        Some(v) => (Some(v[0].clone()), Some(v[1].clone())),
        None => (None, None),
    };
    let idx_images = r.path("idx-images", idx_images)?;
    let idx_labels = r.path("idx-labels", idx_labels)?;
    let input = r.path("input", a.input)?;
    let out = r.required::<PathBuf>("out", a.out)?;
    let mut m = Manifest::new("booleanize");

    match (input, idx_images, idx_labels) {
        (None, Some(images), Some(labels)) => {
            let threshold = r.value("threshold", a.threshold)?.unwrap_or(75);
            let limit = r.value("limit", a.limit)?;
            r.finish()?;
            verify_hash(&mut r, "idx-images", &images)?;
            verify_hash(&mut r, "idx-labels", &labels)?;
            let mut raw = formats::read_idx(&images, &labels)?;
            if let Some(n) = limit {
                raw = raw.select(&(0..n.min(raw.n_samples())).collect::<Vec<_>>());
            }
            let data = booleanize_grayscale(&raw, f64::from(threshold))?;
            formats::save_lit(&out, &data)?;
            m.set_path("idx-images", &images).set_path("idx-labels", &labels);
            m.set("threshold", threshold).set_opt("limit", limit).set_path("out", &out);
            m.hash_input("idx-images", &images)?.hash_input("idx-labels", &labels)?;
            eprintln!("{} samples, {} literals -> {}", data.n_samples(), data.n_literals(), out.display());
        }
        (Some(input), None, None) => {
            let header = r.flag("header", a.header)?;
            let bins = r.required::<usize>("bins", a.bins)?;
            let encoding = parse_encoding(&r.value("encoding", a.encoding)?.unwrap_or_else(|| "thermometer".into()))?;
            let test_fraction = r.value("test-fraction", a.test_fraction)?;
            let split_seed = r.value("split-seed", a.split_seed)?.unwrap_or(0);
            let test_out = r.path("test-out", a.test_out)?;
            r.finish()?;
            verify_hash(&mut r, "input", &input)?;
            ensure!(test_fraction.is_some() == test_out.is_some(), "--test-fraction and --test-out go together");
            let raw = formats::read_raw_csv(&input, header)?;
            let (train, test) = match test_fraction {
                Some(f) => {
                    ensure!((0.0..1.0).contains(&f), "--test-fraction must be in [0, 1)");
                    let (tr, te) = split_indices(raw.n_samples(), f, split_seed);
                    (raw.select(&tr), Some(raw.select(&te)))
                }
                None => (raw, None),
            };
            let spec = fit_quantile_bins(&train, bins, encoding)?;
            let lit = booleanize(&train, &spec)?;
            formats::save_lit(&out, &lit)?;
            eprintln!("{} samples, {} literals -> {}", lit.n_samples(), lit.n_literals(), out.display());
            m.set_path("input", &input).set("header", header).set("bins", bins);
            m.set("encoding", encoding_name(encoding)).set_path("out", &out);
            if let (Some(f), Some(path), Some(test)) = (test_fraction, &test_out, test) {
                let lit = booleanize(&test, &spec)?;
                formats::save_lit(path, &lit)?;
                eprintln!("{} samples -> {}", lit.n_samples(), path.display());
                m.set("test-fraction", f).set("split-seed", split_seed).set_path("test-out", path);
            }
            m.hash_input("input", &input)?;
        }
        _ => bail!("give either --input or --idx IMAGES LABELS"),
    }
    m.write_next_to(&out)?;
    Ok(())
}

fn train_cmd(a: TrainArgs) -> Result<()> {
    let mut r = Resolver::new(a.config.as_deref())?;
    let data_path = r.required::<PathBuf>("data", a.data)?;
    let test_path = r.path("test", a.test)?;
    let clauses = r.required::<usize>("clauses", a.clauses)?;
    let threshold = r.required::<u32>("T", a.threshold)?;
    let s = r.required::<f64>("s", a.s)?;
    let states = r.value("states", a.states)?.unwrap_or(256);
    let epochs = r.required::<u32>("epochs", a.epochs)?;
    let seed = r.required::<u64>("seed", a.seed)?;
    let ethereal = r.flag("ethereal", a.ethereal)?;
    let warmup = r.value("warmup", a.warmup)?.unwrap_or(1);
    let interval = r.value("interval", a.interval)?.unwrap_or(1);
    let boost = r.flag("boost", a.boost)?;
    let export = r.value("export", a.export)?.unwrap_or_else(|| "best".into());
    let out = r.required::<PathBuf>("out", a.out)?;
    let trace_path = r.path("trace", a.trace)?;
    let dump_path = r.path("bank-dump", a.bank_dump)?;
    let quiet = r.flag("quiet", a.quiet)?;
    r.finish()?;
    let data = load_lit(&mut r, "data", &data_path)?;
    let test = match &test_path {
        Some(p) => Some(load_lit(&mut r, "test", p)?),
        None => None,
    };

    ensure!(export == "best" || export == "final", "--export must be best or final");
    ensure!(states >= 2 && states % 2 == 0, "--states is the total state count 2N and must be even");
    let schedule = if ethereal {
        ExclusionSchedule::new(warmup, interval, epochs)?
    } else {
        ExclusionSchedule::vanilla(epochs)
    };
    let hyper = Hyperparams {
        half_states: states / 2,
        seed,
        epochs,
        boost_true_positive: boost,
        ..Hyperparams::new(data.n_classes().max(test.as_ref().map_or(0, |t| t.n_classes())), clauses, threshold, s)
    };
    hyper.validate()?;

    let eval_set = test.as_ref().unwrap_or(&data);
    let (last, trace) = ethereal_train_with(&data, eval_set, &hyper, &schedule, &mut hyper.rng(), |rec| {
        if !quiet {
            eprintln!(
                "epoch {:>4} {:<15} accuracy {:.4} includes/clause {:.2}",
                rec.epoch, rec.phase, rec.test_accuracy, rec.includes_per_clause
            );
        }
    })?;
    let (bank, epoch) = match (&trace.best, export.as_str()) {
        (Some(best), "best") => (&best.bank, best.epoch),
        _ => (&last, epochs),
    };
    let model = compress(bank);
    formats::write_bytes(&out, &model.to_bytes())?;
    if let Some(p) = &trace_path {
        formats::save_trace(p, &trace.records)?;
    }
    if let Some(p) = &dump_path {
        formats::write_bytes(p, &bank.to_bytes())?;
    }
    let metrics = model.metrics();
    println!(
        "exported epoch {epoch} ({export}): accuracy {:.4}, includes/clause {:.2}, size_bytes {}",
        accuracy(&model, eval_set)?,
        metrics.includes_per_clause,
        metrics.size_bytes
    );

    let mut m = Manifest::new("train");
    m.set_path("data", &data_path);
    if let Some(p) = &test_path {
        m.set_path("test", p);
    }
    m.set("clauses", clauses).set("T", threshold).set("s", s).set("states", states);
    m.set("epochs", epochs).set("seed", seed).set("ethereal", ethereal);
    if ethereal {
        m.set("warmup", warmup).set("interval", interval);
    }
    m.set("boost", boost).set("export", &export).set_path("out", &out);
    if let Some(p) = &trace_path {
        m.set_path("trace", p);
    }
    if let Some(p) = &dump_path {
        m.set_path("bank-dump", p);
    }
    m.set("quiet", quiet);
    m.hash_input("data", &data_path)?;
    if let Some(p) = &test_path {
        m.hash_input("test", p)?;
    }
    m.write_next_to(&out)?;
    Ok(())
}

/// Loads `model` and `data` once every other option has been resolved.
fn load_model_and_data(
    r: &mut Resolver,
    model_path: PathBuf,
    data_path: PathBuf,
) -> Result<(PathBuf, ethereal_core::SparseModel, PathBuf, LiteralMatrix)> {
    r.finish()?;
    verify_hash(r, "model", &model_path)?;
    let model = formats::read_model(&model_path)?;
    let data = load_lit(r, "data", &data_path)?;
    ensure!(
        data.n_literals() == model.n_literals(),
        "model expects {} literals, data has {}",
        model.n_literals(),
        data.n_literals()
    );
    Ok((model_path, model, data_path, data))
}

fn infer_cmd(a: InferArgs) -> Result<()> {
    let mut r = Resolver::new(a.config.as_deref())?;
    let model_path = r.required::<PathBuf>("model", a.model)?;
    let data_path = r.required::<PathBuf>("data", a.data)?;
    let out = r.required::<PathBuf>("out", a.out)?;
    let (model_path, model, data_path, data) = load_model_and_data(&mut r, model_path, data_path)?;
    let predictions = predict_all(&model, &data)?;
    formats::save_predictions(&out, &data, &predictions)?;
    let mut m = Manifest::new("infer");
    m.set_path("model", &model_path).set_path("data", &data_path).set_path("out", &out);
    m.hash_input("model", &model_path)?.hash_input("data", &data_path)?;
    m.write_next_to(&out)?;
    Ok(())
}

fn eval_cmd(a: EvalArgs) -> Result<()> {
    let mut r = Resolver::new(a.config.as_deref())?;
    let model_path = r.required::<PathBuf>("model", a.model)?;
    let data_path = r.required::<PathBuf>("data", a.data)?;
    let (_, model, _, data) = load_model_and_data(&mut r, model_path, data_path)?;
    let metrics = model.metrics();
    println!("accuracy: {:.6}", accuracy(&model, &data)?);
    println!("includes_per_clause: {:.4}", metrics.includes_per_clause);
    println!("size_bytes: {}", metrics.size_bytes);
    println!("literal_reads: {}", metrics.literal_reads);
    Ok(())
}

fn heatmap_cmd(a: HeatmapArgs) -> Result<()> {
    let mut r = Resolver::new(a.config.as_deref())?;
    let dump = r.required::<PathBuf>("bank-dump", a.bank_dump)?;
    let class = r.required::<usize>("class", a.class)?;
    let out = r.required::<PathBuf>("out", a.out)?;
    r.finish()?;
    verify_hash(&mut r, "bank-dump", &dump)?;
    let bank = ClauseBank::from_bytes(&formats::read_bytes(&dump)?).with_context(|| format!("reading {}", dump.display()))?;
    ensure!(class < bank.n_classes(), "class {class} out of range, the bank has {} classes", bank.n_classes());
    formats::save_heatmap(&out, &include_heatmap(&bank, class))?;
    let mut m = Manifest::new("heatmap");
    m.set_path("bank-dump", &dump).set("class", class).set_path("out", &out);
    m.hash_input("bank-dump", &dump)?;
    m.write_next_to(&out)?;
    Ok(())
}

fn tradeoff_cmd(a: TradeoffArgs) -> Result<()> {
    let mut r = Resolver::new(a.config.as_deref())?;
    let trace_path = r.required::<PathBuf>("trace", a.trace)?;
    let out = r.required::<PathBuf>("out", a.out)?;
    r.finish()?;
    verify_hash(&mut r, "trace", &trace_path)?;
    let records = formats::read_trace(&trace_path)?;
    ensure!(!records.is_empty(), "{} holds no records", trace_path.display());
    let trace = TrainingTrace { records, best: None };
    formats::save_tradeoff(&out, &tradeoff_trace(&trace))?;
    let mut m = Manifest::new("tradeoff");
    m.set_path("trace", &trace_path).set_path("out", &out);
    m.hash_input("trace", &trace_path)?;
    m.write_next_to(&out)?;
    Ok(())
}
