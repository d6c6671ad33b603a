use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use uekit::features::{DEFAULT_LOF_K, DEFAULT_SUBSAMPLE, DEFAULT_TREES};
use uekit::hybrid::DEFAULT_ALPHA;
use uekit::io::{load_records, load_training, save_records, save_training};
use uekit::metrics::{BinningConfig, DEFAULT_ECE_BINS};
use uekit::pipeline::{self, EvalConfig, ScoreConfig, StatsFile, TrainingSource, STATS_SCHEMA};
use uekit::selective::DEFAULT_THRESHOLDS;
use uekit::synth::{generate_suite, SynthConfig};
use uekit::tables::{self, Provenance};
use uekit::{report, Error, Method, Metric};

#[derive(Parser)]
#[command(name = "uekit", version, about = "Uncertainty scores and selective-prediction evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    run: RunConfig,
}

#[derive(Args)]
struct RunConfig {
    /// Input file (or directory for `report`).
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// Training-embedding interchange file.
    #[arg(long, global = true)]
    train: Option<PathBuf>,
    /// Training statistics written by `fit-stats`.
    #[arg(long, global = true)]
    stats: Option<PathBuf>,
    /// Comma-separated method ids (default: all).
    #[arg(long, global = true, value_delimiter = ',')]
    methods: Vec<String>,
    /// Comma-separated metric ids (default: all).
    #[arg(long, global = true, value_delimiter = ',')]
    metrics: Vec<String>,
    /// Weight of the aleatoric rank in huq_md.
    #[arg(long, global = true, default_value_t = DEFAULT_ALPHA)]
    alpha: f64,
    #[arg(long, global = true, default_value_t = DEFAULT_LOF_K)]
    lof_k: usize,
    #[arg(long, global = true, default_value_t = DEFAULT_TREES)]
    isof_trees: usize,
    #[arg(long, global = true, default_value_t = DEFAULT_SUBSAMPLE)]
    isof_subsample: usize,
    #[arg(long, global = true, default_value_t = DEFAULT_ECE_BINS)]
    ece_bins: usize,
    /// Comma-separated rejection fractions.
    #[arg(long, global = true, value_delimiter = ',')]
    thresholds: Vec<f64>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Append per-method wall-time columns to the score CSV.
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Fit class centroids and pooled covariance per (split, fold).
    FitStats,
    /// Per-instance uncertainty scores.
    Score,
    /// Metric values per (split, fold, method).
    Eval,
    /// Abstention sweep and risk-coverage curves.
    Sweep,
    /// Kendall correlations between metrics per split.
    Correlate,
    /// Cross-split z-score aggregation and near-best marking.
    Aggregate,
    /// Write synthetic prediction and training files.
    Synth(SynthArgs),
    /// Summarize the CSV outputs of a directory.
    Report,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, value_delimiter = ',', default_value = "en,fr,es")]
    splits: Vec<String>,
    #[arg(long, default_value_t = 5)]
    folds: u32,
    #[arg(long, default_value_t = 2)]
    classes: usize,
    #[arg(long, default_value_t = 8)]
    dim: usize,
    #[arg(long, default_value_t = 150)]
    per_class: usize,
    #[arg(long, default_value_t = 200)]
    train_per_class: usize,
    #[arg(long, default_value_t = 2.45)]
    separation: f64,
    #[arg(long, default_value_t = 1.0)]
    temperature: f64,
    #[arg(long, default_value_t = 0.5)]
    mc_noise: f64,
    #[arg(long, default_value_t = 0.0)]
    shift: f64,
    #[arg(long, default_value_t = 0.1)]
    label_noise: f64,
    #[arg(long, default_value_t = 20)]
    passes: usize,
}

enum Failure {
    Config(String),
    Module(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Module(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Module(Error::Io(e))
    }
}

type Outcome = Result<(), Failure>;

fn require<'a>(path: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path, Failure> {
    let p = path.as_deref().ok_or_else(|| Failure::Config(format!("--{flag} is required")))?;
    if !p.exists() {
        return Err(Failure::Config(format!("--{flag}: {} does not exist", p.display())));
    }
    Ok(p)
}

fn optional<'a>(path: &'a Option<PathBuf>, flag: &str) -> Result<Option<&'a Path>, Failure> {
    match path {
        Some(_) => require(path, flag).map(Some),
        None => Ok(None),
    }
}

impl RunConfig {
    fn methods(&self) -> Result<Vec<Method>, Failure> {
        if self.methods.is_empty() {
            return Ok(Method::ALL.to_vec());
        }
        let mut out = Vec::new();
        for name in &self.methods {
            let m: Method = name.trim().parse().map_err(|e: Error| Failure::Config(e.to_string()))?;
            if !out.contains(&m) {
                out.push(m);
            }
        }
        Ok(out)
    }

    fn metrics(&self) -> Result<Vec<Metric>, Failure> {
        if self.metrics.is_empty() {
            return Ok(Metric::ALL.to_vec());
        }
        let mut out = Vec::new();
        for name in &self.metrics {
            let m: Metric = name.trim().parse().map_err(|e: Error| Failure::Config(e.to_string()))?;
            if !out.contains(&m) {
                out.push(m);
            }
        }
        Ok(out)
    }

    fn thresholds(&self) -> Result<Vec<f64>, Failure> {
        let t = if self.thresholds.is_empty() { DEFAULT_THRESHOLDS.to_vec() } else { self.thresholds.clone() };
        if let Some(bad) = t.iter().find(|v| !(0.0..1.0).contains(*v)) {
            return Err(Failure::Config(format!("--thresholds: {bad} outside [0, 1)")));
        }
        Ok(t)
    }

    fn score_config(&self) -> Result<ScoreConfig, Failure> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Failure::Config(format!("--alpha: {} outside [0, 1]", self.alpha)));
        }
        if self.lof_k == 0 || self.isof_trees == 0 || self.isof_subsample < 2 {
            return Err(Failure::Config("--lof-k and --isof-trees must be ≥ 1, --isof-subsample ≥ 2".into()));
        }
        Ok(ScoreConfig {
            methods: self.methods()?,
            alpha: self.alpha,
            lof_k: self.lof_k,
            isof_trees: self.isof_trees,
            isof_subsample: self.isof_subsample,
            seed: self.seed,
        })
    }

    fn bins(&self) -> Result<BinningConfig, Failure> {
        BinningConfig::new(self.ece_bins).map_err(|e| Failure::Config(format!("--ece-bins: {e}")))
    }

    fn create(&self, name: &str) -> Result<BufWriter<File>, Failure> {
        fs::create_dir_all(&self.out)?;
        Ok(BufWriter::new(File::create(self.out.join(name))?))
    }
}

fn joined<T: ToString>(items: &[T]) -> String {
    items.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

fn run(cli: &Cli) -> Outcome {
    let cfg = &cli.run;
    match &cli.command {
        Command::Synth(a) => {
            let synth = SynthConfig {
                class_count: a.classes,
                dim: a.dim,
                per_class: a.per_class,
                train_per_class: a.train_per_class,
                separation: a.separation,
                temperature: a.temperature,
                mc_noise: a.mc_noise,
                shift: a.shift,
                label_noise: a.label_noise,
                passes: a.passes,
                seed: cfg.seed,
            };
            synth.validate().map_err(|e| Failure::Config(e.to_string()))?;
            if a.splits.is_empty() || a.folds == 0 {
                return Err(Failure::Config("--splits and --folds must be non-empty".into()));
            }
            let data = generate_suite(&synth, &a.splits, a.folds)?;
            fs::create_dir_all(&cfg.out)?;
            let preds: Vec<_> = data.iter().flat_map(|d| d.eval.records.iter().cloned()).collect();
            let train: Vec<_> = data.iter().flat_map(|d| d.train.iter().cloned()).collect();
            save_records(cfg.out.join("predictions.jsonl"), &preds)?;
            save_training(cfg.out.join("train.jsonl"), &train)?;
        }
        Command::FitStats => {
            let train = load_training(require(&cfg.train, "train")?)?;
            let stats = pipeline::fit_stats(&train)?;
            let mut w = cfg.create("stats.json")?;
            serde_json::to_writer(&mut w, &stats).map_err(Error::from)?;
            w.flush()?;
        }
        Command::Score => {
            let input = require(&cfg.input, "input")?;
            let sc = cfg.score_config()?;
            let needs_train = sc.methods.iter().any(|m| matches!(m, Method::Lof | Method::Isof));
            let needs_stats = sc.methods.iter().any(|m| matches!(m, Method::Md | Method::HuqMd));
            let stats_path = optional(&cfg.stats, "stats")?;
            let train_path = optional(&cfg.train, "train")?;
            if (needs_train || (needs_stats && stats_path.is_none())) && train_path.is_none() {
                return Err(Failure::Config("--train is required for md, huq_md, lof and isof".into()));
            }
            let stats: Option<StatsFile> = match stats_path {
                Some(p) => {
                    let s: StatsFile = serde_json::from_reader(File::open(p)?).map_err(Error::from)?;
                    if s.schema != STATS_SCHEMA {
                        return Err(Failure::Module(Error::Schema(s.schema)));
                    }
                    Some(s)
                }
                None => None,
            };
            let train = match train_path {
                Some(p) => load_training(p)?,
                None => Vec::new(),
            };
            let groups = load_records(input)?;
            let tables = pipeline::score_all(&groups, TrainingSource { sets: &train, stats: stats.as_ref() }, &sc)?;
            let prov = Provenance::new(
                cfg.seed,
                &[
                    ("command", "score".into()),
                    ("methods", joined(&sc.methods)),
                    ("alpha", tables::fmt_f64(sc.alpha)),
                    ("lof_k", sc.lof_k.to_string()),
                    ("isof_trees", sc.isof_trees.to_string()),
                    ("isof_subsample", sc.isof_subsample.to_string()),
                    ("stats", stats.is_some().to_string()),
                    ("timing", cfg.timing.to_string()),
                ],
            );
            tables::write_scores(cfg.create("scores.csv")?, &tables, &prov, cfg.timing)?;
        }
        Command::Eval => {
            let input = require(&cfg.input, "input")?;
            let ec = EvalConfig { metrics: cfg.metrics()?, bins: cfg.bins()? };
            let mut tables = tables::read_scores(File::open(input)?)?;
            if !cfg.methods.is_empty() {
                let keep = cfg.methods()?;
                for t in &mut tables {
                    t.columns.retain(|c| keep.iter().any(|m| m.id() == c.method));
                }
            }
            let report = pipeline::evaluate(&tables, &ec)?;
            let prov = Provenance::new(
                cfg.seed,
                &[
                    ("command", "eval".into()),
                    ("methods", cfg.methods.join(",")),
                    ("metrics", joined(&ec.metrics)),
                    ("ece_bins", ec.bins.bin_count.to_string()),
                ],
            );
            tables::write_report(cfg.create("eval.csv")?, &report, &prov)?;
        }
        Command::Sweep => {
            let input = require(&cfg.input, "input")?;
            let thresholds = cfg.thresholds()?;
            let tables = tables::read_scores(File::open(input)?)?;
            let (rows, points) = pipeline::sweep_all(&tables, &thresholds)?;
            let prov = Provenance::new(
                cfg.seed,
                &[("command", "sweep".into()), ("thresholds", thresholds.iter().map(|v| tables::fmt_f64(*v)).collect::<Vec<_>>().join(","))],
            );
            tables::write_sweep(cfg.create("sweep.csv")?, &rows, &prov)?;
            tables::write_curves(cfg.create("curves.csv")?, &points, &prov)?;
        }
        Command::Correlate => {
            let report = tables::read_report(File::open(require(&cfg.input, "input")?)?)?;
            let rows = pipeline::correlate(&report)?;
            let prov = Provenance::new(cfg.seed, &[("command", "correlate".into())]);
            tables::write_correlations(cfg.create("correlations.csv")?, &rows, &prov)?;
        }
        Command::Aggregate => {
            let report = tables::read_report(File::open(require(&cfg.input, "input")?)?)?;
            let (z, cells) = pipeline::aggregate(&report)?;
            let standings = pipeline::near_best_table(&report)?;
            let prov = Provenance::new(cfg.seed, &[("command", "aggregate".into())]);
            tables::write_aggregate(cfg.create("aggregate.csv")?, &cells, &prov)?;
            tables::write_zscores(cfg.create("zscores.csv")?, &z, &prov)?;
            tables::write_near_best(cfg.create("near_best.csv")?, &standings, &prov)?;
        }
        Command::Report => {
            let dir = require(&cfg.input, "input")?;
            if !dir.is_dir() {
                return Err(Failure::Config(format!("--input: {} is not a directory", dir.display())));
            }
            let prov = Provenance::new(cfg.seed, &[("command", "report".into())]);
            let text = report::render(dir, &prov.line())?;
            let mut w = cfg.create("report.md")?;
            w.write_all(text.as_bytes())?;
            w.flush()?;
        }
    }
    Ok(())
}

fn error_line(kind: &str, message: &str) -> String {
    serde_json::json!({ "error": kind, "message": message }).to_string()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("{}", error_line("config", &msg));
            ExitCode::from(2)
        }
        Err(Failure::Module(e)) => {
            eprintln!("{}", error_line(e.kind(), &e.to_string()));
            ExitCode::from(1)
        }
    }
}
