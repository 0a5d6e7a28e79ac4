//! Command-line front end.
//!
//! Exit codes: 0 on success, 2 for bad input, 3 for numerical failures. A
//! failing command prints one JSON object on standard error and writes no
//! output files.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use ikdl_core::{discriminative_matrix, error_matrix, split, synth_dataset, ClassifierModel, SynthParams};
use serde::Serialize;

use crate::config::{BenchGrid, RunConfig};
use crate::dataset::{encode_dataset, load_raw, raw_labels, write_labels, write_matrix_csv, DatasetFormat};
use crate::error::{Error, Result};
use crate::eval::{evaluate, predict, TestSet};
use crate::model_file::{encode_model, load_model};
use crate::outputs::Outputs;
use crate::pipeline::{load_source, load_split, train_and_evaluate, train_labeled};
use crate::report::{
    algorithm_label, confusion_csv, csv_bytes, fmt_seconds, kernel_label, labeled_matrix_csv, model_row,
    objective_csv, percent, predictions_csv, report_csv, report_table,
};

pub const TOOL_VERSION: &str = match option_env!("IKDL_GIT_DESCRIBE") {
    Some(v) => v,
    None => concat!("v", env!("CARGO_PKG_VERSION")),
};

pub const MODEL_FILE: &str = "model.ikdm";
pub const TRAIN_MANIFEST: &str = "train.manifest.json";

#[derive(Debug, Parser)]
#[command(name = "ikdl", version, about = "Incoherent (kernel) dictionary learning classifier")]
pub struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for training, splitting and synthetic data; overrides the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Number of consecutive seeds to run (bench only).
    #[arg(long, global = true)]
    pub seeds: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = "ikdl-out")]
    pub out: PathBuf,
    /// Worker threads for evaluation.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct TestData {
    /// Test signals; defaults to the test part of the configured split.
    #[arg(long)]
    pub signals: Option<PathBuf>,
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long)]
    pub format: Option<DatasetFormat>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Which {
    Reconstruction,
    Discriminative,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train on the configured split and write the model.
    Train,
    /// Evaluate a model and write report, confusion and prediction CSVs.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        data: TestData,
    },
    /// Classify signals and print the decision and per-class residuals.
    Classify {
        #[arg(long)]
        model: PathBuf,
        /// One comma-separated signal.
        #[arg(long, allow_hyphen_values = true, conflicts_with = "signals")]
        signal: Option<String>,
        /// Signal matrix, one signal per column.
        #[arg(long)]
        signals: Option<PathBuf>,
        #[arg(long)]
        format: Option<DatasetFormat>,
    },
    /// Export the reconstruction-error or discriminative matrix as CSV.
    Heatmap {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_enum)]
        which: Which,
        #[command(flatten)]
        data: TestData,
    },
    /// Generate a synthetic union-of-subspaces dataset.
    Synth {
        #[arg(long, default_value_t = 3)]
        classes: usize,
        #[arg(long, default_value_t = 80)]
        per_class: usize,
        #[arg(long, default_value_t = 32)]
        dim: usize,
        #[arg(long, default_value_t = 4)]
        subspace_dim: usize,
        #[arg(long, default_value_t = 0.05)]
        noise: f64,
        #[arg(long, default_value = "csv")]
        format: DatasetFormat,
    },
    /// Run every mode x kernel x gamma cell of the grid for each seed.
    Bench,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool_version: &'a str,
    command: &'a str,
    config: Option<serde_json::Value>,
    seeds: Vec<u64>,
    timings: BTreeMap<&'a str, f64>,
    inputs: Vec<String>,
    outputs: Vec<String>,
}

impl<'a> Manifest<'a> {
    fn new(command: &'a str, config: Option<serde_json::Value>) -> Self {
        Manifest {
            tool_version: TOOL_VERSION,
            command,
            config,
            seeds: Vec::new(),
            timings: BTreeMap::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    /// Adds the manifest itself as the last output.
    fn finish(mut self, out: &mut Outputs) {
        let name = format!("{}.manifest.json", self.command);
        self.outputs = out.paths().iter().map(|p| p.display().to_string()).collect();
        let mut bytes = serde_json::to_vec_pretty(&self).expect("manifest serializes");
        bytes.push(b'\n');
        out.add(&name, bytes);
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return 0;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
            report_error("usage", 2, first);
            return 2;
        }
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter_or("IKDL_LOG", "warn")).try_init();
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            let code = e.exit_code();
            report_error(e.category(), code, &e.to_string());
            code
        }
    }
}

fn report_error(kind: &str, code: i32, message: &str) {
    let line = serde_json::json!({ "error": kind, "code": code, "message": message });
    eprintln!("{line}");
}

pub fn execute(cli: &Cli) -> Result<()> {
    if let Some(k) = cli.threads {
        if k == 0 {
            return Err(Error::Usage("--threads must be positive".into()));
        }
        if rayon::ThreadPoolBuilder::new().num_threads(k).build_global().is_err() {
            log::warn!("thread pool already initialized; --threads ignored");
        }
    }
    if cli.seeds == Some(0) {
        return Err(Error::Usage("--seeds must be positive".into()));
    }
    if cli.seeds.is_some_and(|k| k > 1) && !matches!(cli.command, Command::Bench) {
        return Err(Error::Usage("--seeds applies to bench only".into()));
    }
    match &cli.command {
        Command::Train => cmd_train(cli),
        Command::Eval { model, data } => cmd_eval(cli, model, data),
        Command::Classify {
            model,
            signal,
            signals,
            format,
        } => cmd_classify(model, signal.as_deref(), signals.as_deref(), *format),
        Command::Heatmap { model, which, data } => cmd_heatmap(cli, model, *which, data),
        Command::Synth {
            classes,
            per_class,
            dim,
            subspace_dim,
            noise,
            format,
        } => cmd_synth(
            cli,
            SynthParams {
                classes: *classes,
                per_class: *per_class,
                dim: *dim,
                subspace_dim: *subspace_dim,
                noise_sigma: *noise,
                seed: cli.seed.unwrap_or(0),
            },
            *format,
        ),
        Command::Bench => cmd_bench(cli),
    }
}

/// Config with `--seed` applied, plus the directory its paths are relative to.
fn load_config(cli: &Cli) -> Result<(RunConfig, PathBuf)> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Usage("this command needs --config".into()))?;
    let mut cfg = RunConfig::load(path)?;
    if let Some(s) = cli.seed {
        cfg.reseed(s);
    }
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((cfg, base))
}

fn cmd_train(cli: &Cli) -> Result<()> {
    let (cfg, base) = load_config(cli)?;
    let (train_set, test_set) = load_split(&cfg, &base)?;
    let (model, train_s) = train_labeled(&train_set, &cfg.train_config())?;

    let mut out = Outputs::new(&cli.out);
    out.add(MODEL_FILE, encode_model(&model));
    out.add("objective.csv", objective_csv(model.objective()));
    let mut manifest = Manifest::new("train", Some(snapshot(&cfg)));
    manifest.seeds = vec![cfg.seed];
    manifest.timings.insert("train_s", train_s);
    manifest.inputs = cli.config.iter().map(|p| p.display().to_string()).collect();
    manifest.finish(&mut out);
    out.commit()?;
    println!(
        "trained {} on {} ({} train / {} test signals, {} classes) in {}s -> {}",
        model.algorithm(),
        cfg.dataset_name(),
        train_set.len(),
        test_set.len(),
        model.n_classes(),
        fmt_seconds(train_s),
        cli.out.join(MODEL_FILE).display()
    );
    Ok(())
}

/// Test signals from explicit files, or else the test part of the
/// configured split. Returns the data and a dataset name.
fn load_test(cli: &Cli, data: &TestData, model: &ClassifierModel) -> Result<(TestSet, String)> {
    if let Some(signals) = &data.signals {
        let format = match data.format {
            Some(f) => f,
            None => DatasetFormat::from_path(signals)?,
        };
        let (m, labels) = load_raw(signals, data.labels.as_deref(), format)?;
        let name = signals.file_stem().map_or("dataset".into(), |s| s.to_string_lossy().into_owned());
        return Ok((TestSet::from_raw(m, &labels, model)?, name));
    }
    let (cfg, base) = load_config(cli)
        .map_err(|_| Error::Usage("give --signals/--labels or a --config with a dataset".into()))?;
    let (_, test) = load_split(&cfg, &base)?;
    Ok((TestSet::from_dataset(&test, model)?, cfg.dataset_name()))
}

/// Training time recorded next to the model, if any.
fn recorded_train_time(model_path: &Path) -> Option<f64> {
    let manifest = model_path.with_file_name(TRAIN_MANIFEST);
    let text = std::fs::read_to_string(manifest).ok()?;
    let v: serde_json::Value = serde_json::from_str(&text).ok()?;
    v.get("timings")?.get("train_s")?.as_f64()
}

fn cmd_eval(cli: &Cli, model_path: &Path, data: &TestData) -> Result<()> {
    let model = load_model(model_path)?;
    let (test, name) = load_test(cli, data, &model)?;
    let report = evaluate(&test, &model)?;
    let row = model_row(&name, &model, recorded_train_time(model_path), report.test_time_s, report.accuracy);

    let mut out = Outputs::new(&cli.out);
    out.add("report.csv", report_csv(std::slice::from_ref(&row)));
    out.add("confusion.csv", confusion_csv(&report.confusion, model.labels()));
    out.add("predictions.csv", predictions_csv(&report.truth, &report.predictions, model.labels()));
    let mut manifest = Manifest::new("eval", None);
    manifest.timings.insert("test_s", report.test_time_s);
    manifest.inputs = vec![model_path.display().to_string()];
    manifest.finish(&mut out);
    out.commit()?;
    print!("{}", report_table(&[row]));
    Ok(())
}

fn cmd_classify(model_path: &Path, signal: Option<&str>, signals: Option<&Path>, format: Option<DatasetFormat>) -> Result<()> {
    let model = load_model(model_path)?;
    let m = match (signal, signals) {
        (Some(text), _) => {
            crate::dataset::parse_matrix_csv(text.replace(',', "\n").as_bytes(), Path::new("--signal"))?
        }
        (None, Some(path)) => match format.map_or_else(|| DatasetFormat::from_path(path), Ok)? {
            DatasetFormat::Csv => crate::dataset::read_matrix_csv(path)?,
            DatasetFormat::Binary => {
                let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
                crate::dataset::decode_binary(&bytes, path)?.0
            }
        },
        (None, None) => return Err(Error::Usage("classify needs --signal or --signals".into())),
    };
    let decisions = predict(&m, &model)?;
    let mut header = vec!["signal".to_string(), "predicted".to_string()];
    header.extend(model.labels().iter().map(|l| format!("residual_{l}")));
    let rows = decisions.iter().enumerate().map(|(l, d)| {
        let mut r = vec![l.to_string(), model.labels()[d.class].to_string()];
        r.extend(d.residuals.iter().map(|v| crate::dataset::fmt_f64(*v)));
        r
    });
    print!("{}", String::from_utf8(csv_bytes(&header, rows)).unwrap());
    Ok(())
}

fn cmd_heatmap(cli: &Cli, model_path: &Path, which: Which, data: &TestData) -> Result<()> {
    let model = load_model(model_path)?;
    let (name, bytes) = match which {
        Which::Reconstruction => {
            let (test, _) = load_test(cli, data, &model)?;
            let m = error_matrix(&test.signals, &model)?;
            let ids: Vec<String> = (0..m.nrows()).map(|l| l.to_string()).collect();
            ("heatmap_reconstruction.csv", labeled_matrix_csv("signal", &ids, model.labels(), &m))
        }
        Which::Discriminative => {
            let m = discriminative_matrix(&model)?;
            let ids: Vec<String> = model.labels().iter().map(i64::to_string).collect();
            ("heatmap_discriminative.csv", labeled_matrix_csv("class", &ids, model.labels(), &m))
        }
    };
    let mut out = Outputs::new(&cli.out);
    out.add(name, bytes);
    let mut manifest = Manifest::new("heatmap", None);
    manifest.inputs = vec![model_path.display().to_string()];
    manifest.finish(&mut out);
    out.commit()?;
    println!("wrote {}", cli.out.join(name).display());
    Ok(())
}

fn cmd_synth(cli: &Cli, params: SynthParams, format: DatasetFormat) -> Result<()> {
    let ds = synth_dataset(&params)?;
    let mut out = Outputs::new(&cli.out);
    match format {
        DatasetFormat::Csv => {
            out.add("signals.csv", write_matrix_csv(ds.signals()));
            out.add("labels.txt", write_labels(&raw_labels(&ds)));
        }
        DatasetFormat::Binary => {
            let path = out.path("dataset.bin");
            out.add("dataset.bin", encode_dataset(&ds, &path)?);
        }
    }
    let mut manifest = Manifest::new("synth", Some(serde_json::json!({ "synth": params, "format": format })));
    manifest.seeds = vec![params.seed];
    manifest.finish(&mut out);
    out.commit()?;
    println!("wrote {} signals of dimension {} to {}", ds.len(), ds.dim(), cli.out.display());
    Ok(())
}

const BENCH_COLUMNS: [&str; 9] = [
    "dataset", "algorithm", "kernel", "gamma", "seed", "train_s", "test_s", "accuracy", "error",
];
const SUMMARY_COLUMNS: [&str; 9] = [
    "dataset",
    "algorithm",
    "kernel",
    "gamma",
    "runs",
    "mean_accuracy",
    "min_accuracy",
    "max_accuracy",
    "mean_train_s",
];

fn cmd_bench(cli: &Cli) -> Result<()> {
    let (cfg, base) = load_config(cli)?;
    let grid = cfg.bench.clone().unwrap_or_default();
    let BenchGrid { modes, kernels, gammas } = grid;
    let gammas = if gammas.is_empty() { vec![cfg.gamma] } else { gammas };
    let first = cfg.seed;
    let seeds: Vec<u64> = (0..cli.seeds.unwrap_or(1) as u64).map(|k| first + k).collect();
    let name = cfg.dataset_name();

    // Input errors abort the whole run; training failures are per cell.
    let mut splits = Vec::with_capacity(seeds.len());
    for &s in &seeds {
        let mut c = cfg.clone();
        c.reseed(s);
        let ds = load_source(&c, &base)?;
        splits.push((c.clone(), split(&ds, &c.split)?));
    }

    let mut rows = Vec::new();
    let mut summary = Vec::new();
    let mut table = Vec::new();
    for &mode in &modes {
        for kernel in &kernels {
            for &gamma in &gammas {
                let algorithm = algorithm_label(kernel.as_ref(), mode);
                let klabel = kernel_label(kernel.as_ref());
                let mut accs = Vec::new();
                let mut train_times = Vec::new();
                for (c, (train_set, test_set)) in &splits {
                    let mut tc = c.train_config();
                    tc.mode = mode;
                    tc.kernel = *kernel;
                    tc.gamma = gamma;
                    let base_row = [name.clone(), algorithm.clone(), klabel.clone(), gamma.to_string(), c.seed.to_string()];
                    let tail = match train_and_evaluate(train_set, test_set, &tc) {
                        Ok(r) => {
                            log::info!("{algorithm} {klabel} gamma={gamma} seed={}: {}", c.seed, percent(r.report.accuracy));
                            accs.push(r.report.accuracy);
                            train_times.push(r.report.train_time_s);
                            table.push(model_row(
                                &name,
                                &r.model,
                                Some(r.report.train_time_s),
                                r.report.test_time_s,
                                r.report.accuracy,
                            ));
                            [
                                fmt_seconds(r.report.train_time_s),
                                fmt_seconds(r.report.test_time_s),
                                percent(r.report.accuracy),
                                String::new(),
                            ]
                        }
                        Err(e) => {
                            log::warn!("{algorithm} {klabel} gamma={gamma} seed={}: {e}", c.seed);
                            [String::new(), String::new(), String::new(), e.to_string()]
                        }
                    };
                    rows.push(base_row.into_iter().chain(tail).collect::<Vec<_>>());
                }
                let stat = |f: fn(&[f64]) -> f64, v: &[f64]| if v.is_empty() { String::new() } else { percent(f(v)) };
                summary.push(vec![
                    name.clone(),
                    algorithm,
                    klabel,
                    gamma.to_string(),
                    accs.len().to_string(),
                    stat(mean, &accs),
                    stat(|v| v.iter().copied().fold(f64::INFINITY, f64::min), &accs),
                    stat(|v| v.iter().copied().fold(f64::NEG_INFINITY, f64::max), &accs),
                    if train_times.is_empty() { String::new() } else { fmt_seconds(mean(&train_times)) },
                ]);
            }
        }
    }

    let header = |cols: &[&str]| cols.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    let mut out = Outputs::new(&cli.out);
    out.add("bench.csv", csv_bytes(&header(&BENCH_COLUMNS), rows));
    out.add("bench_summary.csv", csv_bytes(&header(&SUMMARY_COLUMNS), summary));
    let mut manifest = Manifest::new("bench", Some(snapshot(&cfg)));
    manifest.seeds = seeds;
    manifest.inputs = cli.config.iter().map(|p| p.display().to_string()).collect();
    manifest.finish(&mut out);
    out.commit()?;
    print!("{}", report_table(&table));
    Ok(())
}

fn snapshot(cfg: &RunConfig) -> serde_json::Value {
    serde_json::to_value(cfg).expect("config serializes")
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}
