//! `cadence <train|score|detect|eval|ablate|synth> [--config PATH] [--out DIR] [key=value ...]`

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use cadence_core::{
    detect, generate_synthetic, make_pairs, normalize, roc_auc, score_series, smooth, split_chrono, train, KernelSpec,
    TimeSeries,
};
use chrono::{SecondsFormat, Utc};
use clap::{Parser, Subcommand};

use crate::config::{resolve, RunConfig};
use crate::dataio::{load_manifest, write_csv, write_labels, ManifestEntry};
use crate::error::{CliError, DataError};
use crate::formats::{read_scores, trainlog_csv, write_json, write_scores, DetectionDoc, EvalDoc};
use crate::fsutil::write_atomic;
use crate::harness::{figure_exports, load_datasets, results_csv, run_ablation, summarize};
use crate::model_file::{load_model, save_model};

#[derive(Debug, Parser)]
#[command(name = "cadence", version, about = "Unsupervised change-point detection with MMD autoencoders")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config's `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Config overrides such as `train.iterations=500` or `seeds=[0,1,2]`.
    overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a model on the train split and write model.cadm.
    Train(Common),
    /// Score a series with a trained model.
    Score(Common),
    /// Threshold smoothed scores into change points and segments.
    Detect(Common),
    /// ROC/AUC of a score file against a label file.
    Eval(Common),
    /// Benchmark or ablation sweep over a dataset manifest.
    Ablate(Common),
    /// Generate a synthetic series with known change points.
    Synth(Common),
}

/// Prints one progress line prefixed with an ISO-8601 UTC timestamp.
pub fn progress(msg: &str) {
    println!("{} {msg}", Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true));
}

/// Parses arguments and runs the command; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("cadence: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cmd: Command) -> Result<(), CliError> {
    let (name, common) = match &cmd {
        Command::Train(c) => ("train", c),
        Command::Score(c) => ("score", c),
        Command::Detect(c) => ("detect", c),
        Command::Eval(c) => ("eval", c),
        Command::Ablate(c) => ("ablate", c),
        Command::Synth(c) => ("synth", c),
    };
    let cfg = resolve(common.config.as_deref(), common.out.as_deref(), &common.overrides)?;
    let echo = cfg.out.join("effective_config.json");
    write_atomic(&echo, cfg.to_json().as_bytes()).map_err(|source| CliError::Output { path: echo.clone(), source })?;
    progress(&format!("{name}: effective config written to {}", echo.display()));
    match cmd {
        Command::Train(_) => cmd_train(&cfg),
        Command::Score(_) => cmd_score(&cfg),
        Command::Detect(_) => cmd_detect(&cfg),
        Command::Eval(_) => cmd_eval(&cfg),
        Command::Ablate(_) => cmd_ablate(&cfg),
        Command::Synth(_) => cmd_synth(&cfg),
    }
}

/// Exit-code class of a library error.
fn core_err(e: cadence_core::Error) -> CliError {
    use cadence_core::Error as E;
    match e {
        E::UntrainedModel | E::EmptyTrainingSet => CliError::Training(e.to_string()),
        E::InvalidConfig(_) | E::InvalidKernel(_) | E::InvalidSplit(_) | E::InvalidWidth(_) | E::InvalidRatio => {
            CliError::Config(e.to_string())
        }
        other => CliError::Data(DataError::Core(other)),
    }
}

fn data_err(e: DataError) -> CliError {
    match e {
        DataError::Core(c) => core_err(c),
        other => CliError::Data(other),
    }
}

/// The single series a command works on: `data` (+ `labels`), or the first
/// manifest entry.
fn input_series(cfg: &RunConfig) -> Result<TimeSeries, CliError> {
    let entry = match (&cfg.data, &cfg.manifest) {
        (Some(d), _) => ManifestEntry {
            data: d.clone(),
            labels: cfg.labels.clone(),
            name: None,
            dataset: None,
        },
        (None, Some(m)) => load_manifest(m).map_err(data_err)?.remove(0),
        (None, None) => return Err(CliError::Config("no input: set `data` or `manifest`".into())),
    };
    let ts = entry.load().map_err(data_err)?;
    Ok(if cfg.normalize { normalize(&ts) } else { ts })
}

fn write_out(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    write_atomic(path, bytes).map_err(|source| CliError::Output {
        path: path.into(),
        source,
    })
}

fn cmd_train(cfg: &RunConfig) -> Result<(), CliError> {
    let ts = input_series(cfg)?;
    progress(&format!("train: {} ({} x {})", ts.name(), ts.len(), ts.channels()));
    let (train_part, val, _test) = split_chrono(&ts, &cfg.split).map_err(core_err)?;
    let pairs = make_pairs(&train_part, cfg.train.window).map_err(core_err)?;
    let val = cfg.train.early_stop.map(|_| &val);
    let start = Instant::now();
    let (model, log) = train(&pairs, val, &cfg.train).map_err(|e| match e {
        cadence_core::Error::InvalidConfig(_) => core_err(e),
        other => CliError::Training(other.to_string()),
    })?;
    progress(&format!(
        "train: {} iterations on {} pairs in {:.2}s, final loss {}",
        log.iterations_run,
        pairs.len(),
        start.elapsed().as_secs_f64(),
        log.entries.last().map_or("-".into(), |e| format!("{:.6}", e.total))
    ));
    let model_path = cfg.out.join("model.cadm");
    save_model(&model, &model_path).map_err(|source| CliError::Model {
        path: model_path.clone(),
        source,
    })?;
    write_out(&cfg.out.join("trainlog.csv"), trainlog_csv(&log).as_bytes())?;
    progress(&format!("train: wrote {}", model_path.display()));
    Ok(())
}

fn cmd_score(cfg: &RunConfig) -> Result<(), CliError> {
    let path = cfg.model_path();
    let model = load_model(&path).map_err(|source| CliError::Model { path, source })?;
    let ts = input_series(cfg)?;
    // the model's own family with its frozen bandwidth, unless a fixed one is configured
    let kernel = match cfg.train.kernel.bandwidth {
        cadence_core::Bandwidth::Fixed(_) => cfg.train.kernel,
        cadence_core::Bandwidth::MedianHeuristic => KernelSpec::median(model.meta.kernel),
    };
    let scores = score_series(&model, &ts, &kernel).map_err(core_err)?;
    let scores = smooth(&scores, cfg.smoothing_for(model.meta.window)).map_err(core_err)?;
    let out = cfg.out.join("scores.csv");
    write_scores(&out, &scores).map_err(data_err)?;
    progress(&format!("score: {} boundaries written to {}", scores.len(), out.display()));
    Ok(())
}

fn series_label(cfg: &RunConfig, scores_path: &Path) -> String {
    cfg.data
        .as_deref()
        .unwrap_or(scores_path)
        .file_stem()
        .map_or_else(|| "series".into(), |s| s.to_string_lossy().into_owned())
}

fn cmd_detect(cfg: &RunConfig) -> Result<(), CliError> {
    let path = cfg.scores_path();
    let name = series_label(cfg, &path);
    let mut scores = read_scores(&path, &name).map_err(data_err)?;
    let w = scores.start_t;
    if scores.smoothed.is_none() {
        scores = smooth(&scores, cfg.smoothing_for(w)).map_err(core_err)?;
    }
    let det = detect(&scores, cfg.ratio, cfg.separation_for(w)).map_err(core_err)?;
    let out = cfg.out.join("detection.json");
    write_json(&out, &DetectionDoc::new(&name, &det)).map_err(data_err)?;
    progress(&format!("detect: {} change points written to {}", det.change_points.len(), out.display()));
    Ok(())
}

fn cmd_eval(cfg: &RunConfig) -> Result<(), CliError> {
    let labels = cfg
        .labels
        .as_deref()
        .ok_or_else(|| CliError::Config("eval needs `labels`".into()))?;
    let path = cfg.scores_path();
    let name = series_label(cfg, &path);
    let mut scores = read_scores(&path, &name).map_err(data_err)?;
    if !cfg.auc_smoothed {
        scores.smoothed = None;
    } else if scores.smoothed.is_none() {
        scores = smooth(&scores, cfg.smoothing_for(scores.start_t)).map_err(core_err)?;
    }
    let cps = crate::dataio::read_labels(labels).map_err(data_err)?;
    if let Some(&bad) = cps.iter().find(|&&c| c >= scores.series_len) {
        return Err(CliError::Data(DataError::LabelOutOfRange {
            path: labels.into(),
            index: bad,
            len: scores.series_len,
        }));
    }
    let mut report = roc_auc(&scores, &cps, cfg.tolerance).map_err(core_err)?;
    report.config_hash = cfg.train.fingerprint();
    let out = cfg.out.join("eval.json");
    write_json(&out, &EvalDoc::from(&report)).map_err(data_err)?;
    progress(&format!(
        "eval: auc {:.4} on {} scores (tolerance {}) written to {}",
        report.auc,
        if report.smoothed { "smoothed" } else { "raw" },
        report.tolerance,
        out.display()
    ));
    Ok(())
}

fn cmd_ablate(cfg: &RunConfig) -> Result<(), CliError> {
    let manifest = cfg
        .manifest
        .as_deref()
        .ok_or_else(|| CliError::Config("ablate needs `manifest`".into()))?;
    let entries = load_manifest(manifest).map_err(data_err)?;
    let datasets = load_datasets(&entries).map_err(data_err)?;
    progress(&format!(
        "ablate: {} datasets, {} cells, {} seeds, {} workers",
        datasets.len(),
        crate::harness::expand_grid(cfg).len(),
        cfg.seeds.len(),
        cfg.workers
    ));
    let rows = run_ablation(&datasets, cfg, &progress);
    write_out(&cfg.out.join("results.csv"), results_csv(&rows).as_bytes())?;
    write_json(&cfg.out.join("summary.json"), &summarize(&rows, cfg)).map_err(data_err)?;
    for (file, body) in figure_exports(&rows, cfg) {
        write_out(&cfg.out.join(file), body.as_bytes())?;
        progress(&format!("ablate: wrote {file}"));
    }
    let failed = rows.iter().filter(|r| r.status.starts_with("failed")).count();
    progress(&format!("ablate: {} rows, {failed} failed", rows.len()));
    Ok(())
}

fn cmd_synth(cfg: &RunConfig) -> Result<(), CliError> {
    let ts = generate_synthetic(&cfg.synth).map_err(core_err)?;
    let data = cfg.out.join("series.csv");
    write_csv(&data, &ts).map_err(data_err)?;
    write_labels(&cfg.out.join("labels.txt"), ts.change_points()).map_err(data_err)?;
    progress(&format!(
        "synth: {} timesteps, change points {:?} written to {}",
        ts.len(),
        ts.change_points(),
        data.display()
    ));
    Ok(())
}
