//! Run configuration: one JSON document per run, with `key=value`
//! command-line overrides addressed by dotted path.

use std::path::{Path, PathBuf};

use cadence_core::{KernelFamily, LossVariant, SplitSpec, SyntheticSpec, TrainConfig};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub train: TrainConfig,
    pub split: SplitSpec,
    /// Input series and optional labels; ignored when `manifest` is set.
    pub data: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
    /// Model to score with; defaults to `<out>/model.cadm`.
    pub model: Option<PathBuf>,
    /// Score file for detect/eval; defaults to `<out>/scores.csv`.
    pub scores: Option<PathBuf>,
    pub out: PathBuf,
    /// Min-max scale each channel to [0, 1] after loading.
    pub normalize: bool,
    /// Moving-average width; `None` means the window size (rounded up to odd).
    pub smoothing_width: Option<usize>,
    pub ratio: f64,
    /// Peak suppression distance; `None` means the window size.
    pub min_separation: Option<usize>,
    pub tolerance: usize,
    /// Rank smoothed scores for ROC/AUC; `false` ranks the raw scores.
    pub auc_smoothed: bool,
    pub seeds: Vec<u64>,
    pub workers: usize,
    pub grid: Grid,
    pub synth: SyntheticSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            train: TrainConfig::default(),
            split: SplitSpec::default(),
            data: None,
            labels: None,
            manifest: None,
            model: None,
            scores: None,
            out: PathBuf::from("out"),
            normalize: true,
            smoothing_width: None,
            ratio: cadence_core::detect::DEFAULT_RATIO,
            min_separation: None,
            tolerance: cadence_core::eval::DEFAULT_TOLERANCE,
            auc_smoothed: true,
            seeds: vec![0],
            workers: 1,
            grid: Grid::default(),
            synth: SyntheticSpec::default(),
        }
    }
}

/// Axes of an ablation sweep. An empty axis keeps the base config's value.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Grid {
    pub loss_variant: Vec<LossVariant>,
    pub beta: Vec<f64>,
    pub w: Vec<usize>,
    pub z: Vec<usize>,
    pub kernel: Vec<KernelFamily>,
    pub train_frac: Vec<f64>,
}

impl Grid {
    pub fn is_empty(&self) -> bool {
        self.loss_variant.is_empty()
            && self.beta.is_empty()
            && self.w.is_empty()
            && self.z.is_empty()
            && self.kernel.is_empty()
            && self.train_frac.is_empty()
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        let cfg = |e: cadence_core::Error| CliError::Config(e.to_string());
        self.train.validate().map_err(cfg)?;
        self.split.validate().map_err(cfg)?;
        self.synth.validate().map_err(cfg)?;
        if !(self.ratio > 0.0 && self.ratio <= 1.0) {
            return Err(CliError::Config(format!("ratio must lie in (0, 1], got {}", self.ratio)));
        }
        if let Some(w) = self.smoothing_width {
            if w == 0 || w % 2 == 0 {
                return Err(CliError::Config(format!("smoothing_width must be odd, got {w}")));
            }
        }
        if self.seeds.is_empty() {
            return Err(CliError::Config("seeds must not be empty".into()));
        }
        if self.workers == 0 {
            return Err(CliError::Config("workers must be at least 1".into()));
        }
        if self.grid.train_frac.iter().any(|&f| !(f > 0.0 && f < 1.0 - self.split.test_frac)) {
            return Err(CliError::Config("train_frac values must leave room for the test split".into()));
        }
        Ok(())
    }

    pub fn smoothing_for(&self, window: usize) -> usize {
        self.smoothing_width.unwrap_or(window | 1)
    }

    pub fn separation_for(&self, window: usize) -> usize {
        self.min_separation.unwrap_or(window)
    }

    pub fn model_path(&self) -> PathBuf {
        self.model.clone().unwrap_or_else(|| self.out.join("model.cadm"))
    }

    pub fn scores_path(&self) -> PathBuf {
        self.scores.clone().unwrap_or_else(|| self.out.join("scores.csv"))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }
}

/// Loads the config file (if any), applies overrides in order and fills
/// every default.
pub fn resolve(path: Option<&Path>, out: Option<&Path>, overrides: &[String]) -> Result<RunConfig, CliError> {
    let mut doc = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            serde_json::from_str::<Value>(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
        }
        None => Value::Object(Default::default()),
    };
    if !doc.is_object() {
        return Err(CliError::Config("config must be a JSON object".into()));
    }
    // materialise defaults first so overrides can reach into nested objects
    let base: RunConfig = serde_json::from_value(doc.clone()).map_err(|e| CliError::Config(e.to_string()))?;
    doc = serde_json::to_value(&base).expect("config serializes");
    for kv in overrides {
        apply_override(&mut doc, kv)?;
    }
    if let Some(o) = out {
        doc["out"] = Value::String(o.to_string_lossy().into_owned());
    }
    let cfg: RunConfig = serde_json::from_value(doc).map_err(|e| CliError::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// `a.b.c=value`. The value is read as JSON when it parses, else as a string.
pub fn apply_override(doc: &mut Value, kv: &str) -> Result<(), CliError> {
    let (key, raw) = kv
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("override {kv:?} is not key=value")))?;
    if key.is_empty() {
        return Err(CliError::Usage(format!("override {kv:?} has an empty key")));
    }
    let value = serde_json::from_str::<Value>(raw).unwrap_or_else(|_| Value::String(raw.into()));
    let mut node = doc;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| CliError::Config(format!("override {key:?}: {} is not an object", parts[..i].join("."))))?;
        if i + 1 == parts.len() {
            if !obj.contains_key(*part) {
                return Err(CliError::Config(format!("unknown config key {key:?}")));
            }
            obj.insert((*part).into(), value);
            return Ok(());
        }
        node = obj
            .get_mut(*part)
            .ok_or_else(|| CliError::Config(format!("unknown config key {key:?}")))?;
    }
    Ok(())
}
