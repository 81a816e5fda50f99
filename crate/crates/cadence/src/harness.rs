//! Benchmark and ablation sweeps over manifest datasets.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use cadence_core::{
    make_pairs, normalize, roc_auc, score_series, smooth, split_chrono, train, KernelFamily, LossVariant, SplitSpec,
    TimeSeries, TrainConfig,
};
use serde::Serialize;

use crate::config::RunConfig;
use crate::dataio::ManifestEntry;
use crate::error::DataError;

/// One or more series evaluated together; AUC is macro-averaged over them.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub name: String,
    pub series: Vec<TimeSeries>,
}

/// Loads every manifest entry and groups entries sharing a dataset name,
/// keeping manifest order within a group.
pub fn load_datasets(entries: &[ManifestEntry]) -> Result<Vec<Dataset>, DataError> {
    let mut out: Vec<Dataset> = Vec::new();
    for e in entries {
        let ts = e.load()?;
        let name = e.dataset_name();
        match out.iter_mut().find(|d| d.name == name) {
            Some(d) => d.series.push(ts),
            None => out.push(Dataset { name, series: vec![ts] }),
        }
    }
    Ok(out)
}

/// Hyperparameters of one sweep cell.
#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub loss_variant: LossVariant,
    pub beta: f64,
    pub w: usize,
    pub z: usize,
    pub kernel: KernelFamily,
    /// `None` keeps the configured split.
    pub train_frac: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResultRow {
    pub dataset: String,
    pub seed: u64,
    pub loss_variant: LossVariant,
    pub beta: f64,
    pub w: usize,
    pub z: usize,
    pub kernel: KernelFamily,
    pub train_frac: f64,
    pub auc: Option<f64>,
    pub seconds: f64,
    /// Selected checkpoint when early stopping is active, averaged over series.
    #[serde(skip)]
    pub best_iteration: Option<f64>,
    pub status: String,
}

impl ResultRow {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

/// Cartesian product of the grid axes; empty axes take the base value.
pub fn expand_grid(cfg: &RunConfig) -> Vec<Cell> {
    fn axis<T: Clone>(v: &[T], base: T) -> Vec<T> {
        if v.is_empty() {
            vec![base]
        } else {
            v.to_vec()
        }
    }
    let g = &cfg.grid;
    let t = &cfg.train;
    let fracs: Vec<Option<f64>> = if g.train_frac.is_empty() {
        vec![None]
    } else {
        g.train_frac.iter().copied().map(Some).collect()
    };
    let mut cells = Vec::new();
    for &loss_variant in &axis(&g.loss_variant, t.loss_variant) {
        for &beta in &axis(&g.beta, t.beta) {
            for &w in &axis(&g.w, t.window) {
                for &z in &axis(&g.z, t.latent_dim) {
                    for &kernel in &axis(&g.kernel, t.kernel.family) {
                        for &train_frac in &fracs {
                            cells.push(Cell {
                                loss_variant,
                                beta,
                                w,
                                z,
                                kernel,
                                train_frac,
                            });
                        }
                    }
                }
            }
        }
    }
    cells
}

fn cell_split(cfg: &RunConfig, cell: &Cell) -> SplitSpec {
    match cell.train_frac {
        // train on the first fraction, keep the test tail fixed, validate in between
        Some(f) => SplitSpec {
            train_frac: f,
            val_frac: 1.0 - f - cfg.split.test_frac,
            test_frac: cfg.split.test_frac,
        },
        None => cfg.split,
    }
}

fn cell_config(cfg: &RunConfig, cell: &Cell, seed: u64) -> TrainConfig {
    let mut t = cfg.train.clone();
    t.loss_variant = cell.loss_variant;
    t.beta = cell.beta;
    t.window = cell.w;
    t.latent_dim = cell.z;
    t.kernel.family = cell.kernel;
    t.seed = seed;
    t
}

struct SeriesOutcome {
    auc: f64,
    best_iteration: Option<usize>,
}

/// normalize, split, train on the train part, score and rank the test part.
fn run_series(ts: &TimeSeries, cfg: &RunConfig, cell: &Cell, seed: u64) -> cadence_core::Result<SeriesOutcome> {
    let ts = if cfg.normalize { normalize(ts) } else { ts.clone() };
    let (train_part, val, test) = split_chrono(&ts, &cell_split(cfg, cell))?;
    let tc = cell_config(cfg, cell, seed);
    let pairs = make_pairs(&train_part, tc.window)?;
    let val = tc.early_stop.map(|_| &val);
    let (model, log) = train(&pairs, val, &tc)?;
    let mut scores = score_series(&model, &test, &tc.kernel)?;
    if cfg.auc_smoothed {
        scores = smooth(&scores, cfg.smoothing_for(tc.window))?;
    }
    let report = roc_auc(&scores, test.change_points(), cfg.tolerance)?;
    Ok(SeriesOutcome {
        auc: report.auc,
        best_iteration: log.best_iteration,
    })
}

fn is_yahoo(name: &str) -> bool {
    name.to_ascii_lowercase().contains("yahoo")
}

pub fn run_cell(dataset: &Dataset, cfg: &RunConfig, cell: &Cell, seed: u64) -> ResultRow {
    let start = Instant::now();
    let mut row = ResultRow {
        dataset: dataset.name.clone(),
        seed,
        loss_variant: cell.loss_variant,
        beta: cell.beta,
        w: cell.w,
        z: cell.z,
        kernel: cell.kernel,
        train_frac: cell_split(cfg, cell).train_frac,
        auc: None,
        seconds: 0.0,
        best_iteration: None,
        status: String::new(),
    };
    // labels are spread unevenly over Yahoo's series, so fractions are not comparable
    if cell.train_frac.is_some() && is_yahoo(&dataset.name) {
        row.status = "skipped".into();
        return row;
    }
    let mut aucs = Vec::new();
    let mut best = Vec::new();
    let mut first_err = None;
    for ts in &dataset.series {
        match run_series(ts, cfg, cell, seed) {
            Ok(o) => {
                aucs.push(o.auc);
                best.extend(o.best_iteration.map(|b| b as f64));
            }
            // a test split without change points (or without negatives) has no AUC
            Err(cadence_core::Error::NoPositives | cadence_core::Error::NoNegatives) if dataset.series.len() > 1 => {}
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    row.seconds = start.elapsed().as_secs_f64();
    match (aucs.is_empty(), first_err) {
        (_, Some(e)) if dataset.series.len() == 1 || aucs.is_empty() => {
            row.status = format!("failed: {e}");
        }
        (true, None) => row.status = "failed: no series with a defined AUC".into(),
        _ => {
            row.auc = Some(aucs.iter().sum::<f64>() / aucs.len() as f64);
            if !best.is_empty() {
                row.best_iteration = Some(best.iter().sum::<f64>() / best.len() as f64);
            }
            row.status = "ok".into();
        }
    }
    row
}

fn canonical_key(r: &ResultRow) -> impl Ord {
    (
        r.dataset.clone(),
        r.loss_variant,
        r.beta.to_bits(),
        r.w,
        r.z,
        r.kernel,
        r.train_frac.to_bits(),
        r.seed,
    )
}

/// Runs every (dataset, cell, seed) combination on `cfg.workers` threads.
/// Failures become rows; output order does not depend on scheduling.
pub fn run_ablation(datasets: &[Dataset], cfg: &RunConfig, progress: &(dyn Fn(&str) + Sync)) -> Vec<ResultRow> {
    let cells = expand_grid(cfg);
    let jobs: Vec<(&Dataset, &Cell, u64)> = datasets
        .iter()
        .flat_map(|d| cells.iter().flat_map(move |c| cfg.seeds.iter().map(move |&s| (d, c, s))))
        .collect();
    let next = AtomicUsize::new(0);
    let rows = Mutex::new(Vec::with_capacity(jobs.len()));
    let total = jobs.len();
    std::thread::scope(|scope| {
        for _ in 0..cfg.workers.min(total.max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(d, c, s)) = jobs.get(i) else { break };
                let row = run_cell(d, cfg, c, s);
                progress(&format!(
                    "[{}/{total}] {} {} beta={} w={} z={} kernel={} train_frac={} seed={} auc={} ({:.1}s) {}",
                    i + 1,
                    row.dataset,
                    row.loss_variant.as_str(),
                    row.beta,
                    row.w,
                    row.z,
                    row.kernel,
                    row.train_frac,
                    row.seed,
                    row.auc.map_or("-".into(), |a| format!("{a:.4}")),
                    row.seconds,
                    row.status
                ));
                rows.lock().unwrap().push(row);
            });
        }
    });
    let mut rows = rows.into_inner().unwrap();
    rows.sort_by_key(canonical_key);
    rows
}

/// The plain benchmark: base config on every dataset, one row per seed.
pub fn run_benchmark(datasets: &[Dataset], cfg: &RunConfig, progress: &(dyn Fn(&str) + Sync)) -> Vec<ResultRow> {
    let mut base = cfg.clone();
    base.grid = Default::default();
    run_ablation(datasets, &base, progress)
}

pub const RESULTS_HEADER: [&str; 11] = [
    "dataset",
    "seed",
    "loss_variant",
    "beta",
    "w",
    "z",
    "kernel",
    "train_frac",
    "auc",
    "seconds",
    "status",
];

pub fn results_csv(rows: &[ResultRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(RESULTS_HEADER).unwrap();
    for r in rows {
        w.write_record([
            r.dataset.clone(),
            r.seed.to_string(),
            r.loss_variant.as_str().to_string(),
            r.beta.to_string(),
            r.w.to_string(),
            r.z.to_string(),
            r.kernel.to_string(),
            r.train_frac.to_string(),
            r.auc.map_or_else(String::new, |a| a.to_string()),
            format!("{:.3}", r.seconds),
            r.status.clone(),
        ])
        .unwrap();
    }
    String::from_utf8(w.into_inner().unwrap()).unwrap()
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Stats {
    pub n: usize,
    pub mean: Option<f64>,
    /// Sample standard deviation; `None` below two values.
    pub std: Option<f64>,
}

impl Stats {
    pub fn of(v: &[f64]) -> Self {
        let n = v.len();
        if n == 0 {
            return Stats::default();
        }
        let mean = v.iter().sum::<f64>() / n as f64;
        let std = (n > 1).then(|| (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt());
        Stats {
            n,
            mean: Some(mean),
            std,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DatasetSummary {
    pub dataset: String,
    pub rows: usize,
    pub failed: usize,
    pub skipped: usize,
    pub auc: Stats,
    pub seconds: Stats,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub tolerance: usize,
    pub seeds: Vec<u64>,
    pub datasets: Vec<DatasetSummary>,
}

pub fn summarize(rows: &[ResultRow], cfg: &RunConfig) -> Summary {
    let mut by: BTreeMap<&str, Vec<&ResultRow>> = BTreeMap::new();
    for r in rows {
        by.entry(&r.dataset).or_default().push(r);
    }
    let datasets = by
        .into_iter()
        .map(|(name, rs)| {
            let ok: Vec<&&ResultRow> = rs.iter().filter(|r| r.is_ok()).collect();
            let aucs: Vec<f64> = ok.iter().filter_map(|r| r.auc).collect();
            let secs: Vec<f64> = ok.iter().map(|r| r.seconds).collect();
            DatasetSummary {
                dataset: name.into(),
                rows: rs.len(),
                failed: rs.iter().filter(|r| r.status.starts_with("failed")).count(),
                skipped: rs.iter().filter(|r| r.status == "skipped").count(),
                auc: Stats::of(&aucs),
                seconds: Stats::of(&secs),
            }
        })
        .collect();
    Summary {
        tolerance: cfg.tolerance,
        seeds: cfg.seeds.clone(),
        datasets,
    }
}

/// One plot-ready CSV per swept axis: mean/std AUC per (value, dataset),
/// averaged over seeds and over any other swept axes.
pub fn figure_exports(rows: &[ResultRow], cfg: &RunConfig) -> Vec<(&'static str, String)> {
    type Key = fn(&ResultRow) -> String;
    let g = &cfg.grid;
    let axes: [(&'static str, &'static str, bool, Key); 6] = [
        ("fig7_ablation.csv", "loss_variant", !g.loss_variant.is_empty(), |r| r.loss_variant.as_str().into()),
        ("fig8_window.csv", "w", !g.w.is_empty(), |r| r.w.to_string()),
        ("fig9_train_frac.csv", "train_frac", !g.train_frac.is_empty(), |r| r.train_frac.to_string()),
        ("fig10_latent.csv", "z", !g.z.is_empty(), |r| r.z.to_string()),
        ("fig11_kernel.csv", "kernel", !g.kernel.is_empty(), |r| r.kernel.to_string()),
        ("fig12_beta.csv", "beta", !g.beta.is_empty(), |r| r.beta.to_string()),
    ];
    let mut out = Vec::new();
    for (file, column, active, key) in axes {
        if !active {
            continue;
        }
        // keep first-seen order of axis values as configured, datasets sorted
        let mut groups: Vec<((String, String), Vec<&ResultRow>)> = Vec::new();
        for r in rows.iter().filter(|r| r.is_ok()) {
            let k = (r.dataset.clone(), key(r));
            match groups.iter_mut().find(|(gk, _)| *gk == k) {
                Some((_, v)) => v.push(r),
                None => groups.push((k, vec![r])),
            }
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["dataset", column, "n", "mean_auc", "std_auc", "mean_seconds", "mean_best_iteration"])
            .unwrap();
        for ((dataset, value), rs) in groups {
            let auc = Stats::of(&rs.iter().filter_map(|r| r.auc).collect::<Vec<_>>());
            let secs = Stats::of(&rs.iter().map(|r| r.seconds).collect::<Vec<_>>());
            let best = Stats::of(&rs.iter().filter_map(|r| r.best_iteration).collect::<Vec<_>>());
            let opt = |v: Option<f64>| v.map_or_else(String::new, |x| x.to_string());
            w.write_record([
                dataset,
                value,
                auc.n.to_string(),
                opt(auc.mean),
                opt(auc.std),
                opt(secs.mean.map(|s| (s * 1000.0).round() / 1000.0)),
                opt(best.mean),
            ])
            .unwrap();
        }
        out.push((file, String::from_utf8(w.into_inner().unwrap()).unwrap()));
    }
    out
}
