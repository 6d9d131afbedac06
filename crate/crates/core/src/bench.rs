//! Experiment runner: grid sweeps, a resumable JSONL journal, per-cell
//! medians over seeds and table-shaped reports.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Mutex;
use std::time::Instant;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learning::{LearningRuleConfig, RuleCategory, RuleKind};
use crate::network::WIDTH_GRID;
use crate::neuron::LifParams;
use crate::pipeline::{evaluate, predict_dataset, train, CalibrationMode, EvalReport, TrainConfig};
use crate::rng::{derive_seed, stream};
use crate::sources::{make_dataset, SourceFamily};

pub const CONFIG_VERSION: u32 = 1;
pub const JOURNAL_VERSION: u32 = 1;
pub const REPORT_SCHEMA_VERSION: u32 = 1;

pub const REPRO_THRESHOLDS: [f64; 7] = [1.00, 0.50, 0.40, 0.30, 0.20, 0.10, 0.05];
pub const REPRO_DECAYS: [f64; 4] = [0.100, 0.05, 0.03, 0.01];
pub const REPRO_LEARNING_RATES: [f64; 5] = [0.0500, 0.0100, 0.0010, 0.0098, 0.0001];

/// Environment variable capping the worker pool.
pub const THREADS_ENV: &str = "SPIKEBENCH_THREADS";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunMode {
    /// First seed only; grid values need only be valid.
    #[default]
    Fast,
    /// Median over at least three seeds; grid values must come from the
    /// published grids.
    PaperRepro,
}

/// Sweep axes. An empty `thresholds`, `decays` or `learning_rates` list
/// means "use the default" for that axis; an empty `rules`, `sources` or `n`
/// list yields no cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Grid {
    pub rules: Vec<RuleKind>,
    pub sources: Vec<SourceFamily>,
    pub n: Vec<usize>,
    pub thresholds: Vec<f64>,
    pub decays: Vec<f64>,
    pub learning_rates: Vec<f64>,
}

impl Default for Grid {
    fn default() -> Self {
        Self {
            rules: RuleKind::ALL.to_vec(),
            sources: SourceFamily::ALL.to_vec(),
            n: WIDTH_GRID.to_vec(),
            thresholds: REPRO_THRESHOLDS.to_vec(),
            decays: REPRO_DECAYS.to_vec(),
            learning_rates: REPRO_LEARNING_RATES.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    pub mode: RunMode,
    pub epochs: usize,
    pub seeds: Vec<u64>,
    /// Timed repetitions of each run; the reported time is their median.
    pub repeat: usize,
    pub train_per_class: usize,
    pub test_per_class: usize,
    pub sequence_length: usize,
    /// Journal path used when none is given on the command line.
    pub output: PathBuf,
    pub calibration: CalibrationMode,
    pub w_max: f64,
    pub init_scale: Option<f64>,
    pub grid: Grid,
    /// Per-rule hyperparameter overrides, keyed by rule name.
    pub rule: BTreeMap<String, toml::Table>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            mode: RunMode::Fast,
            epochs: 10,
            seeds: vec![1, 2, 3],
            repeat: 1,
            train_per_class: 100,
            test_per_class: 100,
            sequence_length: 1024,
            output: PathBuf::from("spikebench-journal.jsonl"),
            calibration: CalibrationMode::Midpoint,
            w_max: 5.0,
            init_scale: None,
            grid: Grid::default(),
            rule: BTreeMap::new(),
        }
    }
}

impl FromStr for ExperimentConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn in_set(v: f64, set: &[f64]) -> bool {
    set.iter().any(|&s| (s - v).abs() < 1e-12)
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?.parse()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.version != CONFIG_VERSION {
            return bad(format!("unsupported config version {} (expected {CONFIG_VERSION})", self.version));
        }
        if self.epochs == 0 {
            return bad("epochs must be >= 1".into());
        }
        if self.seeds.is_empty() {
            return bad("at least one seed is required".into());
        }
        if self.mode == RunMode::PaperRepro && self.seeds.len() < 3 {
            return bad("paper-repro mode needs at least 3 seeds".into());
        }
        if self.repeat == 0 {
            return bad("repeat must be >= 1".into());
        }
        if self.train_per_class == 0 || self.test_per_class == 0 {
            return bad("per-class sample counts must be >= 1".into());
        }
        if self.sequence_length < 2 {
            return bad("sequence_length must be >= 2".into());
        }
        if !(self.w_max > 0.0) {
            return bad("w_max must be > 0".into());
        }
        if let Some(s) = self.init_scale {
            if !(s >= 0.0 && s.is_finite()) {
                return bad("init_scale must be finite and >= 0".into());
            }
        }
        let g = &self.grid;
        if let Some(n) = g.n.iter().find(|n| !WIDTH_GRID.contains(n)) {
            return bad(format!("n = {n} is not in {WIDTH_GRID:?}"));
        }
        if let Some(t) = g.thresholds.iter().find(|&&t| !(t > 0.0 && t.is_finite())) {
            return bad(format!("threshold {t} must be finite and > 0"));
        }
        if let Some(d) = g.decays.iter().find(|&&d| !(d > 0.0 && d <= 1.0)) {
            return bad(format!("decay {d} must be in (0, 1]"));
        }
        if let Some(r) = g.learning_rates.iter().find(|&&r| !(r > 0.0 && r.is_finite())) {
            return bad(format!("learning rate {r} must be finite and > 0"));
        }
        if self.mode == RunMode::PaperRepro {
            let axes: [(&str, &[f64], &[f64]); 3] = [
                ("threshold", &g.thresholds, &REPRO_THRESHOLDS),
                ("decay", &g.decays, &REPRO_DECAYS),
                ("learning rate", &g.learning_rates, &REPRO_LEARNING_RATES),
            ];
            for (name, values, domain) in axes {
                if let Some(v) = values.iter().find(|&&v| !in_set(v, domain)) {
                    return bad(format!("{name} {v} is outside the paper-repro grid {domain:?}"));
                }
            }
        }
        for name in self.rule.keys() {
            let kind: RuleKind = name.parse().map_err(|_| Error::Config(format!("unknown rule table [rule.{name}]")))?;
            self.rule_config(kind)?;
        }
        Ok(())
    }

    /// Default hyperparameters for `kind` with any `[rule.<name>]` overrides.
    pub fn rule_config(&self, kind: RuleKind) -> Result<LearningRuleConfig> {
        let Some(table) = self.rule.get(kind.name()) else {
            return Ok(kind.default_config());
        };
        let mut table = table.clone();
        table.insert("name".into(), toml::Value::String(kind.name().into()));
        let cfg: LearningRuleConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e| Error::Config(format!("[rule.{}]: {e}", kind.name())))?;
        cfg.validate()
            .map_err(|e| Error::Config(format!("[rule.{}]: {e}", kind.name())))?;
        Ok(cfg)
    }

    /// Seeds actually run: the first seed in fast mode, all otherwise.
    pub fn active_seeds(&self) -> &[u64] {
        match self.mode {
            RunMode::Fast => &self.seeds[..1],
            RunMode::PaperRepro => &self.seeds,
        }
    }

    /// Cartesian product of the grid axes in table order.
    pub fn cells(&self) -> Vec<CellSpec> {
        let g = &self.grid;
        let lif = LifParams::default();
        let or_default = |v: &[f64], d: Option<f64>| -> Vec<Option<f64>> {
            if v.is_empty() {
                vec![d]
            } else {
                v.iter().copied().map(Some).collect()
            }
        };
        let thresholds = or_default(&g.thresholds, Some(lif.threshold));
        let decays = or_default(&g.decays, Some(lif.decay));
        let rates = or_default(&g.learning_rates, None);
        let mut cells = Vec::new();
        for &rule in &g.rules {
            for &source in &g.sources {
                for &n in &g.n {
                    for &th in &thresholds {
                        for &decay in &decays {
                            for &learning_rate in &rates {
                                cells.push(CellSpec {
                                    rule,
                                    source,
                                    n,
                                    threshold: th.expect("threshold axis always has a value"),
                                    decay: decay.expect("decay axis always has a value"),
                                    learning_rate,
                                });
                            }
                        }
                    }
                }
            }
        }
        cells.sort_by(|a, b| a.order(b));
        cells
    }
}

/// One grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellSpec {
    pub rule: RuleKind,
    pub source: SourceFamily,
    pub n: usize,
    pub threshold: f64,
    pub decay: f64,
    /// `None` keeps the rule's configured rate.
    pub learning_rate: Option<f64>,
}

impl CellSpec {
    pub fn key(&self) -> String {
        let lr = self.learning_rate.map_or("default".to_string(), |r| format!("{r:e}"));
        format!(
            "{}/{}/n{}/th{:e}/decay{:e}/lr{lr}",
            self.rule.name(),
            self.source.name(),
            self.n,
            self.threshold,
            self.decay
        )
    }

    /// Table order: category, rule, dataset, then the numeric axes.
    pub fn order(&self, other: &Self) -> std::cmp::Ordering {
        (self.rule.category(), self.rule, self.source, self.n)
            .cmp(&(other.rule.category(), other.rule, other.source, other.n))
            .then(self.threshold.total_cmp(&other.threshold))
            .then(self.decay.total_cmp(&other.decay))
            .then(
                self.learning_rate
                    .unwrap_or(-1.0)
                    .total_cmp(&other.learning_rate.unwrap_or(-1.0)),
            )
    }
}

impl fmt::Display for CellSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key())
    }
}

/// Metrics of one (cell, seed) run as stored in the journal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub accuracy: f64,
    pub mse: f64,
    pub mae: f64,
    /// `None` when undefined.
    pub r2: Option<f64>,
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum RunOutcome {
    Ok(RunRecord),
    Failed { error: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JournalEntry {
    pub journal_version: u32,
    pub cell: CellSpec,
    pub seed: u64,
    pub epochs: usize,
    pub outcome: RunOutcome,
}

/// Train and evaluate one cell under one seed, timing `repeat` repetitions.
pub fn run_cell(cfg: &ExperimentConfig, cell: &CellSpec, seed: u64) -> Result<RunRecord> {
    let (class0, class1) = cell.source.default_pair();
    let train_set = make_dataset(
        class0,
        class1,
        cfg.train_per_class,
        cfg.sequence_length,
        derive_seed(seed, stream::TRAIN_SET, 0),
    )?;
    let test_set = make_dataset(
        class0,
        class1,
        cfg.test_per_class,
        cfg.sequence_length,
        derive_seed(seed, stream::TEST_SET, 0),
    )?;
    let mut rule = cfg.rule_config(cell.rule)?;
    if let Some(lr) = cell.learning_rate {
        rule = rule.with_learning_rate(lr);
    }
    let tc = TrainConfig {
        epochs: cfg.epochs,
        n: cell.n,
        rule,
        lif: LifParams::from_decay(cell.decay, cell.threshold)?,
        init_scale: cfg.init_scale,
        seed,
        w_max: cfg.w_max,
        calibration: cfg.calibration,
    };
    let labels = test_set.labels();
    let mut times = Vec::with_capacity(cfg.repeat);
    let mut metrics = None;
    for _ in 0..cfg.repeat {
        let start = Instant::now();
        let model = train(&train_set, &tc)?;
        let preds = predict_dataset(&model.network, &model.calibration, &test_set)?;
        let m = evaluate(&preds, &labels)?;
        times.push(start.elapsed().as_secs_f64());
        metrics.get_or_insert(m);
    }
    let m = metrics.expect("repeat >= 1");
    Ok(RunRecord {
        accuracy: m.accuracy,
        mse: m.mse,
        mae: m.mae,
        r2: m.r2_defined.then_some(m.r2),
        wall_time: median(&mut times),
    })
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// Worker count from `SPIKEBENCH_THREADS`, if set to a positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&t: &usize| t > 0)
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Where to append journal entries; `None` disables journaling.
    pub journal: Option<PathBuf>,
    /// Reuse entries already present in the journal instead of truncating it.
    pub resume: bool,
}

/// Reads every entry of a journal. Blank lines are ignored; a truncated
/// final line (from an interrupted write) is dropped with a warning.
pub fn read_journal(path: &Path) -> Result<Vec<JournalEntry>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let lines: Vec<String> = BufReader::new(file)
        .lines()
        .collect::<std::io::Result<_>>()
        .map_err(|e| Error::io(path, e))?;
    let last = lines.iter().rposition(|l| !l.trim().is_empty());
    let mut entries = Vec::new();
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<JournalEntry>(line) {
            Ok(e) if e.journal_version == JOURNAL_VERSION => entries.push(e),
            Ok(e) => {
                return Err(Error::Config(format!(
                    "{}: line {} has journal version {}",
                    path.display(),
                    i + 1,
                    e.journal_version
                )))
            }
            Err(e) if Some(i) == last => {
                warn!("{}: dropping truncated final line: {e}", path.display());
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(entries)
}

struct Journal {
    path: PathBuf,
    writer: BufWriter<File>,
}

impl Journal {
    fn create(path: &Path) -> Result<Self> {
        let file = File::create(path)
            .map_err(|e| Error::io(path, e))?;
        Ok(Self {
            path: path.to_path_buf(),
            writer: BufWriter::new(file),
        })
    }

    fn append(&mut self, entry: &JournalEntry) -> Result<()> {
        let io = |e| Error::io(&self.path, e);
        serde_json::to_writer(&mut self.writer, entry)?;
        self.writer.write_all(b"\n").map_err(io)?;
        self.writer.flush().map_err(io)
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<BenchmarkReport> {
    run_experiment_with(cfg, &RunOptions::default())
}

/// Runs every (cell, seed) pair not already journaled, appending each
/// result as it completes, then aggregates the whole journal.
pub fn run_experiment_with(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<BenchmarkReport> {
    cfg.validate()?;
    let cells = cfg.cells();
    let seeds = cfg.active_seeds();
    let cell_keys: HashSet<String> = cells.iter().map(CellSpec::key).collect();

    let previous = match (&opts.journal, opts.resume) {
        (Some(path), true) if path.exists() => read_journal(path)?,
        _ => Vec::new(),
    };
    let journal = match &opts.journal {
        Some(path) => {
            // Rewrite the surviving entries; a torn tail is discarded.
            let mut j = Journal::create(path)?;
            for e in &previous {
                j.append(e)?;
            }
            Some(Mutex::new(j))
        }
        None => None,
    };
    let mut entries: Vec<JournalEntry> = previous
        .into_iter()
        .filter(|e| e.epochs == cfg.epochs && seeds.contains(&e.seed) && cell_keys.contains(&e.cell.key()))
        .collect();
    let done: HashSet<(String, u64)> = entries.iter().map(|e| (e.cell.key(), e.seed)).collect();
    let jobs: Vec<(CellSpec, u64)> = cells
        .iter()
        .flat_map(|c| seeds.iter().map(move |&s| (*c, s)))
        .filter(|(c, s)| !done.contains(&(c.key(), *s)))
        .collect();
    info!(
        "{} cells x {} seeds: {} runs to do, {} reused",
        cells.len(),
        seeds.len(),
        jobs.len(),
        entries.len()
    );

    let run_job = |(cell, seed): &(CellSpec, u64)| -> Result<JournalEntry> {
        let outcome = match catch_unwind(AssertUnwindSafe(|| run_cell(cfg, cell, *seed))) {
            Ok(Ok(r)) => RunOutcome::Ok(r),
            Ok(Err(e)) => RunOutcome::Failed { error: e.to_string() },
            Err(p) => RunOutcome::Failed {
                error: panic_message(p.as_ref()),
            },
        };
        if let RunOutcome::Failed { error } = &outcome {
            warn!("{cell} seed {seed} failed: {error}");
        } else {
            info!("{cell} seed {seed} done");
        }
        let entry = JournalEntry {
            journal_version: JOURNAL_VERSION,
            cell: *cell,
            seed: *seed,
            epochs: cfg.epochs,
            outcome,
        };
        if let Some(j) = &journal {
            j.lock().expect("journal lock poisoned").append(&entry)?;
        }
        Ok(entry)
    };

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = thread_cap() {
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
    let fresh: Vec<JournalEntry> = pool.install(|| jobs.par_iter().map(run_job).collect::<Result<_>>())?;
    entries.extend(fresh);
    Ok(aggregate(&entries))
}

fn panic_message(p: &(dyn std::any::Any + Send)) -> String {
    if let Some(s) = p.downcast_ref::<&str>() {
        format!("panic: {s}")
    } else if let Some(s) = p.downcast_ref::<String>() {
        format!("panic: {s}")
    } else {
        "panic".to_string()
    }
}

/// One aggregated table row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub cell: CellSpec,
    pub category: RuleCategory,
    pub bio_inspired: bool,
    /// Number of seeds contributing to the medians.
    pub seeds: usize,
    pub report: EvalReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub cell: CellSpec,
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub rows: Vec<ReportRow>,
    /// Best row per (rule, source).
    pub best: Vec<ReportRow>,
    pub failures: Vec<CellFailure>,
    pub environment: String,
}

impl BenchmarkReport {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// CPU model, worker count and build identifiers.
pub fn environment_note() -> String {
    let cpu = std::fs::read_to_string("/proc/cpuinfo")
        .ok()
        .and_then(|s| {
            s.lines()
                .find(|l| l.starts_with("model name"))
                .and_then(|l| l.split(':').nth(1))
                .map(|m| m.trim().to_string())
        })
        .unwrap_or_else(|| std::env::consts::ARCH.to_string());
    let threads = thread_cap().unwrap_or_else(rayon::current_num_threads);
    format!(
        "cpu: {cpu}; threads: {threads}; spikebench {} ({}); {}",
        env!("CARGO_PKG_VERSION"),
        option_env!("SPIKEBENCH_BUILD_HASH").unwrap_or("unknown"),
        if cfg!(debug_assertions) { "debug" } else { "release" },
    )
}

/// Groups journal entries by cell and takes per-metric medians over seeds.
/// Duplicate (cell, seed) entries keep the latest one.
pub fn aggregate(entries: &[JournalEntry]) -> BenchmarkReport {
    let mut latest: BTreeMap<(String, u64), &JournalEntry> = BTreeMap::new();
    for e in entries {
        latest.insert((e.cell.key(), e.seed), e);
    }
    let mut by_cell: BTreeMap<(String, usize), (CellSpec, Vec<RunRecord>)> = BTreeMap::new();
    let mut failures = Vec::new();
    for e in latest.values() {
        match &e.outcome {
            RunOutcome::Ok(r) => by_cell
                .entry((e.cell.key(), e.epochs))
                .or_insert_with(|| (e.cell, Vec::new()))
                .1
                .push(*r),
            RunOutcome::Failed { error } => failures.push(CellFailure {
                cell: e.cell,
                seed: e.seed,
                error: error.clone(),
            }),
        }
    }
    let mut rows: Vec<ReportRow> = by_cell
        .into_iter()
        .map(|((_, epochs), (cell, runs))| {
            let med = |f: &dyn Fn(&RunRecord) -> f64| median(&mut runs.iter().map(f).collect::<Vec<_>>());
            let r2 = if runs.iter().all(|r| r.r2.is_some()) {
                med(&|r| r.r2.expect("checked"))
            } else {
                f64::NAN
            };
            ReportRow {
                cell,
                category: cell.rule.category(),
                bio_inspired: cell.rule.bio_inspired(),
                seeds: runs.len(),
                report: EvalReport {
                    rule_name: cell.rule.name().into(),
                    source_name: cell.source.name().into(),
                    n: cell.n,
                    epochs,
                    wall_time: med(&|r| r.wall_time),
                    accuracy: med(&|r| r.accuracy),
                    mse: med(&|r| r.mse),
                    mae: med(&|r| r.mae),
                    r2,
                },
            }
        })
        .collect();
    rows.sort_by(|a, b| a.cell.order(&b.cell).then(a.report.epochs.cmp(&b.report.epochs)));
    failures.sort_by(|a, b| a.cell.order(&b.cell).then(a.seed.cmp(&b.seed)));
    let best = select_best(&rows);
    BenchmarkReport {
        rows,
        best,
        failures,
        environment: environment_note(),
    }
}

/// Argmax accuracy per (rule, source); ties go to the smaller wall time,
/// then the smaller n.
pub fn select_best(rows: &[ReportRow]) -> Vec<ReportRow> {
    let mut best: BTreeMap<(RuleCategory, RuleKind, SourceFamily), &ReportRow> = BTreeMap::new();
    for row in rows {
        let key = (row.category, row.cell.rule, row.cell.source);
        let better = match best.get(&key) {
            None => true,
            Some(cur) => {
                let (a, b) = (&row.report, &cur.report);
                a.accuracy
                    .total_cmp(&b.accuracy)
                    .then(b.wall_time.total_cmp(&a.wall_time))
                    .then(cur.cell.n.cmp(&row.cell.n))
                    .is_gt()
            }
        };
        if better {
            best.insert(key, row);
        }
    }
    best.into_values().cloned().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            other => Err(Error::param(format!("unknown report format '{other}'"))),
        }
    }
}

pub const REPORT_COLUMNS: [&str; 11] = [
    "type",
    "subtype",
    "dataset",
    "bio_inspired",
    "epochs",
    "n",
    "time_s",
    "accuracy_pct",
    "mse",
    "mae",
    "r2",
];

/// A row's table cells, formatted for CSV and markdown.
pub fn format_row(row: &ReportRow) -> [String; 11] {
    let r = &row.report;
    [
        row.category.name().to_string(),
        r.rule_name.clone(),
        r.source_name.clone(),
        if row.bio_inspired { "yes" } else { "no" }.to_string(),
        r.epochs.to_string(),
        r.n.to_string(),
        format!("{:.3}", r.wall_time),
        format!("{:.2}", r.accuracy),
        format!("{:.4}", r.mse),
        format!("{:.4}", r.mae),
        if r.r2.is_finite() {
            format!("{:.4}", r.r2)
        } else {
            "NaN".to_string()
        },
    ]
}

#[derive(Serialize)]
struct JsonRow<'a> {
    #[serde(rename = "type")]
    kind: &'a str,
    subtype: &'a str,
    dataset: &'a str,
    bio_inspired: bool,
    epochs: usize,
    n: usize,
    time_s: f64,
    accuracy_pct: f64,
    mse: f64,
    mae: f64,
    r2: Option<f64>,
    threshold: f64,
    decay: f64,
    learning_rate: Option<f64>,
    seeds: usize,
}

impl<'a> From<&'a ReportRow> for JsonRow<'a> {
    fn from(row: &'a ReportRow) -> Self {
        let r = &row.report;
        JsonRow {
            kind: row.category.name(),
            subtype: &r.rule_name,
            dataset: &r.source_name,
            bio_inspired: row.bio_inspired,
            epochs: r.epochs,
            n: r.n,
            time_s: r.wall_time,
            accuracy_pct: r.accuracy,
            mse: r.mse,
            mae: r.mae,
            r2: r.r2.is_finite().then_some(r.r2),
            threshold: row.cell.threshold,
            decay: row.cell.decay,
            learning_rate: row.cell.learning_rate,
            seeds: row.seeds,
        }
    }
}

#[derive(Serialize)]
struct JsonReport<'a> {
    schema_version: u32,
    environment: &'a str,
    rows: Vec<JsonRow<'a>>,
    best: Vec<JsonRow<'a>>,
    failures: &'a [CellFailure],
}

/// Renders the report rows (all rows, in table order).
pub fn render_report(report: &BenchmarkReport, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(REPORT_COLUMNS)?;
            for row in &report.rows {
                w.write_record(format_row(row))?;
            }
            let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
            Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
        }
        ReportFormat::Json => {
            let doc = JsonReport {
                schema_version: REPORT_SCHEMA_VERSION,
                environment: &report.environment,
                rows: report.rows.iter().map(JsonRow::from).collect(),
                best: report.best.iter().map(JsonRow::from).collect(),
                failures: &report.failures,
            };
            Ok(serde_json::to_string_pretty(&doc)? + "\n")
        }
        ReportFormat::Markdown => {
            let line = |cells: &[String]| format!("| {} |\n", cells.join(" | "));
            let header: Vec<String> = REPORT_COLUMNS.iter().map(|c| c.to_string()).collect();
            let mut out = line(&header);
            out += &line(&vec!["---".to_string(); REPORT_COLUMNS.len()]);
            for row in &report.rows {
                out += &line(&format_row(row));
            }
            Ok(out)
        }
    }
}

/// Writes the rendered report to `path`. An empty report is an error unless
/// `allow_empty` is set.
pub fn emit_report(
    report: &BenchmarkReport,
    format: ReportFormat,
    path: &Path,
    allow_empty: bool,
) -> Result<()> {
    if report.is_empty() && !allow_empty {
        return Err(Error::param("report has no rows"));
    }
    let text = render_report(report, format)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
