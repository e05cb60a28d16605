//! Ground-station commands: single-series processing, manifest batches,
//! directory watching and dataset simulation.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thermoscan::io::write_atomic;
use thermoscan::synth::{render_benchmark, BenchmarkSpec, Manifest};
use thermoscan::{
    run_pipeline, ConfusionMatrix, DetectionReport, Error, FrameName, PipelineConfig, Result, ThermalSeries,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_CONFIG: i32 = 4;
pub const EXIT_PARTIAL: i32 = 5;

/// Process exit status for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Format { .. } | Error::Truncated { .. } | Error::Input(_) | Error::Io { .. } => EXIT_INPUT,
        Error::Range { .. } | Error::Validation(_) => EXIT_VALIDATION,
        Error::Config(_) => EXIT_CONFIG,
    }
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Loads a TOML config, or the defaults when no path is given.
pub fn load_config(path: Option<&Path>) -> Result<PipelineConfig> {
    let config = match path {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    config.validate()?;
    Ok(config)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesFailure {
    pub series_id: String,
    pub error: String,
}

/// One line of the append-only `runs.jsonl` log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_id: String,
    pub timestamp: String,
    pub command: String,
    pub config_hash: String,
    pub input: String,
    pub reports: Vec<DetectionReport>,
    pub confusion: Option<ConfusionMatrix>,
    pub failures: Vec<SeriesFailure>,
}

impl RunRecord {
    fn new(command: &str, run_id: String, config: &PipelineConfig, input: &Path) -> Self {
        Self {
            run_id,
            timestamp: chrono::Utc::now().to_rfc3339(),
            command: command.to_string(),
            config_hash: config.config_hash(),
            input: input.display().to_string(),
            reports: Vec::new(),
            confusion: None,
            failures: Vec::new(),
        }
    }
}

pub const RUN_LOG: &str = "runs.jsonl";

/// Appends a record as a single newline-terminated write.
pub fn append_record(out_dir: &Path, record: &RunRecord) -> Result<()> {
    fs::create_dir_all(out_dir).map_err(|e| io_err(out_dir, e))?;
    let path = out_dir.join(RUN_LOG);
    let mut line = serde_json::to_string(record).expect("run record serializes");
    line.push('\n');
    let mut file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&path)
        .map_err(|e| io_err(&path, e))?;
    file.write_all(line.as_bytes()).map_err(|e| io_err(&path, e))?;
    file.sync_data().map_err(|e| io_err(&path, e))
}

pub fn read_run_log(out_dir: &Path) -> Result<Vec<RunRecord>> {
    let path = out_dir.join(RUN_LOG);
    let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
    text.lines()
        .map(|l| serde_json::from_str(l).map_err(|e| Error::Input(format!("{}: {e}", path.display()))))
        .collect()
}

fn digest(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    hex::encode(&h.finalize()[..8])
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("value serializes");
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// Options shared by the processing commands.
#[derive(Debug, Clone, Default)]
pub struct ProcessOptions {
    pub debug_images: bool,
    pub seed: Option<u64>,
    /// Overrides the schedule altitude.
    pub altitude_m: Option<f64>,
}

fn process_series(
    series: &ThermalSeries,
    config: &PipelineConfig,
    seed: Option<u64>,
    debug_dir: Option<&Path>,
) -> Result<DetectionReport> {
    let out = run_pipeline(series, config, seed)?;
    if let Some(dir) = debug_dir {
        out.stages.write_pngs(dir)?;
    }
    Ok(out.report)
}

/// Runs the pipeline on one directory of frames and writes `report.json`.
pub fn cmd_process(
    series_dir: &Path,
    config: &PipelineConfig,
    out_dir: &Path,
    opts: &ProcessOptions,
) -> Result<DetectionReport> {
    let altitude = opts.altitude_m.unwrap_or(config.schedule.altitude_m);
    let series = ThermalSeries::load_dir(series_dir, altitude)?;
    fs::create_dir_all(out_dir).map_err(|e| io_err(out_dir, e))?;
    let debug = opts.debug_images.then(|| out_dir.to_path_buf());
    let report = process_series(&series, config, opts.seed, debug.as_deref())?;
    write_json(&out_dir.join("report.json"), &report)?;

    let stamps: Vec<String> = series.frames().iter().map(|f| f.timestamp.to_string()).collect();
    let run_id = digest(&[b"process", config.config_hash().as_bytes(), series.location_id().as_bytes(), stamps.join(",").as_bytes()]);
    let mut record = RunRecord::new("process", run_id, config, series_dir);
    record.reports.push(report.clone());
    append_record(out_dir, &record)?;
    Ok(report)
}

/// Confusion matrices of a batch, overall and per altitude.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BatchOutcome {
    pub run_id: String,
    pub overall: ConfusionMatrix,
    /// Keyed by altitude in millimetres.
    pub per_altitude: BTreeMap<i64, ConfusionMatrix>,
    pub reports: Vec<DetectionReport>,
    pub failures: Vec<SeriesFailure>,
}

#[derive(Debug, Clone, Default)]
pub struct BatchOptions {
    pub workers: Option<usize>,
    pub debug_images: bool,
}

fn altitude_key(alt: f64) -> i64 {
    (alt * 1000.0).round() as i64
}

fn fmt_rate(x: f64) -> String {
    format!("{x:.6}")
}

/// Processes every series in a manifest and scores it against ground truth.
pub fn cmd_batch(manifest_path: &Path, config: &PipelineConfig, out_dir: &Path, opts: &BatchOptions) -> Result<BatchOutcome> {
    let manifest_bytes = fs::read(manifest_path).map_err(|e| io_err(manifest_path, e))?;
    let manifest = Manifest::load(manifest_path)?;
    let root = manifest_path.parent().unwrap_or(Path::new("."));
    let reports_dir = out_dir.join("reports");
    fs::create_dir_all(&reports_dir).map_err(|e| io_err(&reports_dir, e))?;

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = opts.workers {
        if n == 0 {
            return Err(Error::Config("--workers must be at least 1".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Error::Config(format!("worker pool: {e}")))?;

    let mut results: Vec<(usize, Result<DetectionReport>)> = pool.install(|| {
        manifest
            .series
            .par_iter()
            .enumerate()
            .map(|(i, entry)| {
                let result = (|| {
                    let series = ThermalSeries::load_dir(root.join(&entry.series_id), entry.altitude_m)?;
                    if series.location_id() != entry.series_id {
                        return Err(Error::Validation(format!(
                            "frames belong to {:?}, manifest expects {:?}",
                            series.location_id(),
                            entry.series_id
                        )));
                    }
                    let debug = opts.debug_images.then(|| out_dir.join("debug").join(&entry.series_id));
                    let report = process_series(&series, config, Some(entry.seed), debug.as_deref())?;
                    write_json(&reports_dir.join(format!("{}.json", entry.series_id)), &report)?;
                    Ok(report)
                })();
                (i, result)
            })
            .collect()
    });
    results.sort_by(|a, b| manifest.series[a.0].series_id.cmp(&manifest.series[b.0].series_id));

    let run_id = digest(&[b"batch", config.config_hash().as_bytes(), &manifest_bytes]);
    let mut outcome = BatchOutcome {
        run_id: run_id.clone(),
        ..Default::default()
    };
    for (i, result) in results {
        let entry = &manifest.series[i];
        match result {
            Ok(report) => {
                let predicted = report.verdict.is_positive();
                outcome.overall.record(predicted, entry.mine_present);
                outcome
                    .per_altitude
                    .entry(altitude_key(entry.altitude_m))
                    .or_default()
                    .record(predicted, entry.mine_present);
                outcome.reports.push(report);
            }
            Err(e) => {
                log::error!("series {}: {e}", entry.series_id);
                outcome.failures.push(SeriesFailure {
                    series_id: entry.series_id.clone(),
                    error: e.to_string(),
                });
            }
        }
    }

    write_metrics(out_dir, &outcome)?;
    write_rate_table(out_dir, &outcome)?;

    let mut record = RunRecord::new("batch", run_id, config, manifest_path);
    record.reports = outcome.reports.clone();
    record.confusion = Some(outcome.overall);
    record.failures = outcome.failures.clone();
    append_record(out_dir, &record)?;
    Ok(outcome)
}

pub const METRICS_HEADER: &str = "run_id,altitude_m,tp,fp,tn,fn,tp_rate,fp_rate,accuracy";

fn metrics_row(run_id: &str, altitude: &str, cm: &ConfusionMatrix) -> String {
    format!(
        "{run_id},{altitude},{},{},{},{},{},{},{}\n",
        cm.tp,
        cm.fp,
        cm.tn,
        cm.fn_,
        fmt_rate(cm.tp_rate()),
        fmt_rate(cm.fp_rate()),
        fmt_rate(cm.accuracy())
    )
}

/// One row per altitude followed by an `all` row.
fn write_metrics(out_dir: &Path, outcome: &BatchOutcome) -> Result<()> {
    let mut csv = format!("{METRICS_HEADER}\n");
    for (&key, cm) in &outcome.per_altitude {
        csv += &metrics_row(&outcome.run_id, &(key as f64 / 1000.0).to_string(), cm);
    }
    csv += &metrics_row(&outcome.run_id, "all", &outcome.overall);
    write_atomic(out_dir.join("metrics.csv"), csv.as_bytes())
}

pub const RATE_HEADER: &str = "altitude_m,positives,detected,detection_rate,negatives,false_alarms,false_alarm_rate";

fn write_rate_table(out_dir: &Path, outcome: &BatchOutcome) -> Result<()> {
    let mut csv = format!("{RATE_HEADER}\n");
    for (&key, cm) in &outcome.per_altitude {
        csv += &format!(
            "{},{},{},{},{},{},{}\n",
            key as f64 / 1000.0,
            cm.tp + cm.fn_,
            cm.tp,
            fmt_rate(cm.tp_rate()),
            cm.fp + cm.tn,
            cm.fp,
            fmt_rate(cm.fp_rate())
        );
    }
    write_atomic(out_dir.join("detection_rate_vs_altitude.csv"), csv.as_bytes())
}

#[derive(Debug, Clone, Default)]
pub struct SimulateOptions {
    pub altitudes: Option<Vec<f64>>,
    /// Mine-present series per altitude; switches the default negatives to zero.
    pub trials: Option<usize>,
    pub negatives: Option<usize>,
    pub seed: Option<u64>,
}

/// Renders a benchmark dataset with `manifest.json` into `out_dir`.
pub fn cmd_simulate(config: &PipelineConfig, out_dir: &Path, opts: &SimulateOptions) -> Result<Manifest> {
    let altitudes = opts.altitudes.clone().unwrap_or_else(|| vec![config.schedule.altitude_m]);
    let (positives, negatives) = match opts.trials {
        Some(n) => (n, opts.negatives.unwrap_or(0)),
        None => (50, opts.negatives.unwrap_or(50)),
    };
    let spec = BenchmarkSpec::new(positives, negatives, altitudes, opts.seed.unwrap_or(config.scene.seed));
    render_benchmark(&spec, &config.scene, &config.camera, &config.schedule, out_dir)
}

#[derive(Debug, Clone)]
pub struct WatchOptions {
    pub poll_interval: Duration,
    pub flush_after: Duration,
    /// Frames that complete a schedule.
    pub expected_frames: usize,
    pub debug_images: bool,
}

impl WatchOptions {
    pub fn from_config(config: &PipelineConfig) -> Self {
        Self {
            poll_interval: Duration::from_millis(config.watch.poll_interval_ms),
            flush_after: Duration::from_secs_f64(config.watch.flush_after_s),
            expected_frames: config.schedule.frame_count(),
            debug_images: false,
        }
    }
}

#[derive(Debug)]
struct Pending {
    files: BTreeMap<PathBuf, FrameName>,
    last_change: Instant,
}

pub const PROCESSED_SET: &str = "processed.json";

/// Directory watcher state. Drive it with [`Watcher::poll`] or [`cmd_watch`].
#[derive(Debug)]
pub struct Watcher {
    in_dir: PathBuf,
    out_dir: PathBuf,
    config: PipelineConfig,
    opts: WatchOptions,
    pending: BTreeMap<String, Pending>,
    processed: BTreeSet<String>,
    warned: BTreeSet<PathBuf>,
}

impl Watcher {
    pub fn new(in_dir: &Path, config: &PipelineConfig, out_dir: &Path, opts: WatchOptions) -> Result<Self> {
        if !in_dir.is_dir() {
            return Err(Error::Input(format!("{} is not a directory", in_dir.display())));
        }
        fs::create_dir_all(out_dir).map_err(|e| io_err(out_dir, e))?;
        let set_path = out_dir.join(PROCESSED_SET);
        let processed = match fs::read_to_string(&set_path) {
            Ok(text) => serde_json::from_str(&text).map_err(|e| Error::Input(format!("{}: {e}", set_path.display())))?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => BTreeSet::new(),
            Err(e) => return Err(io_err(&set_path, e)),
        };
        Ok(Self {
            in_dir: in_dir.to_path_buf(),
            out_dir: out_dir.to_path_buf(),
            config: config.clone(),
            opts,
            pending: BTreeMap::new(),
            processed,
            warned: BTreeSet::new(),
        })
    }

    pub fn processed(&self) -> &BTreeSet<String> {
        &self.processed
    }

    /// Scans the input directory once and processes every ready location.
    pub fn poll(&mut self, now: Instant) -> Result<Vec<DetectionReport>> {
        let entries = fs::read_dir(&self.in_dir).map_err(|e| io_err(&self.in_dir, e))?;
        for entry in entries {
            let path = entry.map_err(|e| io_err(&self.in_dir, e))?.path();
            if !path.is_file() {
                continue;
            }
            let Some(name) = FrameName::parse(&path) else {
                if self.warned.insert(path.clone()) {
                    log::warn!("skipping malformed file name {}", path.display());
                }
                continue;
            };
            if self.processed.contains(&name.location_id) {
                continue;
            }
            let pending = self.pending.entry(name.location_id.clone()).or_insert_with(|| Pending {
                files: BTreeMap::new(),
                last_change: now,
            });
            if pending.files.insert(path, name).is_none() {
                pending.last_change = now;
            }
        }

        let ready: Vec<String> = self
            .pending
            .iter()
            .filter(|(_, p)| {
                p.files.len() >= self.opts.expected_frames || now.duration_since(p.last_change) >= self.opts.flush_after
            })
            .map(|(loc, _)| loc.clone())
            .collect();

        let mut reports = Vec::new();
        for loc in ready {
            let files: Vec<(FrameName, PathBuf)> =
                self.pending[&loc].files.iter().map(|(p, n)| (n.clone(), p.clone())).collect();
            let series = match ThermalSeries::load_files(files, self.config.schedule.altitude_m) {
                Ok(s) => s,
                Err(e @ (Error::Truncated { .. } | Error::Format { .. })) => {
                    log::warn!("{loc}: {e}; retrying on next poll");
                    continue;
                }
                Err(e) => {
                    log::error!("{loc}: {e}");
                    self.finish(&loc, None, Some(e.to_string()))?;
                    continue;
                }
            };
            let debug = self.opts.debug_images.then(|| self.out_dir.join("debug").join(&loc));
            match process_series(&series, &self.config, None, debug.as_deref()) {
                Ok(report) => {
                    let reports_dir = self.out_dir.join("reports");
                    fs::create_dir_all(&reports_dir).map_err(|e| io_err(&reports_dir, e))?;
                    write_json(&reports_dir.join(format!("{loc}.json")), &report)?;
                    self.finish(&loc, Some(report.clone()), None)?;
                    reports.push(report);
                }
                Err(e) => {
                    log::error!("{loc}: {e}");
                    self.finish(&loc, None, Some(e.to_string()))?;
                }
            }
        }
        Ok(reports)
    }

    fn finish(&mut self, loc: &str, report: Option<DetectionReport>, failure: Option<String>) -> Result<()> {
        let run_id = digest(&[b"watch", self.config.config_hash().as_bytes(), loc.as_bytes()]);
        let mut record = RunRecord::new("watch", run_id, &self.config, &self.in_dir);
        record.reports.extend(report);
        record.failures.extend(failure.map(|error| SeriesFailure {
            series_id: loc.to_string(),
            error,
        }));
        append_record(&self.out_dir, &record)?;
        self.pending.remove(loc);
        self.processed.insert(loc.to_string());
        let json = serde_json::to_string_pretty(&self.processed).expect("set serializes");
        write_atomic(self.out_dir.join(PROCESSED_SET), json.as_bytes())
    }
}

/// Polls `in_dir` until `stop` is raised; returns the number of reports written.
pub fn cmd_watch(in_dir: &Path, config: &PipelineConfig, out_dir: &Path, opts: WatchOptions, stop: &AtomicBool) -> Result<usize> {
    let interval = opts.poll_interval;
    let mut watcher = Watcher::new(in_dir, config, out_dir, opts)?;
    let mut count = 0;
    while !stop.load(Ordering::SeqCst) {
        count += watcher.poll(Instant::now())?.len();
        let deadline = Instant::now() + interval;
        while !stop.load(Ordering::SeqCst) && Instant::now() < deadline {
            std::thread::sleep(interval.min(Duration::from_millis(20)));
        }
    }
    Ok(count)
}
