//! Batch experiment driver: CSV ingestion, split resolution, rolling-origin
//! forecasts for every method, evaluation and report files.

use std::fmt;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::bootstrap::{self, BootstrapConfig};
use crate::error::{Error, Result};
use crate::evaluation::{EvalReport, ForecastRecord, SeriesForecasts};
use crate::kalman::{self, GssaConfig, InitCovariance};
use crate::par::{map_indexed, Execution};
use crate::series::{self, DescriptiveStats, SampleSplit, TimeSeries};
use crate::ssa::{self, EmbeddingConfig};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Minimum series length accepted by [`load_csv`].
pub const MIN_OBSERVATIONS: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Ssa,
    Boot,
    Gssa,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Ssa, Method::Boot, Method::Gssa];

    /// Name used in reports.
    pub fn label(self) -> &'static str {
        match self {
            Method::Ssa => "SSA",
            Method::Boot => "BootSSA",
            Method::Gssa => kalman::METHOD_NAME,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ssa" => Ok(Method::Ssa),
            "boot" | "bootssa" | "bootstrap" => Ok(Method::Boot),
            "gssa" => Ok(Method::Gssa),
            other => Err(Error::Config(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitCovKind {
    #[default]
    ScaledIdentity,
    Bootstrap,
    Zero,
}

fn default_horizons() -> Vec<usize> {
    vec![1, 3, 6, 12]
}
fn default_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}
fn default_smoothing() -> f64 {
    kalman::DEFAULT_SMOOTHING_FACTOR
}
fn default_one() -> usize {
    1
}
fn default_replications() -> usize {
    1000
}
fn default_max_breaks() -> usize {
    5
}
fn default_min_segment() -> usize {
    12
}
fn default_true() -> bool {
    true
}
fn default_fraction() -> f64 {
    0.75
}
fn default_min_obs() -> usize {
    MIN_OBSERVATIONS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesConfig {
    pub name: String,
    /// CSV file; relative paths resolve against the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window_length: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank: Option<usize>,
    /// Explicit 1-based final in-sample index; skips break detection.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub break_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub smoothing_factor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diff_lag: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bootstrap_replications: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl SeriesConfig {
    pub fn named(name: &str) -> Self {
        Self {
            name: name.to_string(),
            path: None,
            group: None,
            window_length: None,
            rank: None,
            break_index: None,
            smoothing_factor: None,
            diff_lag: None,
            bootstrap_replications: None,
            seed: None,
        }
    }
}

/// Experiment settings. Top-level keys are defaults; `[[series]]` sections
/// override them per series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_horizons")]
    pub horizons: Vec<usize>,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_smoothing")]
    pub smoothing_factor: f64,
    #[serde(default = "default_one")]
    pub diff_lag: usize,
    #[serde(default = "default_replications")]
    pub bootstrap_replications: usize,
    #[serde(default)]
    pub gssa_init_cov: InitCovKind,
    #[serde(default = "default_true")]
    pub detect_breaks: bool,
    #[serde(default = "default_max_breaks")]
    pub max_breaks: usize,
    #[serde(default = "default_min_segment")]
    pub min_segment: usize,
    /// In-sample share used when break detection is off and no
    /// `break_index` is given.
    #[serde(default = "default_fraction")]
    pub in_sample_fraction: f64,
    #[serde(default = "default_min_obs")]
    pub min_observations: usize,
    #[serde(default)]
    pub include_mae: bool,
    #[serde(default)]
    pub execution: Execution,
    #[serde(default)]
    pub series: Vec<SeriesConfig>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        toml::from_str("").expect("defaults deserialize")
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a TOML config; series paths are resolved against its directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for s in &mut cfg.series {
            if let Some(p) = &s.path {
                if p.is_relative() {
                    s.path = Some(base.join(p));
                }
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizons.is_empty() || self.horizons.contains(&0) {
            return Err(Error::Config("horizons must be nonempty and each >= 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("no methods selected".into()));
        }
        if !(self.in_sample_fraction > 0.0 && self.in_sample_fraction < 1.0) {
            return Err(Error::Config("in_sample_fraction must lie in (0, 1)".into()));
        }
        let mut names = std::collections::HashSet::new();
        for s in &self.series {
            if !names.insert(&s.name) {
                return Err(Error::Config(format!("duplicate series name {:?}", s.name)));
            }
            self.gssa_config(s)?;
        }
        Ok(())
    }

    /// Also checks that every series file exists.
    pub fn validate_files(&self) -> Result<()> {
        self.validate()?;
        if self.series.is_empty() {
            return Err(Error::Config("no series configured".into()));
        }
        for s in &self.series {
            match &s.path {
                Some(p) if p.is_file() => {}
                Some(p) => {
                    return Err(Error::Config(format!(
                        "series {:?}: file {} not found",
                        s.name,
                        p.display()
                    )))
                }
                None => return Err(Error::Config(format!("series {:?} has no path", s.name))),
            }
        }
        Ok(())
    }

    fn horizons_sorted(&self) -> Vec<usize> {
        let mut h = self.horizons.clone();
        h.sort_unstable();
        h.dedup();
        h
    }

    fn methods_ordered(&self) -> Vec<Method> {
        Method::ALL
            .into_iter()
            .filter(|m| self.methods.contains(m))
            .collect()
    }

    fn gssa_config(&self, s: &SeriesConfig) -> Result<GssaConfig> {
        let mut g = GssaConfig::new(
            s.smoothing_factor.unwrap_or(self.smoothing_factor),
            s.diff_lag.unwrap_or(self.diff_lag),
        )?;
        g.init_cov = match self.gssa_init_cov {
            InitCovKind::ScaledIdentity => InitCovariance::Model,
            InitCovKind::Zero => InitCovariance::Zero,
            InitCovKind::Bootstrap => InitCovariance::Bootstrap(self.bootstrap_config(s, 0)),
        };
        Ok(g)
    }

    fn bootstrap_config(&self, s: &SeriesConfig, origin: usize) -> BootstrapConfig {
        let seed = s.seed.unwrap_or(self.seed);
        BootstrapConfig {
            replications: s.bootstrap_replications.unwrap_or(self.bootstrap_replications),
            seed: origin_seed(seed, origin),
            execution: self.execution,
            ..BootstrapConfig::default()
        }
    }

    /// SHA-256 of the canonical JSON form (object keys sorted), so the hash
    /// does not depend on key order in the source file.
    pub fn hash(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        let canonical = serde_json::to_string(&value).expect("value serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}

fn origin_seed(seed: u64, origin: usize) -> u64 {
    seed ^ (origin as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Parses a two-column `period_label,value` CSV with a header row.
///
/// `source` names the input in error messages.
pub fn parse_csv<R: Read>(reader: R, source: &Path, min_len: usize) -> Result<TimeSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let err = |line: u64, message: String| Error::Csv {
        path: source.to_path_buf(),
        line,
        message,
    };
    let mut labels = Vec::new();
    let mut values = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            err(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        if rec.len() != 2 {
            return Err(err(line, format!("expected 2 columns, found {}", rec.len())));
        }
        let label = &rec[0];
        let cell = &rec[1];
        if cell.is_empty() {
            return Err(err(line, "empty value".into()));
        }
        let v: f64 = cell
            .parse()
            .map_err(|_| err(line, format!("cannot parse {cell:?} as a number")))?;
        if !v.is_finite() {
            return Err(err(line, format!("non-finite value {cell:?}")));
        }
        labels.push(label.to_string());
        values.push(v);
    }
    if values.len() < min_len.max(2) {
        return Err(Error::TooShort {
            len: values.len(),
            min: min_len.max(2),
        });
    }
    TimeSeries::with_labels(values, labels)
}

pub fn load_csv(path: &Path) -> Result<TimeSeries> {
    load_csv_min(path, MIN_OBSERVATIONS)
}

pub fn load_csv_min(path: &Path, min_len: usize) -> Result<TimeSeries> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_csv(file, path, min_len)
}

/// Parameters each series actually ran with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedSeries {
    pub name: String,
    pub group: Option<String>,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub n: Option<usize>,
    pub detected_breaks: Option<Vec<usize>>,
    pub break_index: Option<usize>,
    pub in_sample_len: Option<usize>,
    pub out_sample_len: Option<usize>,
    pub window_length: Option<usize>,
    pub rank: Option<usize>,
    pub verticality: Option<f64>,
    pub residual_variance: Option<f64>,
    pub smoothing_factor: Option<f64>,
    pub stats: Option<DescriptiveStats>,
}

impl ResolvedSeries {
    fn pending(s: &SeriesConfig) -> Self {
        Self {
            name: s.name.clone(),
            group: s.group.clone(),
            status: "failed".into(),
            error: None,
            n: None,
            detected_breaks: None,
            break_index: None,
            in_sample_len: None,
            out_sample_len: None,
            window_length: None,
            rank: None,
            verticality: None,
            residual_variance: None,
            smoothing_factor: None,
            stats: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub tool_version: String,
    pub horizons: Vec<usize>,
    pub methods: Vec<Method>,
    pub started_at: String,
    pub finished_at: String,
    pub series: Vec<ResolvedSeries>,
}

impl RunManifest {
    pub fn failed_count(&self) -> usize {
        self.series.iter().filter(|s| s.status != "ok").count()
    }

    /// 0 when every series succeeded, 1 on partial failure, 2 when all
    /// series failed.
    pub fn exit_code(&self) -> i32 {
        let failed = self.failed_count();
        if failed == 0 {
            0
        } else if failed < self.series.len() {
            1
        } else {
            2
        }
    }
}

/// A series together with its settings, or the reason it could not be read.
pub struct SeriesInput {
    pub spec: SeriesConfig,
    pub data: Result<TimeSeries>,
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

/// Loads every configured series and runs the experiment.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<(EvalReport, RunManifest)> {
    cfg.validate_files()?;
    let inputs = cfg
        .series
        .iter()
        .map(|s| SeriesInput {
            spec: s.clone(),
            data: load_csv_min(s.path.as_deref().expect("validated"), cfg.min_observations),
        })
        .collect();
    run_inputs(cfg, inputs)
}

/// Runs the experiment on series already in memory. Failures are isolated
/// per series and recorded in both the report and the manifest.
pub fn run_inputs(cfg: &ExperimentConfig, inputs: Vec<SeriesInput>) -> Result<(EvalReport, RunManifest)> {
    cfg.validate()?;
    let started_at = now();
    let horizons = cfg.horizons_sorted();
    let outcomes = map_indexed(inputs.len(), cfg.execution, |i| {
        let input = &inputs[i];
        let mut resolved = ResolvedSeries::pending(&input.spec);
        let result = match &input.data {
            Ok(series) => run_series(cfg, &input.spec, series, &horizons, &mut resolved).map_err(|e| e.to_string()),
            Err(e) => Err(e.to_string()),
        };
        match result {
            Ok(f) => {
                resolved.status = "ok".into();
                (Some(f), resolved)
            }
            Err(e) => {
                log::warn!("series {}: {e}", input.spec.name);
                resolved.error = Some(e);
                (None, resolved)
            }
        }
    });

    let mut forecasts = Vec::new();
    let mut manifest_series = Vec::new();
    for (f, r) in outcomes {
        if let Some(f) = f {
            forecasts.push(f);
        }
        manifest_series.push(r);
    }
    let mut report = EvalReport::build(&forecasts, &horizons, Method::Ssa.label(), cfg.include_mae);
    for r in &manifest_series {
        if let Some(e) = &r.error {
            report.add_failure(&r.name, e);
        }
    }
    for f in &report.failures {
        if let Some(r) = manifest_series.iter_mut().find(|r| r.name == f.series) {
            r.status = "failed".into();
            r.error.get_or_insert_with(|| f.error.clone());
        }
    }
    report.failures.sort_by(|a, b| a.series.cmp(&b.series));
    report.failures.dedup();

    let manifest = RunManifest {
        config_hash: cfg.hash(),
        tool_version: TOOL_VERSION.to_string(),
        horizons: horizons.clone(),
        methods: cfg.methods_ordered(),
        started_at,
        finished_at: now(),
        series: manifest_series,
    };
    Ok((report, manifest))
}

fn resolve_split(cfg: &ExperimentConfig, spec: &SeriesConfig, series: &TimeSeries, resolved: &mut ResolvedSeries) -> Result<SampleSplit> {
    let n = series.len();
    if let Some(b) = spec.break_index {
        return SampleSplit::new(n, b);
    }
    let min_in = 2 * spec.window_length.unwrap_or(2);
    if cfg.detect_breaks {
        let max_breaks = cfg.max_breaks.min(n / cfg.min_segment.max(1));
        let breaks = series::detect_breaks(series, max_breaks, cfg.min_segment)?;
        resolved.detected_breaks = Some(breaks.clone());
        series::split_at_final_break(series, &breaks, min_in)
    } else {
        let b = ((n as f64) * cfg.in_sample_fraction).round() as usize;
        SampleSplit::new(n, b.clamp(min_in.max(2), n - 1))
    }
}

fn resolve_embedding(spec: &SeriesConfig, in_sample: &[f64]) -> Result<EmbeddingConfig> {
    let l = spec
        .window_length
        .unwrap_or_else(|| ssa::default_window_length(in_sample.len()));
    if let Some(r) = spec.rank {
        let cfg = EmbeddingConfig::new(l, r);
        cfg.validate(in_sample.len())?;
        return Ok(cfg);
    }
    EmbeddingConfig::new(l, 1).validate(in_sample.len())?;
    let dec = ssa::decompose(&ssa::embed(in_sample, l)?)?;
    let mut r = ssa::select_rank(&dec);
    loop {
        match ssa::lrf_coefficients(&dec, r) {
            Ok(_) => return Ok(EmbeddingConfig::new(l, r)),
            Err(Error::NonForecastable { .. }) if r > 1 => r -= 1,
            Err(e) => return Err(e),
        }
    }
}

/// Basic SSA refitted at every origin on the data visible there.
pub fn rolling_ssa(values: &[f64], break_index: usize, cfg: &EmbeddingConfig, horizons: &[usize]) -> Result<Vec<ForecastRecord>> {
    let n = values.len();
    let max_h = horizons.iter().copied().max().unwrap_or(1);
    let mut records = Vec::new();
    for origin in break_index..n {
        let model = ssa::fit(&values[..origin], cfg)?;
        let path = ssa::forecast_recurrent(&model, max_h)?;
        push_records(&mut records, values, origin, horizons, &path, Method::Ssa);
    }
    Ok(records)
}

/// Bootstrap SSA mean forecasts refitted at every origin.
pub fn rolling_bootstrap(
    values: &[f64],
    break_index: usize,
    cfg: &EmbeddingConfig,
    horizons: &[usize],
    bcfg_at: impl Fn(usize) -> BootstrapConfig,
) -> Result<Vec<ForecastRecord>> {
    let n = values.len();
    let max_h = horizons.iter().copied().max().unwrap_or(1);
    let mut records = Vec::new();
    for origin in break_index..n {
        let visible = TimeSeries::new(values[..origin].to_vec())?;
        let f = bootstrap::bootstrap_forecast(&visible, cfg, &bcfg_at(origin), max_h)?;
        push_records(&mut records, values, origin, horizons, &f.mean_forecasts, Method::Boot);
    }
    Ok(records)
}

fn push_records(out: &mut Vec<ForecastRecord>, values: &[f64], origin: usize, horizons: &[usize], path: &[f64], method: Method) {
    for &h in horizons {
        if origin + h <= values.len() {
            out.push(ForecastRecord::new(
                origin,
                h,
                path[h - 1],
                values[origin + h - 1],
                method.label(),
            ));
        }
    }
}

fn run_series(
    cfg: &ExperimentConfig,
    spec: &SeriesConfig,
    series: &TimeSeries,
    horizons: &[usize],
    resolved: &mut ResolvedSeries,
) -> Result<SeriesForecasts> {
    let values = series.values();
    resolved.n = Some(values.len());
    let split = resolve_split(cfg, spec, series, resolved)?;
    resolved.break_index = Some(split.break_index);
    resolved.in_sample_len = Some(split.in_sample_len);
    resolved.out_sample_len = Some(split.out_sample_len);
    resolved.stats = series::pct_change_stats(series, Some(&split)).ok();

    let max_h = *horizons.last().expect("validated");
    if split.out_sample_len < max_h {
        return Err(Error::arg(format!(
            "out-of-sample length {} shorter than horizon {max_h}",
            split.out_sample_len
        )));
    }
    let in_sample = &values[..split.break_index];
    let emb = resolve_embedding(spec, in_sample)?;
    resolved.window_length = Some(emb.window_length);
    resolved.rank = Some(emb.rank);
    if split.in_sample_len < 2 * emb.window_length {
        return Err(Error::arg(format!(
            "in-sample length {} below twice the window length {}",
            split.in_sample_len, emb.window_length
        )));
    }
    let base = ssa::fit(in_sample, &emb)?;
    resolved.verticality = Some(base.verticality);
    resolved.residual_variance = Some(base.residual_variance);

    let mut methods = Vec::new();
    for method in cfg.methods_ordered() {
        let records = match method {
            Method::Ssa => rolling_ssa(values, split.break_index, &emb, horizons)?,
            Method::Boot => rolling_bootstrap(values, split.break_index, &emb, horizons, |o| {
                cfg.bootstrap_config(spec, o)
            })?,
            Method::Gssa => {
                let g = cfg.gssa_config(spec)?;
                resolved.smoothing_factor = Some(g.smoothing_factor);
                kalman::gssa_forecast(series, &split, &emb, &g, horizons)?.records
            }
        };
        methods.push((method.label().to_string(), records));
    }
    Ok(SeriesForecasts {
        series: spec.name.clone(),
        group: spec.group.clone(),
        actual: values.to_vec(),
        methods,
    })
}

/// Fixed three-decimal table cell.
pub fn format_cell(v: f64) -> String {
    format!("{v:.3}")
}

const TABLE_HEADER: [&str; 12] = [
    "series",
    "group",
    "method",
    "horizon",
    "n",
    "rmse",
    "mae",
    "rrmse",
    "dm_statistic",
    "dm_p_value",
    "significant_1pct",
    "dc",
];

fn opt_cell(v: Option<f64>) -> String {
    v.map(format_cell).unwrap_or_default()
}

/// `tables.csv` contents: one row per series, method and horizon, followed
/// by per-group "Summary" rows and "Overall" rows.
pub fn tables_csv(report: &EvalReport) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Config(format!("csv: {e}"));
    w.write_record(TABLE_HEADER).map_err(csv_err)?;
    for m in &report.methods {
        let pair = report.pairs.iter().find(|p| {
            p.series == m.series && p.challenger == m.method && p.horizon == m.horizon
        });
        w.write_record([
            m.series.clone(),
            m.group.clone().unwrap_or_default(),
            m.method.clone(),
            m.horizon.to_string(),
            m.n.to_string(),
            format_cell(m.rmse),
            opt_cell(m.mae),
            opt_cell(pair.map(|p| p.rrmse)),
            opt_cell(pair.map(|p| p.dm_statistic)),
            opt_cell(pair.map(|p| p.dm_p_value)),
            pair.map(|p| if p.significant_at_1pct { "*" } else { "" }.to_string())
                .unwrap_or_default(),
            format_cell(m.dc),
        ])
        .map_err(csv_err)?;
    }
    for d in &report.dc_summary {
        let s = report.summary.iter().find(|s| {
            s.group == d.group && s.challenger == d.method && s.horizon == d.horizon
        });
        let (label, group) = match &d.group {
            Some(g) => ("Summary".to_string(), g.clone()),
            None => ("Overall".to_string(), String::new()),
        };
        w.write_record([
            label,
            group,
            d.method.clone(),
            d.horizon.to_string(),
            d.series_count.to_string(),
            String::new(),
            String::new(),
            opt_cell(s.map(|s| s.mean_rrmse)),
            String::new(),
            String::new(),
            String::new(),
            format_cell(d.mean_dc),
        ])
        .map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| Error::Config(format!("csv: {e}")))
}

/// `tables.json`: per-series tables keyed by horizon and method, group
/// summaries, the overall table and failures, at full precision.
pub fn tables_json(report: &EvalReport) -> Result<String> {
    let mut series_names: Vec<(&str, Option<&str>)> = Vec::new();
    for m in &report.methods {
        let key = (m.series.as_str(), m.group.as_deref());
        if !series_names.contains(&key) {
            series_names.push(key);
        }
    }
    let tables: Vec<_> = series_names
        .iter()
        .map(|(name, group)| {
            let mut horizons: Vec<usize> = report
                .methods
                .iter()
                .filter(|m| m.series == *name)
                .map(|m| m.horizon)
                .collect();
            horizons.dedup();
            let rows: Vec<_> = horizons
                .iter()
                .map(|&h| {
                    let methods: serde_json::Map<String, serde_json::Value> = report
                        .methods
                        .iter()
                        .filter(|m| m.series == *name && m.horizon == h)
                        .map(|m| {
                            (
                                m.method.clone(),
                                json!({"n": m.n, "rmse": m.rmse, "mae": m.mae, "dc": m.dc}),
                            )
                        })
                        .collect();
                    let ratios: serde_json::Map<String, serde_json::Value> = report
                        .pairs
                        .iter()
                        .filter(|p| p.series == *name && p.horizon == h)
                        .map(|p| {
                            (
                                format!("{}/{}", p.challenger, p.baseline),
                                json!({
                                    "rrmse": p.rrmse,
                                    "dm_statistic": p.dm_statistic,
                                    "dm_p_value": p.dm_p_value,
                                    "dm_degenerate": p.dm_degenerate,
                                    "significant_1pct": p.significant_at_1pct,
                                }),
                            )
                        })
                        .collect();
                    json!({"horizon": h, "methods": methods, "ratios": ratios})
                })
                .collect();
            json!({"series": name, "group": group, "rows": rows})
        })
        .collect();
    let summary: Vec<_> = report.summary.iter().filter(|s| s.group.is_some()).collect();
    let overall: Vec<_> = report.summary.iter().filter(|s| s.group.is_none()).collect();
    let doc = json!({
        "tables": tables,
        "summary": summary,
        "overall": overall,
        "dc_summary": report.dc_summary,
        "failures": report.failures,
    });
    serde_json::to_string_pretty(&doc).map_err(|e| Error::Config(format!("json: {e}")))
}

/// `ecdf_h{h}.csv`: `(method, error, cum_fraction)` steps of the pooled
/// absolute errors.
pub fn ecdf_csv(report: &EvalReport, horizon: usize) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Config(format!("csv: {e}"));
    w.write_record(["method", "error", "cum_fraction"]).map_err(csv_err)?;
    for e in report.ecdf.iter().filter(|e| e.horizon == horizon) {
        if e.samples.is_empty() {
            continue;
        }
        for (x, f) in crate::evaluation::ecdf_export(&e.samples)? {
            w.write_record([e.method.clone(), x.to_string(), f.to_string()])
                .map_err(csv_err)?;
        }
    }
    w.into_inner().map_err(|e| Error::Config(format!("csv: {e}")))
}

/// Writes `tables.csv`, `tables.json`, one `ecdf_h{h}.csv` per horizon and
/// `manifest.json` into `out_dir`, returning the written paths.
pub fn emit_report(report: &EvalReport, manifest: &RunManifest, out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = Vec::new();
    let mut write = |name: String, bytes: &[u8]| -> Result<()> {
        let path = out_dir.join(name);
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        written.push(path);
        Ok(())
    };
    write("tables.csv".into(), &tables_csv(report)?)?;
    write("tables.json".into(), tables_json(report)?.as_bytes())?;
    for &h in &manifest.horizons {
        write(format!("ecdf_h{h}.csv"), &ecdf_csv(report, h)?)?;
    }
    let m = serde_json::to_string_pretty(manifest).map_err(|e| Error::Config(format!("json: {e}")))?;
    write("manifest.json".into(), m.as_bytes())?;
    Ok(written)
}
