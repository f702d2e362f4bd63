//! Scenarios: model profiles, retraining specs, arrival traces and window layout.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{Catalog, CatalogError};

pub mod generate;

pub const DEFAULT_WINDOW_SIZE: usize = 200;

#[derive(Debug, Error)]
pub enum WorkloadError {
    #[error("cannot read {path}: {source}")]
    MissingFile {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error("trace-length-mismatch: model `{model}` has {got} seconds, expected {expected}")]
    TraceLengthMismatch { model: String, got: usize, expected: usize },
    #[error("catalog: {0}")]
    Catalog(#[from] CatalogError),
    #[error("retraining volume must be positive")]
    NonPositiveVolume,
    #[error("latency_full must be positive")]
    NonPositiveLatency,
    #[error("no capability for size {0}")]
    MissingCapability(u8),
}

impl WorkloadError {
    fn invalid(path: impl Into<String>, message: impl Into<String>) -> Self {
        WorkloadError::Invalid { path: path.into(), message: message.into() }
    }

    /// Short machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            WorkloadError::MissingFile { .. } => "missing-file",
            WorkloadError::Parse { .. } => "parse",
            WorkloadError::Invalid { .. } => "invalid",
            WorkloadError::TraceLengthMismatch { .. } => "trace-length-mismatch",
            WorkloadError::Catalog(_) => "catalog",
            WorkloadError::NonPositiveVolume => "non-positive-volume",
            WorkloadError::NonPositiveLatency => "non-positive-latency",
            WorkloadError::MissingCapability(_) => "missing-capability",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelProfile {
    pub name: String,
    pub gflops: f64,
    /// Smallest instance (in GPCs) the model fits on.
    pub min_deploy_gpcs: u8,
    /// Requests per second served by one instance of the given size.
    pub capability: BTreeMap<u8, f64>,
    /// Seconds per request on a full 7-GPC device.
    pub latency_full: f64,
    /// Seconds of lost service when the model's instances change.
    pub reconfig_overhead: f64,
}

impl ModelProfile {
    /// Capability of one instance of `size`; zero below the deployment floor.
    pub fn capability_of(&self, size: u8) -> f64 {
        if size < self.min_deploy_gpcs {
            return 0.0;
        }
        self.capability.get(&size).copied().unwrap_or(0.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccuracyWindow {
    pub pre: f64,
    pub post: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RetrainingSpec {
    pub data_volume: u64,
    /// Seconds to retrain on one instance of the given size.
    pub rt_table: BTreeMap<u8, u32>,
    /// One entry per window, carry-over already applied.
    pub accuracy: Vec<AccuracyWindow>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec {
    pub profile: ModelProfile,
    pub retraining: RetrainingSpec,
}

/// Per-model arrival counts, one per second.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct InferenceTrace {
    pub counts: Vec<Vec<u64>>,
}

impl InferenceTrace {
    pub fn new(counts: Vec<Vec<u64>>) -> Self {
        Self { counts }
    }

    pub fn models(&self) -> usize {
        self.counts.len()
    }

    pub fn len(&self) -> usize {
        self.counts.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Seconds `[start, start+len)` of every model.
    pub fn slice(&self, start: usize, len: usize) -> InferenceTrace {
        InferenceTrace { counts: self.counts.iter().map(|c| c[start..start + len].to_vec()).collect() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogRef {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
}

/// Time resolution of a planning step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Granularity {
    /// One step spans this many seconds.
    Coarse(u32),
    /// One second splits into this many steps.
    Fine(u32),
}

impl Granularity {
    pub fn from_seconds(g: f64) -> Option<Self> {
        if !g.is_finite() || g <= 0.0 {
            return None;
        }
        if g >= 1.0 {
            let k = g.round();
            ((g - k).abs() < 1e-9).then_some(Granularity::Coarse(k as u32))
        } else {
            let n = (1.0 / g).round();
            ((1.0 / g - n).abs() < 1e-6 && n >= 2.0).then_some(Granularity::Fine(n as u32))
        }
    }

    pub fn seconds(&self) -> f64 {
        match *self {
            Granularity::Coarse(k) => k as f64,
            Granularity::Fine(n) => 1.0 / n as f64,
        }
    }

    /// Steps in a window of `seconds`, or `None` when the step does not divide it.
    pub fn steps_in(&self, seconds: usize) -> Option<usize> {
        match *self {
            Granularity::Coarse(k) => (seconds % k as usize == 0).then(|| seconds / k as usize),
            Granularity::Fine(n) => Some(seconds * n as usize),
        }
    }

    /// Rebins per-second counts into per-step counts. Coarse steps sum their
    /// seconds; fine steps split a second evenly with the remainder going to the
    /// earliest sub-steps.
    pub fn rebin(&self, counts: &[u64]) -> Vec<u64> {
        match *self {
            Granularity::Coarse(k) => counts.chunks(k as usize).map(|c| c.iter().sum()).collect(),
            Granularity::Fine(n) => counts
                .iter()
                .flat_map(|&c| {
                    let n = n as u64;
                    (0..n).map(move |j| c / n + u64::from(j < c % n))
                })
                .collect(),
        }
    }

    /// Whole steps needed to cover `seconds`.
    pub fn ceil_steps(&self, seconds: u32) -> u32 {
        match *self {
            Granularity::Coarse(k) => seconds.div_ceil(k),
            Granularity::Fine(n) => seconds * n,
        }
    }
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.seconds())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub catalog: Catalog,
    pub catalog_ref: CatalogRef,
    pub models: Vec<ModelSpec>,
    pub trace: InferenceTrace,
    /// Seconds per retraining window.
    pub window_size: usize,
    pub window_count: usize,
    /// Seconds per planning step.
    pub granularity: f64,
}

impl Scenario {
    pub fn granularity(&self) -> Granularity {
        Granularity::from_seconds(self.granularity).expect("validated granularity")
    }

    pub fn steps_per_window(&self) -> usize {
        self.granularity().steps_in(self.window_size).expect("validated granularity")
    }

    /// Per-second arrivals for a window, all models.
    pub fn window_trace(&self, window: usize) -> InferenceTrace {
        self.trace.slice(window * self.window_size, self.window_size)
    }

    pub fn accuracy(&self, model: usize, window: usize) -> AccuracyWindow {
        self.models[model].retraining.accuracy[window]
    }

    /// Checks every invariant; errors carry a field path.
    pub fn validate(&self) -> Result<(), WorkloadError> {
        if self.window_size < 2 {
            return Err(WorkloadError::invalid("windows.size", "must be at least 2"));
        }
        if self.window_count == 0 {
            return Err(WorkloadError::invalid("windows.count", "must be at least 1"));
        }
        let gran = Granularity::from_seconds(self.granularity).ok_or_else(|| {
            WorkloadError::invalid("windows.granularity", "must be a whole number of seconds or 1/n of a second")
        })?;
        if gran.steps_in(self.window_size).is_none() {
            return Err(WorkloadError::invalid("windows.granularity", "must divide the window size"));
        }
        if self.models.is_empty() {
            return Err(WorkloadError::invalid("models", "at least one model is required"));
        }
        if self.models.len() > 4 {
            return Err(WorkloadError::invalid("models", "at most 4 models are supported"));
        }
        let sizes = self.catalog.instance_sizes();
        for (i, m) in self.models.iter().enumerate() {
            let at = |f: &str| format!("models[{i}].{f}");
            let p = &m.profile;
            if p.name.is_empty() {
                return Err(WorkloadError::invalid(at("name"), "must not be empty"));
            }
            if self.models[..i].iter().any(|o| o.profile.name == p.name) {
                return Err(WorkloadError::invalid(at("name"), format!("duplicate model name `{}`", p.name)));
            }
            if !(p.gflops.is_finite() && p.gflops > 0.0) {
                return Err(WorkloadError::invalid(at("gflops"), "must be positive"));
            }
            if p.min_deploy_gpcs == 0 {
                return Err(WorkloadError::invalid(at("min_deploy_gpcs"), "must be at least 1"));
            }
            if !(p.latency_full.is_finite() && p.latency_full > 0.0) {
                return Err(WorkloadError::invalid(at("latency_full"), "must be positive"));
            }
            if !(p.reconfig_overhead.is_finite() && p.reconfig_overhead >= 0.0) {
                return Err(WorkloadError::invalid(at("reconfig_overhead"), "must be non-negative"));
            }
            let mut last: Option<(u8, f64)> = None;
            for (&k, &c) in &p.capability {
                if k == 0 || k > self.catalog.gpc_count {
                    return Err(WorkloadError::invalid(at(&format!("capability.{k}")), "size out of range"));
                }
                if !(c.is_finite() && c >= 0.0) {
                    return Err(WorkloadError::invalid(at(&format!("capability.{k}")), "must be non-negative"));
                }
                if k >= p.min_deploy_gpcs && c <= 0.0 {
                    return Err(WorkloadError::invalid(
                        at(&format!("capability.{k}")),
                        "must be positive at or above the deployment floor",
                    ));
                }
                if let Some((lk, lc)) = last {
                    if c < lc {
                        return Err(WorkloadError::invalid(
                            at(&format!("capability.{k}")),
                            format!("decreases from size {lk}"),
                        ));
                    }
                }
                last = Some((k, c));
            }
            for &k in sizes.iter().filter(|&&k| k >= p.min_deploy_gpcs) {
                if !p.capability.contains_key(&k) {
                    return Err(WorkloadError::invalid(at(&format!("capability.{k}")), "missing for catalog size"));
                }
            }
            let r = &m.retraining;
            let mut last: Option<(u8, u32)> = None;
            for (&k, &t) in &r.rt_table {
                let path = at(&format!("retraining.rt_table.{k}"));
                if k == 0 || k > self.catalog.gpc_count {
                    return Err(WorkloadError::invalid(path, "size out of range"));
                }
                if t == 0 {
                    return Err(WorkloadError::invalid(path, "must be at least 1 second"));
                }
                if let Some((lk, lt)) = last {
                    if t > lt {
                        return Err(WorkloadError::invalid(path, format!("increases from size {lk}")));
                    }
                }
                last = Some((k, t));
            }
            if r.accuracy.len() != self.window_count {
                return Err(WorkloadError::invalid(
                    at("retraining.accuracy"),
                    format!("has {} entries, expected one per window ({})", r.accuracy.len(), self.window_count),
                ));
            }
            for (w, a) in r.accuracy.iter().enumerate() {
                for (name, v) in [("pre", a.pre), ("post", a.post)] {
                    if !(0.0..=1.0).contains(&v) {
                        return Err(WorkloadError::invalid(
                            at(&format!("retraining.accuracy[{w}].{name}")),
                            "must lie in [0, 1]",
                        ));
                    }
                }
            }
        }
        if self.trace.models() != self.models.len() {
            return Err(WorkloadError::invalid("trace", "one series per model is required"));
        }
        let expected = self.window_size * self.window_count;
        for (i, series) in self.trace.counts.iter().enumerate() {
            if series.len() != expected {
                return Err(WorkloadError::TraceLengthMismatch {
                    model: self.models[i].profile.name.clone(),
                    got: series.len(),
                    expected,
                });
            }
        }
        Ok(())
    }

    /// Document form with fully resolved accuracies and RT tables, and the
    /// trace inlined.
    pub fn to_doc(&self) -> ScenarioDoc {
        let models = self
            .models
            .iter()
            .map(|m| ModelDoc {
                name: m.profile.name.clone(),
                gflops: m.profile.gflops,
                min_deploy_gpcs: m.profile.min_deploy_gpcs,
                latency_full: m.profile.latency_full,
                reconfig_overhead: m.profile.reconfig_overhead,
                capability: m.profile.capability.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
                retraining: RetrainingDoc {
                    data_volume: m.retraining.data_volume,
                    rt_table: Some(m.retraining.rt_table.iter().map(|(k, v)| (k.to_string(), *v)).collect()),
                    accuracy: m
                        .retraining
                        .accuracy
                        .iter()
                        .map(|a| AccuracyDoc { pre: Some(a.pre), post: a.post })
                        .collect(),
                },
            })
            .collect();
        let inline = self
            .models
            .iter()
            .zip(&self.trace.counts)
            .map(|(m, c)| (m.profile.name.clone(), c.clone()))
            .collect();
        ScenarioDoc {
            catalog: self.catalog_ref.clone(),
            trace: TraceDoc { path: None, inline: Some(inline) },
            windows: WindowsDoc {
                size: self.window_size,
                count: self.window_count,
                granularity: self.granularity,
            },
            models,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&self.to_doc()).expect("scenario serializes")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    pub catalog: CatalogRef,
    pub trace: TraceDoc,
    pub windows: WindowsDoc,
    pub models: Vec<ModelDoc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inline: Option<BTreeMap<String, Vec<u64>>>,
}

fn default_window_size() -> usize {
    DEFAULT_WINDOW_SIZE
}

fn default_granularity() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowsDoc {
    #[serde(default = "default_window_size")]
    pub size: usize,
    pub count: usize,
    #[serde(default = "default_granularity")]
    pub granularity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDoc {
    pub name: String,
    pub gflops: f64,
    pub min_deploy_gpcs: u8,
    pub latency_full: f64,
    #[serde(default)]
    pub reconfig_overhead: f64,
    pub capability: BTreeMap<String, f64>,
    pub retraining: RetrainingDoc,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RetrainingDoc {
    pub data_volume: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rt_table: Option<BTreeMap<String, u32>>,
    pub accuracy: Vec<AccuracyDoc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AccuracyDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pre: Option<f64>,
    pub post: f64,
}

fn size_keys<V: Copy>(map: &BTreeMap<String, V>, path: &str) -> Result<BTreeMap<u8, V>, WorkloadError> {
    map.iter()
        .map(|(k, v)| {
            k.parse::<u8>()
                .map(|k| (k, *v))
                .map_err(|_| WorkloadError::invalid(format!("{path}.{k}"), "key must be an instance size"))
        })
        .collect()
}

/// Retraining seconds per instance size: `ceil(3 · volume / capability[k])`
/// for every size at or above the deployment floor.
pub fn derive_rt_table(profile: &ModelProfile, volume: u64, sizes: &[u8]) -> Result<BTreeMap<u8, u32>, WorkloadError> {
    if volume == 0 {
        return Err(WorkloadError::NonPositiveVolume);
    }
    let mut out = BTreeMap::new();
    for &k in sizes.iter().filter(|&&k| k >= profile.min_deploy_gpcs) {
        let cap = profile.capability.get(&k).copied().filter(|&c| c > 0.0).ok_or(WorkloadError::MissingCapability(k))?;
        out.insert(k, (3.0 * volume as f64 / cap).ceil() as u32);
    }
    Ok(out)
}

/// Per-request SLO deadline in seconds: twice the full-device latency.
pub fn slo_target(profile: &ModelProfile) -> Result<f64, WorkloadError> {
    if profile.latency_full > 0.0 && profile.latency_full.is_finite() {
        Ok(2.0 * profile.latency_full)
    } else {
        Err(WorkloadError::NonPositiveLatency)
    }
}

/// Parses a trace CSV with header `second,model,count`.
pub fn parse_trace_csv<R: std::io::Read>(
    reader: R,
    model_names: &[String],
    expected_len: usize,
    path: &str,
) -> Result<InferenceTrace, WorkloadError> {
    #[derive(Deserialize)]
    struct Row {
        second: usize,
        model: String,
        count: u64,
    }
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| WorkloadError::Parse { path: path.into(), message: e.to_string() })?;
    if headers.iter().collect::<Vec<_>>() != ["second", "model", "count"] {
        return Err(WorkloadError::Parse { path: path.into(), message: "header must be `second,model,count`".into() });
    }
    let mut series: Vec<BTreeMap<usize, u64>> = vec![BTreeMap::new(); model_names.len()];
    for (line, row) in rdr.deserialize::<Row>().enumerate() {
        let row = row.map_err(|e| WorkloadError::Parse { path: format!("{path}:{}", line + 2), message: e.to_string() })?;
        let m = model_names.iter().position(|n| *n == row.model).ok_or_else(|| {
            WorkloadError::invalid(format!("{path}:{}", line + 2), format!("unknown model `{}`", row.model))
        })?;
        if series[m].insert(row.second, row.count).is_some() {
            return Err(WorkloadError::invalid(
                format!("{path}:{}", line + 2),
                format!("duplicate row for second {} model `{}`", row.second, row.model),
            ));
        }
    }
    let mut counts = Vec::with_capacity(series.len());
    for (m, s) in series.into_iter().enumerate() {
        let got = s.keys().next_back().map_or(0, |k| k + 1);
        if got != expected_len {
            return Err(WorkloadError::TraceLengthMismatch { model: model_names[m].clone(), got, expected: expected_len });
        }
        if s.len() != got {
            return Err(WorkloadError::invalid(path, format!("model `{}` has gaps in its seconds", model_names[m])));
        }
        counts.push(s.into_values().collect());
    }
    Ok(InferenceTrace { counts })
}

/// Writes a trace in the `second,model,count` format, seconds outermost.
pub fn write_trace_csv<W: std::io::Write>(
    writer: W,
    model_names: &[String],
    trace: &InferenceTrace,
) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["second", "model", "count"])?;
    for s in 0..trace.len() {
        for (name, c) in model_names.iter().zip(&trace.counts) {
            w.write_record([s.to_string(), name.clone(), c[s].to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Parses a scenario document; relative file references resolve against `base`.
pub fn parse_scenario(source: &str, base: &Path) -> Result<Scenario, WorkloadError> {
    let de = toml::Deserializer::parse(source)
        .map_err(|e| WorkloadError::Parse { path: "<document>".into(), message: e.to_string() })?;
    let doc: ScenarioDoc = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        WorkloadError::Parse { path, message: e.into_inner().to_string() }
    })?;
    scenario_from_doc(doc, base)
}

pub fn scenario_from_doc(doc: ScenarioDoc, base: &Path) -> Result<Scenario, WorkloadError> {
    let catalog = match (&doc.catalog.path, &doc.catalog.builtin) {
        (Some(p), None) => Catalog::from_path(&base.join(p))?,
        (None, Some(name)) if name == "a100" => Catalog::default_a100(),
        (None, Some(name)) => return Err(WorkloadError::invalid("catalog.builtin", format!("unknown catalog `{name}`"))),
        (None, None) => Catalog::default_a100(),
        (Some(_), Some(_)) => return Err(WorkloadError::invalid("catalog", "give either `path` or `builtin`, not both")),
    };
    let sizes = catalog.instance_sizes();
    let window_count = doc.windows.count;
    let mut models = Vec::with_capacity(doc.models.len());
    for (i, m) in doc.models.iter().enumerate() {
        let at = |f: &str| format!("models[{i}].{f}");
        let profile = ModelProfile {
            name: m.name.clone(),
            gflops: m.gflops,
            min_deploy_gpcs: m.min_deploy_gpcs,
            capability: size_keys(&m.capability, &at("capability"))?,
            latency_full: m.latency_full,
            reconfig_overhead: m.reconfig_overhead,
        };
        let rt_table = match &m.retraining.rt_table {
            Some(t) => size_keys(t, &at("retraining.rt_table"))?,
            None => {
                if m.retraining.data_volume == 0 {
                    return Err(WorkloadError::invalid(at("retraining.data_volume"), "must be positive"));
                }
                if profile.min_deploy_gpcs > catalog.largest_instance() {
                    BTreeMap::new()
                } else {
                    derive_rt_table(&profile, m.retraining.data_volume, &sizes).map_err(|e| match e {
                        WorkloadError::MissingCapability(k) => {
                            WorkloadError::invalid(at(&format!("capability.{k}")), "missing for catalog size")
                        }
                        other => other,
                    })?
                }
            }
        };
        let mut accuracy = Vec::with_capacity(m.retraining.accuracy.len());
        for (w, a) in m.retraining.accuracy.iter().enumerate() {
            let pre = match (a.pre, accuracy.last()) {
                (Some(p), _) => p,
                (None, Some(prev)) => {
                    let prev: &AccuracyWindow = prev;
                    prev.post
                }
                (None, None) => {
                    return Err(WorkloadError::invalid(
                        at(&format!("retraining.accuracy[{w}].pre")),
                        "required for the first window",
                    ))
                }
            };
            accuracy.push(AccuracyWindow { pre, post: a.post });
        }
        models.push(ModelSpec {
            profile,
            retraining: RetrainingSpec { data_volume: m.retraining.data_volume, rt_table, accuracy },
        });
    }
    let names: Vec<String> = models.iter().map(|m| m.profile.name.clone()).collect();
    let expected = doc.windows.size * window_count;
    let trace = match (&doc.trace.path, &doc.trace.inline) {
        (Some(p), None) => {
            let full = base.join(p);
            let file = std::fs::File::open(&full)
                .map_err(|source| WorkloadError::MissingFile { path: full.display().to_string(), source })?;
            parse_trace_csv(file, &names, expected, &full.display().to_string())?
        }
        (None, Some(inline)) => {
            if let Some(unknown) = inline.keys().find(|k| !names.contains(k)) {
                return Err(WorkloadError::invalid(format!("trace.inline.{unknown}"), "unknown model"));
            }
            let mut counts = Vec::with_capacity(names.len());
            for n in &names {
                let c = inline
                    .get(n)
                    .ok_or_else(|| WorkloadError::invalid(format!("trace.inline.{n}"), "missing series"))?;
                counts.push(c.clone());
            }
            InferenceTrace { counts }
        }
        _ => return Err(WorkloadError::invalid("trace", "give exactly one of `path` or `inline`")),
    };
    let scenario = Scenario {
        catalog,
        catalog_ref: doc.catalog,
        models,
        trace,
        window_size: doc.windows.size,
        window_count,
        granularity: doc.windows.granularity,
    };
    scenario.validate()?;
    Ok(scenario)
}

/// Loads and validates a scenario file and everything it references.
pub fn load_scenario(path: &Path) -> Result<Scenario, WorkloadError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| WorkloadError::MissingFile { path: path.display().to_string(), source })?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    parse_scenario(&text, base)
}
