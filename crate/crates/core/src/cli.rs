//! Run manifests and artifact writers behind the `ekgd` binary.
//!
//! A [`RunManifest`] is one flat key-value document that fully determines a
//! run: input, ingest options, sampling, search parameters, and output
//! locations. Budgets are interpreted as deterministic work units
//! (milliseconds times [`WORK_UNITS_PER_MS`]), so identical manifests produce
//! byte-identical result and trace files regardless of machine speed or
//! worker count.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::event_model::{
    parse_event_table, sample_observations, EventTable, IngestConfig, IngestError, Observation,
    SampleError, SamplingScheme,
};
use crate::extcount::Budget;
use crate::poset::{build_poset, transitive_reduction, Poset, PosetError};
use crate::relations::{FeatureSet, Model, RelationCache, RelationError};
use crate::scoring::{score_model, LogScore, ScoringError};
use crate::search::{DiscoveryResult, SearchConfig, SearchEngine, SearchError, WORK_UNITS_PER_MS};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("input file not found: {0}")]
    InputNotFound(PathBuf),

    #[error("ingest failed: {0}")]
    Ingest(#[from] IngestError),

    #[error("sampling failed: {0}")]
    Sample(#[from] SampleError),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid model: {0}")]
    ModelInvalid(String),

    #[error("unknown feature {0:?}")]
    UnknownFeature(String),

    #[error("io error at {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    /// Machine-readable error code for the error JSON.
    pub fn code(&self) -> &'static str {
        match self {
            CliError::InputNotFound(_) => "INPUT_NOT_FOUND",
            CliError::Ingest(_) => "INGEST_ERROR",
            CliError::Sample(_) => "SAMPLE_ERROR",
            CliError::Config(_) => "CONFIG_INVALID",
            CliError::ModelInvalid(_) => "MODEL_INVALID",
            CliError::UnknownFeature(_) => "UNKNOWN_FEATURE",
            CliError::Io { .. } => "IO_ERROR",
            CliError::Internal(_) => "INTERNAL",
        }
    }

    /// 2 for usage/input problems, 3 for internal invariant violations.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Internal(_) => 3,
            _ => 2,
        }
    }

    pub fn to_json(&self) -> Value {
        json!({ "error": { "code": self.code(), "message": self.to_string() } })
    }
}

impl From<RelationError> for CliError {
    fn from(e: RelationError) -> Self {
        match e {
            RelationError::UnknownFeature(f) => CliError::UnknownFeature(f),
            RelationError::DegenerateDerived(f) => {
                CliError::ModelInvalid(format!("derived feature set repeats {f:?}"))
            }
            RelationError::MissingRelation(_) => CliError::Internal(e.to_string()),
        }
    }
}

impl From<SearchError> for CliError {
    fn from(e: SearchError) -> Self {
        match e {
            SearchError::NoCandidateFeatures => {
                CliError::Config("no candidate features".to_string())
            }
            SearchError::Relation(r) => r.into(),
            SearchError::Scoring(s) => s.into(),
            SearchError::Poset(p) => CliError::Internal(p.to_string()),
            SearchError::Pool(p) => CliError::Internal(p),
        }
    }
}

impl From<ScoringError> for CliError {
    fn from(e: ScoringError) -> Self {
        match e {
            ScoringError::Relation(r) => r.into(),
            ScoringError::NoSamples => CliError::Config("no samples".to_string()),
            ScoringError::Poset(p) => CliError::Internal(p.to_string()),
            ScoringError::MismatchedSamples(..) => CliError::Internal(e.to_string()),
        }
    }
}

impl From<PosetError> for CliError {
    fn from(e: PosetError) -> Self {
        CliError::Internal(e.to_string())
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// One flat document that fully determines a reproducible run. CLI flags
/// override file values field by field.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunManifest {
    /// Input event table (delimiter-separated, header row mandatory).
    pub input: PathBuf,
    /// Output directory for artifacts.
    pub out: Option<PathBuf>,

    pub id_column: String,
    pub order_column: Option<String>,
    pub value_separator: String,
    /// Single-character field delimiter.
    pub delimiter: String,
    pub feature_columns: Option<Vec<String>>,

    pub samples: usize,
    /// `None` means the whole table as one observation.
    pub sample_size: Option<usize>,
    pub scheme: SamplingScheme,
    pub seed: u64,

    /// Candidate features for discovery; `None` means all table features.
    pub features: Option<Vec<String>>,
    /// First-pass budget per bounding call, in deterministic milliseconds
    /// (work units / [`WORK_UNITS_PER_MS`]).
    pub budget_ms: u64,
    pub budget_growth: u32,
    pub max_passes: u32,
    /// Worker threads; 0 lets the runtime choose. `EKG_THREADS` caps this.
    pub workers: usize,

    /// Explicit model for `score` and `export`, as a list of 1- or 2-element
    /// feature name lists.
    pub model: Option<Vec<Vec<String>>>,
}

impl Default for RunManifest {
    fn default() -> Self {
        RunManifest {
            input: PathBuf::new(),
            out: None,
            id_column: "event".to_string(),
            order_column: None,
            value_separator: ";".to_string(),
            delimiter: ",".to_string(),
            feature_columns: None,
            samples: 1,
            sample_size: None,
            scheme: SamplingScheme::ContiguousWindow,
            seed: 0,
            features: None,
            budget_ms: 1000,
            budget_growth: 4,
            max_passes: 16,
            workers: 1,
            model: None,
        }
    }
}

impl RunManifest {
    pub fn from_json_file(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(e.to_string()))
    }

    fn ingest_config(&self) -> Result<IngestConfig, CliError> {
        let delimiter = match self.delimiter.as_bytes() {
            [b] => *b,
            _ => {
                return Err(CliError::Config(format!(
                    "delimiter must be one byte, got {:?}",
                    self.delimiter
                )))
            }
        };
        Ok(IngestConfig {
            id_column: self.id_column.clone(),
            order_column: self.order_column.clone(),
            value_separator: self.value_separator.clone(),
            feature_columns: self.feature_columns.clone(),
            delimiter,
        })
    }

    pub fn load_table(&self) -> Result<EventTable, CliError> {
        if self.input.as_os_str().is_empty() {
            return Err(CliError::Config("no input path given".to_string()));
        }
        if !self.input.exists() {
            return Err(CliError::InputNotFound(self.input.clone()));
        }
        let file = fs::File::open(&self.input).map_err(io_err(&self.input))?;
        Ok(parse_event_table(file, &self.ingest_config()?)?)
    }

    pub fn draw_samples(&self, table: &EventTable) -> Result<Vec<Observation>, CliError> {
        let size = self.sample_size.unwrap_or(table.len());
        Ok(sample_observations(
            table,
            self.samples,
            size,
            self.seed,
            self.scheme,
        )?)
    }

    /// Effective worker count: the manifest value capped by `EKG_THREADS`.
    pub fn effective_workers(&self) -> usize {
        match std::env::var("EKG_THREADS")
            .ok()
            .and_then(|v| v.parse::<usize>().ok())
        {
            Some(cap) if cap > 0 => {
                if self.workers == 0 {
                    cap
                } else {
                    self.workers.min(cap)
                }
            }
            _ => self.workers,
        }
    }

    pub fn search_config(&self) -> SearchConfig {
        SearchConfig {
            features: self.features.clone(),
            first_pass_budget: Budget::work(self.budget_ms.saturating_mul(WORK_UNITS_PER_MS)),
            budget_growth: self.budget_growth,
            max_passes: self.max_passes,
            workers: self.effective_workers(),
            seed: self.seed,
            ..SearchConfig::default()
        }
    }

    /// Parses the explicit model, checking every feature against the table.
    pub fn parse_model(&self, table: &EventTable) -> Result<Model, CliError> {
        let lists = self
            .model
            .as_ref()
            .ok_or_else(|| CliError::ModelInvalid("no model given".to_string()))?;
        let mut sets = Vec::new();
        for names in lists {
            for name in names {
                if table.feature_index(name).is_none() {
                    return Err(CliError::UnknownFeature(name.clone()));
                }
            }
            sets.push(FeatureSet::from_names(names).map_err(CliError::from)?);
        }
        Ok(Model::from_feature_sets(sets))
    }
}

fn model_to_lists(model: &Model) -> Vec<Vec<String>> {
    model
        .feature_sets()
        .map(|fs| fs.names().into_iter().map(str::to_string).collect())
        .collect()
}

/// Scores as JSON values; negative infinity becomes the string `"-inf"`.
fn json_log(v: f64) -> Value {
    if v == f64::NEG_INFINITY {
        Value::String("-inf".to_string())
    } else {
        json!(v)
    }
}

fn score_json(score: &LogScore) -> Value {
    json!({
        "log2_prior": json_log(score.log2_prior),
        "log2_likelihood_lower": json_log(score.log2_likelihood_lower),
        "log2_likelihood_upper": json_log(score.log2_likelihood_upper),
        "score_lo": json_log(score.score_lo),
        "score_hi": json_log(score.score_hi),
        "exact": score.exact,
    })
}

fn per_sample_json(score: &LogScore) -> Value {
    Value::Array(
        score
            .per_sample
            .iter()
            .map(|b| {
                json!({
                    "log2_lower": b.log2_lower,
                    "log2_upper": b.log2_upper,
                    "exact": b.exact,
                })
            })
            .collect(),
    )
}

/// Renders a poset as a DOT digraph: nodes carry event ids, edges are the
/// transitive reduction, and each edge is labeled with the feature sets that
/// induced it.
pub fn export_dot(
    poset: &Poset,
    model: &Model,
    cache: &RelationCache<'_>,
) -> Result<String, RelationError> {
    let reduced = transitive_reduction(poset);
    let quote = |s: &str| format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""));
    let node_name = |i: usize| match poset.label(i) {
        Some(label) => quote(label),
        None => format!("n{i}"),
    };
    let mut out = String::from("digraph ekg {\n  rankdir=LR;\n");
    for i in 0..poset.len() {
        out.push_str(&format!("  {};\n", node_name(i)));
    }
    for (a, b) in reduced.edges() {
        let mut inducers = Vec::new();
        if let (Some(oa), Some(ob)) = (poset.origin(a), poset.origin(b)) {
            for fs in model.feature_sets() {
                if cache.relation(fs)?.relates(oa, ob) {
                    inducers.push(fs.to_string());
                }
            }
        }
        if inducers.is_empty() {
            out.push_str(&format!("  {} -> {};\n", node_name(a), node_name(b)));
        } else {
            out.push_str(&format!(
                "  {} -> {} [label={}];\n",
                node_name(a),
                node_name(b),
                quote(&inducers.join("+"))
            ));
        }
    }
    out.push_str("}\n");
    Ok(out)
}

/// Artifacts written by a discovery run.
#[derive(Debug)]
pub struct DiscoverArtifacts {
    pub result_path: PathBuf,
    pub trace_path: PathBuf,
    pub dot_paths: Vec<PathBuf>,
    pub result: DiscoveryResult,
}

fn result_json(result: &DiscoveryResult, manifest: &RunManifest) -> Value {
    json!({
        "best_model": model_to_lists(&result.best_model),
        "score": score_json(&result.best_score),
        "per_sample": per_sample_json(&result.best_score),
        "counters": {
            "visited": result.visited,
            "pruned": result.pruned,
            "reestimated": result.reestimated,
            "discarded": result.discarded,
            "unresolved": result.unresolved,
        },
        "notes": result.notes,
        "seed": manifest.seed,
    })
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(io_err(path))
}

/// Runs discovery per the manifest and writes `result.json`, `trace.csv`,
/// and one `ekg_<i>.dot` per sample for the best model.
pub fn run_discover(manifest: &RunManifest) -> Result<DiscoverArtifacts, CliError> {
    let table = manifest.load_table()?;
    let samples = manifest.draw_samples(&table)?;
    let out_dir = manifest
        .out
        .clone()
        .ok_or_else(|| CliError::Config("no output directory given".to_string()))?;
    fs::create_dir_all(&out_dir).map_err(io_err(&out_dir))?;

    let cache = RelationCache::new(&table);
    let engine = SearchEngine::new(&cache, &samples, manifest.search_config())?;
    let result = engine.run()?;

    let result_path = out_dir.join("result.json");
    let pretty = serde_json::to_string_pretty(&result_json(&result, manifest))
        .map_err(|e| CliError::Internal(e.to_string()))?;
    write_text(&result_path, &format!("{pretty}\n"))?;

    let trace_path = out_dir.join("trace.csv");
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(["elapsed_ms", "best_score_log2", "model"])
        .map_err(|e| CliError::Internal(e.to_string()))?;
    for point in &result.trace {
        wtr.write_record([
            point.elapsed_ms.to_string(),
            format!("{}", point.best_score_log2),
            point.model.to_string(),
        ])
        .map_err(|e| CliError::Internal(e.to_string()))?;
    }
    let bytes = wtr
        .into_inner()
        .map_err(|e| CliError::Internal(e.to_string()))?;
    write_text(
        &trace_path,
        std::str::from_utf8(&bytes).map_err(|e| CliError::Internal(e.to_string()))?,
    )?;

    let mut dot_paths = Vec::new();
    for (i, obs) in samples.iter().enumerate() {
        let poset = build_poset(&cache, obs, &result.best_model)?;
        let dot = export_dot(&poset, &result.best_model, &cache).map_err(CliError::from)?;
        let path = out_dir.join(format!("ekg_{i}.dot"));
        write_text(&path, &dot)?;
        dot_paths.push(path);
    }

    Ok(DiscoverArtifacts {
        result_path,
        trace_path,
        dot_paths,
        result,
    })
}

/// Scores an explicit model (atomic or derived feature sets) and returns the
/// score JSON.
pub fn run_score(manifest: &RunManifest) -> Result<Value, CliError> {
    let table = manifest.load_table()?;
    let samples = manifest.draw_samples(&table)?;
    let model = manifest.parse_model(&table)?;
    let cache = RelationCache::new(&table);
    let budget = Budget::work(manifest.budget_ms.saturating_mul(WORK_UNITS_PER_MS));
    let score = score_model(&cache, &samples, &model, &budget)?;
    Ok(json!({
        "model": model_to_lists(&model),
        "samples": samples.iter().map(|o| o.members().to_vec()).collect::<Vec<_>>(),
        "score": score_json(&score),
        "per_sample": per_sample_json(&score),
    }))
}

/// Emits the sampled observation index lists.
pub fn run_sample(manifest: &RunManifest) -> Result<Value, CliError> {
    let table = manifest.load_table()?;
    let samples = manifest.draw_samples(&table)?;
    Ok(json!({
        "samples": samples.iter().map(|o| o.members().to_vec()).collect::<Vec<_>>(),
        "event_ids": samples
            .iter()
            .map(|o| {
                o.members()
                    .iter()
                    .map(|&i| table.event_id(i).to_string())
                    .collect::<Vec<_>>()
            })
            .collect::<Vec<_>>(),
    }))
}

/// Writes one DOT file per sample for an explicit model.
pub fn run_export(manifest: &RunManifest) -> Result<Vec<PathBuf>, CliError> {
    let table = manifest.load_table()?;
    let samples = manifest.draw_samples(&table)?;
    let model = manifest.parse_model(&table)?;
    let out_dir = manifest.out.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&out_dir).map_err(io_err(&out_dir))?;
    let cache = RelationCache::new(&table);
    let mut paths = Vec::new();
    for (i, obs) in samples.iter().enumerate() {
        let poset = build_poset(&cache, obs, &model)?;
        let dot = export_dot(&poset, &model, &cache).map_err(CliError::from)?;
        let path = out_dir.join(format!("ekg_{i}.dot"));
        write_text(&path, &dot)?;
        paths.push(path);
    }
    Ok(paths)
}
