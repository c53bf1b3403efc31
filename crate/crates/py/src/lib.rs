//! Python bindings: event tables, sampling, scoring, and model discovery.

use std::fmt::Display;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use ekgd_core::cli::export_dot;
use ekgd_core::event_model::{
    parse_event_table, sample_observations as core_sample, EventTable, IngestConfig, Observation,
    SamplingScheme,
};
use ekgd_core::extcount::{bound_extensions, log2_biguint, Budget};
use ekgd_core::poset::{build_poset, count_extensions_exact};
use ekgd_core::relations::{FeatureSet, Model, RelationCache};
use ekgd_core::scoring::{normalized_entropy as core_entropy, score_model as core_score, LogScore};
use ekgd_core::search::{discover as core_discover, SearchConfig, WORK_UNITS_PER_MS};

fn value_err(e: impl Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// A totally ordered event log with multi-valued feature columns.
#[pyclass(name = "EventTable", frozen)]
struct PyEventTable {
    inner: EventTable,
}

fn ingest_config(
    id_column: &str,
    order_column: Option<String>,
    value_separator: &str,
    delimiter: &str,
    feature_columns: Option<Vec<String>>,
) -> PyResult<IngestConfig> {
    let delimiter = match delimiter.as_bytes() {
        [b] => *b,
        _ => return Err(value_err("delimiter must be one byte")),
    };
    Ok(IngestConfig {
        id_column: id_column.to_string(),
        order_column,
        value_separator: value_separator.to_string(),
        feature_columns,
        delimiter,
    })
}

#[pymethods]
impl PyEventTable {
    /// Parses a delimiter-separated event table from text.
    #[staticmethod]
    #[pyo3(signature = (text, id_column="event", order_column=None, value_separator=";", delimiter=",", feature_columns=None))]
    fn from_csv(
        text: &str,
        id_column: &str,
        order_column: Option<String>,
        value_separator: &str,
        delimiter: &str,
        feature_columns: Option<Vec<String>>,
    ) -> PyResult<Self> {
        let config = ingest_config(
            id_column,
            order_column,
            value_separator,
            delimiter,
            feature_columns,
        )?;
        let inner = parse_event_table(text.as_bytes(), &config).map_err(value_err)?;
        Ok(PyEventTable { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (path, id_column="event", order_column=None, value_separator=";", delimiter=",", feature_columns=None))]
    fn from_path(
        path: &str,
        id_column: &str,
        order_column: Option<String>,
        value_separator: &str,
        delimiter: &str,
        feature_columns: Option<Vec<String>>,
    ) -> PyResult<Self> {
        let config = ingest_config(
            id_column,
            order_column,
            value_separator,
            delimiter,
            feature_columns,
        )?;
        let file = std::fs::File::open(path).map_err(value_err)?;
        let inner = parse_event_table(file, &config).map_err(value_err)?;
        Ok(PyEventTable { inner })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "EventTable({} events, features={:?})",
            self.inner.len(),
            self.inner.features()
        )
    }

    #[getter]
    fn features(&self) -> Vec<String> {
        self.inner.features().to_vec()
    }

    #[getter]
    fn event_ids(&self) -> Vec<String> {
        self.inner.event_ids().map(str::to_string).collect()
    }

    fn to_canonical_csv(&self) -> String {
        self.inner.to_canonical_csv()
    }
}

fn to_model(lists: Vec<Vec<String>>) -> PyResult<Model> {
    let mut sets = Vec::new();
    for names in &lists {
        sets.push(FeatureSet::from_names(names).map_err(value_err)?);
    }
    Ok(Model::from_feature_sets(sets))
}

fn model_lists(model: &Model) -> Vec<Vec<String>> {
    model
        .feature_sets()
        .map(|fs| fs.names().into_iter().map(str::to_string).collect())
        .collect()
}

fn to_observations(table: &EventTable, samples: Vec<Vec<usize>>) -> PyResult<Vec<Observation>> {
    samples
        .into_iter()
        .map(|members| Observation::new(table, members).map_err(value_err))
        .collect()
}

fn parse_scheme(scheme: &str) -> PyResult<SamplingScheme> {
    match scheme {
        "contiguous-window" | "window" => Ok(SamplingScheme::ContiguousWindow),
        "partition" => Ok(SamplingScheme::Partition),
        other => Err(value_err(format!("unknown sampling scheme {other:?}"))),
    }
}

fn budget_from(budget_ms: Option<u64>, work: Option<u64>, depth: Option<u32>) -> Budget {
    let mut budget = Budget::unbounded();
    if let Some(ms) = budget_ms {
        budget.work_limit = Some(ms.saturating_mul(WORK_UNITS_PER_MS));
    }
    if let Some(w) = work {
        budget.work_limit = Some(w);
    }
    if let Some(d) = depth {
        budget.depth_limit = Some(d);
    }
    budget
}

fn score_dict<'py>(py: Python<'py>, score: &LogScore) -> PyResult<Bound<'py, PyDict>> {
    let dict = PyDict::new(py);
    dict.set_item("log2_prior", score.log2_prior)?;
    dict.set_item("log2_likelihood_lower", score.log2_likelihood_lower)?;
    dict.set_item("log2_likelihood_upper", score.log2_likelihood_upper)?;
    dict.set_item("score_lo", score.score_lo)?;
    dict.set_item("score_hi", score.score_hi)?;
    dict.set_item("exact", score.exact)?;
    let per_sample = PyList::empty(py);
    for b in &score.per_sample {
        let entry = PyDict::new(py);
        entry.set_item("log2_lower", b.log2_lower)?;
        entry.set_item("log2_upper", b.log2_upper)?;
        entry.set_item("exact", b.exact)?;
        per_sample.append(entry)?;
    }
    dict.set_item("per_sample", per_sample)?;
    Ok(dict)
}

/// Draws observation samples; returns lists of event indices.
#[pyfunction]
#[pyo3(signature = (table, n, size, seed=0, scheme="contiguous-window"))]
fn sample_observations(
    table: &PyEventTable,
    n: usize,
    size: usize,
    seed: u64,
    scheme: &str,
) -> PyResult<Vec<Vec<usize>>> {
    let scheme = parse_scheme(scheme)?;
    let obs = core_sample(&table.inner, n, size, seed, scheme).map_err(value_err)?;
    Ok(obs.into_iter().map(|o| o.members().to_vec()).collect())
}

/// Normalized Shannon entropy of a feature set (one or two feature names).
#[pyfunction]
fn normalized_entropy(table: &PyEventTable, feature_set: Vec<String>) -> PyResult<f64> {
    let fs = FeatureSet::from_names(&feature_set).map_err(value_err)?;
    core_entropy(&table.inner, &fs).map_err(value_err)
}

/// Scores a model over samples; an omitted budget means exact counting.
#[pyfunction]
#[pyo3(signature = (table, model, samples, budget_ms=None, work=None, depth=None))]
fn score_model<'py>(
    py: Python<'py>,
    table: &PyEventTable,
    model: Vec<Vec<String>>,
    samples: Vec<Vec<usize>>,
    budget_ms: Option<u64>,
    work: Option<u64>,
    depth: Option<u32>,
) -> PyResult<Bound<'py, PyDict>> {
    let model = to_model(model)?;
    let samples = to_observations(&table.inner, samples)?;
    let cache = RelationCache::new(&table.inner);
    let budget = budget_from(budget_ms, work, depth);
    let score = core_score(&cache, &samples, &model, &budget).map_err(value_err)?;
    score_dict(py, &score)
}

/// Lower/upper log2 bounds on the extension count of the poset a model
/// induces on one sample.
#[pyfunction]
#[pyo3(signature = (table, sample, model, budget_ms=None, work=None, depth=None))]
fn extension_bounds(
    table: &PyEventTable,
    sample: Vec<usize>,
    model: Vec<Vec<String>>,
    budget_ms: Option<u64>,
    work: Option<u64>,
    depth: Option<u32>,
) -> PyResult<(f64, f64, bool)> {
    let model = to_model(model)?;
    let obs = Observation::new(&table.inner, sample).map_err(value_err)?;
    let cache = RelationCache::new(&table.inner);
    let poset = build_poset(&cache, &obs, &model).map_err(value_err)?;
    let bounds = bound_extensions(&poset, &budget_from(budget_ms, work, depth));
    Ok((bounds.log2_lower, bounds.log2_upper, bounds.exact))
}

/// Exact extension count of the induced poset (samples of up to 20 events).
#[pyfunction]
fn count_extensions(
    table: &PyEventTable,
    sample: Vec<usize>,
    model: Vec<Vec<String>>,
) -> PyResult<u128> {
    let model = to_model(model)?;
    let obs = Observation::new(&table.inner, sample).map_err(value_err)?;
    let cache = RelationCache::new(&table.inner);
    let poset = build_poset(&cache, &obs, &model).map_err(value_err)?;
    let count = count_extensions_exact(&poset).map_err(value_err)?;
    u128::try_from(&count).map_err(|_| value_err("count exceeds u128"))
}

/// log2 of the exact extension count; defined for any sample size the exact
/// counter accepts.
#[pyfunction]
fn log2_count_extensions(
    table: &PyEventTable,
    sample: Vec<usize>,
    model: Vec<Vec<String>>,
) -> PyResult<f64> {
    let model = to_model(model)?;
    let obs = Observation::new(&table.inner, sample).map_err(value_err)?;
    let cache = RelationCache::new(&table.inner);
    let poset = build_poset(&cache, &obs, &model).map_err(value_err)?;
    Ok(log2_biguint(
        &count_extensions_exact(&poset).map_err(value_err)?,
    ))
}

/// Branch-and-bound discovery over atomic-feature models.
#[pyfunction]
#[pyo3(signature = (table, samples, features=None, budget_ms=1000, budget_growth=4, max_passes=16, workers=1, unbounded=false))]
#[allow(clippy::too_many_arguments)]
fn discover<'py>(
    py: Python<'py>,
    table: &PyEventTable,
    samples: Vec<Vec<usize>>,
    features: Option<Vec<String>>,
    budget_ms: u64,
    budget_growth: u32,
    max_passes: u32,
    workers: usize,
    unbounded: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let samples = to_observations(&table.inner, samples)?;
    let config = SearchConfig {
        features,
        first_pass_budget: if unbounded {
            Budget::unbounded()
        } else {
            Budget::work(budget_ms.saturating_mul(WORK_UNITS_PER_MS))
        },
        budget_growth,
        max_passes,
        workers,
        ..SearchConfig::default()
    };
    let result = core_discover(&table.inner, &samples, &config).map_err(value_err)?;

    let dict = PyDict::new(py);
    dict.set_item("best_model", model_lists(&result.best_model))?;
    dict.set_item("score", score_dict(py, &result.best_score)?)?;
    dict.set_item("visited", result.visited)?;
    dict.set_item("pruned", result.pruned)?;
    dict.set_item("reestimated", result.reestimated)?;
    dict.set_item("discarded", result.discarded)?;
    dict.set_item("unresolved", result.unresolved)?;
    dict.set_item("notes", result.notes.clone())?;
    let trace = PyList::empty(py);
    for point in &result.trace {
        trace.append((
            point.elapsed_ms,
            point.best_score_log2,
            model_lists(&point.model),
        ))?;
    }
    dict.set_item("trace", trace)?;
    Ok(dict)
}

/// DOT rendering (transitive reduction, edges labeled by inducing feature
/// sets) of the poset a model induces on one sample.
#[pyfunction]
fn export_model_dot(
    table: &PyEventTable,
    sample: Vec<usize>,
    model: Vec<Vec<String>>,
) -> PyResult<String> {
    let model = to_model(model)?;
    let obs = Observation::new(&table.inner, sample).map_err(value_err)?;
    let cache = RelationCache::new(&table.inner);
    let poset = build_poset(&cache, &obs, &model).map_err(value_err)?;
    export_dot(&poset, &model, &cache).map_err(value_err)
}

#[pymodule]
fn ekgd_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyEventTable>()?;
    m.add_function(wrap_pyfunction!(sample_observations, m)?)?;
    m.add_function(wrap_pyfunction!(normalized_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(score_model, m)?)?;
    m.add_function(wrap_pyfunction!(extension_bounds, m)?)?;
    m.add_function(wrap_pyfunction!(count_extensions, m)?)?;
    m.add_function(wrap_pyfunction!(log2_count_extensions, m)?)?;
    m.add_function(wrap_pyfunction!(discover, m)?)?;
    m.add_function(wrap_pyfunction!(export_model_dot, m)?)?;
    Ok(())
}
