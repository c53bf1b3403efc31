//! Event tables and observation sampling.
//!
//! An [`EventTable`] holds a chronologically ordered list of events, each with
//! one (possibly empty) set of value tokens per declared feature column. The
//! chronological positions are the observed total order. [`Observation`]s are
//! order-preserving sub-lists of event indices; the scorer treats them as
//! independent draws from the same process.

use std::collections::{BTreeSet, HashSet};
use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors from event table ingestion.
#[derive(Debug, Error)]
pub enum IngestError {
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("duplicate event id {0:?}")]
    DuplicateEventId(String),

    #[error("column {0:?} not found in header")]
    MissingColumn(String),

    #[error("duplicate feature column {0:?}")]
    DuplicateFeature(String),

    #[error("row {row}: unparseable ordering value {value:?}")]
    UnparseableOrderValue { row: usize, value: String },

    #[error("event table is empty")]
    EmptyTable,

    #[error("record {0}: expected one value set per feature")]
    MalformedRecord(usize),
}

/// Errors from observation sampling.
#[derive(Debug, Error)]
pub enum SampleError {
    #[error("sample size {size} out of range for table of {events} events")]
    SizeOutOfRange { size: usize, events: usize },

    #[error("sample count {0} out of range")]
    CountOutOfRange(usize),

    #[error("partition scheme needs {needed} events, table has {events}")]
    PartitionTooLarge { needed: usize, events: usize },

    #[error("observation members must be distinct, in-range, and strictly increasing")]
    InvalidMembers,
}

/// One event: its id and one value set per feature column of the parent table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventRecord {
    pub id: String,
    pub values: Vec<BTreeSet<String>>,
}

/// A totally ordered event log with multi-valued feature columns.
///
/// Row position is the observed total order. Feature names are unique; every
/// record carries exactly one value set (possibly empty) per feature.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventTable {
    events: Vec<EventRecord>,
    features: Vec<String>,
}

impl EventTable {
    /// Builds a table from parallel ids and per-event value sets.
    ///
    /// `values[e][f]` is the value set of event `e` for `features[f]`.
    pub fn new(
        ids: Vec<String>,
        features: Vec<String>,
        values: Vec<Vec<BTreeSet<String>>>,
    ) -> Result<Self, IngestError> {
        if ids.is_empty() {
            return Err(IngestError::EmptyTable);
        }
        let mut seen_features = HashSet::new();
        for f in &features {
            if !seen_features.insert(f.clone()) {
                return Err(IngestError::DuplicateFeature(f.clone()));
            }
        }
        let mut seen_ids = HashSet::new();
        for id in &ids {
            if !seen_ids.insert(id.clone()) {
                return Err(IngestError::DuplicateEventId(id.clone()));
            }
        }
        if ids.len() != values.len() {
            return Err(IngestError::MalformedRecord(values.len()));
        }
        let events = ids
            .into_iter()
            .zip(values)
            .enumerate()
            .map(|(row, (id, vals))| {
                if vals.len() != features.len() {
                    Err(IngestError::MalformedRecord(row))
                } else {
                    Ok(EventRecord { id, values: vals })
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(EventTable { events, features })
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn features(&self) -> &[String] {
        &self.features
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f == name)
    }

    pub fn event_id(&self, index: usize) -> &str {
        &self.events[index].id
    }

    pub fn event_ids(&self) -> impl Iterator<Item = &str> {
        self.events.iter().map(|e| e.id.as_str())
    }

    pub fn event_index(&self, id: &str) -> Option<usize> {
        self.events.iter().position(|e| e.id == id)
    }

    /// Value set of event `event` for feature column `feature` (by index).
    pub fn values(&self, event: usize, feature: usize) -> &BTreeSet<String> {
        &self.events[event].values[feature]
    }

    /// Canonical serialization: comma-delimited, id column `event`, row order
    /// chronological, multi-valued cells joined with `;`, values sorted.
    ///
    /// Re-parsing with [`IngestConfig::canonical`] yields an equal table.
    pub fn to_canonical_csv(&self) -> String {
        let mut wtr = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["event".to_string()];
        header.extend(self.features.iter().cloned());
        wtr.write_record(&header).expect("in-memory write");
        for event in &self.events {
            let mut row = vec![event.id.clone()];
            for set in &event.values {
                row.push(set.iter().cloned().collect::<Vec<_>>().join(";"));
            }
            wtr.write_record(&row).expect("in-memory write");
        }
        String::from_utf8(wtr.into_inner().expect("in-memory flush")).expect("utf8")
    }
}

/// Ingest configuration for [`parse_event_table`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestConfig {
    /// Column holding the unique event id.
    pub id_column: String,
    /// Optional column defining the observed order; row order breaks ties.
    /// Without it, row order is the observed order.
    pub order_column: Option<String>,
    /// Separator splitting a cell into multiple value tokens.
    pub value_separator: String,
    /// Feature columns to keep; `None` keeps all non-id, non-order columns.
    pub feature_columns: Option<Vec<String>>,
    /// Field delimiter of the input text.
    pub delimiter: u8,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig {
            id_column: "event".to_string(),
            order_column: None,
            value_separator: ";".to_string(),
            feature_columns: None,
            delimiter: b',',
        }
    }
}

impl IngestConfig {
    /// Config matching [`EventTable::to_canonical_csv`] output.
    pub fn canonical() -> Self {
        Self::default()
    }
}

/// Parses a delimiter-separated event table with a mandatory header row.
///
/// Events are ordered by the order column when configured (numeric when every
/// value parses as a finite number, lexicographic otherwise; ties keep input
/// row order), else by row order. Cells split on the value separator; tokens
/// are trimmed and empty tokens dropped, so blank cells become empty sets.
pub fn parse_event_table<R: Read>(
    source: R,
    config: &IngestConfig,
) -> Result<EventTable, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(config.delimiter)
        .flexible(false)
        .from_reader(source);

    let header: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let column = |name: &str| -> Result<usize, IngestError> {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| IngestError::MissingColumn(name.to_string()))
    };

    let id_col = column(&config.id_column)?;
    let order_col = config.order_column.as_deref().map(column).transpose()?;

    let features: Vec<String> = match &config.feature_columns {
        Some(names) => {
            for name in names {
                column(name)?;
            }
            names.clone()
        }
        None => header
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != id_col && Some(*i) != order_col)
            .map(|(_, h)| h.clone())
            .collect(),
    };
    let feature_cols: Vec<usize> = features
        .iter()
        .map(|f| column(f))
        .collect::<Result<_, _>>()?;

    let mut rows: Vec<(String, Vec<BTreeSet<String>>, String)> = Vec::new();
    for (row_idx, record) in reader.records().enumerate() {
        let record = record?;
        let id = record
            .get(id_col)
            .ok_or(IngestError::MalformedRecord(row_idx))?
            .trim()
            .to_string();
        let order_value = match order_col {
            Some(c) => {
                let raw = record
                    .get(c)
                    .ok_or(IngestError::MalformedRecord(row_idx))?
                    .trim()
                    .to_string();
                if raw.is_empty() {
                    return Err(IngestError::UnparseableOrderValue {
                        row: row_idx,
                        value: raw,
                    });
                }
                raw
            }
            None => String::new(),
        };
        let mut value_sets = Vec::with_capacity(feature_cols.len());
        for &c in &feature_cols {
            let cell = record.get(c).ok_or(IngestError::MalformedRecord(row_idx))?;
            let set: BTreeSet<String> = cell
                .split(config.value_separator.as_str())
                .map(str::trim)
                .filter(|t| !t.is_empty())
                .map(str::to_string)
                .collect();
            value_sets.push(set);
        }
        rows.push((id, value_sets, order_value));
    }
    if rows.is_empty() {
        return Err(IngestError::EmptyTable);
    }

    if order_col.is_some() {
        let numeric: Option<Vec<f64>> = rows
            .iter()
            .map(|(_, _, o)| o.parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect();
        match numeric {
            // Stable sorts keep input row order on ties.
            Some(keys) => {
                let mut order: Vec<usize> = (0..rows.len()).collect();
                order.sort_by(|&a, &b| keys[a].partial_cmp(&keys[b]).expect("finite keys"));
                rows = order.into_iter().map(|i| rows[i].clone()).collect();
            }
            None => rows.sort_by(|a, b| a.2.cmp(&b.2)),
        }
    }

    let (ids, values): (Vec<String>, Vec<Vec<BTreeSet<String>>>) =
        rows.into_iter().map(|(id, v, _)| (id, v)).unzip();
    EventTable::new(ids, features, values)
}

/// How [`sample_observations`] selects events.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingScheme {
    /// Random contiguous windows; starts drawn independently from the seed,
    /// so windows may overlap.
    ContiguousWindow,
    /// Disjoint consecutive blocks from the start of the table.
    Partition,
}

/// An order-preserving selection of events from a parent table.
///
/// Members are distinct table indices in the parent's chronological order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observation {
    members: Vec<usize>,
}

impl Observation {
    pub fn new(table: &EventTable, members: Vec<usize>) -> Result<Self, SampleError> {
        if members.is_empty()
            || members.windows(2).any(|w| w[0] >= w[1])
            || *members.last().expect("nonempty") >= table.len()
        {
            return Err(SampleError::InvalidMembers);
        }
        Ok(Observation { members })
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Draws `n` observations of exactly `size` events each.
///
/// Deterministic given `(seed, scheme, n, size)`: window starts come from a
/// seeded ChaCha stream; partition ignores the seed and slices consecutive
/// blocks.
pub fn sample_observations(
    table: &EventTable,
    n: usize,
    size: usize,
    seed: u64,
    scheme: SamplingScheme,
) -> Result<Vec<Observation>, SampleError> {
    use rand::{Rng, SeedableRng};

    if size == 0 || size > table.len() {
        return Err(SampleError::SizeOutOfRange {
            size,
            events: table.len(),
        });
    }
    if n == 0 {
        return Err(SampleError::CountOutOfRange(n));
    }
    match scheme {
        SamplingScheme::ContiguousWindow => {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let max_start = table.len() - size;
            (0..n)
                .map(|_| {
                    let start = rng.random_range(0..=max_start);
                    Observation::new(table, (start..start + size).collect())
                })
                .collect()
        }
        SamplingScheme::Partition => {
            let needed = n.checked_mul(size).ok_or(SampleError::CountOutOfRange(n))?;
            if needed > table.len() {
                return Err(SampleError::PartitionTooLarge {
                    needed,
                    events: table.len(),
                });
            }
            (0..n)
                .map(|i| Observation::new(table, (i * size..(i + 1) * size).collect()))
                .collect()
        }
    }
}
