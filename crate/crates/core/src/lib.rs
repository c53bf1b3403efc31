//! Discovery of order-inducing event features for event knowledge graphs.
//!
//! An event log is a totally ordered sequence of events carrying multi-valued
//! feature columns. Each set of features induces a partial order on the events:
//! two events are ordered when they follow each other in the log *and* share a
//! feature value (directly, or via one bridging feature for derived feature
//! pairs). The library scores such feature models with a Bayesian posterior
//! whose likelihood is the reciprocal number of linear extensions of the
//! induced poset, and whose prior is a product of normalized feature
//! entropies. A branch-and-bound search over atomic-feature models prunes with
//! poset-decomposition bounds on the extension counts.
//!
//! Pipeline, bottom up:
//!
//! - [`event_model`]: parse delimiter-separated event tables, draw observation
//!   samples.
//! - [`relations`]: atomic and derived feature relations, and the generator
//!   that filters an observed order down to feature-related pairs.
//! - [`poset`]: DAG representation of the induced partial orders, structural
//!   queries, and an exact extension-counting oracle for small instances.
//! - [`extcount`]: budgeted lower/upper bounds on extension counts via
//!   recursive disjoint and minimal-element decomposition, in log2 space.
//! - [`scoring`]: entropy priors, likelihood bounds, posterior log-odds.
//! - [`search`]: breadth-first branch and bound with a re-estimation queue.
//! - [`cli`]: run manifests and the artifact writers behind the `ekgd` binary.
//! - [`oracle`]: brute-force references used by tests and `ekgd verify`.

pub mod cli;
pub mod event_model;
pub mod extcount;
#[cfg(feature = "oracle")]
pub mod oracle;
pub mod poset;
pub mod relations;
pub mod scoring;
pub mod search;
#[cfg(test)]
pub(crate) mod testutil;

pub use event_model::{EventTable, IngestConfig, Observation, SamplingScheme};
pub use extcount::{bound_extensions, BoundedCount, Budget};
pub use poset::{build_poset, Poset};
pub use relations::{FeatureSet, Model, RelationCache};
pub use scoring::{posterior_log_odds, score_model, LogScore};
pub use search::{discover, DiscoveryResult, SearchConfig};
