//! Model priors, likelihood bounds, and posterior-odds comparison.
//!
//! A model's unnormalized posterior is the product of its feature-set
//! entropies times the product over samples of the reciprocal extension
//! count of the induced poset. Everything is kept in log2 space, and the
//! normalizing constants (the evidence and the prior's denominator) are never
//! computed: they cancel in the odds between two models, which is all the
//! search needs. Counts enter as intervals, so scores are intervals too; an
//! interval that excludes zero in the odds decides the comparison, one that
//! straddles zero means "re-estimate with a bigger budget".

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::event_model::{EventTable, Observation};
use crate::extcount::{bound_extensions_stats, BoundedCount, Budget};
use crate::poset::{build_poset, PosetError};
use crate::relations::{FeatureSet, Model, RelationCache, RelationError};

#[derive(Debug, Error)]
pub enum ScoringError {
    #[error(transparent)]
    Relation(#[from] RelationError),

    #[error(transparent)]
    Poset(#[from] PosetError),

    #[error("no samples supplied")]
    NoSamples,

    #[error("scores cover different sample sets ({0} vs {1})")]
    MismatchedSamples(usize, usize),
}

/// Normalized Shannon entropy of a feature set's outcome distribution over
/// the table's events, in `[0, 1)`.
///
/// An event's outcome is its whole value set for the feature (the empty set
/// counts as an outcome); for a derived set it is the pair of value sets.
/// The normalizer is `1 + log2(event count)`, which also pads the ratio
/// strictly below one.
pub fn normalized_entropy(table: &EventTable, fs: &FeatureSet) -> Result<f64, RelationError> {
    let cols: Vec<usize> = fs
        .names()
        .iter()
        .map(|name| {
            table
                .feature_index(name)
                .ok_or_else(|| RelationError::UnknownFeature(name.to_string()))
        })
        .collect::<Result<_, _>>()?;

    // BTreeMap so the summation order, and with it the floating-point
    // rounding, is reproducible run to run.
    let mut counts: BTreeMap<Vec<&std::collections::BTreeSet<String>>, usize> = BTreeMap::new();
    for e in 0..table.len() {
        let outcome: Vec<_> = cols.iter().map(|&c| table.values(e, c)).collect();
        *counts.entry(outcome).or_insert(0) += 1;
    }

    let n = table.len() as f64;
    let entropy: f64 = counts
        .values()
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum();
    Ok(entropy / (1.0 + n.log2()))
}

/// Sum of log2 entropies over the model's feature sets: the numerator of the
/// entropy prior. The empty model scores 0 (an empty product); any feature
/// set with zero entropy drives the result to negative infinity.
pub fn model_prior_unnormalized(table: &EventTable, model: &Model) -> Result<f64, RelationError> {
    let mut sum = 0.0;
    for fs in model.feature_sets() {
        let eta = normalized_entropy(table, fs)?;
        if eta == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        sum += eta.log2();
    }
    Ok(sum)
}

/// Interval score of one model: log2 prior plus log2 likelihood bounds.
///
/// Likelihood bounds flip the count bounds: the lower likelihood uses each
/// sample's upper count bound and vice versa. A score is either fully finite
/// or negative infinity (zero prior), which always loses comparisons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogScore {
    pub log2_prior: f64,
    pub log2_likelihood_lower: f64,
    pub log2_likelihood_upper: f64,
    pub score_lo: f64,
    pub score_hi: f64,
    /// Every per-sample count bound converged.
    pub exact: bool,
    /// Count bounds per sample, in sample order.
    pub per_sample: Vec<BoundedCount>,
    /// Recursion entries spent bounding; a deterministic cost measure.
    pub work_used: u64,
}

impl LogScore {
    fn assemble(prior: f64, per_sample: Vec<BoundedCount>, work_used: u64) -> Self {
        let lik_lower: f64 = -per_sample.iter().map(|b| b.log2_upper).sum::<f64>();
        let lik_upper: f64 = -per_sample.iter().map(|b| b.log2_lower).sum::<f64>();
        LogScore {
            log2_prior: prior,
            log2_likelihood_lower: lik_lower,
            log2_likelihood_upper: lik_upper,
            score_lo: prior + lik_lower,
            score_hi: prior + lik_upper,
            exact: per_sample.iter().all(|b| b.exact),
            per_sample,
            work_used,
        }
    }

    pub fn is_neg_infinite(&self) -> bool {
        self.score_hi == f64::NEG_INFINITY
    }
}

/// Scores `model` against the samples: builds the induced poset per sample,
/// bounds its extension count under `budget`, and assembles the interval.
///
/// Per-sample work fans out over the current rayon pool; the reduction is a
/// deterministic fold in sample order, so results do not depend on worker
/// count.
pub fn score_model(
    cache: &RelationCache<'_>,
    samples: &[Observation],
    model: &Model,
    budget: &Budget,
) -> Result<LogScore, ScoringError> {
    if samples.is_empty() {
        return Err(ScoringError::NoSamples);
    }
    let prior = model_prior_unnormalized(cache.table(), model)?;
    // Relations materialize once before the fan-out so workers only read.
    cache.relations_for(model)?;
    let bounds: Vec<(BoundedCount, u64)> = samples
        .par_iter()
        .map(|obs| {
            let poset = build_poset(cache, obs, model)?;
            Ok(bound_extensions_stats(&poset, budget))
        })
        .collect::<Result<_, ScoringError>>()?;
    let work_used = bounds.iter().map(|(_, w)| w).sum();
    let per_sample = bounds.into_iter().map(|(b, _)| b).collect();
    Ok(LogScore::assemble(prior, per_sample, work_used))
}

/// Interval of log2 posterior odds of `s1` against `s2`:
/// `[s1.lo - s2.hi, s1.hi - s2.lo]`.
///
/// An interval strictly above zero means `s1` dominates, strictly below zero
/// means `s2` dominates, and an interval containing zero is undecided. When
/// both scores are negative infinity neither model has posterior mass and the
/// odds are the fully undecided interval.
pub fn posterior_log_odds(s1: &LogScore, s2: &LogScore) -> Result<(f64, f64), ScoringError> {
    if s1.per_sample.len() != s2.per_sample.len() {
        return Err(ScoringError::MismatchedSamples(
            s1.per_sample.len(),
            s2.per_sample.len(),
        ));
    }
    Ok(match (s1.is_neg_infinite(), s2.is_neg_infinite()) {
        (true, true) => (f64::NEG_INFINITY, f64::INFINITY),
        (true, false) => (f64::NEG_INFINITY, f64::NEG_INFINITY),
        (false, true) => (f64::INFINITY, f64::INFINITY),
        (false, false) => (s1.score_lo - s2.score_hi, s1.score_hi - s2.score_lo),
    })
}
