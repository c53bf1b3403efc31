//! Breadth-first branch and bound over atomic-feature models.
//!
//! States branch prefix-wise over a fixed feature ordering: a state may only
//! add features at positions past its own, so every reachable model is a
//! superset of the state's. That monotonicity makes the reachable union `M*`
//! (the state's model plus every later feature) the most restrictive poset
//! any descendant can induce, and `prior(M) - sum of lower count bounds of
//! M*` an upper bound on every descendant's score. States whose bound falls
//! below the incumbent are pruned wholesale.
//!
//! Models whose own score interval straddles the incumbent go to a
//! re-estimation queue and are revisited with budgets that grow geometrically
//! per pass; by then the incumbent has usually improved enough to dismiss
//! them from their stored interval alone.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::event_model::{EventTable, Observation};
use crate::extcount::{bound_extensions_stats, Budget};
use crate::poset::{build_poset, PosetError};
use crate::relations::{FeatureSet, Model, RelationCache, RelationError};
use crate::scoring::{
    model_prior_unnormalized, normalized_entropy, score_model, LogScore, ScoringError,
};

/// Calibration constant turning millisecond budgets into deterministic work
/// units (bounding-recursion entries).
pub const WORK_UNITS_PER_MS: u64 = 1000;

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("no candidate features")]
    NoCandidateFeatures,

    #[error(transparent)]
    Relation(#[from] RelationError),

    #[error(transparent)]
    Poset(#[from] PosetError),

    #[error(transparent)]
    Scoring(#[from] ScoringError),

    #[error("worker pool: {0}")]
    Pool(String),
}

/// Policy for equal exact scores.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TieBreak {
    /// Fewer feature sets win, then lexicographic order.
    #[default]
    FewerSetsThenLex,
    /// The first model reaching the score stays.
    KeepFirst,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    /// Candidate features; `None` means every table feature.
    pub features: Option<Vec<String>>,
    /// Budget for each bounding call on the first visit of a model.
    pub first_pass_budget: Budget,
    /// Budget multiplier per re-estimation pass.
    pub budget_growth: u32,
    /// Maximum number of re-estimation passes.
    pub max_passes: u32,
    /// Worker threads for per-sample fan-out; 0 picks the rayon default.
    /// State evaluations stay sequential so counters and traces are
    /// reproducible across worker counts.
    pub workers: usize,
    pub tie_break: TieBreak,
    /// Carried into artifacts for reproducibility; the search itself draws
    /// no randomness.
    pub seed: u64,
    /// Record pruned states so tests can replay their subtrees.
    pub record_pruned: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            features: None,
            first_pass_budget: Budget::work(1000 * WORK_UNITS_PER_MS),
            budget_growth: 4,
            max_passes: 16,
            workers: 1,
            tie_break: TieBreak::default(),
            seed: 0,
            record_pruned: false,
        }
    }
}

/// A node of the prefix branching tree: a model plus the first feature
/// position children may add.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchState {
    pub model: Model,
    pub next_index: usize,
}

/// The union of every model reachable from `state`: its own model plus all
/// atomic features at positions from `next_index` on.
pub fn reachable_union(state: &SearchState, feature_order: &[String]) -> Model {
    let mut model = state.model.clone();
    for name in &feature_order[state.next_index.min(feature_order.len())..] {
        model = model.with(FeatureSet::atomic(name.clone()));
    }
    model
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Prune,
    Expand,
}

#[derive(Debug, Clone, Serialize)]
pub struct TracePoint {
    /// Deterministic pseudo-time: bounding work spent so far, scaled by
    /// [`WORK_UNITS_PER_MS`].
    pub elapsed_ms: u64,
    pub best_score_log2: f64,
    pub model: Model,
}

#[derive(Debug, Clone, Serialize)]
pub struct PrunedState {
    pub state: SearchState,
    pub best_at_prune: f64,
}

/// Outcome of a discovery run. The best score is exact at termination; the
/// trace's best-score sequence is nondecreasing.
#[derive(Debug, Clone, Serialize)]
pub struct DiscoveryResult {
    pub best_model: Model,
    pub best_score: LogScore,
    pub trace: Vec<TracePoint>,
    pub visited: u64,
    pub pruned: u64,
    pub reestimated: u64,
    pub discarded: u64,
    pub unresolved: u64,
    pub notes: Vec<String>,
    /// Populated only with [`SearchConfig::record_pruned`].
    pub pruned_states: Vec<PrunedState>,
}

struct QueuedModel {
    model: Model,
    score: LogScore,
}

/// Driver owning the incumbent, the frontier, and the re-estimation queue.
pub struct SearchEngine<'t, 'c> {
    cache: &'c RelationCache<'t>,
    samples: &'c [Observation],
    config: SearchConfig,
    feature_order: Vec<String>,
    best_model: Model,
    best_score: LogScore,
    /// Pruning bar: the largest achieved score lower bound. At least the
    /// incumbent's exact score, possibly above it while a queued interval
    /// is unresolved.
    prune_bar: f64,
    queue: VecDeque<QueuedModel>,
    trace: Vec<TracePoint>,
    visited: u64,
    pruned: u64,
    reestimated: u64,
    discarded: u64,
    virtual_work: u64,
    notes: Vec<String>,
    pruned_states: Vec<PrunedState>,
}

impl<'t, 'c> SearchEngine<'t, 'c> {
    pub fn new(
        cache: &'c RelationCache<'t>,
        samples: &'c [Observation],
        config: SearchConfig,
    ) -> Result<Self, SearchError> {
        if samples.is_empty() {
            return Err(ScoringError::NoSamples.into());
        }
        let table = cache.table();
        let candidates: Vec<String> = match &config.features {
            Some(explicit) => explicit.clone(),
            None => table.features().to_vec(),
        };
        if candidates.is_empty() {
            return Err(SearchError::NoCandidateFeatures);
        }
        let mut with_entropy: Vec<(String, f64)> = candidates
            .into_iter()
            .map(|name| {
                let eta = normalized_entropy(table, &FeatureSet::atomic(name.clone()))?;
                Ok((name, eta))
            })
            .collect::<Result<_, RelationError>>()?;
        // High-entropy features first; they are the likeliest to matter, so
        // early bounds get tight fast. Names break entropy ties.
        with_entropy.sort_by(|a, b| b.1.partial_cmp(&a.1).expect("finite").then(a.0.cmp(&b.0)));

        let mut notes = Vec::new();
        if with_entropy.iter().all(|(_, eta)| *eta == 0.0) {
            notes.push(
                "every candidate feature has zero entropy; only the empty model is viable"
                    .to_string(),
            );
        }
        let feature_order: Vec<String> = with_entropy.into_iter().map(|(name, _)| name).collect();

        let empty = Model::empty();
        let empty_score = score_model(cache, samples, &empty, &config.first_pass_budget)?;
        debug_assert!(empty_score.exact, "edgeless posets always bound exactly");
        let virtual_work = empty_score.work_used;
        let prune_bar = empty_score.score_lo;
        let trace = vec![TracePoint {
            elapsed_ms: virtual_work / WORK_UNITS_PER_MS,
            best_score_log2: empty_score.score_lo,
            model: empty.clone(),
        }];

        Ok(SearchEngine {
            cache,
            samples,
            config,
            feature_order,
            best_model: empty,
            best_score: empty_score,
            prune_bar,
            queue: VecDeque::new(),
            trace,
            visited: 0,
            pruned: 0,
            reestimated: 0,
            discarded: 0,
            virtual_work,
            notes,
            pruned_states: Vec::new(),
        })
    }

    pub fn feature_order(&self) -> &[String] {
        &self.feature_order
    }

    /// Runs the full search inside a worker pool of the configured size.
    pub fn run(self) -> Result<DiscoveryResult, SearchError> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.config.workers)
            .build()
            .map_err(|e| SearchError::Pool(e.to_string()))?;
        pool.install(|| self.run_inner())
    }

    fn run_inner(mut self) -> Result<DiscoveryResult, SearchError> {
        let mut frontier = VecDeque::new();
        frontier.push_back(SearchState {
            model: Model::empty(),
            next_index: 0,
        });
        while let Some(state) = frontier.pop_front() {
            if let Decision::Expand = self.expand_or_prune(&state)? {
                for j in state.next_index..self.feature_order.len() {
                    frontier.push_back(SearchState {
                        model: state
                            .model
                            .with(FeatureSet::atomic(self.feature_order[j].clone())),
                        next_index: j + 1,
                    });
                }
            }
        }

        let mut budget = self.config.first_pass_budget.clone();
        for _ in 0..self.config.max_passes {
            if self.queue.is_empty() {
                break;
            }
            budget = budget.scaled(self.config.budget_growth);
            self.reestimate_pass(&budget)?;
        }
        let unresolved = self.queue.len() as u64;
        if unresolved > 0 {
            self.notes.push(format!(
                "{unresolved} models still straddled the best score after {} re-estimation passes",
                self.config.max_passes
            ));
        }

        debug_assert!(self.best_score.exact);
        Ok(DiscoveryResult {
            best_model: self.best_model,
            best_score: self.best_score,
            trace: self.trace,
            visited: self.visited,
            pruned: self.pruned,
            reestimated: self.reestimated,
            discarded: self.discarded,
            unresolved,
            notes: self.notes,
            pruned_states: self.pruned_states,
        })
    }

    /// One branch-and-bound step. Prunes the whole subtree when even the
    /// most restrictive reachable poset cannot beat the incumbent; otherwise
    /// scores the state's own model and reports `Expand`.
    pub fn expand_or_prune(&mut self, state: &SearchState) -> Result<Decision, SearchError> {
        self.visited += 1;

        if self.mstar_bound(state)? < self.prune_bar {
            self.pruned += 1;
            if self.config.record_pruned {
                self.pruned_states.push(PrunedState {
                    state: state.clone(),
                    best_at_prune: self.prune_bar,
                });
            }
            return Ok(Decision::Prune);
        }

        let score = score_model(
            self.cache,
            self.samples,
            &state.model,
            &self.config.first_pass_budget,
        )?;
        self.virtual_work += score.work_used;
        self.consider(state.model.clone(), score);
        Ok(Decision::Expand)
    }

    /// Upper bound on the score of every model reachable from `state`: the
    /// state's prior (priors only shrink along branches) minus each sample's
    /// lower count bound for the reachable-union poset (counts only shrink
    /// as features are added).
    fn mstar_bound(&mut self, state: &SearchState) -> Result<f64, SearchError> {
        let prior = model_prior_unnormalized(self.cache.table(), &state.model)?;
        if prior == f64::NEG_INFINITY {
            return Ok(f64::NEG_INFINITY);
        }
        let mstar = reachable_union(state, &self.feature_order);
        self.cache.relations_for(&mstar)?;
        let budget = self.config.first_pass_budget.clone();
        let bounds: Vec<(f64, u64)> = self
            .samples
            .par_iter()
            .map(|obs| {
                let poset = build_poset(self.cache, obs, &mstar)?;
                let (bc, work) = bound_extensions_stats(&poset, &budget);
                Ok((bc.log2_lower, work))
            })
            .collect::<Result<_, SearchError>>()?;
        let mut bound = prior;
        for (lower, work) in bounds {
            bound -= lower;
            self.virtual_work += work;
        }
        Ok(bound)
    }

    /// Folds a scored model into the incumbent, the pruning bar, and the
    /// re-estimation queue.
    fn consider(&mut self, model: Model, score: LogScore) {
        if score.is_neg_infinite() {
            self.discarded += 1;
            return;
        }
        if score.exact {
            let s = score.score_lo;
            if s == self.best_score.score_lo && model == self.best_model {
                return; // incumbent re-scored
            }
            let wins = s > self.best_score.score_lo
                || (s == self.best_score.score_lo && self.prefers(&model));
            if s > self.prune_bar {
                self.prune_bar = s;
            }
            if wins {
                self.best_model = model;
                self.best_score = score;
                self.trace.push(TracePoint {
                    elapsed_ms: self.virtual_work / WORK_UNITS_PER_MS,
                    best_score_log2: self.best_score.score_lo,
                    model: self.best_model.clone(),
                });
            } else {
                self.discarded += 1;
            }
        } else if score.score_lo > self.prune_bar {
            // Provably better than everything achieved so far, but not yet
            // exact: raise the bar eagerly and revisit later.
            self.prune_bar = score.score_lo;
            self.queue.push_back(QueuedModel { model, score });
        } else if score.score_hi >= self.prune_bar {
            self.queue.push_back(QueuedModel { model, score });
        } else {
            self.discarded += 1;
        }
    }

    fn prefers(&self, candidate: &Model) -> bool {
        match self.config.tie_break {
            TieBreak::FewerSetsThenLex => {
                candidate.complexity_key() < self.best_model.complexity_key()
            }
            TieBreak::KeepFirst => false,
        }
    }

    /// Re-scores every queued model under `budget`. Items whose stored upper
    /// bound already sits below the bar are dismissed without recomputation;
    /// the rest resolve to incumbent/discard or stay queued with their
    /// tightened interval.
    pub fn reestimate_pass(&mut self, budget: &Budget) -> Result<(), SearchError> {
        let items = std::mem::take(&mut self.queue);
        for item in items {
            if item.score.score_hi < self.prune_bar {
                self.discarded += 1;
                continue;
            }
            self.reestimated += 1;
            let score = score_model(self.cache, self.samples, &item.model, budget)?;
            self.virtual_work += score.work_used;
            self.consider(item.model, score);
        }
        Ok(())
    }
}

/// Runs the branch-and-bound discovery end to end.
///
/// Starts from the empty model's exact score, explores breadth-first, then
/// drains the re-estimation queue with geometrically growing budgets. When
/// every candidate feature has zero entropy the empty model is returned with
/// a diagnostic note.
pub fn discover(
    table: &EventTable,
    samples: &[Observation],
    config: &SearchConfig,
) -> Result<DiscoveryResult, SearchError> {
    let cache = RelationCache::new(table);
    SearchEngine::new(&cache, samples, config.clone())?.run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event_model::{sample_observations, EventTable, SamplingScheme};
    use crate::oracle::{exact_score, exhaustive_best_model};
    use crate::testutil::tab3_table;
    use std::collections::BTreeSet;

    fn unbounded_config() -> SearchConfig {
        SearchConfig {
            first_pass_budget: Budget::unbounded(),
            ..SearchConfig::default()
        }
    }

    /// 16 events: an entity column interleaving four 4-chains, plus three
    /// noise columns with event-unique values.
    fn planted_table() -> EventTable {
        let ids: Vec<String> = (0..16).map(|i| format!("e{i}")).collect();
        let features = vec![
            "entity".to_string(),
            "noise_a".to_string(),
            "noise_b".to_string(),
            "noise_c".to_string(),
        ];
        let values = (0..16)
            .map(|i| {
                vec![
                    BTreeSet::from([format!("chain{}", i % 4)]),
                    BTreeSet::from([format!("a{i}")]),
                    BTreeSet::from([format!("b{i}")]),
                    BTreeSet::from([format!("c{i}")]),
                ]
            })
            .collect();
        EventTable::new(ids, features, values).unwrap()
    }

    #[test]
    fn reachable_union_examples() {
        let order: Vec<String> = ["f0", "f1", "f2", "f3"].map(String::from).to_vec();
        let root = SearchState {
            model: Model::empty(),
            next_index: 0,
        };
        assert_eq!(reachable_union(&root, &order), Model::atomic(order.clone()));

        let leaf = SearchState {
            model: Model::atomic(["f1"]),
            next_index: 4,
        };
        assert_eq!(reachable_union(&leaf, &order), Model::atomic(["f1"]));

        let mid = SearchState {
            model: Model::atomic(["f1"]),
            next_index: 2,
        };
        assert_eq!(
            reachable_union(&mid, &order),
            Model::atomic(["f1", "f2", "f3"])
        );
    }

    #[test]
    fn tab3_discover_matches_exhaustive_oracle() {
        let table = tab3_table();
        let samples = vec![Observation::new(&table, (0..8).collect()).unwrap()];
        let result = discover(&table, &samples, &unbounded_config()).unwrap();
        assert!(result.best_score.exact);

        let features: Vec<String> = table.features().to_vec();
        let (oracle_model, oracle_score) =
            exhaustive_best_model(&table, &samples, &features).unwrap();
        assert!(
            (result.best_score.score_lo - oracle_score).abs() < 1e-9,
            "search {} vs oracle {}",
            result.best_score.score_lo,
            oracle_score
        );
        assert_eq!(result.best_model, oracle_model);
    }

    #[test]
    fn zero_entropy_candidate_returns_empty_model_with_note() {
        let table = tab3_table();
        let samples = vec![Observation::new(&table, (0..8).collect()).unwrap()];
        let config = SearchConfig {
            features: Some(vec!["X1".to_string()]),
            first_pass_budget: Budget::unbounded(),
            ..SearchConfig::default()
        };
        let result = discover(&table, &samples, &config).unwrap();
        assert!(result.best_model.is_empty());
        assert!(!result.notes.is_empty());
        assert!(result.pruned >= 1, "the degenerate subtree is pruned");
    }

    #[test]
    fn planted_entity_is_discovered() {
        let table = planted_table();
        let samples = sample_observations(&table, 2, 8, 11, SamplingScheme::Partition).unwrap();
        let features: Vec<String> = table.features().to_vec();

        // The planted model must be the true argmax before the assertion
        // against the search means anything.
        let (oracle_model, oracle_score) =
            exhaustive_best_model(&table, &samples, &features).unwrap();
        assert!(oracle_model.contains(&FeatureSet::atomic("entity")));

        let result = discover(&table, &samples, &unbounded_config()).unwrap();
        assert!(result.best_model.contains(&FeatureSet::atomic("entity")));
        assert!((result.best_score.score_lo - oracle_score).abs() < 1e-9);
    }

    #[test]
    fn trace_is_nondecreasing_and_ends_at_best() {
        let table = planted_table();
        let samples = sample_observations(&table, 2, 8, 3, SamplingScheme::Partition).unwrap();
        let result = discover(&table, &samples, &unbounded_config()).unwrap();
        for pair in result.trace.windows(2) {
            assert!(pair[0].best_score_log2 <= pair[1].best_score_log2);
        }
        let last = result.trace.last().unwrap();
        assert_eq!(last.best_score_log2, result.best_score.score_lo);
        assert_eq!(last.model, result.best_model);
    }

    #[test]
    fn results_identical_across_worker_counts() {
        let table = planted_table();
        let samples = sample_observations(&table, 2, 8, 5, SamplingScheme::Partition).unwrap();
        let run = |workers: usize| {
            let config = SearchConfig {
                workers,
                first_pass_budget: Budget::work(200),
                ..SearchConfig::default()
            };
            discover(&table, &samples, &config).unwrap()
        };
        let a = run(1);
        let b = run(4);
        assert_eq!(a.best_model, b.best_model);
        assert_eq!(a.best_score.score_lo, b.best_score.score_lo);
        assert_eq!(a.visited, b.visited);
        assert_eq!(a.pruned, b.pruned);
        assert_eq!(a.reestimated, b.reestimated);
        assert_eq!(
            a.trace.iter().map(|t| t.elapsed_ms).collect::<Vec<_>>(),
            b.trace.iter().map(|t| t.elapsed_ms).collect::<Vec<_>>()
        );
    }

    #[test]
    fn budgeted_run_matches_unbounded_argmax() {
        let table = planted_table();
        let samples = sample_observations(&table, 2, 8, 9, SamplingScheme::Partition).unwrap();
        let unbounded = discover(&table, &samples, &unbounded_config()).unwrap();
        let budgeted = discover(
            &table,
            &samples,
            &SearchConfig {
                first_pass_budget: Budget::work(50),
                ..SearchConfig::default()
            },
        )
        .unwrap();
        assert_eq!(unbounded.best_model, budgeted.best_model);
        assert!((unbounded.best_score.score_lo - budgeted.best_score.score_lo).abs() < 1e-9);
    }

    #[test]
    fn mstar_prune_predicate_matches_exact_counts() {
        // State {X3} with only X4 left to add: the subtree bound is the
        // prior of {X3} minus the exact count of the {X3, X4} poset (two
        // 3-chains and two free events: 8!/(3!*3!) = 1120 extensions),
        // which still beats the empty-model score, so the state survives.
        use crate::extcount::log2_factorial;
        use crate::poset::count_extensions_exact;
        use crate::scoring::normalized_entropy;

        let table = tab3_table();
        let cache = RelationCache::new(&table);
        let samples = vec![Observation::new(&table, (0..8).collect()).unwrap()];
        let order: Vec<String> = vec!["X3".to_string(), "X4".to_string()];
        let state = SearchState {
            model: Model::atomic(["X3"]),
            next_index: 1,
        };

        let mstar = reachable_union(&state, &order);
        assert_eq!(mstar, Model::atomic(["X3", "X4"]));
        let poset = build_poset(&cache, &samples[0], &mstar).unwrap();
        let count = count_extensions_exact(&poset).unwrap();
        assert_eq!(count, 1120u32.into());

        let prior = model_prior_unnormalized(&table, &state.model).unwrap();
        let eta3 = normalized_entropy(&table, &FeatureSet::atomic("X3")).unwrap();
        assert!((prior - eta3.log2()).abs() < 1e-12);
        let bound = prior - 1120f64.log2();
        let empty_score = -log2_factorial(8);
        assert!(
            bound > empty_score,
            "subtree can still beat the empty model: {bound} vs {empty_score}"
        );

        // The search agrees: with these two candidates nothing is pruned.
        let config = SearchConfig {
            features: Some(order),
            first_pass_budget: Budget::unbounded(),
            record_pruned: true,
            ..SearchConfig::default()
        };
        let result = discover(&table, &samples, &config).unwrap();
        assert_eq!(result.pruned, 0);
        assert_eq!(result.visited, 4);
    }

    #[test]
    fn reestimation_queue_resolves_straddlers() {
        // Ten events; "entity" interleaves two 5-chains, "weak" pairs
        // consecutive events. Two work units per bounding call leave both
        // models with straddling intervals on the first visit, so both go
        // through the re-estimation queue before the search can settle.
        let ids: Vec<String> = (0..10).map(|i| format!("e{i}")).collect();
        let values = (0..10)
            .map(|i| {
                vec![
                    BTreeSet::from([format!("g{}", i % 2)]),
                    BTreeSet::from([format!("w{}", i / 2)]),
                ]
            })
            .collect();
        let table =
            EventTable::new(ids, vec!["entity".to_string(), "weak".to_string()], values).unwrap();
        let samples = vec![Observation::new(&table, (0..10).collect()).unwrap()];

        let budgeted = discover(
            &table,
            &samples,
            &SearchConfig {
                first_pass_budget: Budget::work(2),
                ..SearchConfig::default()
            },
        )
        .unwrap();
        assert!(
            budgeted.reestimated > 0,
            "tiny budgets must route through the queue: {budgeted:?}"
        );
        assert_eq!(budgeted.unresolved, 0);
        assert!(budgeted.best_score.exact);

        let exact = discover(&table, &samples, &unbounded_config()).unwrap();
        assert_eq!(budgeted.best_model, exact.best_model);
        assert!(budgeted.best_model.contains(&FeatureSet::atomic("entity")));
        assert!((budgeted.best_score.score_lo - exact.best_score.score_lo).abs() < 1e-9);
    }

    #[test]
    fn pruned_subtrees_contain_no_better_model() {
        let table = planted_table();
        let samples = sample_observations(&table, 1, 8, 2, SamplingScheme::Partition).unwrap();
        let cache = RelationCache::new(&table);
        let config = SearchConfig {
            first_pass_budget: Budget::unbounded(),
            record_pruned: true,
            ..SearchConfig::default()
        };
        let engine = SearchEngine::new(&cache, &samples, config).unwrap();
        let order = engine.feature_order().to_vec();
        let result = engine.run().unwrap();

        assert!(result.pruned > 0, "expect pruning on this instance");
        for pruned in &result.pruned_states {
            // Enumerate every descendant model of the pruned state.
            let tail = &order[pruned.state.next_index..];
            for mask in 0u32..1 << tail.len() {
                let mut model = pruned.state.model.clone();
                for (i, name) in tail.iter().enumerate() {
                    if mask >> i & 1 == 1 {
                        model = model.with(FeatureSet::atomic(name.clone()));
                    }
                }
                let score = exact_score(&cache, &samples, &model).unwrap();
                assert!(
                    score <= pruned.best_at_prune + 1e-9,
                    "pruned descendant {model} scores {score} above bar {}",
                    pruned.best_at_prune
                );
            }
        }
    }
}
