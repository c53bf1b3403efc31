//! Brute-force reference implementations, for tests and `ekgd verify`.
//!
//! Nothing here is fast: extension counts come from enumerating every
//! permutation, and the best-model reference scores all 2^M atomic models
//! with exact counts. The point is independence from the decomposition and
//! search machinery they check.

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::event_model::{EventTable, Observation};
use crate::extcount::{bound_extensions, log2_biguint, Budget};
use crate::poset::{build_poset, count_extensions_exact, Poset, PosetError};
use crate::relations::{Model, RelationCache, RelationError};
use crate::scoring::model_prior_unnormalized;

/// Permutation enumeration is factorial; keep it at toy scale.
pub const BRUTE_FORCE_CEILING: usize = 8;

/// Exhaustive model scoring caps the model space at 2^6.
pub const EXHAUSTIVE_FEATURE_CEILING: usize = 6;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("{n} elements exceed the brute-force ceiling of {ceiling}")]
    TooLarge { n: usize, ceiling: usize },

    #[error("{n} candidate features exceed the exhaustive ceiling of {ceiling}")]
    TooManyFeatures { n: usize, ceiling: usize },

    #[error(transparent)]
    Poset(#[from] PosetError),

    #[error(transparent)]
    Relation(#[from] RelationError),
}

/// Counts linear extensions by checking every permutation against every edge.
pub fn brute_count_extensions(p: &Poset) -> Result<BigUint, OracleError> {
    let n = p.len();
    if n > BRUTE_FORCE_CEILING {
        return Err(OracleError::TooLarge {
            n,
            ceiling: BRUTE_FORCE_CEILING,
        });
    }
    let edges: Vec<(usize, usize)> = p.edges().collect();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut count = 0u64;
    permute(&mut perm, 0, &mut |perm| {
        let mut position = vec![0usize; n];
        for (pos, &v) in perm.iter().enumerate() {
            position[v] = pos;
        }
        if edges.iter().all(|&(a, b)| position[a] < position[b]) {
            count += 1;
        }
    });
    Ok(BigUint::from(count))
}

fn permute(items: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == items.len() {
        visit(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute(items, k + 1, visit);
        items.swap(k, i);
    }
}

/// Exact log2 posterior score of one model, using the downset-DP counter.
pub fn exact_score(
    cache: &RelationCache<'_>,
    samples: &[Observation],
    model: &Model,
) -> Result<f64, OracleError> {
    let prior = model_prior_unnormalized(cache.table(), model)?;
    if prior == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    let mut score = prior;
    for obs in samples {
        let poset = build_poset(cache, obs, model)?;
        score -= log2_biguint(&count_extensions_exact(&poset)?);
    }
    Ok(score)
}

/// The argmax over all 2^M atomic models, scored with exact counts and the
/// same tie-break as the search: higher score, then fewer feature sets, then
/// lexicographic.
pub fn exhaustive_best_model(
    table: &EventTable,
    samples: &[Observation],
    candidate_features: &[String],
) -> Result<(Model, f64), OracleError> {
    if candidate_features.len() > EXHAUSTIVE_FEATURE_CEILING {
        return Err(OracleError::TooManyFeatures {
            n: candidate_features.len(),
            ceiling: EXHAUSTIVE_FEATURE_CEILING,
        });
    }
    let cache = RelationCache::new(table);
    let mut best: Option<(Model, f64)> = None;
    for mask in 0u32..1 << candidate_features.len() {
        let model = Model::atomic(
            candidate_features
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, f)| f.clone()),
        );
        let score = exact_score(&cache, samples, &model)?;
        let better = match &best {
            None => true,
            Some((cur_model, cur_score)) => {
                score > *cur_score
                    || (score == *cur_score && model.complexity_key() < cur_model.complexity_key())
            }
        };
        if better {
            best = Some((model, score));
        }
    }
    Ok(best.expect("at least the empty model"))
}

/// One row of the verification suite.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleReport {
    pub instance: String,
    pub oracle_value: String,
    pub system_value: String,
    pub agree: bool,
    pub discrepancy: f64,
}

impl OracleReport {
    fn exact(instance: String, oracle: &BigUint, system: &BigUint) -> Self {
        OracleReport {
            instance,
            oracle_value: oracle.to_string(),
            system_value: system.to_string(),
            agree: oracle == system,
            discrepancy: (log2_biguint(oracle) - log2_biguint(system)).abs(),
        }
    }
}

/// Deterministic random poset on `n` elements: each forward pair becomes an
/// edge with probability `density`.
pub fn random_poset(n: usize, density: f64, seed: u64) -> Poset {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.random::<f64>() < density {
                edges.push((a, b));
            }
        }
    }
    Poset::new(n, edges).expect("forward edges are acyclic")
}

/// Small-instance agreement suite behind the CLI `verify` subcommand:
/// downset-DP counts against permutation enumeration, and decomposition
/// bounds against exact counts.
pub fn run_verification(trials: usize, seed: u64) -> Vec<OracleReport> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut reports = Vec::new();

    // Known values first.
    let known: [(&str, Poset, u64); 3] = [
        ("chain n=3", Poset::new(3, [(0, 1), (1, 2)]).unwrap(), 1),
        ("edgeless n=3", Poset::new(3, []).unwrap(), 6),
        (
            "N-poset {a<c, b<c, b<d}",
            Poset::new(4, [(0, 2), (1, 2), (1, 3)]).unwrap(),
            5,
        ),
    ];
    for (name, poset, expected) in known {
        let brute = brute_count_extensions(&poset).expect("small");
        reports.push(OracleReport::exact(
            format!("{name} (expected {expected})"),
            &BigUint::from(expected),
            &brute,
        ));
        let dp = count_extensions_exact(&poset).expect("small");
        reports.push(OracleReport::exact(
            format!("{name} dp-vs-brute"),
            &brute,
            &dp,
        ));
    }

    for trial in 0..trials {
        let n = rng.random_range(2..=BRUTE_FORCE_CEILING);
        let density: f64 = rng.random();
        let poset = random_poset(n, density, rng.random());
        let brute = brute_count_extensions(&poset).expect("within ceiling");
        let dp = count_extensions_exact(&poset).expect("within ceiling");
        reports.push(OracleReport::exact(
            format!("random poset #{trial} n={n} density={density:.2}"),
            &brute,
            &dp,
        ));

        let bounds = bound_extensions(&poset, &Budget::unbounded());
        let exact_log = log2_biguint(&dp);
        let sandwich =
            bounds.log2_lower <= exact_log + 1e-6 && exact_log <= bounds.log2_upper + 1e-6;
        let converged = bounds.exact && (bounds.log2_lower - exact_log).abs() <= 1e-6;
        reports.push(OracleReport {
            instance: format!("bounds #{trial} n={n} density={density:.2}"),
            oracle_value: format!("{exact_log:.6}"),
            system_value: format!("[{:.6}, {:.6}]", bounds.log2_lower, bounds.log2_upper),
            agree: sandwich && converged,
            discrepancy: (bounds.log2_lower - exact_log).abs(),
        });
    }
    reports
}
