//! Feature relations over events and the order-relation generator.
//!
//! An atomic feature relates two events when their value sets for that feature
//! intersect. A derived feature pair additionally relates events bridged by a
//! third atomic feature: `a ~fi b ~fj c ~fk d` with `b != c` (a may equal b
//! and d may equal c through reflexivity). The generator then keeps exactly
//! those pairs of an observed order that are also feature-related under some
//! member of a model, which is what turns a total order into the partial
//! order scored downstream.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::event_model::{EventTable, Observation};

/// Errors from relation construction and the generator.
#[derive(Debug, Error)]
pub enum RelationError {
    #[error("unknown feature {0:?}")]
    UnknownFeature(String),

    #[error("derived feature set needs two distinct features, got {0:?} twice")]
    DegenerateDerived(String),

    #[error("no relation supplied for feature set {0}")]
    MissingRelation(FeatureSet),
}

/// One or two feature names: atomic or derived.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FeatureSet {
    Atomic(String),
    /// Two distinct features, stored sorted.
    Derived(String, String),
}

impl FeatureSet {
    pub fn atomic(name: impl Into<String>) -> Self {
        FeatureSet::Atomic(name.into())
    }

    pub fn derived(a: impl Into<String>, b: impl Into<String>) -> Result<Self, RelationError> {
        let (a, b) = (a.into(), b.into());
        match a.cmp(&b) {
            std::cmp::Ordering::Less => Ok(FeatureSet::Derived(a, b)),
            std::cmp::Ordering::Greater => Ok(FeatureSet::Derived(b, a)),
            std::cmp::Ordering::Equal => Err(RelationError::DegenerateDerived(a)),
        }
    }

    /// Builds from a slice of 1 or 2 names; anything else is rejected.
    pub fn from_names(names: &[String]) -> Result<Self, RelationError> {
        match names {
            [a] => Ok(FeatureSet::atomic(a.clone())),
            [a, b] => FeatureSet::derived(a.clone(), b.clone()),
            _ => Err(RelationError::UnknownFeature(format!(
                "feature set must have 1 or 2 members, got {}",
                names.len()
            ))),
        }
    }

    pub fn names(&self) -> Vec<&str> {
        match self {
            FeatureSet::Atomic(a) => vec![a],
            FeatureSet::Derived(a, b) => vec![a, b],
        }
    }

    pub fn is_atomic(&self) -> bool {
        matches!(self, FeatureSet::Atomic(_))
    }
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureSet::Atomic(a) => write!(f, "{{{a}}}"),
            FeatureSet::Derived(a, b) => write!(f, "{{{a},{b}}}"),
        }
    }
}

/// A set of feature sets. The empty model is valid and maximally
/// unconstrained: it generates no order relations at all.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Model {
    feature_sets: BTreeSet<FeatureSet>,
}

impl Model {
    pub fn empty() -> Self {
        Model::default()
    }

    pub fn from_feature_sets(sets: impl IntoIterator<Item = FeatureSet>) -> Self {
        Model {
            feature_sets: sets.into_iter().collect(),
        }
    }

    /// Model of atomic features, one per name.
    pub fn atomic(names: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Model::from_feature_sets(names.into_iter().map(FeatureSet::atomic))
    }

    pub fn feature_sets(&self) -> impl Iterator<Item = &FeatureSet> {
        self.feature_sets.iter()
    }

    pub fn len(&self) -> usize {
        self.feature_sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.feature_sets.is_empty()
    }

    pub fn contains(&self, fs: &FeatureSet) -> bool {
        self.feature_sets.contains(fs)
    }

    pub fn with(&self, fs: FeatureSet) -> Self {
        let mut sets = self.feature_sets.clone();
        sets.insert(fs);
        Model { feature_sets: sets }
    }

    pub fn is_subset_of(&self, other: &Model) -> bool {
        self.feature_sets.is_subset(&other.feature_sets)
    }

    pub fn union(&self, other: &Model) -> Self {
        Model {
            feature_sets: self
                .feature_sets
                .union(&other.feature_sets)
                .cloned()
                .collect(),
        }
    }

    /// Tie-break key shared by the search and the exhaustive reference:
    /// fewer feature sets first, then lexicographic.
    pub fn complexity_key(&self) -> (usize, Vec<&FeatureSet>) {
        (self.feature_sets.len(), self.feature_sets.iter().collect())
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.feature_sets.is_empty() {
            return write!(f, "{{}}");
        }
        let parts: Vec<String> = self.feature_sets.iter().map(|fs| fs.to_string()).collect();
        write!(f, "{}", parts.join("+"))
    }
}

/// A symmetric relation over event indices of one table.
///
/// Pairs are stored as `(min, max)`; reflexive membership is tracked
/// separately and holds exactly for events whose relevant value sets are
/// nonempty (or that bridge back to themselves, for derived relations).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymmetricRelation {
    pairs: HashSet<(usize, usize)>,
    members: HashSet<usize>,
}

impl SymmetricRelation {
    fn new() -> Self {
        SymmetricRelation {
            pairs: HashSet::new(),
            members: HashSet::new(),
        }
    }

    fn insert(&mut self, a: usize, b: usize) {
        if a == b {
            self.members.insert(a);
        } else {
            self.pairs.insert((a.min(b), a.max(b)));
        }
    }

    /// Whether `a ~ b`, including the reflexive case `a == b`.
    pub fn relates(&self, a: usize, b: usize) -> bool {
        if a == b {
            self.members.contains(&a)
        } else {
            self.pairs.contains(&(a.min(b), a.max(b)))
        }
    }

    /// Distinct unordered pairs, excluding reflexive membership.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.pairs.iter().copied()
    }

    pub fn pair_count(&self) -> usize {
        self.pairs.len()
    }

    /// Events related to themselves.
    pub fn reflexive_members(&self) -> impl Iterator<Item = usize> + '_ {
        self.members.iter().copied()
    }

    pub fn is_member(&self, e: usize) -> bool {
        self.members.contains(&e)
    }

    /// Neighbors of `e` including `e` itself when reflexive. Used for the
    /// bridging step of derived relations.
    fn closed_neighbors(&self, n: usize) -> Vec<Vec<usize>> {
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &e in &self.members {
            adj[e].push(e);
        }
        for &(a, b) in &self.pairs {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }
}

/// Relation of a single feature: pairs of events whose value sets intersect.
///
/// Built from an inverted value-to-events index, so cost is the sum of
/// squared value-group sizes rather than a full pairwise scan.
pub fn atomic_relation(
    table: &EventTable,
    feature: &str,
) -> Result<SymmetricRelation, RelationError> {
    let col = table
        .feature_index(feature)
        .ok_or_else(|| RelationError::UnknownFeature(feature.to_string()))?;
    let mut by_value: HashMap<&str, Vec<usize>> = HashMap::new();
    let mut relation = SymmetricRelation::new();
    for e in 0..table.len() {
        let values = table.values(e, col);
        if !values.is_empty() {
            relation.members.insert(e);
        }
        for v in values {
            by_value.entry(v.as_str()).or_default().push(e);
        }
    }
    for group in by_value.values() {
        for (i, &a) in group.iter().enumerate() {
            for &b in &group[i + 1..] {
                relation.insert(a, b);
            }
        }
    }
    Ok(relation)
}

/// Relation of a feature pair: the union of both atomic relations plus all
/// pairs `(a, d)` bridged as `a ~fi b ~fj c ~fk d` by some third atomic
/// feature `fj` and events `b != c`.
///
/// Exactly one bridge is taken; the result is not closed under further
/// transitivity.
pub fn derived_relation(
    table: &EventTable,
    fi: &str,
    fk: &str,
) -> Result<SymmetricRelation, RelationError> {
    if fi == fk {
        return Err(RelationError::DegenerateDerived(fi.to_string()));
    }
    let rel_i = atomic_relation(table, fi)?;
    let rel_k = atomic_relation(table, fk)?;

    let mut relation = SymmetricRelation::new();
    relation.pairs.extend(&rel_i.pairs);
    relation.pairs.extend(&rel_k.pairs);
    relation.members.extend(&rel_i.members);
    relation.members.extend(&rel_k.members);

    let n = table.len();
    let adj_i = rel_i.closed_neighbors(n);
    let adj_k = rel_k.closed_neighbors(n);

    for bridge in table.features() {
        if bridge == fi || bridge == fk {
            continue;
        }
        let rel_j = atomic_relation(table, bridge)?;
        for (b, c) in rel_j.pairs() {
            // Both orientations of the unordered bridge pair.
            for (b, c) in [(b, c), (c, b)] {
                for &a in &adj_i[b] {
                    for &d in &adj_k[c] {
                        relation.insert(a, d);
                    }
                }
            }
        }
    }
    Ok(relation)
}

/// Computes the relation for any feature set against a table.
pub fn feature_relation(
    table: &EventTable,
    fs: &FeatureSet,
) -> Result<SymmetricRelation, RelationError> {
    match fs {
        FeatureSet::Atomic(f) => atomic_relation(table, f),
        FeatureSet::Derived(a, b) => derived_relation(table, a, b),
    }
}

/// Keeps the pairs of an observed order that are feature-related under some
/// member of `model`.
///
/// `order` lists event indices in their observed order; the result contains
/// `(a, b)` exactly when `a` strictly precedes `b` and `a ~X b` for some
/// `X` in the model. Reflexive members never yield pairs.
pub fn df_path_generator(
    order: &[usize],
    model: &Model,
    relations: &BTreeMap<FeatureSet, Arc<SymmetricRelation>>,
) -> Result<BTreeSet<(usize, usize)>, RelationError> {
    let rels: Vec<&SymmetricRelation> = model
        .feature_sets()
        .map(|fs| {
            relations
                .get(fs)
                .map(Arc::as_ref)
                .ok_or_else(|| RelationError::MissingRelation(fs.clone()))
        })
        .collect::<Result<_, _>>()?;

    let mut edges = BTreeSet::new();
    for (i, &a) in order.iter().enumerate() {
        for &b in &order[i + 1..] {
            if rels.iter().any(|r| r.relates(a, b)) {
                edges.insert((a, b));
            }
        }
    }
    Ok(edges)
}

/// Convenience wrapper taking an [`Observation`].
pub fn df_path_generator_obs(
    obs: &Observation,
    model: &Model,
    relations: &BTreeMap<FeatureSet, Arc<SymmetricRelation>>,
) -> Result<BTreeSet<(usize, usize)>, RelationError> {
    df_path_generator(obs.members(), model, relations)
}

/// Insert-or-get cache of relations for one table, keyed by feature set.
///
/// Safe for concurrent use; the search evaluates many models sharing feature
/// sets, so each relation is computed once.
pub struct RelationCache<'t> {
    table: &'t EventTable,
    inner: RwLock<HashMap<FeatureSet, Arc<SymmetricRelation>>>,
}

impl<'t> RelationCache<'t> {
    pub fn new(table: &'t EventTable) -> Self {
        RelationCache {
            table,
            inner: RwLock::new(HashMap::new()),
        }
    }

    pub fn table(&self) -> &'t EventTable {
        self.table
    }

    pub fn relation(&self, fs: &FeatureSet) -> Result<Arc<SymmetricRelation>, RelationError> {
        if let Some(rel) = self.inner.read().expect("cache lock").get(fs) {
            return Ok(Arc::clone(rel));
        }
        let computed = Arc::new(feature_relation(self.table, fs)?);
        let mut guard = self.inner.write().expect("cache lock");
        // Another worker may have raced us here; keep the first insert.
        Ok(Arc::clone(guard.entry(fs.clone()).or_insert(computed)))
    }

    /// Relations for every member of `model`.
    pub fn relations_for(
        &self,
        model: &Model,
    ) -> Result<BTreeMap<FeatureSet, Arc<SymmetricRelation>>, RelationError> {
        model
            .feature_sets()
            .map(|fs| Ok((fs.clone(), self.relation(fs)?)))
            .collect()
    }

    /// Generator output for an observation under `model`.
    pub fn generate(
        &self,
        obs: &Observation,
        model: &Model,
    ) -> Result<BTreeSet<(usize, usize)>, RelationError> {
        let relations = self.relations_for(model)?;
        df_path_generator(obs.members(), model, &relations)
    }
}
