//! Domain types: activities, traces, logs, process models, process trees,
//! directly-follows graphs, footprints and eventually-follows relations.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("activity label is empty after normalization")]
    EmptyLabel,
    #[error("edge ({from}, {to}) references an activity outside the graph")]
    DanglingEdge { from: String, to: String },
    #[error("{operator} node needs at least {required} children, found {found}")]
    Arity {
        operator: Operator,
        required: usize,
        found: usize,
    },
    #[error("footprint relations are not mirror-consistent at ({x}, {y})")]
    InconsistentFootprint { x: String, y: String },
    #[error("footprint needs {expected} relations, got {found}")]
    FootprintShape { expected: usize, found: usize },
    #[error("model has {found} distinct activities, at least 2 are required")]
    TooFewActivities { found: usize },
    #[error("model language contains no non-empty sequence")]
    EmptyLanguage,
}

/// A normalized activity label.
///
/// Labels are trimmed and internal whitespace runs are collapsed to a single
/// space. Case is preserved; [`Activity::folded`] gives the case-insensitive key.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Activity(Arc<str>);

impl Activity {
    pub fn new(raw: &str) -> Result<Self, ModelError> {
        normalize_label(raw)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Case-insensitive comparison key.
    pub fn folded(&self) -> String {
        self.0.to_lowercase()
    }
}

/// Trims, collapses whitespace runs (including newlines) and rejects empty results.
pub fn normalize_label(raw: &str) -> Result<Activity, ModelError> {
    let mut out = String::with_capacity(raw.len());
    for word in raw.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    if out.is_empty() {
        return Err(ModelError::EmptyLabel);
    }
    Ok(Activity(Arc::from(out)))
}

impl fmt::Debug for Activity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

impl fmt::Display for Activity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Serialize for Activity {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for Activity {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        normalize_label(&raw).map_err(serde::de::Error::custom)
    }
}

/// An ordered sequence of executed activities. May be empty internally
/// (silent-only executions) but datasets never contain empty traces.
pub type Trace = Vec<Activity>;

/// Activities that occur in any of the given traces.
pub fn activities_of<'a, I>(traces: I) -> BTreeSet<Activity>
where
    I: IntoIterator<Item = &'a Trace>,
{
    traces.into_iter().flatten().cloned().collect()
}

/// A finite multiset of traces.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EventLog {
    traces: Vec<Trace>,
    activity_set: BTreeSet<Activity>,
}

impl EventLog {
    pub fn new(traces: Vec<Trace>) -> Self {
        let activity_set = activities_of(&traces);
        Self { traces, activity_set }
    }

    pub fn traces(&self) -> &[Trace] {
        &self.traces
    }

    pub fn activity_set(&self) -> &BTreeSet<Activity> {
        &self.activity_set
    }
}

/// The set of execution sequences a process allows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProcessModel {
    model_id: String,
    name: Option<String>,
    sequences: BTreeSet<Trace>,
    activity_set: BTreeSet<Activity>,
}

impl ProcessModel {
    /// Builds a model, enforcing the admission rules: at least one non-empty
    /// sequence and at least two distinct activities.
    pub fn new(
        model_id: impl Into<String>,
        name: Option<String>,
        sequences: BTreeSet<Trace>,
    ) -> Result<Self, ModelError> {
        if sequences.iter().all(|s| s.is_empty()) {
            return Err(ModelError::EmptyLanguage);
        }
        let activity_set = activities_of(&sequences);
        if activity_set.len() < 2 {
            return Err(ModelError::TooFewActivities {
                found: activity_set.len(),
            });
        }
        Ok(Self {
            model_id: model_id.into(),
            name,
            sequences,
            activity_set,
        })
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn sequences(&self) -> &BTreeSet<Trace> {
        &self.sequences
    }

    pub fn activity_set(&self) -> &BTreeSet<Activity> {
        &self.activity_set
    }

    /// Language membership.
    pub fn allows(&self, trace: &[Activity]) -> bool {
        self.sequences.contains(trace)
    }

    /// True when a silent-only execution is part of the language.
    pub fn accepts_empty(&self) -> bool {
        self.sequences.iter().next().is_some_and(|s| s.is_empty())
    }

    /// Sequences with at least one event, in canonical order.
    pub fn non_empty_sequences(&self) -> impl Iterator<Item = &Trace> {
        self.sequences.iter().filter(|s| !s.is_empty())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Operator {
    Sequence,
    Xor,
    Parallel,
    Loop,
}

impl Operator {
    pub fn min_arity(self) -> usize {
        match self {
            Operator::Loop => 2,
            _ => 1,
        }
    }

    /// ASCII token used by the tree notation.
    pub fn token(self) -> &'static str {
        match self {
            Operator::Sequence => "->",
            Operator::Xor => "X",
            Operator::Parallel => "+",
            Operator::Loop => "*",
        }
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Operator::Sequence => "sequence",
            Operator::Xor => "exclusive choice",
            Operator::Parallel => "parallel",
            Operator::Loop => "loop",
        })
    }
}

/// Hierarchical process model over sequence, choice, parallel and loop operators.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ProcessTree {
    Leaf(Activity),
    Silent,
    Node(Operator, Vec<ProcessTree>),
}

impl ProcessTree {
    pub fn leaf(label: &str) -> Result<Self, ModelError> {
        Ok(ProcessTree::Leaf(Activity::new(label)?))
    }

    /// Operator node with arity checking.
    pub fn node(operator: Operator, children: Vec<ProcessTree>) -> Result<Self, ModelError> {
        if children.len() < operator.min_arity() {
            return Err(ModelError::Arity {
                operator,
                required: operator.min_arity(),
                found: children.len(),
            });
        }
        Ok(ProcessTree::Node(operator, children))
    }

    /// Checks arity of every operator node.
    pub fn validate(&self) -> Result<(), ModelError> {
        match self {
            ProcessTree::Leaf(_) | ProcessTree::Silent => Ok(()),
            ProcessTree::Node(op, children) => {
                if children.len() < op.min_arity() {
                    return Err(ModelError::Arity {
                        operator: *op,
                        required: op.min_arity(),
                        found: children.len(),
                    });
                }
                children.iter().try_for_each(ProcessTree::validate)
            }
        }
    }

    /// Leaf activities in left-to-right order.
    pub fn leaves(&self) -> Vec<&Activity> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a Activity>) {
        match self {
            ProcessTree::Leaf(a) => out.push(a),
            ProcessTree::Silent => {}
            ProcessTree::Node(_, children) => {
                for c in children {
                    c.collect_leaves(out);
                }
            }
        }
    }

    /// Labels used by more than one leaf.
    pub fn duplicate_labels(&self) -> Vec<Activity> {
        let mut counts: BTreeMap<&Activity, usize> = BTreeMap::new();
        for a in self.leaves() {
            *counts.entry(a).or_default() += 1;
        }
        counts
            .into_iter()
            .filter(|&(_, n)| n > 1)
            .map(|(a, _)| a.clone())
            .collect()
    }

    pub fn depth(&self) -> usize {
        match self {
            ProcessTree::Leaf(_) | ProcessTree::Silent => 1,
            ProcessTree::Node(_, children) => 1 + children.iter().map(ProcessTree::depth).max().unwrap_or(0),
        }
    }
}

/// Directly-follows graph: activities and directly-follows edges.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Dfg {
    activities: BTreeSet<Activity>,
    edges: BTreeSet<(Activity, Activity)>,
}

impl Dfg {
    pub fn new(activities: BTreeSet<Activity>, edges: BTreeSet<(Activity, Activity)>) -> Result<Self, ModelError> {
        if let Some((x, y)) = edges
            .iter()
            .find(|(x, y)| !activities.contains(x) || !activities.contains(y))
        {
            return Err(ModelError::DanglingEdge {
                from: x.to_string(),
                to: y.to_string(),
            });
        }
        Ok(Self { activities, edges })
    }

    /// Graph whose activity set is exactly the edge endpoints.
    pub fn from_edges(edges: BTreeSet<(Activity, Activity)>) -> Self {
        let activities = edges.iter().flat_map(|(x, y)| [x.clone(), y.clone()]).collect();
        Self { activities, edges }
    }

    pub fn activities(&self) -> &BTreeSet<Activity> {
        &self.activities
    }

    pub fn edges(&self) -> &BTreeSet<(Activity, Activity)> {
        &self.edges
    }

    pub fn has_edge(&self, x: &Activity, y: &Activity) -> bool {
        self.edges.contains(&(x.clone(), y.clone()))
    }
}

/// Behavioral relation between an ordered pair of activities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Relation {
    /// `x -> y`: x directly precedes y, never the reverse.
    Forward,
    /// `x <- y`
    Backward,
    /// `x || y`: both orders observed.
    Parallel,
    /// `x # y`: neither order observed.
    Unrelated,
}

impl Relation {
    pub const ALL: [Relation; 4] = [
        Relation::Forward,
        Relation::Backward,
        Relation::Parallel,
        Relation::Unrelated,
    ];

    /// Relation seen from the other side of the pair.
    pub fn mirrored(self) -> Relation {
        match self {
            Relation::Forward => Relation::Backward,
            Relation::Backward => Relation::Forward,
            other => other,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Forward => "->",
            Relation::Backward => "<-",
            Relation::Parallel => "||",
            Relation::Unrelated => "#",
        }
    }
}

/// Total map from `A x A` to [`Relation`], stored as a dense row-major matrix
/// over the sorted activity list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Footprint {
    activities: Vec<Activity>,
    relations: Vec<Relation>,
}

impl Footprint {
    /// Builds a footprint from a row-major relation matrix, checking mirror
    /// consistency and that diagonal entries are parallel or unrelated.
    pub fn from_matrix(activities: &BTreeSet<Activity>, relations: Vec<Relation>) -> Result<Self, ModelError> {
        let activities: Vec<Activity> = activities.iter().cloned().collect();
        let n = activities.len();
        if relations.len() != n * n {
            return Err(ModelError::FootprintShape {
                expected: n * n,
                found: relations.len(),
            });
        }
        for i in 0..n {
            for j in i..n {
                let r = relations[i * n + j];
                let consistent = if i == j {
                    matches!(r, Relation::Parallel | Relation::Unrelated)
                } else {
                    relations[j * n + i] == r.mirrored()
                };
                if !consistent {
                    return Err(ModelError::InconsistentFootprint {
                        x: activities[i].to_string(),
                        y: activities[j].to_string(),
                    });
                }
            }
        }
        Ok(Self { activities, relations })
    }

    pub fn activities(&self) -> &[Activity] {
        &self.activities
    }

    fn index(&self, a: &Activity) -> Option<usize> {
        self.activities.binary_search(a).ok()
    }

    /// Relation for `(x, y)`, `None` when either activity is outside the footprint.
    pub fn get(&self, x: &Activity, y: &Activity) -> Option<Relation> {
        let (i, j) = (self.index(x)?, self.index(y)?);
        Some(self.relations[i * self.activities.len() + j])
    }

    /// All `(x, y, relation)` entries, row-major.
    pub fn iter(&self) -> impl Iterator<Item = (&Activity, &Activity, Relation)> + '_ {
        let n = self.activities.len();
        self.relations
            .iter()
            .enumerate()
            .map(move |(k, &r)| (&self.activities[k / n], &self.activities[k % n], r))
    }

    pub fn len(&self) -> usize {
        self.relations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relations.is_empty()
    }
}

/// Ordered pairs `(x, y)` such that y occurs somewhere after x in a sequence.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EventuallyFollows {
    pairs: BTreeSet<(Activity, Activity)>,
}

impl EventuallyFollows {
    pub fn new(pairs: BTreeSet<(Activity, Activity)>) -> Self {
        Self { pairs }
    }

    pub fn pairs(&self) -> &BTreeSet<(Activity, Activity)> {
        &self.pairs
    }

    pub fn contains(&self, x: &Activity, y: &Activity) -> bool {
        self.pairs.contains(&(x.clone(), y.clone()))
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}
