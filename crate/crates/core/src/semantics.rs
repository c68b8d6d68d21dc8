//! Play-out of process trees into finite languages, and the behavioral
//! relations derived from a language: directly-follows graphs, footprints and
//! eventually-follows pairs.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::model::{
    activities_of, Activity, Dfg, EventLog, EventuallyFollows, Footprint, ModelError, Operator, ProcessModel,
    ProcessTree, Relation, Trace,
};

/// Default play-out cap. The largest language in the reference corpus has
/// 10,080 sequences.
pub const DEFAULT_MAX_SEQUENCES: usize = 32_768;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlayoutError {
    #[error("language exceeds {limit} sequences")]
    LanguageTooLarge { limit: usize },
    #[error(transparent)]
    InvalidTree(#[from] ModelError),
}

/// The finite set of visible activity sequences of a tree, with every loop
/// iterated at most once.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Language {
    sequences: BTreeSet<Trace>,
}

impl Language {
    pub fn sequences(&self) -> &BTreeSet<Trace> {
        &self.sequences
    }

    pub fn into_sequences(self) -> BTreeSet<Trace> {
        self.sequences
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    /// The silent-only execution is part of the language.
    pub fn contains_empty(&self) -> bool {
        self.sequences.iter().next().is_some_and(|s| s.is_empty())
    }

    /// Every execution is silent.
    pub fn is_empty_only(&self) -> bool {
        self.sequences.iter().all(|s| s.is_empty())
    }

    pub fn activities(&self) -> BTreeSet<Activity> {
        activities_of(&self.sequences)
    }

    pub fn into_model(self, model_id: impl Into<String>, name: Option<String>) -> Result<ProcessModel, ModelError> {
        ProcessModel::new(model_id, name, self.sequences)
    }
}

type Seqs = BTreeSet<Trace>;

struct Bounded {
    limit: usize,
}

impl Bounded {
    fn insert(&self, set: &mut Seqs, seq: Trace) -> Result<(), PlayoutError> {
        set.insert(seq);
        if set.len() > self.limit {
            return Err(PlayoutError::LanguageTooLarge { limit: self.limit });
        }
        Ok(())
    }

    fn concat(&self, left: &Seqs, right: &Seqs) -> Result<Seqs, PlayoutError> {
        let mut out = Seqs::new();
        for u in left {
            for v in right {
                let mut s = Vec::with_capacity(u.len() + v.len());
                s.extend_from_slice(u);
                s.extend_from_slice(v);
                self.insert(&mut out, s)?;
            }
        }
        Ok(out)
    }

    fn shuffle(&self, left: &Seqs, right: &Seqs) -> Result<Seqs, PlayoutError> {
        let mut out = Seqs::new();
        let mut buf = Vec::new();
        for u in left {
            for v in right {
                self.interleave(u, v, &mut buf, &mut out)?;
            }
        }
        Ok(out)
    }

    fn interleave(&self, u: &[Activity], v: &[Activity], buf: &mut Trace, out: &mut Seqs) -> Result<(), PlayoutError> {
        if u.is_empty() || v.is_empty() {
            let mark = buf.len();
            buf.extend_from_slice(u);
            buf.extend_from_slice(v);
            let r = self.insert(out, buf.clone());
            buf.truncate(mark);
            return r;
        }
        buf.push(u[0].clone());
        let r = self.interleave(&u[1..], v, buf, out);
        buf.pop();
        r?;
        buf.push(v[0].clone());
        let r = self.interleave(u, &v[1..], buf, out);
        buf.pop();
        r
    }

    fn language(&self, tree: &ProcessTree) -> Result<Seqs, PlayoutError> {
        match tree {
            ProcessTree::Leaf(a) => Ok(Seqs::from([vec![a.clone()]])),
            ProcessTree::Silent => Ok(Seqs::from([Vec::new()])),
            ProcessTree::Node(op, children) => {
                if children.len() < op.min_arity() {
                    return Err(ModelError::Arity {
                        operator: *op,
                        required: op.min_arity(),
                        found: children.len(),
                    }
                    .into());
                }
                let langs = children
                    .iter()
                    .map(|c| self.language(c))
                    .collect::<Result<Vec<_>, _>>()?;
                match op {
                    Operator::Sequence => {
                        let mut acc = Seqs::from([Vec::new()]);
                        for l in &langs {
                            acc = self.concat(&acc, l)?;
                        }
                        Ok(acc)
                    }
                    Operator::Xor => {
                        let mut acc = Seqs::new();
                        for l in langs {
                            for s in l {
                                self.insert(&mut acc, s)?;
                            }
                        }
                        Ok(acc)
                    }
                    Operator::Parallel => {
                        let mut acc = Seqs::from([Vec::new()]);
                        for l in &langs {
                            acc = self.shuffle(&acc, l)?;
                        }
                        Ok(acc)
                    }
                    Operator::Loop => {
                        // Body alone, or body . one redo child . body.
                        let (body, redos) = langs.split_first().expect("arity checked");
                        let mut acc = body.clone();
                        for redo in redos {
                            for u in body {
                                for v in redo {
                                    for w in body {
                                        let mut s = Vec::with_capacity(u.len() + v.len() + w.len());
                                        s.extend_from_slice(u);
                                        s.extend_from_slice(v);
                                        s.extend_from_slice(w);
                                        self.insert(&mut acc, s)?;
                                    }
                                }
                            }
                        }
                        Ok(acc)
                    }
                }
            }
        }
    }
}

/// Enumerates the language of `tree`, failing once more than `max_sequences`
/// distinct sequences are produced. Sequences that differ only in silent steps
/// collapse to one visible sequence.
pub fn playout(tree: &ProcessTree, max_sequences: usize) -> Result<Language, PlayoutError> {
    let sequences = Bounded {
        limit: max_sequences.max(1),
    }
    .language(tree)?;
    Ok(Language { sequences })
}

/// DFG over the union of activities in `traces`.
pub fn dfg_of_traces<'a, I>(traces: I) -> Dfg
where
    I: IntoIterator<Item = &'a Trace>,
{
    let mut activities = BTreeSet::new();
    let mut edges = BTreeSet::new();
    for t in traces {
        activities.extend(t.iter().cloned());
        for w in t.windows(2) {
            edges.insert((w[0].clone(), w[1].clone()));
        }
    }
    Dfg::new(activities, edges).expect("edge endpoints come from the traces")
}

pub fn dfg_of_model(model: &ProcessModel) -> Dfg {
    dfg_of_traces(model.sequences())
}

/// Presence-only: trace frequencies in the log do not matter.
pub fn dfg_of_log(log: &EventLog) -> Dfg {
    dfg_of_traces(log.traces())
}

pub fn relation(dfg: &Dfg, x: &Activity, y: &Activity) -> Relation {
    match (dfg.has_edge(x, y), dfg.has_edge(y, x)) {
        (true, false) => Relation::Forward,
        (false, true) => Relation::Backward,
        (true, true) => Relation::Parallel,
        (false, false) => Relation::Unrelated,
    }
}

pub fn footprint(dfg: &Dfg) -> Footprint {
    let acts = dfg.activities();
    let mut relations = Vec::with_capacity(acts.len() * acts.len());
    for x in acts {
        for y in acts {
            relations.push(relation(dfg, x, y));
        }
    }
    Footprint::from_matrix(acts, relations).expect("relations derived from one edge set are consistent")
}

/// The DFG whose footprint is `fp`: forward and parallel entries become edges.
pub fn dfg_of_footprint(fp: &Footprint) -> Dfg {
    let edges = fp
        .iter()
        .filter(|(_, _, r)| matches!(r, Relation::Forward | Relation::Parallel))
        .map(|(x, y, _)| (x.clone(), y.clone()))
        .collect();
    Dfg::new(fp.activities().iter().cloned().collect(), edges).expect("footprint entries are over its own activities")
}

pub fn eventually_follows_of_traces<'a, I>(traces: I) -> EventuallyFollows
where
    I: IntoIterator<Item = &'a Trace>,
{
    let mut pairs = BTreeSet::new();
    for t in traces {
        for (i, x) in t.iter().enumerate() {
            for y in &t[i + 1..] {
                pairs.insert((x.clone(), y.clone()));
            }
        }
    }
    EventuallyFollows::new(pairs)
}

pub fn eventually_follows(model: &ProcessModel) -> EventuallyFollows {
    eventually_follows_of_traces(model.sequences())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree_dsl::parse_tree;

    fn act(s: &str) -> Activity {
        Activity::new(s).unwrap()
    }

    fn seq(items: &[&str]) -> Trace {
        items.iter().map(|s| act(s)).collect()
    }

    fn lang(text: &str) -> BTreeSet<Trace> {
        playout(&parse_tree(text).unwrap(), DEFAULT_MAX_SEQUENCES)
            .unwrap()
            .into_sequences()
    }

    fn pair(x: &str, y: &str) -> (Activity, Activity) {
        (act(x), act(y))
    }

    fn m1() -> ProcessModel {
        playout(
            &parse_tree("->('receive order', X(->('accept order', 'deliver package'), 'reject order'))").unwrap(),
            DEFAULT_MAX_SEQUENCES,
        )
        .unwrap()
        .into_model("m1", None)
        .unwrap()
    }

    #[test]
    fn order_example_language() {
        let expected: BTreeSet<Trace> = [
            seq(&["receive order", "accept order", "deliver package"]),
            seq(&["receive order", "reject order"]),
        ]
        .into_iter()
        .collect();
        assert_eq!(m1().sequences(), &expected);
    }

    #[test]
    fn parallel_two_leaves() {
        assert_eq!(lang("+('a','b')"), [seq(&["a", "b"]), seq(&["b", "a"])].into());
    }

    #[test]
    fn loop_once_at_most() {
        assert_eq!(lang("*('a','b')"), [seq(&["a"]), seq(&["a", "b", "a"])].into());
    }

    #[test]
    fn loop_with_two_redo_children_takes_one() {
        assert_eq!(
            lang("*('a','b','c')"),
            [seq(&["a"]), seq(&["a", "b", "a"]), seq(&["a", "c", "a"])].into()
        );
    }

    #[test]
    fn silent_steps_absorbed() {
        assert_eq!(lang("->('a', tau, 'b')"), [seq(&["a", "b"])].into());
        assert_eq!(lang("->('a', X('b', tau))"), [seq(&["a"]), seq(&["a", "b"])].into());
        let l = playout(&parse_tree("X(tau, 'a')").unwrap(), 10).unwrap();
        assert!(l.contains_empty());
        assert!(!l.is_empty_only());
        let only = playout(&parse_tree("->(tau, X(tau, tau))").unwrap(), 10).unwrap();
        assert!(only.is_empty_only());
        assert_eq!(only.len(), 1);
    }

    #[test]
    fn loop_with_silent_redo_duplicates_body() {
        assert_eq!(lang("*('a', tau)"), [seq(&["a"]), seq(&["a", "a"])].into());
    }

    #[test]
    fn overflow_reported() {
        let t = parse_tree("+('a','b','c','d')").unwrap();
        assert_eq!(playout(&t, 24).unwrap().len(), 24);
        assert_eq!(playout(&t, 23), Err(PlayoutError::LanguageTooLarge { limit: 23 }));
    }

    #[test]
    fn invalid_tree_rejected() {
        let t = ProcessTree::Node(Operator::Loop, vec![ProcessTree::Silent]);
        assert!(matches!(playout(&t, 10), Err(PlayoutError::InvalidTree(_))));
    }

    #[test]
    fn order_example_dfg() {
        let dfg = dfg_of_model(&m1());
        let expected: BTreeSet<_> = [
            pair("receive order", "accept order"),
            pair("accept order", "deliver package"),
            pair("receive order", "reject order"),
        ]
        .into();
        assert_eq!(dfg.edges(), &expected);
        assert_eq!(dfg.activities().len(), 4);
    }

    #[test]
    fn dfg_small_cases() {
        assert!(dfg_of_traces(&[seq(&["a"])]).edges().is_empty());
        let both = dfg_of_traces(&[seq(&["a", "b"]), seq(&["b", "a"])]);
        assert_eq!(both.edges(), &[pair("a", "b"), pair("b", "a")].into());
    }

    #[test]
    fn log_dfg_example() {
        let log = EventLog::new(vec![
            seq(&["receive order", "accept order", "deliver package"]),
            seq(&["receive order", "reject order"]),
            seq(&["receive order", "deliver package"]),
        ]);
        let expected: BTreeSet<_> = [
            pair("receive order", "accept order"),
            pair("accept order", "deliver package"),
            pair("receive order", "reject order"),
            pair("receive order", "deliver package"),
        ]
        .into();
        assert_eq!(dfg_of_log(&log).edges(), &expected);
        assert_eq!(dfg_of_log(&EventLog::default()), Dfg::default());
        let dup = EventLog::new(vec![seq(&["a", "b"]), seq(&["a", "b"])]);
        assert_eq!(dfg_of_log(&dup), dfg_of_traces(&[seq(&["a", "b"])]));
    }

    #[test]
    fn order_example_footprint() {
        let fp = footprint(&dfg_of_model(&m1()));
        assert_eq!(fp.len(), 16);
        let forward = [
            ("receive order", "accept order"),
            ("receive order", "reject order"),
            ("accept order", "deliver package"),
        ];
        for (x, y, r) in fp.iter() {
            let expected = if forward.contains(&(x.as_str(), y.as_str())) {
                Relation::Forward
            } else if forward.contains(&(y.as_str(), x.as_str())) {
                Relation::Backward
            } else {
                Relation::Unrelated
            };
            assert_eq!(r, expected, "({x}, {y})");
        }
    }

    #[test]
    fn footprint_small_cases() {
        let acts: BTreeSet<_> = [act("a"), act("b")].into();
        let empty = Dfg::new(acts.clone(), BTreeSet::new()).unwrap();
        assert!(footprint(&empty).iter().all(|(_, _, r)| r == Relation::Unrelated));
        let par = Dfg::new(acts, [pair("a", "b"), pair("b", "a")].into()).unwrap();
        let fp = footprint(&par);
        assert_eq!(fp.get(&act("a"), &act("b")), Some(Relation::Parallel));
        assert_eq!(fp.get(&act("b"), &act("a")), Some(Relation::Parallel));
        assert_eq!(fp.get(&act("a"), &act("a")), Some(Relation::Unrelated));
    }

    #[test]
    fn footprint_dfg_round_trip() {
        let dfg = dfg_of_traces(&[seq(&["a", "b", "b", "c"]), seq(&["c", "b"])]);
        assert_eq!(dfg_of_footprint(&footprint(&dfg)), dfg);
    }

    #[test]
    fn order_example_eventually_follows() {
        let ef = eventually_follows(&m1());
        let expected: BTreeSet<_> = [
            pair("receive order", "accept order"),
            pair("receive order", "reject order"),
            pair("receive order", "deliver package"),
            pair("accept order", "deliver package"),
        ]
        .into();
        assert_eq!(ef.pairs(), &expected);
    }

    #[test]
    fn eventually_follows_small_cases() {
        assert!(eventually_follows_of_traces(&[seq(&["a"])]).is_empty());
        let ef = eventually_follows_of_traces(&[seq(&["a", "b", "a"])]);
        assert_eq!(ef.pairs(), &[pair("a", "b"), pair("b", "a"), pair("a", "a")].into());
    }
}
