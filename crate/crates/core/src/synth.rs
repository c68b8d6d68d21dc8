//! Seeded generator of random block-structured process trees with readable
//! activity labels, for desk-scale corpora.

use std::collections::{BTreeSet, HashSet};

use rand::distributions::WeightedIndex;
use rand::prelude::*;
use serde::{Deserialize, Serialize};

use crate::model::{Activity, Operator, ProcessTree};
use crate::seeding::stream_rng;
use crate::semantics::playout;
use crate::taskgen::CorpusEntry;

const VERBS: [&str; 24] = [
    "receive",
    "check",
    "approve",
    "reject",
    "register",
    "archive",
    "send",
    "prepare",
    "review",
    "sign",
    "validate",
    "ship",
    "pack",
    "notify",
    "schedule",
    "cancel",
    "calculate",
    "update",
    "create",
    "close",
    "assess",
    "forward",
    "file",
    "confirm",
];

const OBJECTS: [&str; 24] = [
    "order",
    "invoice",
    "claim",
    "application",
    "contract",
    "payment",
    "shipment",
    "request",
    "report",
    "ticket",
    "quote",
    "delivery",
    "account",
    "customer data",
    "purchase order",
    "refund",
    "complaint",
    "appointment",
    "document",
    "budget",
    "offer",
    "reminder",
    "receipt",
    "form",
];

/// Leaf counts 2..=12 and their relative weights.
const LEAF_WEIGHTS: [u32; 11] = [14, 18, 20, 15, 11, 8, 5, 3, 2, 2, 2];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub n_models: usize,
    /// Every sequence of an accepted tree has at least this many activities.
    pub min_trace_len: usize,
    /// Trees whose language exceeds this size are redrawn.
    pub max_sequences: usize,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            n_models: 100,
            min_trace_len: 0,
            max_sequences: 10_080,
        }
    }
}

/// The label vocabulary: every verb-object combination.
pub fn vocabulary() -> Vec<String> {
    VERBS
        .iter()
        .flat_map(|v| OBJECTS.iter().map(move |o| format!("{v} {o}")))
        .collect()
}

/// A random tree using each of `labels` exactly once as a leaf.
pub fn random_tree<R: Rng>(labels: &[Activity], rng: &mut R) -> ProcessTree {
    let mut shuffled = labels.to_vec();
    shuffled.shuffle(rng);
    build(&shuffled, rng)
}

fn build<R: Rng>(labels: &[Activity], rng: &mut R) -> ProcessTree {
    let n = labels.len();
    if n == 1 {
        let leaf = ProcessTree::Leaf(labels[0].clone());
        return if rng.gen_bool(0.04) {
            ProcessTree::Node(Operator::Xor, vec![leaf, ProcessTree::Silent])
        } else {
            leaf
        };
    }
    let ops = [Operator::Sequence, Operator::Xor, Operator::Parallel, Operator::Loop];
    let op = ops[WeightedIndex::new([76, 12, 8, 4]).unwrap().sample(rng)];
    if op == Operator::Loop && rng.gen_bool(0.3) {
        return ProcessTree::Node(Operator::Loop, vec![build(labels, rng), ProcessTree::Silent]);
    }
    let k = if op == Operator::Loop {
        2
    } else {
        rng.gen_range(2..=n.min(4))
    };
    let mut cuts: Vec<usize> = rand::seq::index::sample(rng, n - 1, k - 1)
        .into_iter()
        .map(|c| c + 1)
        .collect();
    cuts.sort_unstable();
    let mut children = Vec::with_capacity(k);
    let mut start = 0;
    for end in cuts.into_iter().chain([n]) {
        children.push(build(&labels[start..end], rng));
        start = end;
    }
    ProcessTree::Node(op, children)
}

fn acceptable(tree: &ProcessTree, params: &SynthParams) -> bool {
    match playout(tree, params.max_sequences) {
        Ok(lang) => lang.sequences().iter().all(|s| s.len() >= params.min_trace_len.max(1)),
        Err(_) => false,
    }
}

/// `params.n_models` trees with pairwise distinct activity sets. Model ids are
/// `synth-00000`, `synth-00001`, ...
pub fn synth_corpus(params: &SynthParams, seed: u64) -> Vec<CorpusEntry> {
    let vocab: Vec<Activity> = vocabulary().iter().map(|v| Activity::new(v).unwrap()).collect();
    let sizes = WeightedIndex::new(LEAF_WEIGHTS).unwrap();
    let mut used: HashSet<BTreeSet<Activity>> = HashSet::new();
    let mut out = Vec::with_capacity(params.n_models);
    for i in 0..params.n_models {
        let model_id = format!("synth-{i:05}");
        let mut rng = stream_rng(seed, "synth", &model_id);
        let tree = loop {
            let n = sizes.sample(&mut rng) + 2;
            let labels: Vec<Activity> = vocab.choose_multiple(&mut rng, n).cloned().collect();
            let set: BTreeSet<Activity> = labels.iter().cloned().collect();
            if used.contains(&set) {
                continue;
            }
            let tree = random_tree(&labels, &mut rng);
            if acceptable(&tree, params) {
                used.insert(set);
                break tree;
            }
        };
        out.push(CorpusEntry {
            model_id,
            name: None,
            tree,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_is_seeded_and_distinct() {
        let params = SynthParams {
            n_models: 40,
            ..Default::default()
        };
        let a = synth_corpus(&params, 11);
        assert_eq!(a, synth_corpus(&params, 11));
        assert_ne!(a, synth_corpus(&params, 12));
        let sets: HashSet<BTreeSet<Activity>> = a
            .iter()
            .map(|e| e.tree.leaves().into_iter().cloned().collect())
            .collect();
        assert_eq!(sets.len(), 40);
        for e in &a {
            assert!(e.tree.duplicate_labels().is_empty());
            assert!(e.tree.validate().is_ok());
        }
    }

    #[test]
    fn min_trace_len_honoured() {
        let params = SynthParams {
            n_models: 20,
            min_trace_len: 3,
            ..Default::default()
        };
        for e in synth_corpus(&params, 1) {
            let lang = playout(&e.tree, params.max_sequences).unwrap();
            assert!(lang.sequences().iter().all(|s| s.len() >= 3));
        }
    }

    #[test]
    fn random_tree_uses_every_label_once() {
        let mut rng = StdRng::seed_from_u64(5);
        let labels: Vec<Activity> = (0..21).map(|i| Activity::new(&format!("x{i}")).unwrap()).collect();
        for _ in 0..50 {
            let t = random_tree(&labels, &mut rng);
            let mut leaves: Vec<_> = t.leaves().into_iter().cloned().collect();
            leaves.sort();
            let mut want = labels.clone();
            want.sort();
            assert_eq!(leaves, want);
        }
    }
}
