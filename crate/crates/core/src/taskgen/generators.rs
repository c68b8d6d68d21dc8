use std::collections::HashSet;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::records::{Instance, Label, Task, TaskRecord};
use crate::model::{Activity, ProcessModel, ProcessTree, Trace};
use crate::seeding::stream_rng;
use crate::semantics::{dfg_of_model, eventually_follows};
use crate::tree_dsl::render_tree;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TsadParams {
    pub min_log_size: usize,
    pub noise_prob: f64,
    pub max_retries: usize,
}

impl Default for TsadParams {
    fn default() -> Self {
        Self {
            min_log_size: 100,
            noise_prob: 0.5,
            max_retries: 10,
        }
    }
}

fn record_id(task: Task, model_id: &str, idx: usize) -> String {
    format!("{}:{}:{}", task.key(), model_id, idx)
}

fn record(model: &ProcessModel, task: Task, idx: usize, instance: Instance) -> TaskRecord {
    TaskRecord {
        record_id: record_id(task, model.model_id(), idx),
        model_id: model.model_id().to_string(),
        activities: model.activity_set().clone(),
        instance,
    }
}

/// Attempts to turn `trace` into a trace outside the model by swapping two
/// distinct positions: one initial draw plus up to `max_retries` re-draws.
fn swap_noise<R: Rng>(model: &ProcessModel, trace: &Trace, max_retries: usize, rng: &mut R) -> Option<Trace> {
    let n = trace.len();
    if n < 2 {
        return None;
    }
    let mut candidate = trace.clone();
    for _ in 0..=max_retries {
        let i = rng.gen_range(0..n);
        let mut j = rng.gen_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        candidate.swap(i, j);
        if !model.allows(&candidate) {
            return Some(candidate);
        }
        candidate.swap(i, j);
    }
    None
}

/// T-SAD: one log trace per non-empty sequence, padded by uniform duplication
/// to `min_log_size`, then noised trace by trace.
pub fn gen_tsad(model: &ProcessModel, seed: u64, params: &TsadParams) -> Vec<TaskRecord> {
    let mut rng = stream_rng(seed, "tsad", model.model_id());
    let base: Vec<&Trace> = model.non_empty_sequences().collect();
    let mut log = base.clone();
    while log.len() < params.min_log_size {
        log.push(base[rng.gen_range(0..base.len())]);
    }
    log.into_iter()
        .enumerate()
        .map(|(idx, trace)| {
            let noised = if rng.gen_bool(params.noise_prob.clamp(0.0, 1.0)) {
                swap_noise(model, trace, params.max_retries, &mut rng)
            } else {
                None
            };
            let instance = match noised {
                Some(trace) => Instance::Tsad {
                    trace,
                    label: Label::Anomalous,
                },
                None => Instance::Tsad {
                    trace: trace.clone(),
                    label: Label::Valid,
                },
            };
            record(model, Task::Tsad, idx, instance)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AsadOutput {
    pub records: Vec<TaskRecord>,
    /// `(valid, anomalous)` counts when the complement was too small to balance.
    pub imbalance: Option<(usize, usize)>,
}

/// A-SAD: every eventually-follows pair is a valid record; an equal number of
/// pairs from the rest of `A x A` (self-pairs included) is sampled as anomalous.
pub fn gen_asad(model: &ProcessModel, seed: u64) -> AsadOutput {
    let mut rng = stream_rng(seed, "asad", model.model_id());
    let ef = eventually_follows(model);
    let acts = model.activity_set();
    let complement: Vec<(Activity, Activity)> = acts
        .iter()
        .flat_map(|x| acts.iter().map(move |y| (x.clone(), y.clone())))
        .filter(|p| !ef.pairs().contains(p))
        .collect();
    let wanted = ef.len().min(complement.len());
    let mut picked: Vec<usize> = index::sample(&mut rng, complement.len(), wanted).into_vec();
    picked.sort_unstable();

    let positives = ef.pairs().iter().map(|p| (p.clone(), Label::Valid));
    let negatives = picked.into_iter().map(|i| (complement[i].clone(), Label::Anomalous));
    let records = positives
        .chain(negatives)
        .enumerate()
        .map(|(idx, (pair, label))| record(model, Task::Asad, idx, Instance::Asad { pair, label }))
        .collect();
    let imbalance = (wanted < ef.len()).then_some((ef.len(), wanted));
    AsadOutput { records, imbalance }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SnapOutput {
    pub records: Vec<TaskRecord>,
    /// Prefix count before removing repeated `(prefix, next)` pairs.
    pub pre_dedup: usize,
}

/// S-NAP: every proper prefix of every sequence, labeled with the activity that follows it.
pub fn gen_snap(model: &ProcessModel) -> SnapOutput {
    let mut seen: HashSet<(&[Activity], &Activity)> = HashSet::new();
    let mut records = Vec::new();
    let mut pre_dedup = 0;
    for seq in model.sequences() {
        for k in 1..seq.len() {
            pre_dedup += 1;
            if seen.insert((&seq[..k], &seq[k])) {
                let idx = records.len();
                records.push(record(
                    model,
                    Task::Snap,
                    idx,
                    Instance::Snap {
                        prefix: seq[..k].to_vec(),
                        next_activity: seq[k].clone(),
                    },
                ));
            }
        }
    }
    SnapOutput { records, pre_dedup }
}

pub fn gen_sdfd(model: &ProcessModel) -> TaskRecord {
    let dfg = dfg_of_model(model);
    record(
        model,
        Task::Sdfd,
        0,
        Instance::Sdfd {
            gold_edges: dfg.edges().iter().cloned().collect(),
        },
    )
}

pub fn gen_sptd(model: &ProcessModel, tree: &ProcessTree) -> TaskRecord {
    record(
        model,
        Task::Sptd,
        0,
        Instance::Sptd {
            gold_tree: render_tree(tree),
        },
    )
}
