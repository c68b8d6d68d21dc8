//! Benchmark dataset construction from a corpus of process trees.

mod corpus;
mod generators;
mod records;
mod split;

pub use corpus::{validate_corpus, AdmittedModel, CorpusEntry, CorpusReport, Rejection, RejectionReason};
pub use generators::{gen_asad, gen_sdfd, gen_snap, gen_sptd, gen_tsad, AsadOutput, SnapOutput, TsadParams};
pub use records::{Instance, Label, Task, TaskRecord};
pub use split::{
    leakage_components, split_corpus, stratum_of, Split, SplitAssignment, SplitError, SplitRatios, StratumSummary,
    STRATA,
};

use rayon::prelude::*;
use serde::Serialize;

/// Records of one task for a whole corpus, plus generation diagnostics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TaskDataset {
    pub records: Vec<TaskRecord>,
    /// Models whose A-SAD negatives could not match the positives.
    pub imbalanced_models: Vec<String>,
    /// S-NAP prefixes before per-model deduplication.
    pub snap_pre_dedup: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GenParams {
    pub seed: u64,
    pub tsad: TsadParams,
}

/// Generates one task over all admitted models. Per-model work runs in
/// parallel; output follows the order of `models`.
pub fn generate(models: &[AdmittedModel], task: Task, params: &GenParams) -> TaskDataset {
    let per_model: Vec<(Vec<TaskRecord>, Option<String>, usize)> = models
        .par_iter()
        .map(|am| {
            let m = &am.model;
            match task {
                Task::Tsad => (gen_tsad(m, params.seed, &params.tsad), None, 0),
                Task::Asad => {
                    let out = gen_asad(m, params.seed);
                    let flag = out.imbalance.map(|_| m.model_id().to_string());
                    (out.records, flag, 0)
                }
                Task::Snap => {
                    let out = gen_snap(m);
                    (out.records, None, out.pre_dedup)
                }
                Task::Sdfd => (vec![gen_sdfd(m)], None, 0),
                Task::Sptd => (vec![gen_sptd(m, &am.tree)], None, 0),
            }
        })
        .collect();
    let mut out = TaskDataset::default();
    for (records, flag, pre) in per_model {
        out.records.extend(records);
        out.imbalanced_models.extend(flag);
        out.snap_pre_dedup += pre;
    }
    out
}
