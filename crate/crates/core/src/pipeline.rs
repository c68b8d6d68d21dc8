//! File-level commands: corpus in, datasets, splits, prompts, predictions and
//! scores out. Every output is written in a canonical order.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baseline::{random_classification_baseline, random_footprint_predictions};
use crate::eval::{score_task, EvalError, MatchingMode, Prediction, ScoreOptions, ScoreReport};
use crate::io::{read_corpus, read_jsonl, write_corpus, write_jsonl, IoError, SplitLine};
use crate::model::{Activity, Trace};
use crate::promptgen::{ft_bundle, render_icl, PromptBundle, PromptError, ShotPool, Templates};
use crate::semantics::DEFAULT_MAX_SEQUENCES;
use crate::synth::{synth_corpus, SynthParams};
use crate::taskgen::{
    generate, split_corpus, validate_corpus, AdmittedModel, CorpusReport, GenParams, Label, Split, SplitError,
    SplitRatios, StratumSummary, Task, TaskRecord, TsadParams,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Split(#[from] SplitError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("{0}")]
    Input(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub min_log_size: usize,
    pub noise_prob: f64,
    pub max_retries: usize,
    pub ratios: [f64; 3],
    /// Shots per prompt; unset means 6 for classification and 5 for discovery.
    pub shots: Option<usize>,
    pub max_sequences: usize,
    pub matching_mode: MatchingMode,
    pub include_diagonal: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let tsad = TsadParams::default();
        Self {
            seed: 0,
            min_log_size: tsad.min_log_size,
            noise_prob: tsad.noise_prob,
            max_retries: tsad.max_retries,
            ratios: SplitRatios::default().as_array(),
            shots: None,
            max_sequences: DEFAULT_MAX_SEQUENCES,
            matching_mode: MatchingMode::default(),
            include_diagonal: true,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        if !(0.0..=1.0).contains(&self.noise_prob) {
            return Err(PipelineError::Config(format!(
                "noise_prob {} outside [0, 1]",
                self.noise_prob
            )));
        }
        if self.max_sequences == 0 {
            return Err(PipelineError::Config("max_sequences must be positive".into()));
        }
        self.split_ratios()?;
        Ok(())
    }

    pub fn split_ratios(&self) -> Result<SplitRatios, SplitError> {
        let [a, b, c] = self.ratios;
        SplitRatios::new(a, b, c)
    }

    pub fn gen_params(&self) -> GenParams {
        GenParams {
            seed: self.seed,
            tsad: TsadParams {
                min_log_size: self.min_log_size,
                noise_prob: self.noise_prob,
                max_retries: self.max_retries,
            },
        }
    }

    pub fn shots_for(&self, task: Task) -> usize {
        self.shots.unwrap_or(if task.is_classification() { 6 } else { 5 })
    }

    pub fn score_options(&self) -> ScoreOptions {
        ScoreOptions {
            matching: self.matching_mode,
            include_diagonal: self.include_diagonal,
            max_sequences: self.max_sequences,
        }
    }
}

/// Admitted models sorted by id, with parse and validation rejections.
pub fn load_corpus(path: &Path, cfg: &RunConfig) -> Result<CorpusReport, PipelineError> {
    cfg.validate()?;
    let (entries, mut rejections) = read_corpus(path)?;
    let mut report = validate_corpus(&entries, cfg.max_sequences);
    rejections.append(&mut report.rejections);
    report.rejections = rejections;
    report
        .admitted
        .sort_by(|a, b| a.model.model_id().cmp(b.model.model_id()));
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthSummary {
    pub n_models: usize,
}

pub fn cmd_synth(params: &SynthParams, seed: u64, out: &Path) -> Result<SynthSummary, PipelineError> {
    let corpus = synth_corpus(params, seed);
    write_corpus(out, &corpus)?;
    Ok(SynthSummary { n_models: corpus.len() })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidateSummary {
    pub n_admitted: usize,
    pub n_rejected: usize,
    pub partial: bool,
}

/// Writes `admitted.jsonl` (canonical tree text) and `rejections.jsonl` into `out_dir`.
pub fn cmd_validate(corpus: &Path, cfg: &RunConfig, out_dir: &Path) -> Result<ValidateSummary, PipelineError> {
    let report = load_corpus(corpus, cfg)?;
    let admitted: Vec<_> = report
        .admitted
        .iter()
        .map(|a| crate::taskgen::CorpusEntry {
            model_id: a.model.model_id().to_string(),
            name: a.model.name().map(str::to_string),
            tree: a.tree.clone(),
        })
        .collect();
    write_corpus(&out_dir.join("admitted.jsonl"), &admitted)?;
    write_jsonl(&out_dir.join("rejections.jsonl"), &report.rejections)?;
    Ok(ValidateSummary {
        n_admitted: admitted.len(),
        n_rejected: report.rejections.len(),
        partial: !report.rejections.is_empty(),
    })
}

/// Corpus total plus per-model average, median, minimum and maximum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Characteristic {
    pub total: usize,
    pub avg: f64,
    pub median: f64,
    pub min: usize,
    pub max: usize,
}

impl Characteristic {
    fn new(total: usize, mut per_model: Vec<usize>) -> Self {
        per_model.sort_unstable();
        let n = per_model.len();
        let median = match n {
            0 => 0.0,
            _ if n % 2 == 1 => per_model[n / 2] as f64,
            _ => (per_model[n / 2 - 1] + per_model[n / 2]) as f64 / 2.0,
        };
        Self {
            total,
            avg: if n == 0 {
                0.0
            } else {
                per_model.iter().sum::<usize>() as f64 / n as f64
            },
            median,
            min: per_model.first().copied().unwrap_or(0),
            max: per_model.last().copied().unwrap_or(0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlayoutSummary {
    pub models: usize,
    pub unique_activities: Characteristic,
    pub unique_sequences: Characteristic,
    pub n_rejected: usize,
    pub partial: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequencesLine {
    pub model_id: String,
    pub sequences: Vec<Trace>,
}

/// Corpus statistics over admitted models.
pub fn corpus_stats(models: &[AdmittedModel]) -> (Characteristic, Characteristic) {
    let mut labels: BTreeSet<&Activity> = BTreeSet::new();
    let mut seqs: BTreeSet<&Trace> = BTreeSet::new();
    for m in models {
        labels.extend(m.model.activity_set());
        seqs.extend(m.model.non_empty_sequences());
    }
    let acts = models.iter().map(|m| m.model.activity_set().len()).collect();
    let counts = models.iter().map(|m| m.model.non_empty_sequences().count()).collect();
    (
        Characteristic::new(labels.len(), acts),
        Characteristic::new(seqs.len(), counts),
    )
}

/// Writes one line per admitted model with its execution sequences.
pub fn cmd_playout(corpus: &Path, cfg: &RunConfig, out: &Path) -> Result<PlayoutSummary, PipelineError> {
    let report = load_corpus(corpus, cfg)?;
    let lines: Vec<SequencesLine> = report
        .admitted
        .iter()
        .map(|a| SequencesLine {
            model_id: a.model.model_id().to_string(),
            sequences: a.model.sequences().iter().cloned().collect(),
        })
        .collect();
    write_jsonl(out, &lines)?;
    let (unique_activities, unique_sequences) = corpus_stats(&report.admitted);
    Ok(PlayoutSummary {
        models: report.admitted.len(),
        unique_activities,
        unique_sequences,
        n_rejected: report.rejections.len(),
        partial: !report.rejections.is_empty(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaskSummary {
    pub task: Task,
    pub n_records: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_valid: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_anomalous: Option<usize>,
    /// A-SAD models whose negatives could not match the positives.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_imbalanced_models: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pre_dedup: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenSummary {
    pub models: usize,
    pub n_rejected: usize,
    pub tasks: Vec<TaskSummary>,
    pub partial: bool,
}

pub fn gen_summary(task: Task, ds: &crate::taskgen::TaskDataset) -> TaskSummary {
    let count = |l: Label| ds.records.iter().filter(|r| r.label() == Some(l)).count();
    TaskSummary {
        task,
        n_records: ds.records.len(),
        n_valid: task.is_binary().then(|| count(Label::Valid)),
        n_anomalous: task.is_binary().then(|| count(Label::Anomalous)),
        n_imbalanced_models: (task == Task::Asad).then_some(ds.imbalanced_models.len()),
        pre_dedup: (task == Task::Snap).then_some(ds.snap_pre_dedup),
    }
}

/// Writes `<task>.jsonl` into `out_dir` for each task.
pub fn cmd_gen(corpus: &Path, tasks: &[Task], cfg: &RunConfig, out_dir: &Path) -> Result<GenSummary, PipelineError> {
    let report = load_corpus(corpus, cfg)?;
    let params = cfg.gen_params();
    let mut summaries = Vec::new();
    for &task in tasks {
        let ds = generate(&report.admitted, task, &params);
        write_jsonl(&out_dir.join(format!("{}.jsonl", task.key())), &ds.records)?;
        summaries.push(gen_summary(task, &ds));
    }
    Ok(GenSummary {
        models: report.admitted.len(),
        n_rejected: report.rejections.len(),
        tasks: summaries,
        partial: !report.rejections.is_empty(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitSummary {
    pub train: usize,
    pub validation: usize,
    pub test: usize,
    pub strata: Vec<StratumSummary>,
    pub n_rejected: usize,
    pub partial: bool,
}

pub fn cmd_split(corpus: &Path, cfg: &RunConfig, out: &Path) -> Result<SplitSummary, PipelineError> {
    let report = load_corpus(corpus, cfg)?;
    let models: Vec<_> = report.admitted.iter().map(|a| a.model.clone()).collect();
    let split = split_corpus(&models, cfg.split_ratios()?, cfg.seed);
    let lines: Vec<SplitLine> = split
        .assignments
        .iter()
        .map(|(id, s)| SplitLine {
            model_id: id.clone(),
            split: *s,
        })
        .collect();
    write_jsonl(out, &lines)?;
    Ok(SplitSummary {
        train: split.count(Split::Train),
        validation: split.count(Split::Validation),
        test: split.count(Split::Test),
        strata: split.strata,
        n_rejected: report.rejections.len(),
        partial: !report.rejections.is_empty(),
    })
}

pub fn read_split(path: &Path) -> Result<HashMap<String, Split>, PipelineError> {
    let mut out = HashMap::new();
    for line in read_jsonl::<SplitLine>(path)? {
        if out.insert(line.model_id.clone(), line.split).is_some() {
            return Err(PipelineError::Input(format!(
                "{}: model `{}` assigned twice",
                path.display(),
                line.model_id
            )));
        }
    }
    Ok(out)
}

fn split_of(splits: &HashMap<String, Split>, record: &TaskRecord) -> Result<Split, PipelineError> {
    splits
        .get(&record.model_id)
        .copied()
        .ok_or_else(|| PipelineError::Input(format!("model `{}` has no split assignment", record.model_id)))
}

/// Records of `records` whose model is assigned to `split`.
pub fn filter_split(
    records: Vec<TaskRecord>,
    splits: &HashMap<String, Split>,
    split: Split,
) -> Result<Vec<TaskRecord>, PipelineError> {
    let mut out = Vec::new();
    for r in records {
        if split_of(splits, &r)? == split {
            out.push(r);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PromptMode {
    Icl,
    Ft,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PromptFailure {
    pub record_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PromptSummary {
    pub mode: PromptMode,
    pub split: Split,
    pub n_prompts: usize,
    pub failures: Vec<PromptFailure>,
    pub partial: bool,
}

/// ICL prompts for the records of `target` (default test) with shots from the
/// train split, or fine-tuning pairs for the records of `target` (default train).
pub fn cmd_prompts(
    dataset: &Path,
    split_path: &Path,
    mode: PromptMode,
    target: Option<Split>,
    templates: &Templates,
    cfg: &RunConfig,
    out: &Path,
) -> Result<PromptSummary, PipelineError> {
    let records: Vec<TaskRecord> = read_jsonl(dataset)?;
    let splits = read_split(split_path)?;
    let target = target.unwrap_or(match mode {
        PromptMode::Icl => Split::Test,
        PromptMode::Ft => Split::Train,
    });
    let mut train: BTreeMap<Task, Vec<TaskRecord>> = BTreeMap::new();
    let mut queries = Vec::new();
    for r in records {
        let s = split_of(&splits, &r)?;
        if s == target {
            queries.push(r.clone());
        }
        if s == Split::Train {
            train.entry(r.task()).or_default().push(r);
        }
    }
    let mut bundles: Vec<PromptBundle> = Vec::with_capacity(queries.len());
    let mut failures = Vec::new();
    match mode {
        PromptMode::Ft => bundles.extend(queries.iter().map(|q| ft_bundle(templates, q))),
        PromptMode::Icl => {
            let pools: BTreeMap<Task, ShotPool> = train.into_iter().map(|(t, rs)| (t, ShotPool::new(t, rs))).collect();
            for q in &queries {
                let task = q.task();
                let empty;
                let pool = match pools.get(&task) {
                    Some(p) => p,
                    None => {
                        empty = ShotPool::new(task, Vec::new());
                        &empty
                    }
                };
                match render_icl(templates, pool, q, cfg.shots_for(task), cfg.seed) {
                    Ok(b) => bundles.push(b),
                    Err(e @ PromptError::PoolExhausted { .. }) => failures.push(PromptFailure {
                        record_id: q.record_id.clone(),
                        reason: e.to_string(),
                    }),
                    Err(e) => return Err(e.into()),
                }
            }
        }
    }
    write_jsonl(out, &bundles)?;
    Ok(PromptSummary {
        mode,
        split: target,
        n_prompts: bundles.len(),
        partial: !failures.is_empty(),
        failures,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    RandomClass,
    RandomFootprint,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaselineSummary {
    pub kind: BaselineKind,
    pub n_predictions: usize,
}

/// Loads a dataset, optionally keeping only the records of one split.
pub fn load_records(dataset: &Path, split: Option<(&Path, Split)>) -> Result<Vec<TaskRecord>, PipelineError> {
    let records: Vec<TaskRecord> = read_jsonl(dataset)?;
    match split {
        None => Ok(records),
        Some((path, s)) => filter_split(records, &read_split(path)?, s),
    }
}

pub fn cmd_baseline(
    dataset: &Path,
    kind: BaselineKind,
    split: Option<(&Path, Split)>,
    seed: u64,
    out: &Path,
) -> Result<BaselineSummary, PipelineError> {
    let records = load_records(dataset, split)?;
    let preds = baseline_predictions(&records, kind, seed);
    write_jsonl(out, &preds)?;
    Ok(BaselineSummary {
        kind,
        n_predictions: preds.len(),
    })
}

pub fn baseline_predictions(records: &[TaskRecord], kind: BaselineKind, seed: u64) -> Vec<Prediction> {
    match kind {
        BaselineKind::RandomClass => random_classification_baseline(records, seed),
        BaselineKind::RandomFootprint => random_footprint_predictions(records, seed),
    }
}

/// One report per task present in `records`, each with the metric under
/// both matching modes.
pub fn score_records(
    records: &[TaskRecord],
    preds: &[Prediction],
    cfg: &RunConfig,
) -> Result<Vec<ScoreReport>, PipelineError> {
    let mut by_task: BTreeMap<Task, Vec<TaskRecord>> = BTreeMap::new();
    for r in records {
        by_task.entry(r.task()).or_default().push(r.clone());
    }
    let task_of: HashMap<&str, Task> = records.iter().map(|r| (r.record_id.as_str(), r.task())).collect();
    let mut preds_by_task: BTreeMap<Task, Vec<Prediction>> = BTreeMap::new();
    for p in preds {
        let task = task_of
            .get(p.record_id.as_str())
            .ok_or_else(|| EvalError::UnknownRecord(p.record_id.clone()))?;
        preds_by_task.entry(*task).or_default().push(p.clone());
    }
    let opts = cfg.score_options();
    let other = ScoreOptions {
        matching: opts.matching.other(),
        ..opts
    };
    let mut reports = Vec::new();
    for (task, golds) in by_task {
        let ps = preds_by_task.remove(&task).unwrap_or_default();
        let mut report = score_task(task, &golds, &ps, &opts)?;
        report.other_mode_value = Some(score_task(task, &golds, &ps, &other)?.value);
        reports.push(report);
    }
    Ok(reports)
}

pub fn cmd_score(
    dataset: &Path,
    predictions: &Path,
    split: Option<(&Path, Split)>,
    cfg: &RunConfig,
) -> Result<Vec<ScoreReport>, PipelineError> {
    cfg.validate()?;
    let records = load_records(dataset, split)?;
    let preds: Vec<Prediction> = read_jsonl(predictions)?;
    score_records(&records, &preds, cfg)
}
