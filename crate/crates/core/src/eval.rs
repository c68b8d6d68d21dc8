//! Scoring of prediction files: macro F1 for the classification tasks and
//! footprint-based fitness for the discovery tasks.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{normalize_label, Activity, Dfg, Footprint, ProcessTree, Relation};
use crate::semantics::{dfg_of_traces, footprint, playout, DEFAULT_MAX_SEQUENCES};
use crate::taskgen::{Instance, Label, Task, TaskRecord};
use crate::tree_dsl::{parse_dfg_edges, parse_tree, EdgeParseMode};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("{golds} gold labels but {preds} predictions")]
    LengthMismatch { golds: usize, preds: usize },
    #[error("prediction for unknown record `{0}`")]
    UnknownRecord(String),
    #[error("more than one prediction for record `{0}`")]
    DuplicatePrediction(String),
    #[error("record `{record_id}` is a {found} record, expected {expected}")]
    WrongTask {
        record_id: String,
        expected: Task,
        found: Task,
    },
    #[error("gold record `{0}` is malformed: {1}")]
    BadGold(String, String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchingMode {
    CaseSensitive,
    #[default]
    CaseInsensitive,
}

impl MatchingMode {
    /// Comparison key for a normalized label.
    pub fn key(self, a: &Activity) -> String {
        match self {
            MatchingMode::CaseSensitive => a.as_str().to_string(),
            MatchingMode::CaseInsensitive => a.folded(),
        }
    }

    pub fn other(self) -> Self {
        match self {
            MatchingMode::CaseSensitive => MatchingMode::CaseInsensitive,
            MatchingMode::CaseInsensitive => MatchingMode::CaseSensitive,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct F1Report<K> {
    pub per_class: BTreeMap<K, f64>,
    pub macro_f1: f64,
}

/// Macro F1 over `universe`. A `None` prediction (unparseable output) counts
/// against the recall of the gold class and toward no class's precision.
/// Per-class F1 is 0 when precision and recall are both 0.
pub fn macro_f1<K: Ord + Clone>(
    golds: &[K],
    preds: &[Option<K>],
    universe: &BTreeSet<K>,
) -> Result<F1Report<K>, EvalError> {
    if golds.len() != preds.len() {
        return Err(EvalError::LengthMismatch {
            golds: golds.len(),
            preds: preds.len(),
        });
    }
    let mut tp: BTreeMap<&K, usize> = BTreeMap::new();
    let mut gold_n: BTreeMap<&K, usize> = BTreeMap::new();
    let mut pred_n: BTreeMap<&K, usize> = BTreeMap::new();
    for (g, p) in golds.iter().zip(preds) {
        *gold_n.entry(g).or_default() += 1;
        if let Some(p) = p {
            *pred_n.entry(p).or_default() += 1;
            if p == g {
                *tp.entry(g).or_default() += 1;
            }
        }
    }
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let per_class: BTreeMap<K, f64> = universe
        .iter()
        .map(|c| {
            let t = tp.get(c).copied().unwrap_or(0);
            let precision = ratio(t, pred_n.get(c).copied().unwrap_or(0));
            let recall = ratio(t, gold_n.get(c).copied().unwrap_or(0));
            let f1 = if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            (c.clone(), f1)
        })
        .collect();
    let macro_f1 = if per_class.is_empty() {
        0.0
    } else {
        per_class.values().sum::<f64>() / per_class.len() as f64
    };
    Ok(F1Report { per_class, macro_f1 })
}

/// Fraction of ordered pairs over the gold activities on which the two
/// footprints agree. Pairs missing from `pred` count as unrelated. With
/// `include_diagonal = false` only pairs of distinct activities are compared.
pub fn footprint_fitness(gold: &Footprint, pred: &Footprint, include_diagonal: bool) -> f64 {
    let mut total = 0usize;
    let mut equal = 0usize;
    for (x, y, g) in gold.iter() {
        if !include_diagonal && x == y {
            continue;
        }
        total += 1;
        if pred.get(x, y).unwrap_or(Relation::Unrelated) == g {
            equal += 1;
        }
    }
    if total == 0 {
        1.0
    } else {
        equal as f64 / total as f64
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Projection {
    pub dfg: Dfg,
    /// Distinct predicted labels with no match in the gold activity set.
    pub hallucinated: usize,
}

/// Maps predicted edges onto the gold activities under `mode`, dropping edges
/// that touch unknown labels.
pub fn project_edges<'a, I>(gold: &BTreeSet<Activity>, edges: I, mode: MatchingMode) -> Projection
where
    I: IntoIterator<Item = &'a (Activity, Activity)>,
{
    let lookup: HashMap<String, &Activity> = gold.iter().map(|a| (mode.key(a), a)).collect();
    let mut unknown = BTreeSet::new();
    let mut kept = BTreeSet::new();
    for (x, y) in edges {
        let gx = lookup.get(&mode.key(x));
        let gy = lookup.get(&mode.key(y));
        if gx.is_none() {
            unknown.insert(mode.key(x));
        }
        if gy.is_none() {
            unknown.insert(mode.key(y));
        }
        if let (Some(gx), Some(gy)) = (gx, gy) {
            kept.insert(((*gx).clone(), (*gy).clone()));
        }
    }
    Projection {
        dfg: Dfg::new(gold.clone(), kept).expect("projected edges use gold activities"),
        hallucinated: unknown.len(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreOptions {
    pub matching: MatchingMode,
    pub include_diagonal: bool,
    pub max_sequences: usize,
}

impl Default for ScoreOptions {
    fn default() -> Self {
        Self {
            matching: MatchingMode::default(),
            include_diagonal: true,
            max_sequences: DEFAULT_MAX_SEQUENCES,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecordFitness {
    pub fitness: f64,
    pub parse_failure: bool,
    pub hallucinated: usize,
    pub skipped_lines: usize,
}

impl RecordFitness {
    fn failed() -> Self {
        Self {
            fitness: 0.0,
            parse_failure: true,
            hallucinated: 0,
            skipped_lines: 0,
        }
    }
}

/// Scores an edge-list prediction against a gold DFG. Text that yields no
/// edge but has malformed lines is a parse failure and scores 0.
pub fn score_dfg_text(gold: &Dfg, pred_text: &str, opts: &ScoreOptions) -> RecordFitness {
    let parsed = parse_dfg_edges(pred_text, EdgeParseMode::Lenient).expect("lenient parsing never fails");
    if parsed.edges.is_empty() && !parsed.skipped.is_empty() {
        return RecordFitness {
            skipped_lines: parsed.skipped.len(),
            ..RecordFitness::failed()
        };
    }
    let proj = project_edges(gold.activities(), &parsed.edges, opts.matching);
    RecordFitness {
        fitness: footprint_fitness(&footprint(gold), &footprint(&proj.dfg), opts.include_diagonal),
        parse_failure: false,
        hallucinated: proj.hallucinated,
        skipped_lines: parsed.skipped.len(),
    }
}

/// DFG of the played-out language of `tree`.
pub fn tree_dfg(tree: &ProcessTree, max_sequences: usize) -> Result<Dfg, crate::semantics::PlayoutError> {
    Ok(dfg_of_traces(playout(tree, max_sequences)?.sequences()))
}

/// Scores a DFG prediction (already in edge form) against a gold DFG whose
/// activity set is the evaluation universe.
pub fn score_dfg(gold: &Dfg, pred: &Dfg, opts: &ScoreOptions) -> RecordFitness {
    let proj = project_edges(gold.activities(), pred.edges(), opts.matching);
    RecordFitness {
        fitness: footprint_fitness(&footprint(gold), &footprint(&proj.dfg), opts.include_diagonal),
        parse_failure: false,
        hallucinated: proj.hallucinated,
        skipped_lines: 0,
    }
}

/// Plays out both trees and compares the footprints of their DFGs. An
/// unparseable, ill-formed or oversized prediction scores 0.
pub fn score_tree_text(gold: &ProcessTree, pred_text: &str, opts: &ScoreOptions) -> Result<RecordFitness, EvalError> {
    let gold_dfg = tree_dfg(gold, opts.max_sequences)
        .map_err(|e| EvalError::BadGold(crate::tree_dsl::render_tree(gold), e.to_string()))?;
    Ok(score_tree_against(&gold_dfg, pred_text, opts))
}

fn score_tree_against(gold_dfg: &Dfg, pred_text: &str, opts: &ScoreOptions) -> RecordFitness {
    let Ok(pred) = parse_tree(pred_text) else {
        return RecordFitness::failed();
    };
    match tree_dfg(&pred, opts.max_sequences) {
        Ok(pred_dfg) => score_dfg(gold_dfg, &pred_dfg, opts),
        Err(_) => RecordFitness::failed(),
    }
}

fn expect_task(record: &TaskRecord, expected: Task) -> Result<(), EvalError> {
    if record.task() != expected {
        return Err(EvalError::WrongTask {
            record_id: record.record_id.clone(),
            expected,
            found: record.task(),
        });
    }
    Ok(())
}

fn gold_dfg_of(record: &TaskRecord, opts: &ScoreOptions) -> Result<Dfg, EvalError> {
    let bad = |e: String| EvalError::BadGold(record.record_id.clone(), e);
    match record.task() {
        Task::Sdfd => record.gold_dfg().expect("sdfd record").map_err(|e| bad(e.to_string())),
        Task::Sptd => {
            let tree = record
                .gold_tree()
                .expect("sptd record")
                .map_err(|e| bad(e.to_string()))?;
            tree_dfg(&tree, opts.max_sequences).map_err(|e| bad(e.to_string()))
        }
        other => Err(EvalError::WrongTask {
            record_id: record.record_id.clone(),
            expected: Task::Sdfd,
            found: other,
        }),
    }
}

pub fn score_sdfd(gold: &TaskRecord, pred_text: &str, opts: &ScoreOptions) -> Result<RecordFitness, EvalError> {
    expect_task(gold, Task::Sdfd)?;
    Ok(score_dfg_text(&gold_dfg_of(gold, opts)?, pred_text, opts))
}

pub fn score_sptd(gold: &TaskRecord, pred_text: &str, opts: &ScoreOptions) -> Result<RecordFitness, EvalError> {
    expect_task(gold, Task::Sptd)?;
    Ok(score_tree_against(&gold_dfg_of(gold, opts)?, pred_text, opts))
}

/// How the prediction text is to be read. Discovery baselines that emit a
/// footprint for S-PTD records use `Edges`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PredictionFormat {
    #[default]
    Text,
    Edges,
}

/// One line of a prediction file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub record_id: String,
    pub prediction: String,
    #[serde(default, skip_serializing_if = "is_text")]
    pub format: PredictionFormat,
}

fn is_text(f: &PredictionFormat) -> bool {
    *f == PredictionFormat::Text
}

impl Prediction {
    pub fn text(record_id: impl Into<String>, prediction: impl Into<String>) -> Self {
        Self {
            record_id: record_id.into(),
            prediction: prediction.into(),
            format: PredictionFormat::Text,
        }
    }
}

/// `Valid`/`Anomalous`, or the answer tokens `false`/`true`. Case and a
/// trailing period are ignored.
pub fn parse_binary_label(text: &str) -> Option<Label> {
    let t = text.trim().trim_end_matches('.').trim().to_ascii_lowercase();
    match t.as_str() {
        "valid" | "false" => Some(Label::Valid),
        "anomalous" | "true" => Some(Label::Anomalous),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    MacroF1,
    MeanFootprintFitness,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecordScoreEntry {
    pub record_id: String,
    pub fitness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreReport {
    pub task: Task,
    pub n_records: usize,
    pub metric_name: Metric,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_class_f1: Option<BTreeMap<String, f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_record_fitness: Option<Vec<RecordScoreEntry>>,
    pub n_parse_failures: usize,
    pub n_missing_predictions: usize,
    pub n_hallucinated_labels: usize,
    pub matching_mode: MatchingMode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub include_diagonal: Option<bool>,
    /// Same metric under the other matching mode.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub other_mode_value: Option<f64>,
}

/// Scores `preds` against every record in `golds` (all of one task). Gold
/// records without a prediction score as parse failures.
pub fn score_task(
    task: Task,
    golds: &[TaskRecord],
    preds: &[Prediction],
    opts: &ScoreOptions,
) -> Result<ScoreReport, EvalError> {
    for g in golds {
        expect_task(g, task)?;
    }
    let gold_ids: HashMap<&str, usize> = golds
        .iter()
        .enumerate()
        .map(|(i, g)| (g.record_id.as_str(), i))
        .collect();
    let mut by_gold: Vec<Option<&Prediction>> = vec![None; golds.len()];
    for p in preds {
        let &i = gold_ids
            .get(p.record_id.as_str())
            .ok_or_else(|| EvalError::UnknownRecord(p.record_id.clone()))?;
        if by_gold[i].replace(p).is_some() {
            return Err(EvalError::DuplicatePrediction(p.record_id.clone()));
        }
    }
    let missing = by_gold.iter().filter(|p| p.is_none()).count();
    let mut report = ScoreReport {
        task,
        n_records: golds.len(),
        metric_name: Metric::MacroF1,
        value: 0.0,
        per_class_f1: None,
        per_record_fitness: None,
        n_parse_failures: 0,
        n_missing_predictions: missing,
        n_hallucinated_labels: 0,
        matching_mode: opts.matching,
        include_diagonal: None,
        other_mode_value: None,
    };
    match task {
        Task::Tsad | Task::Asad => {
            let gold: Vec<String> = golds
                .iter()
                .map(|g| g.label().expect("binary record").as_str().to_string())
                .collect();
            let pred: Vec<Option<String>> = by_gold
                .iter()
                .map(|p| {
                    p.and_then(|p| parse_binary_label(&p.prediction))
                        .map(|l| l.as_str().to_string())
                })
                .collect();
            let universe = [Label::Valid, Label::Anomalous]
                .iter()
                .map(|l| l.as_str().to_string())
                .collect();
            report.n_parse_failures = pred.iter().filter(|p| p.is_none()).count();
            let f1 = macro_f1(&gold, &pred, &universe)?;
            report.value = f1.macro_f1;
            report.per_class_f1 = Some(f1.per_class);
        }
        Task::Snap => {
            let mode = opts.matching;
            let gold: Vec<String> = golds
                .iter()
                .map(|g| match &g.instance {
                    Instance::Snap { next_activity, .. } => mode.key(next_activity),
                    _ => unreachable!("task checked"),
                })
                .collect();
            let pred: Vec<Option<String>> = by_gold
                .iter()
                .map(|p| {
                    p.and_then(|p| normalize_label(&p.prediction).ok())
                        .map(|a| mode.key(&a))
                })
                .collect();
            report.n_parse_failures = pred.iter().filter(|p| p.is_none()).count();
            let universe: BTreeSet<String> = gold.iter().cloned().chain(pred.iter().flatten().cloned()).collect();
            report.n_hallucinated_labels = golds
                .iter()
                .zip(&pred)
                .filter(|(g, p)| {
                    p.as_ref()
                        .is_some_and(|p| !g.activities.iter().any(|a| &mode.key(a) == p))
                })
                .count();
            let f1 = macro_f1(&gold, &pred, &universe)?;
            report.value = f1.macro_f1;
            report.per_class_f1 = Some(f1.per_class);
        }
        Task::Sdfd | Task::Sptd => {
            let scored: Vec<RecordFitness> = golds
                .par_iter()
                .zip(by_gold.par_iter())
                .map(|(g, p)| -> Result<RecordFitness, EvalError> {
                    let Some(p) = p else {
                        return Ok(RecordFitness::failed());
                    };
                    let gold_dfg = gold_dfg_of(g, opts)?;
                    Ok(match (task, p.format) {
                        (Task::Sptd, PredictionFormat::Text) => score_tree_against(&gold_dfg, &p.prediction, opts),
                        _ => score_dfg_text(&gold_dfg, &p.prediction, opts),
                    })
                })
                .collect::<Result<_, _>>()?;
            report.metric_name = Metric::MeanFootprintFitness;
            report.include_diagonal = Some(opts.include_diagonal);
            report.n_parse_failures = scored.iter().filter(|s| s.parse_failure).count();
            report.n_hallucinated_labels = scored.iter().map(|s| s.hallucinated).sum();
            report.value = if scored.is_empty() {
                0.0
            } else {
                scored.iter().map(|s| s.fitness).sum::<f64>() / scored.len() as f64
            };
            report.per_record_fitness = Some(
                golds
                    .iter()
                    .zip(&scored)
                    .map(|(g, s)| RecordScoreEntry {
                        record_id: g.record_id.clone(),
                        fitness: s.fitness,
                    })
                    .collect(),
            );
        }
    }
    Ok(report)
}
