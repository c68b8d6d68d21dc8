//! In-context-learning prompts and fine-tuning pairs for the five tasks.
//!
//! A template is plain text: a task description, a line containing only
//! `---`, and an instance block using the placeholders `{activities}`,
//! `{instance}` and `{answer_key}`. A line holding only `{instance}` is
//! dropped when the task has no instance line.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::Activity;
use crate::seeding::stream_rng;
use crate::taskgen::{Instance, Label, Task, TaskRecord};
use crate::tree_dsl::{render_edge_lines, render_trace};

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("{task}: shot pool has {available} eligible records for {needed} shots ({detail})")]
    PoolExhausted {
        task: Task,
        needed: usize,
        available: usize,
        detail: &'static str,
    },
    #[error("query is a {found} record but the pool holds {expected} records")]
    TaskMismatch { expected: Task, found: Task },
    #[error("template for {task}: {reason}")]
    Template { task: Task, reason: String },
    #[error("reading template {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    pub description: String,
    pub block: String,
}

impl Template {
    pub fn parse(task: Task, text: &str) -> Result<Self, PromptError> {
        let err = |reason: &str| PromptError::Template {
            task,
            reason: reason.to_string(),
        };
        let mut description = Vec::new();
        let mut lines = text.lines();
        for line in lines.by_ref() {
            if line.trim() == "---" {
                let block = lines.collect::<Vec<_>>().join("\n");
                if !block.contains("{activities}") || !block.contains("{answer_key}") {
                    return Err(err("instance block needs {activities} and {answer_key}"));
                }
                return Ok(Self {
                    description: description.join("\n").trim().to_string(),
                    block: block.trim_matches('\n').to_string(),
                });
            }
            description.push(line);
        }
        Err(err("missing `---` separator line"))
    }
}

#[derive(Debug, Clone)]
pub struct Templates {
    by_task: BTreeMap<Task, Template>,
}

impl Default for Templates {
    fn default() -> Self {
        let sources = [
            (Task::Tsad, include_str!("../templates/tsad.txt")),
            (Task::Asad, include_str!("../templates/asad.txt")),
            (Task::Snap, include_str!("../templates/snap.txt")),
            (Task::Sdfd, include_str!("../templates/sdfd.txt")),
            (Task::Sptd, include_str!("../templates/sptd.txt")),
        ];
        let by_task = sources
            .into_iter()
            .map(|(t, s)| (t, Template::parse(t, s).expect("bundled template is well-formed")))
            .collect();
        Self { by_task }
    }
}

impl Templates {
    pub fn get(&self, task: Task) -> &Template {
        &self.by_task[&task]
    }

    pub fn set(&mut self, task: Task, template: Template) {
        self.by_task.insert(task, template);
    }

    /// Defaults overridden by any `<task>.txt` file found in `dir`.
    pub fn with_overrides(dir: &Path) -> Result<Self, PromptError> {
        let mut templates = Self::default();
        for task in Task::ALL {
            let path = dir.join(format!("{}.txt", task.key()));
            if !path.exists() {
                continue;
            }
            let text = std::fs::read_to_string(&path).map_err(|source| PromptError::Io {
                path: path.display().to_string(),
                source,
            })?;
            templates.set(task, Template::parse(task, &text)?);
        }
        Ok(templates)
    }
}

pub fn answer_key(task: Task) -> &'static str {
    match task {
        Task::Tsad | Task::Asad => "Anomalous:",
        Task::Snap => "Next activity:",
        Task::Sdfd => "Directly-follows pairs:",
        Task::Sptd => "Process Tree:",
    }
}

/// `{a, b, c}` in sorted order.
pub fn activities_text(activities: &BTreeSet<Activity>) -> String {
    let labels: Vec<&str> = activities.iter().map(Activity::as_str).collect();
    format!("{{{}}}", labels.join(", "))
}

pub fn instance_text(record: &TaskRecord) -> String {
    match &record.instance {
        Instance::Tsad { trace, .. } => format!("Activity sequence: {}", render_trace(trace)),
        Instance::Asad { pair: (x, y), .. } => format!("1. Activity: {x}\n2. Activity: {y}"),
        Instance::Snap { prefix, .. } => format!("Prefix: {}", render_trace(prefix)),
        Instance::Sdfd { .. } | Instance::Sptd { .. } => String::new(),
    }
}

/// Gold answer as it appears after the answer key. Binary tasks use
/// `true` for anomalous and `false` for valid.
pub fn answer_text(record: &TaskRecord) -> String {
    match &record.instance {
        Instance::Tsad { label, .. } | Instance::Asad { label, .. } => label.token().to_string(),
        Instance::Snap { next_activity, .. } => next_activity.to_string(),
        Instance::Sdfd { gold_edges } => render_edge_lines(gold_edges),
        Instance::Sptd { gold_tree } => gold_tree.clone(),
    }
}

fn fill(block: &str, record: &TaskRecord, answer: Option<&str>) -> String {
    let task = record.task();
    let instance = instance_text(record);
    let key = match answer {
        None | Some("") => answer_key(task).to_string(),
        Some(a) if task == Task::Sdfd => format!("{}\n{a}", answer_key(task)),
        Some(a) => format!("{} {a}", answer_key(task)),
    };
    block
        .lines()
        .filter(|l| !(instance.is_empty() && l.trim() == "{instance}"))
        .map(|l| {
            l.replace("{activities}", &activities_text(&record.activities))
                .replace("{instance}", &instance)
                .replace("{answer_key}", &key)
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FtInstance {
    pub input: String,
    pub target: String,
}

pub fn render_ft(templates: &Templates, record: &TaskRecord) -> FtInstance {
    let t = templates.get(record.task());
    FtInstance {
        input: format!("{}\n\n{}", t.description, fill(&t.block, record, None)),
        target: answer_text(record),
    }
}

/// One emitted prompt-file line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub record_id: String,
    pub task: Task,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    pub shot_record_ids: Vec<String>,
}

/// Training records of one task, indexed for shot sampling. Records are kept
/// sorted by id so sampling does not depend on input order.
#[derive(Debug, Clone)]
pub struct ShotPool {
    task: Task,
    records: Vec<TaskRecord>,
    by_id: HashMap<String, usize>,
    valid: Vec<usize>,
    anomalous: Vec<usize>,
    by_model: Vec<Vec<usize>>,
}

impl ShotPool {
    /// Keeps only records of `task`.
    pub fn new(task: Task, records: impl IntoIterator<Item = TaskRecord>) -> Self {
        let mut records: Vec<TaskRecord> = records.into_iter().filter(|r| r.task() == task).collect();
        records.sort_by(|a, b| a.record_id.cmp(&b.record_id));
        let mut by_id = HashMap::with_capacity(records.len());
        let (mut valid, mut anomalous) = (Vec::new(), Vec::new());
        let mut models: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, r) in records.iter().enumerate() {
            by_id.insert(r.record_id.clone(), i);
            match r.label() {
                Some(Label::Valid) => valid.push(i),
                Some(Label::Anomalous) => anomalous.push(i),
                None => {}
            }
            models.entry(r.model_id.as_str()).or_default().push(i);
        }
        let by_model = models.into_values().collect();
        Self {
            task,
            records,
            by_id,
            valid,
            anomalous,
            by_model,
        }
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    fn sample_class<R: Rng>(
        &self,
        list: &[usize],
        need: usize,
        exclude: Option<usize>,
        rng: &mut R,
    ) -> Result<Vec<usize>, PromptError> {
        let excluded_inside = exclude.is_some_and(|e| list.binary_search(&e).is_ok());
        let available = list.len() - usize::from(excluded_inside);
        if available < need {
            return Err(PromptError::PoolExhausted {
                task: self.task,
                needed: need,
                available,
                detail: "not enough records of one class",
            });
        }
        let k = (need + usize::from(excluded_inside)).min(list.len());
        Ok(index::sample(rng, list.len(), k)
            .into_iter()
            .map(|i| list[i])
            .filter(|&r| Some(r) != exclude)
            .take(need)
            .collect())
    }

    /// One record from each of `shots` distinct models.
    fn sample_models<R: Rng>(
        &self,
        shots: usize,
        exclude: Option<usize>,
        rng: &mut R,
    ) -> Result<Vec<usize>, PromptError> {
        let only_query = |m: &Vec<usize>| m.len() == 1 && Some(m[0]) == exclude;
        let eligible = self.by_model.iter().filter(|m| !only_query(m)).count();
        if eligible < shots {
            return Err(PromptError::PoolExhausted {
                task: self.task,
                needed: shots,
                available: eligible,
                detail: "not enough distinct models",
            });
        }
        let k = (shots + 1).min(self.by_model.len());
        let mut picks = Vec::with_capacity(shots);
        for m in index::sample(rng, self.by_model.len(), k).into_iter() {
            if picks.len() == shots {
                break;
            }
            let candidates: Vec<usize> = self.by_model[m]
                .iter()
                .copied()
                .filter(|&r| Some(r) != exclude)
                .collect();
            if candidates.is_empty() {
                continue;
            }
            picks.push(candidates[rng.gen_range(0..candidates.len())]);
        }
        Ok(picks)
    }

    fn select<R: Rng>(&self, query: &TaskRecord, shots: usize, rng: &mut R) -> Result<Vec<usize>, PromptError> {
        let exclude = self.by_id.get(&query.record_id).copied();
        if self.task.is_binary() {
            let valid = self.sample_class(&self.valid, shots.div_ceil(2), exclude, rng)?;
            let anomalous = self.sample_class(&self.anomalous, shots / 2, exclude, rng)?;
            // Alternate classes, starting with a valid shot.
            let mut out = Vec::with_capacity(shots);
            let (mut v, mut a) = (valid.into_iter(), anomalous.into_iter());
            loop {
                match (v.next(), a.next()) {
                    (None, None) => break,
                    (x, y) => out.extend(x.into_iter().chain(y)),
                }
            }
            Ok(out)
        } else {
            self.sample_models(shots, exclude, rng)
        }
    }
}

/// Renders a few-shot prompt: description, `shots` solved examples drawn from
/// `pool`, then the query with an empty answer slot.
pub fn render_icl(
    templates: &Templates,
    pool: &ShotPool,
    query: &TaskRecord,
    shots: usize,
    seed: u64,
) -> Result<PromptBundle, PromptError> {
    if query.task() != pool.task {
        return Err(PromptError::TaskMismatch {
            expected: pool.task,
            found: query.task(),
        });
    }
    let mut rng = stream_rng(seed, "icl", &query.record_id);
    let chosen = pool.select(query, shots, &mut rng)?;
    let t = templates.get(query.task());
    let mut parts = vec![t.description.clone()];
    let mut shot_ids = Vec::with_capacity(chosen.len());
    for i in chosen {
        let shot = &pool.records[i];
        parts.push(fill(&t.block, shot, Some(&answer_text(shot))));
        shot_ids.push(shot.record_id.clone());
    }
    parts.push(fill(&t.block, query, None));
    Ok(PromptBundle {
        record_id: query.record_id.clone(),
        task: query.task(),
        prompt: Some(parts.join("\n\n")),
        input: None,
        target: None,
        shot_record_ids: shot_ids,
    })
}

pub fn ft_bundle(templates: &Templates, record: &TaskRecord) -> PromptBundle {
    let ft = render_ft(templates, record);
    PromptBundle {
        record_id: record.record_id.clone(),
        task: record.task(),
        prompt: None,
        input: Some(ft.input),
        target: Some(ft.target),
        shot_record_ids: Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn act(s: &str) -> Activity {
        Activity::new(s).unwrap()
    }

    fn acts(items: &[&str]) -> BTreeSet<Activity> {
        items.iter().map(|s| act(s)).collect()
    }

    fn tsad(id: &str, model: &str, label: Label) -> TaskRecord {
        TaskRecord {
            record_id: id.into(),
            model_id: model.into(),
            activities: acts(&["create order", "reject order", "create invoice"]),
            instance: Instance::Tsad {
                trace: vec![act("create order"), act("reject order"), act("create invoice")],
                label,
            },
        }
    }

    fn sdfd(id: &str, model: &str) -> TaskRecord {
        TaskRecord {
            record_id: id.into(),
            model_id: model.into(),
            activities: acts(&["a", "b"]),
            instance: Instance::Sdfd {
                gold_edges: vec![(act("a"), act("b"))],
            },
        }
    }

    #[test]
    fn ft_tsad_format() {
        let ft = render_ft(&Templates::default(), &tsad("r", "m", Label::Anomalous));
        assert_eq!(ft.target, "true");
        assert!(ft.input.ends_with(
            "Activities: {create invoice, create order, reject order}\n\
             Activity sequence: [create order, reject order, create invoice]\n\
             Anomalous:"
        ));
        let ft = render_ft(&Templates::default(), &tsad("r", "m", Label::Valid));
        assert_eq!(ft.target, "false");
    }

    #[test]
    fn ft_asad_and_snap_lines() {
        let asad = TaskRecord {
            record_id: "r".into(),
            model_id: "m".into(),
            activities: acts(&["a", "b"]),
            instance: Instance::Asad {
                pair: (act("b"), act("a")),
                label: Label::Valid,
            },
        };
        assert!(render_ft(&Templates::default(), &asad)
            .input
            .ends_with("Activities: {a, b}\n1. Activity: b\n2. Activity: a\nAnomalous:"));
        let snap = TaskRecord {
            record_id: "r".into(),
            model_id: "m".into(),
            activities: acts(&["a", "b"]),
            instance: Instance::Snap {
                prefix: vec![act("a")],
                next_activity: act("b"),
            },
        };
        let ft = render_ft(&Templates::default(), &snap);
        assert!(ft.input.ends_with("Prefix: [a]\nNext activity:"));
        assert_eq!(ft.target, "b");
    }

    #[test]
    fn ft_sptd_target_is_tree_text() {
        let rec = TaskRecord {
            record_id: "r".into(),
            model_id: "m".into(),
            activities: acts(&["a", "b"]),
            instance: Instance::Sptd {
                gold_tree: "->('a', 'b')".into(),
            },
        };
        let ft = render_ft(&Templates::default(), &rec);
        assert_eq!(ft.target, "->('a', 'b')");
        assert!(ft.input.ends_with("Activities: {a, b}\nProcess Tree:"));
    }

    #[test]
    fn icl_binary_balances_classes() {
        let pool_records: Vec<_> = (0..10)
            .map(|i| {
                let label = if i % 2 == 0 { Label::Valid } else { Label::Anomalous };
                tsad(&format!("p{i}"), &format!("m{i}"), label)
            })
            .collect();
        let pool = ShotPool::new(Task::Tsad, pool_records.clone());
        let query = tsad("q", "mq", Label::Valid);
        let b = render_icl(&Templates::default(), &pool, &query, 6, 1).unwrap();
        assert_eq!(b.shot_record_ids.len(), 6);
        let labels: Vec<Label> = b
            .shot_record_ids
            .iter()
            .map(|id| {
                pool_records
                    .iter()
                    .find(|r| &r.record_id == id)
                    .unwrap()
                    .label()
                    .unwrap()
            })
            .collect();
        assert_eq!(labels, [Label::Valid, Label::Anomalous].repeat(3),);
        let prompt = b.prompt.unwrap();
        assert!(prompt.ends_with("Anomalous:"));
        assert_eq!(prompt.matches("Anomalous: true").count(), 3);
        assert_eq!(prompt.matches("Anomalous: false").count(), 3);
    }

    #[test]
    fn icl_is_deterministic_and_order_independent() {
        let recs: Vec<_> = (0..8).map(|i| sdfd(&format!("s{i}"), &format!("m{i}"))).collect();
        let query = sdfd("q", "mq");
        let a = render_icl(
            &Templates::default(),
            &ShotPool::new(Task::Sdfd, recs.clone()),
            &query,
            5,
            3,
        )
        .unwrap();
        let mut rev = recs;
        rev.reverse();
        let b = render_icl(&Templates::default(), &ShotPool::new(Task::Sdfd, rev), &query, 5, 3).unwrap();
        assert_eq!(a, b);
        let models: BTreeSet<_> = a.shot_record_ids.iter().collect();
        assert_eq!(models.len(), 5);
        assert_eq!(
            a.prompt
                .as_ref()
                .unwrap()
                .matches("Directly-follows pairs:\n'a' -> 'b'")
                .count(),
            5
        );
    }

    #[test]
    fn self_shot_forbidden() {
        let x = tsad("x", "m", Label::Valid);
        let pool = ShotPool::new(Task::Tsad, vec![x.clone()]);
        assert!(matches!(
            render_icl(&Templates::default(), &pool, &x, 1, 0),
            Err(PromptError::PoolExhausted { .. })
        ));
        let y = sdfd("y", "m");
        let pool = ShotPool::new(Task::Sdfd, vec![y.clone()]);
        assert!(matches!(
            render_icl(&Templates::default(), &pool, &y, 1, 0),
            Err(PromptError::PoolExhausted { .. })
        ));
    }

    #[test]
    fn query_never_its_own_shot() {
        let recs: Vec<_> = (0..4)
            .map(|i| {
                tsad(
                    &format!("p{i}"),
                    "m",
                    if i < 2 { Label::Valid } else { Label::Anomalous },
                )
            })
            .collect();
        let pool = ShotPool::new(Task::Tsad, recs.clone());
        for seed in 0..50 {
            let b = render_icl(&Templates::default(), &pool, &recs[0], 2, seed).unwrap();
            assert!(!b.shot_record_ids.contains(&"p0".to_string()));
            assert!(b.shot_record_ids.contains(&"p1".to_string()));
        }
    }

    #[test]
    fn template_parsing() {
        assert!(Template::parse(Task::Tsad, "desc only").is_err());
        assert!(Template::parse(Task::Tsad, "d\n---\n{instance}").is_err());
        let t = Template::parse(
            Task::Sdfd,
            "Describe.\n---\nActs: {activities}\n{instance}\n{answer_key}\n",
        )
        .unwrap();
        assert_eq!(
            fill(&t.block, &sdfd("r", "m"), None),
            "Acts: {a, b}\nDirectly-follows pairs:"
        );
    }
}
