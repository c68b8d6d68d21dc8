use std::collections::{BTreeSet, HashMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::model::{Activity, ModelError, ProcessModel, ProcessTree};
use crate::semantics::{playout, PlayoutError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusEntry {
    pub model_id: String,
    pub name: Option<String>,
    pub tree: ProcessTree,
}

/// A model that passed validation, with the tree it was played out from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdmittedModel {
    pub model: ProcessModel,
    pub tree: ProcessTree,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum RejectionReason {
    /// Tree text did not parse; produced by the file loader, not by validation.
    InvalidTree {
        message: String,
    },
    DuplicateModelId,
    DuplicateLabels {
        labels: Vec<String>,
    },
    LanguageTooLarge {
        limit: usize,
    },
    EmptyLanguage,
    TooFewActivities {
        found: usize,
    },
    DuplicateActivitySet {
        first_model_id: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub model_id: String,
    #[serde(flatten)]
    pub reason: RejectionReason,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CorpusReport {
    pub admitted: Vec<AdmittedModel>,
    pub rejections: Vec<Rejection>,
}

/// Plays out every entry and applies the admission rules. Input order decides
/// which of two models with the same activity set is kept. Never aborts.
pub fn validate_corpus(entries: &[CorpusEntry], max_sequences: usize) -> CorpusReport {
    let played: Vec<Result<ProcessModel, RejectionReason>> =
        entries.par_iter().map(|e| admit_one(e, max_sequences)).collect();

    let mut report = CorpusReport::default();
    let mut seen_ids = HashSet::new();
    let mut seen_sets: HashMap<BTreeSet<Activity>, String> = HashMap::new();
    for (entry, outcome) in entries.iter().zip(played) {
        let reject = |reason| Rejection {
            model_id: entry.model_id.clone(),
            reason,
        };
        if !seen_ids.insert(entry.model_id.as_str()) {
            report.rejections.push(reject(RejectionReason::DuplicateModelId));
            continue;
        }
        let model = match outcome {
            Ok(m) => m,
            Err(reason) => {
                report.rejections.push(reject(reason));
                continue;
            }
        };
        if let Some(first) = seen_sets.get(model.activity_set()) {
            report.rejections.push(reject(RejectionReason::DuplicateActivitySet {
                first_model_id: first.clone(),
            }));
            continue;
        }
        seen_sets.insert(model.activity_set().clone(), entry.model_id.clone());
        report.admitted.push(AdmittedModel {
            model,
            tree: entry.tree.clone(),
        });
    }
    report
}

fn admit_one(entry: &CorpusEntry, max_sequences: usize) -> Result<ProcessModel, RejectionReason> {
    let dups = entry.tree.duplicate_labels();
    if !dups.is_empty() {
        return Err(RejectionReason::DuplicateLabels {
            labels: dups.iter().map(|a| a.to_string()).collect(),
        });
    }
    let language = playout(&entry.tree, max_sequences).map_err(|e| match e {
        PlayoutError::LanguageTooLarge { limit } => RejectionReason::LanguageTooLarge { limit },
        PlayoutError::InvalidTree(err) => RejectionReason::InvalidTree {
            message: err.to_string(),
        },
    })?;
    language
        .into_model(entry.model_id.clone(), entry.name.clone())
        .map_err(|e| match e {
            ModelError::EmptyLanguage => RejectionReason::EmptyLanguage,
            ModelError::TooFewActivities { found } => RejectionReason::TooFewActivities { found },
            other => RejectionReason::InvalidTree {
                message: other.to_string(),
            },
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semantics::DEFAULT_MAX_SEQUENCES;
    use crate::tree_dsl::parse_tree;

    fn entry(id: &str, tree: &str) -> CorpusEntry {
        CorpusEntry {
            model_id: id.into(),
            name: None,
            tree: parse_tree(tree).unwrap(),
        }
    }

    #[test]
    fn admits_order_example() {
        let r = validate_corpus(
            &[entry(
                "m1",
                "->('receive order', X(->('accept order', 'deliver package'), 'reject order'))",
            )],
            DEFAULT_MAX_SEQUENCES,
        );
        assert!(r.rejections.is_empty());
        assert_eq!(r.admitted[0].model.sequences().len(), 2);
    }

    #[test]
    fn duplicate_activity_set_keeps_first() {
        let r = validate_corpus(
            &[entry("a", "->('x', 'y')"), entry("b", "X('y', 'x')")],
            DEFAULT_MAX_SEQUENCES,
        );
        assert_eq!(r.admitted.len(), 1);
        assert_eq!(r.admitted[0].model.model_id(), "a");
        assert_eq!(
            r.rejections,
            vec![Rejection {
                model_id: "b".into(),
                reason: RejectionReason::DuplicateActivitySet {
                    first_model_id: "a".into()
                }
            }]
        );
    }

    #[test]
    fn rejection_reasons() {
        let entries = [
            entry("single", "'a'"),
            entry("silent", "X(tau, tau)"),
            entry("big", "+('a','b','c','d','e')"),
            entry("dups", "->('a', 'a')"),
            entry("ok", "->('p', 'q')"),
            entry("ok", "->('r', 's')"),
        ];
        let r = validate_corpus(&entries, 100);
        let reasons: Vec<_> = r.rejections.iter().map(|x| x.reason.clone()).collect();
        assert_eq!(
            reasons,
            vec![
                RejectionReason::TooFewActivities { found: 1 },
                RejectionReason::EmptyLanguage,
                RejectionReason::LanguageTooLarge { limit: 100 },
                RejectionReason::DuplicateLabels {
                    labels: vec!["a".into()]
                },
                RejectionReason::DuplicateModelId,
            ]
        );
        assert_eq!(r.admitted.len(), 1);
    }

    #[test]
    fn rejection_json_shape() {
        let r = Rejection {
            model_id: "m".into(),
            reason: RejectionReason::TooFewActivities { found: 1 },
        };
        assert_eq!(
            serde_json::to_string(&r).unwrap(),
            r#"{"model_id":"m","reason":"too_few_activities","found":1}"#
        );
    }
}
