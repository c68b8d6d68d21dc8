use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::model::{Activity, Dfg, ModelError, ProcessTree, Trace};
use crate::tree_dsl::{parse_tree, ParseError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Tsad,
    Asad,
    Snap,
    Sdfd,
    Sptd,
}

impl Task {
    pub const ALL: [Task; 5] = [Task::Tsad, Task::Asad, Task::Snap, Task::Sdfd, Task::Sptd];

    pub fn is_classification(self) -> bool {
        matches!(self, Task::Tsad | Task::Asad | Task::Snap)
    }

    pub fn is_binary(self) -> bool {
        matches!(self, Task::Tsad | Task::Asad)
    }

    /// File-name friendly identifier.
    pub fn key(self) -> &'static str {
        match self {
            Task::Tsad => "tsad",
            Task::Asad => "asad",
            Task::Snap => "snap",
            Task::Sdfd => "sdfd",
            Task::Sptd => "sptd",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::Tsad => "T-SAD",
            Task::Asad => "A-SAD",
            Task::Snap => "S-NAP",
            Task::Sdfd => "S-DFD",
            Task::Sptd => "S-PTD",
        })
    }
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        Task::ALL
            .into_iter()
            .find(|t| t.key() == key)
            .ok_or_else(|| format!("unknown task `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Valid,
    Anomalous,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Valid => "Valid",
            Label::Anomalous => "Anomalous",
        }
    }

    /// Answer token used in prompts: `true` marks an anomaly.
    pub fn token(self) -> &'static str {
        match self {
            Label::Valid => "false",
            Label::Anomalous => "true",
        }
    }
}

/// Task-specific instance together with its gold answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "lowercase")]
pub enum Instance {
    Tsad { trace: Trace, label: Label },
    Asad { pair: (Activity, Activity), label: Label },
    Snap { prefix: Trace, next_activity: Activity },
    Sdfd { gold_edges: Vec<(Activity, Activity)> },
    Sptd { gold_tree: String },
}

/// One benchmark record. Serialized as a flat JSON object with a `task` tag.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskRecord {
    pub record_id: String,
    pub model_id: String,
    pub activities: BTreeSet<Activity>,
    #[serde(flatten)]
    pub instance: Instance,
}

impl TaskRecord {
    pub fn task(&self) -> Task {
        match self.instance {
            Instance::Tsad { .. } => Task::Tsad,
            Instance::Asad { .. } => Task::Asad,
            Instance::Snap { .. } => Task::Snap,
            Instance::Sdfd { .. } => Task::Sdfd,
            Instance::Sptd { .. } => Task::Sptd,
        }
    }

    /// Gold class for the binary tasks.
    pub fn label(&self) -> Option<Label> {
        match self.instance {
            Instance::Tsad { label, .. } | Instance::Asad { label, .. } => Some(label),
            _ => None,
        }
    }

    /// Gold DFG for S-DFD records, over the record's activity set.
    pub fn gold_dfg(&self) -> Option<Result<Dfg, ModelError>> {
        match &self.instance {
            Instance::Sdfd { gold_edges } => {
                Some(Dfg::new(self.activities.clone(), gold_edges.iter().cloned().collect()))
            }
            _ => None,
        }
    }

    pub fn gold_tree(&self) -> Option<Result<ProcessTree, ParseError>> {
        match &self.instance {
            Instance::Sptd { gold_tree } => Some(parse_tree(gold_tree)),
            _ => None,
        }
    }
}
