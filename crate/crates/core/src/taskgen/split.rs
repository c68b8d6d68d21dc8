//! Leakage-free, stratified train/validation/test assignment of models.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use petgraph::unionfind::UnionFind;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ProcessModel, Trace};
use crate::seeding::stream_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Validation, Split::Test];

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        })
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "train" => Ok(Split::Train),
            "validation" | "val" | "valid" => Ok(Split::Validation),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SplitError {
    #[error("split ratios must be non-negative and sum to 1, got {0:?}")]
    InvalidRatios([f64; 3]),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios([f64; 3]);

impl SplitRatios {
    pub fn new(train: f64, validation: f64, test: f64) -> Result<Self, SplitError> {
        let r = [train, validation, test];
        if r.iter().any(|x| !x.is_finite() || *x < 0.0) || (r.iter().sum::<f64>() - 1.0).abs() > 1e-6 {
            return Err(SplitError::InvalidRatios(r));
        }
        Ok(Self(r))
    }

    pub fn get(&self, split: Split) -> f64 {
        self.0[split.index()]
    }

    pub fn as_array(&self) -> [f64; 3] {
        self.0
    }
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self([0.70, 0.20, 0.10])
    }
}

/// Activity-count strata: 2-3, 4-5, 6-8, 9-12, 13+.
pub const STRATA: [(usize, usize); 5] = [(0, 3), (4, 5), (6, 8), (9, 12), (13, usize::MAX)];

pub fn stratum_of(activity_count: usize) -> usize {
    STRATA
        .iter()
        .position(|&(lo, hi)| (lo..=hi).contains(&activity_count))
        .expect("strata cover all counts")
}

/// Component counts per split inside one stratum.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StratumSummary {
    pub stratum: usize,
    pub components: usize,
    pub train: usize,
    pub validation: usize,
    pub test: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SplitAssignment {
    pub assignments: BTreeMap<String, Split>,
    pub strata: Vec<StratumSummary>,
}

impl SplitAssignment {
    pub fn get(&self, model_id: &str) -> Option<Split> {
        self.assignments.get(model_id).copied()
    }

    pub fn count(&self, split: Split) -> usize {
        self.assignments.values().filter(|&&s| s == split).count()
    }
}

/// Groups models that share any non-empty execution sequence. Components are
/// returned as sorted model indices, ordered by their smallest model id.
pub fn leakage_components(models: &[ProcessModel]) -> Vec<Vec<usize>> {
    let mut uf = UnionFind::<usize>::new(models.len());
    let mut owner: HashMap<&Trace, usize> = HashMap::new();
    for (i, m) in models.iter().enumerate() {
        for s in m.non_empty_sequences() {
            match owner.get(s) {
                Some(&j) => {
                    uf.union(i, j);
                }
                None => {
                    owner.insert(s, i);
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..models.len() {
        groups.entry(uf.find(i)).or_default().push(i);
    }
    let mut comps: Vec<Vec<usize>> = groups.into_values().collect();
    for c in &mut comps {
        c.sort_by(|&a, &b| models[a].model_id().cmp(models[b].model_id()));
    }
    comps.sort_by(|a, b| models[a[0]].model_id().cmp(models[b[0]].model_id()));
    comps
}

/// Assigns whole leakage components to splits. Components are binned by the
/// activity count of their largest model; within a bin they are shuffled and
/// each goes to the split furthest below its target share.
pub fn split_corpus(models: &[ProcessModel], ratios: SplitRatios, seed: u64) -> SplitAssignment {
    let comps = leakage_components(models);
    let mut bins: Vec<Vec<&Vec<usize>>> = vec![Vec::new(); STRATA.len()];
    for c in &comps {
        let size = c.iter().map(|&i| models[i].activity_set().len()).max().unwrap_or(0);
        bins[stratum_of(size)].push(c);
    }

    let mut out = SplitAssignment::default();
    for (stratum, mut bin) in bins.into_iter().enumerate() {
        if bin.is_empty() {
            continue;
        }
        let mut rng = stream_rng(seed, "split", &stratum.to_string());
        bin.shuffle(&mut rng);
        let mut counts = [0usize; 3];
        for (n, comp) in bin.iter().enumerate() {
            let split = most_behind(&counts, n + 1, &ratios);
            counts[split.index()] += 1;
            for &i in comp.iter() {
                out.assignments.insert(models[i].model_id().to_string(), split);
            }
        }
        out.strata.push(StratumSummary {
            stratum,
            components: bin.len(),
            train: counts[0],
            validation: counts[1],
            test: counts[2],
        });
    }
    out
}

fn most_behind(counts: &[usize; 3], total_after: usize, ratios: &SplitRatios) -> Split {
    let mut best = Split::Train;
    let mut best_deficit = f64::NEG_INFINITY;
    for s in Split::ALL {
        let deficit = ratios.get(s) * total_after as f64 - counts[s.index()] as f64;
        if deficit > best_deficit + 1e-9 {
            best = s;
            best_deficit = deficit;
        }
    }
    best
}
