//! Random reference predictors.

use std::collections::BTreeSet;

use rand::seq::IteratorRandom;
use rand::Rng;

use crate::eval::{Prediction, PredictionFormat};
use crate::model::{Activity, Footprint, Relation};
use crate::seeding::stream_rng;
use crate::semantics::dfg_of_footprint;
use crate::taskgen::{Label, Task, TaskRecord};
use crate::tree_dsl::render_dfg_edges;

/// Picks one class per record with equal probability: Valid or Anomalous for
/// the binary tasks, an activity of the record's model for S-NAP. Discovery
/// records are skipped.
pub fn random_classification_baseline(records: &[TaskRecord], seed: u64) -> Vec<Prediction> {
    records
        .iter()
        .filter_map(|r| {
            let mut rng = stream_rng(seed, "random_class", &r.record_id);
            let text = match r.task() {
                Task::Tsad | Task::Asad => {
                    let label = if rng.gen_bool(0.5) {
                        Label::Anomalous
                    } else {
                        Label::Valid
                    };
                    label.as_str().to_string()
                }
                Task::Snap => r.activities.iter().choose(&mut rng)?.as_str().to_string(),
                Task::Sdfd | Task::Sptd => return None,
            };
            Some(Prediction::text(r.record_id.clone(), text))
        })
        .collect()
}

pub fn random_footprint_with<R: Rng>(activities: &BTreeSet<Activity>, rng: &mut R) -> Footprint {
    let n = activities.len();
    let mut cells = vec![Relation::Unrelated; n * n];
    for i in 0..n {
        cells[i * n + i] = if rng.gen_bool(0.5) {
            Relation::Parallel
        } else {
            Relation::Unrelated
        };
        for j in i + 1..n {
            let r = Relation::ALL[rng.gen_range(0..4)];
            cells[i * n + j] = r;
            cells[j * n + i] = r.mirrored();
        }
    }
    Footprint::from_matrix(activities, cells).expect("generated matrix is consistent")
}

/// One uniformly random footprint over `activities`.
pub fn random_footprint_baseline(activities: &BTreeSet<Activity>, seed: u64) -> Footprint {
    random_footprint_with(activities, &mut stream_rng(seed, "random_footprint", ""))
}

/// A random footprint per discovery record, emitted as the edge list of its
/// DFG. Classification records are skipped.
pub fn random_footprint_predictions(records: &[TaskRecord], seed: u64) -> Vec<Prediction> {
    records
        .iter()
        .filter(|r| !r.task().is_classification())
        .map(|r| {
            let mut rng = stream_rng(seed, "random_footprint", &r.record_id);
            let fp = random_footprint_with(&r.activities, &mut rng);
            Prediction {
                record_id: r.record_id.clone(),
                prediction: render_dfg_edges(&dfg_of_footprint(&fp)),
                format: PredictionFormat::Edges,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semantics::footprint;

    fn acts(names: &[&str]) -> BTreeSet<Activity> {
        names.iter().map(|a| Activity::new(a).unwrap()).collect()
    }

    #[test]
    fn single_activity_footprint() {
        for seed in 0..20 {
            let fp = random_footprint_baseline(&acts(&["a"]), seed);
            assert_eq!(fp.len(), 1);
            let (_, _, r) = fp.iter().next().unwrap();
            assert!(matches!(r, Relation::Parallel | Relation::Unrelated));
        }
    }

    #[test]
    fn footprint_survives_edge_round_trip() {
        let a = acts(&["a", "b", "c", "d"]);
        for seed in 0..50 {
            let fp = random_footprint_baseline(&a, seed);
            assert_eq!(footprint(&dfg_of_footprint(&fp)), fp);
        }
    }

    #[test]
    fn seeded() {
        let a = acts(&["a", "b", "c"]);
        assert_eq!(random_footprint_baseline(&a, 4), random_footprint_baseline(&a, 4));
    }
}
