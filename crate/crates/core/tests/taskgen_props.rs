use std::collections::BTreeSet;

use procsem::model::ProcessModel;
use procsem::semantics::eventually_follows;
use procsem::synth::{synth_corpus, SynthParams};
use procsem::taskgen::{
    gen_asad, gen_snap, gen_tsad, split_corpus, validate_corpus, AdmittedModel, Instance, Label, Split, SplitRatios,
    TsadParams,
};

fn corpus(n: usize, seed: u64) -> Vec<AdmittedModel> {
    let params = SynthParams {
        n_models: n,
        ..Default::default()
    };
    let report = validate_corpus(&synth_corpus(&params, seed), 32_768);
    assert!(report.rejections.is_empty(), "{:?}", report.rejections);
    report.admitted
}

#[test]
fn tsad_labels_agree_with_membership() {
    for am in corpus(60, 3) {
        for r in gen_tsad(&am.model, 3, &TsadParams::default()) {
            let Instance::Tsad { trace, label } = &r.instance else {
                unreachable!()
            };
            assert_eq!(am.model.allows(trace), *label == Label::Valid, "{}", r.record_id);
            assert!(r.record_id.starts_with("tsad:"));
        }
    }
}

#[test]
fn asad_positives_are_ef_and_negatives_are_not() {
    for am in corpus(60, 4) {
        let m = &am.model;
        let ef = eventually_follows(m);
        let out = gen_asad(m, 4);
        let pos: BTreeSet<_> = out
            .records
            .iter()
            .filter(|r| r.label() == Some(Label::Valid))
            .map(|r| match &r.instance {
                Instance::Asad { pair, .. } => pair.clone(),
                _ => unreachable!(),
            })
            .collect();
        let neg: Vec<_> = out
            .records
            .iter()
            .filter(|r| r.label() == Some(Label::Anomalous))
            .map(|r| match &r.instance {
                Instance::Asad { pair, .. } => pair.clone(),
                _ => unreachable!(),
            })
            .collect();
        assert_eq!(&pos, ef.pairs());
        let neg_set: BTreeSet<_> = neg.iter().cloned().collect();
        assert_eq!(neg_set.len(), neg.len());
        assert!(neg_set.is_disjoint(&pos));
        let a = m.activity_set().len();
        if a * a - ef.len() >= ef.len() {
            assert_eq!(neg.len(), pos.len());
            assert!(out.imbalance.is_none());
        } else {
            assert_eq!(neg.len(), a * a - ef.len());
            assert!(out.imbalance.is_some());
        }
    }
}

fn continuable(m: &ProcessModel, prefix: &[procsem::Activity], next: &procsem::Activity) -> bool {
    m.sequences()
        .iter()
        .any(|s| s.len() > prefix.len() && s[..prefix.len()] == *prefix && s[prefix.len()] == *next)
}

#[test]
fn snap_counts_and_gold_are_continuable() {
    for am in corpus(60, 5) {
        let m = &am.model;
        let out = gen_snap(m);
        let expected: usize = m.sequences().iter().map(|s| s.len().saturating_sub(1)).sum();
        assert_eq!(out.pre_dedup, expected);
        for r in &out.records {
            let Instance::Snap { prefix, next_activity } = &r.instance else {
                unreachable!()
            };
            assert!(!prefix.is_empty());
            assert!(continuable(m, prefix, next_activity));
        }
    }
}

#[test]
fn split_has_no_sequence_leakage() {
    let models: Vec<ProcessModel> = corpus(150, 6).into_iter().map(|a| a.model).collect();
    for seed in 0..5 {
        let split = split_corpus(&models, SplitRatios::default(), seed);
        let train: BTreeSet<_> = models
            .iter()
            .filter(|m| split.get(m.model_id()) == Some(Split::Train))
            .flat_map(|m| m.non_empty_sequences())
            .collect();
        for m in &models {
            if split.get(m.model_id()) != Some(Split::Train) {
                assert!(m.non_empty_sequences().all(|s| !train.contains(s)));
            }
        }
        assert_eq!(split.assignments.len(), models.len());
    }
}
