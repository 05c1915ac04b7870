use std::collections::HashSet;

use causalreg::data::{
    embed_document, synth_generate, tokenize, vectorize_bow, Corpus, Document, EmbeddingTable, GroupWeightTriple,
    SplitTag, SynthConfig, TokenGroups, Vocabulary,
};
use causalreg::eval::{causal_fraction_topn, delta_dp, delta_eo, SensitiveAssignment};
use causalreg::model::{gradient, grouped_penalty, total_loss, DenseMatrix, DesignMatrix, LabelVector};
use causalreg::optim::{adam_step, AdamState};
use causalreg::{FeatureGroups, Group, LinearModel, PenaltyConfig};
use proptest::prelude::*;

fn group() -> impl Strategy<Value = Group> {
    prop_oneof![Just(Group::Causal), Just(Group::Spurious), Just(Group::Remaining)]
}

fn penalty() -> impl Strategy<Value = PenaltyConfig> {
    (0.0..50.0f64, 0.0..50.0f64, 0.0..50.0f64).prop_map(|(c, s, r)| PenaltyConfig::new(c, s, r).unwrap())
}

/// A small dense problem: rows, labels, group assignment.
fn problem() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<u8>, Vec<Group>)> {
    (1usize..8, 1usize..7).prop_flat_map(|(n, d)| {
        (
            prop::collection::vec(prop::collection::vec(-2.0..2.0f64, d), n),
            prop::collection::vec(0u8..2, n),
            prop::collection::vec(group(), d),
        )
    })
}

fn params(d: usize) -> impl Strategy<Value = (Vec<f64>, f64)> {
    (prop::collection::vec(-3.0..3.0f64, d), -2.0..2.0f64)
}

fn design(rows: &[Vec<f64>]) -> DesignMatrix {
    DesignMatrix::Dense(DenseMatrix::from_rows(rows[0].len(), rows).unwrap())
}

fn sensitive(values: &[bool]) -> SensitiveAssignment {
    SensitiveAssignment::new("s", values.iter().map(|&b| if b { "a" } else { "b" }.to_string()).collect())
}

proptest! {
    #[test]
    fn penalty_is_invariant_under_feature_permutation(
        (weights, assignment, perm) in (1usize..12).prop_flat_map(|d| (
            prop::collection::vec(-5.0..5.0f64, d),
            prop::collection::vec(group(), d),
            Just((0..d).collect::<Vec<_>>()).prop_shuffle(),
        )),
        cfg in penalty(),
    ) {
        let model = LinearModel::new(weights.clone(), 0.3);
        let groups = FeatureGroups::from_assignment(assignment.clone());
        let permuted = LinearModel::new(perm.iter().map(|&i| weights[i]).collect(), 0.3);
        let pgroups = FeatureGroups::from_assignment(perm.iter().map(|&i| assignment[i]).collect());
        let a = grouped_penalty(&model, &groups, &cfg).unwrap();
        let b = grouped_penalty(&permuted, &pgroups, &cfg).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
    }

    #[test]
    fn total_loss_is_convex_along_segments(
        ((rows, labels, assignment), (w1, b1), (w2, b2)) in problem().prop_flat_map(|p| {
            let d = p.0[0].len();
            (Just(p), params(d), params(d))
        }),
        cfg in penalty(),
        t in 0.0..1.0f64,
    ) {
        let x = design(&rows);
        let y = LabelVector::new(labels).unwrap();
        let groups = FeatureGroups::from_assignment(assignment);
        let m1 = LinearModel::new(w1.clone(), b1);
        let m2 = LinearModel::new(w2.clone(), b2);
        let mix = LinearModel::new(
            w1.iter().zip(&w2).map(|(a, b)| t * a + (1.0 - t) * b).collect(),
            t * b1 + (1.0 - t) * b2,
        );
        let l = |m: &LinearModel| total_loss(m, &x, &y, &groups, &cfg).unwrap();
        let chord = t * l(&m1) + (1.0 - t) * l(&m2);
        prop_assert!(l(&mix) <= chord + 1e-9 * chord.max(1.0));
    }

    #[test]
    fn gradient_matches_central_differences(
        ((rows, labels, assignment), (w, b)) in problem().prop_flat_map(|p| {
            let d = p.0[0].len();
            (Just(p), params(d))
        }),
        cfg in penalty(),
    ) {
        let x = design(&rows);
        let y = LabelVector::new(labels).unwrap();
        let groups = FeatureGroups::from_assignment(assignment);
        let model = LinearModel::new(w, b);
        let g = gradient(&model, &x, &y, &groups, &cfg).unwrap();
        let h = 1e-6;
        for k in 0..=model.dim() {
            let shifted = |delta: f64| {
                let mut m = model.clone();
                if k < m.dim() { m.weights[k] += delta } else { m.bias += delta }
                total_loss(&m, &x, &y, &groups, &cfg).unwrap()
            };
            let numeric = (shifted(h) - shifted(-h)) / (2.0 * h);
            let analytic = if k < model.dim() { g.weights[k] } else { g.bias };
            prop_assert!((numeric - analytic).abs() <= 1e-5 * analytic.abs().max(1.0), "k={} {} vs {}", k, numeric, analytic);
        }
    }

    #[test]
    fn predicted_probabilities_stay_open(
        x in prop::collection::vec(-1e3..1e3f64, 1..6),
        scale in prop::sample::select(vec![1e-3, 1.0, 1e3, 1e300]),
        bias in -1e3..1e3f64,
    ) {
        let model = LinearModel::new(x.iter().map(|v| v * scale).collect(), bias);
        let p = model.predict_proba(&x).unwrap();
        prop_assert!(p > 0.0 && p < 1.0, "p = {}", p);
    }

    #[test]
    fn fairness_gaps_are_symmetric_and_order_free(
        (rows, perm) in (2usize..30).prop_flat_map(|n| (
            prop::collection::vec((0u8..2, 0u8..2, any::<bool>()), n),
            Just((0..n).collect::<Vec<_>>()).prop_shuffle(),
        )),
    ) {
        let preds: Vec<u8> = rows.iter().map(|r| r.0).collect();
        let labels = LabelVector::new(rows.iter().map(|r| r.1).collect()).unwrap();
        let flags: Vec<bool> = rows.iter().map(|r| r.2).collect();
        let sens = sensitive(&flags);
        let eo = delta_eo(&preds, &labels, &sens, ("a", "b")).ok();
        let dp = delta_dp(&preds, &sens, ("a", "b")).ok();

        let eo_swapped = delta_eo(&preds, &labels, &sens, ("b", "a"));
        let dp_swapped = delta_dp(&preds, &sens, ("b", "a"));
        prop_assert_eq!(eo, eo_swapped.ok());
        prop_assert_eq!(dp, dp_swapped.ok());

        let pp: Vec<u8> = perm.iter().map(|&i| preds[i]).collect();
        let pl = labels.select(&perm);
        let ps = sensitive(&perm.iter().map(|&i| flags[i]).collect::<Vec<_>>());
        prop_assert_eq!(eo, delta_eo(&pp, &pl, &ps, ("a", "b")).ok());
        prop_assert_eq!(dp, delta_dp(&pp, &ps, ("a", "b")).ok());

        let dup: Vec<usize> = (0..preds.len()).chain(0..preds.len()).collect();
        let dp2: Vec<u8> = dup.iter().map(|&i| preds[i]).collect();
        let ds = sensitive(&dup.iter().map(|&i| flags[i]).collect::<Vec<_>>());
        let tol = |a: f64, b: f64| (a - b).abs() <= 1e-12;
        if let Some(v) = eo {
            prop_assert!(tol(v, delta_eo(&dp2, &labels.select(&dup), &ds, ("a", "b")).unwrap()));
        }
        if let Some(v) = dp {
            prop_assert!(tol(v, delta_dp(&dp2, &ds, ("a", "b")).unwrap()));
        }
    }

    #[test]
    fn constant_classifier_has_no_fairness_gap(
        rows in prop::collection::vec((0u8..2, any::<bool>()), 2..30),
        constant in 0u8..2,
    ) {
        let preds = vec![constant; rows.len()];
        let labels = LabelVector::new(rows.iter().map(|r| r.0).collect()).unwrap();
        let sens = sensitive(&rows.iter().map(|r| r.1).collect::<Vec<_>>());
        if let Ok(v) = delta_eo(&preds, &labels, &sens, ("a", "b")) {
            prop_assert_eq!(v, 0.0);
        }
        if let Ok(v) = delta_dp(&preds, &sens, ("a", "b")) {
            prop_assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn causal_fraction_ignores_positive_rescaling(
        (weights, assignment) in (1usize..20).prop_flat_map(|d| (
            prop::collection::vec(-5.0..5.0f64, d),
            prop::collection::vec(group(), d),
        )),
        scale in prop::sample::select(vec![1e-6, 0.5, 3.0, 1e6]),
        n in 1usize..25,
    ) {
        let groups = FeatureGroups::from_assignment(assignment);
        let a = causal_fraction_topn(&LinearModel::new(weights.clone(), 0.0), &groups, &[n]);
        let b = causal_fraction_topn(&LinearModel::new(weights.iter().map(|w| w * scale).collect(), 1.0), &groups, &[n]);
        prop_assert_eq!(a.ok(), b.ok());
    }

    #[test]
    fn twin_lookup_is_an_involution(
        docs in prop::collection::vec((0u8..2, any::<bool>()), 1..20),
    ) {
        let mut documents = Vec::new();
        for (k, &(label, paired)) in docs.iter().enumerate() {
            let pair_id = paired.then(|| format!("p{k}"));
            documents.push(Document { text: format!("doc {k}"), label, split: SplitTag::Train, pair_id: pair_id.clone() });
            if paired {
                documents.push(Document { text: format!("twin {k}"), label: 1 - label, split: SplitTag::CtfTrain, pair_id });
            }
        }
        let corpus = Corpus::new(documents);
        let twins = corpus.twins().unwrap();
        for (i, t) in twins.iter().enumerate() {
            if let Some(j) = *t {
                prop_assert_eq!(twins[j], Some(i));
                prop_assert_ne!(corpus.documents[i].label, corpus.documents[j].label);
            }
        }
        prop_assert_eq!(twins.iter().filter(|t| t.is_some()).count(), 2 * docs.iter().filter(|d| d.1).count());
    }

    #[test]
    fn uniform_weights_give_the_plain_mean(
        vectors in prop::collection::vec(prop::collection::vec(-3.0..3.0f64, 3), 1..6),
        picks in prop::collection::vec(0usize..8, 1..10),
        labelled in prop::collection::vec(group(), 8),
    ) {
        let mut table = EmbeddingTable::new(3);
        for (i, v) in vectors.iter().enumerate() {
            table.insert(format!("w{i}"), v.clone()).unwrap();
        }
        let tokens: Vec<String> = picks.iter().map(|i| format!("w{i}")).collect();
        let groups: TokenGroups = labelled.iter().enumerate().map(|(i, g)| (format!("w{i}"), *g)).collect();
        let got = embed_document(&tokens, &table, &groups, &GroupWeightTriple::UNIFORM);
        for k in 0..3 {
            let sum: f64 = picks.iter().filter_map(|&i| vectors.get(i)).map(|v| v[k]).sum();
            let mean = sum / picks.len() as f64;
            prop_assert!((got[k] - mean).abs() <= 1e-12);
        }
    }

    #[test]
    fn bag_of_words_is_binary(
        texts in prop::collection::vec(prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d", "A", "b!", "e"]), 0..12), 1..8),
    ) {
        let docs: Vec<Vec<String>> = texts.iter().map(|t| tokenize(&t.join(" "))).collect();
        let vocab = Vocabulary::fit(docs.iter().take(docs.len().div_ceil(2)).map(Vec::as_slice), 1);
        let x = vectorize_bow(&docs, &vocab);
        for (i, doc) in docs.iter().enumerate() {
            let row = x.row_dense(i);
            prop_assert!(row.iter().all(|&v| v == 0.0 || v == 1.0));
            let mut seen = HashSet::new();
            for t in doc {
                if let Some(j) = vocab.get(t) {
                    seen.insert(j);
                }
            }
            prop_assert_eq!(row.iter().filter(|&&v| v == 1.0).count(), seen.len());
        }
    }

    #[test]
    fn adam_second_moment_is_nonnegative(
        steps in prop::collection::vec(prop::collection::vec(-1e3..1e3f64, 4), 1..20),
        lr in 1e-5..1.0f64,
    ) {
        let mut state = AdamState::new(4);
        let mut p = vec![0.5; 4];
        for (k, g) in steps.iter().enumerate() {
            adam_step(&mut state, &mut p, g, lr).unwrap();
            prop_assert_eq!(state.t, k as u64 + 1);
            prop_assert!(state.v.iter().all(|&v| v >= 0.0));
            prop_assert!(p.iter().all(|v| v.is_finite()));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn generator_is_reproducible(seed in any::<u64>(), corr in 0.5..0.95f64, flip in 0.0..0.3f64) {
        let cfg = SynthConfig { seed, n: 120, d: 30, n_causal: 6, n_spurious: 8, spurious_train_corr: corr, flip_noise: flip, ..SynthConfig::default() };
        let a = synth_generate(&cfg).unwrap();
        let b = synth_generate(&cfg).unwrap();
        prop_assert_eq!(a.bundle, b.bundle);
        prop_assert_eq!(a.truth, b.truth);
    }
}
