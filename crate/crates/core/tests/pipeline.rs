use causalreg::data::{
    build_tabular_bundle, build_text_bundle, spurious_agreement, synth_generate, ColumnKind, ColumnSpec, Corpus,
    GroupFile, SplitTag, SynthConfig, TabularSchema, TabularTable, TextRepresentation,
};
use causalreg::eval::counterfactual_accuracy;
use causalreg::experiments::{
    evaluate_settings, grid_search, repeat_seeds, run_baselines, seed_sequence, BaselineOptions, GridSpec,
    Selection, BASELINE_AUGMENTATION, BASELINE_FEATURE_SELECTION, BASELINE_L2_BOW, GRID_VALUES,
};
use causalreg::optim::TrainConfig;
use causalreg::{Group, PenaltyConfig};

const CORPUS: &str = "text\tlabel\tpair_id\tsplit
A great film, truly wonderful!\t1\tp1\ttrain
A terrible film, truly awful!\t0\tp1\tctf_train
Boring plot and bad acting\t0\tp2\ttrain
Gripping plot and good acting\t1\tp2\tctf_train
Wonderful cast\t1\t\ttrain
Awful pacing throughout\t0\t\tvalidation
Great pacing throughout\t1\t\tvalidation
Good ending\t1\tp3\ttest
Bad ending\t0\tp3\tctf_test
";

fn write(dir: &std::path::Path, name: &str, text: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn fast() -> TrainConfig {
    TrainConfig {
        learning_rate: 0.05,
        ..TrainConfig::default()
    }
}

fn text_groups() -> GroupFile {
    GroupFile {
        causal: vec!["great".into(), "awful".into(), "good".into()],
        spurious: vec!["film".into()],
    }
}

#[test]
fn text_bundle_from_tsv() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = Corpus::read_tsv(&write(dir.path(), "corpus.tsv", CORPUS)).unwrap();
    let b = build_text_bundle(&corpus, &text_groups(), TextRepresentation::Bow, 1).unwrap();

    // Vocabulary comes from the three training documents only.
    assert!(b.vocab.get("wonderful").is_some());
    assert!(b.vocab.get("ending").is_none());
    assert!(b.vocab.get("gripping").is_none());
    let bundle = &b.bundle;
    assert_eq!(bundle.dim(), b.vocab.len());
    assert_eq!((bundle.train.len(), bundle.validation.len(), bundle.test.len()), (3, 2, 1));
    assert_eq!(bundle.train.twin.as_ref().unwrap().len(), 2);
    assert_eq!(bundle.test.twin.as_ref().unwrap().labels.as_slice(), &[0]);
    assert!(bundle.validation.twin.as_ref().is_none_or(|t| t.is_empty()));

    let col = |w: &str| b.vocab.get(w).unwrap();
    assert_eq!(bundle.groups.group_of(col("great")), Group::Causal);
    assert_eq!(bundle.groups.group_of(col("film")), Group::Spurious);
    assert_eq!(bundle.groups.group_of(col("plot")), Group::Remaining);
    // "awful" and "good" occur only in twins, which do not feed the vocabulary.
    assert_eq!(bundle.groups.causal(), &[col("great")]);
}

#[test]
fn text_features_do_not_depend_on_held_out_documents() {
    let dir = tempfile::tempdir().unwrap();
    let a = Corpus::read_tsv(&write(dir.path(), "a.tsv", CORPUS)).unwrap();
    let mut b = a.clone();
    let held_out = [SplitTag::Validation, SplitTag::Test, SplitTag::CtfValidation, SplitTag::CtfTest];
    for d in b.documents.iter_mut().filter(|d| held_out.contains(&d.split)) {
        d.text.push_str(" unseen novel words plus film great");
    }
    let ba = build_text_bundle(&a, &text_groups(), TextRepresentation::Bow, 1).unwrap();
    let bb = build_text_bundle(&b, &text_groups(), TextRepresentation::Bow, 1).unwrap();
    assert_eq!(ba.vocab, bb.vocab);
    assert_eq!(ba.bundle.train, bb.bundle.train);
    assert_eq!(ba.bundle.groups, bb.bundle.groups);
}

fn admission_like(test_gpa: &str) -> (TabularTable, TabularSchema) {
    let headers = ["gpa", "school", "gender", "admitted", "split"].map(String::from).to_vec();
    let row = |g: &str, s: &str, x: &str, y: &str, sp: &str| [g, s, x, y, sp].map(String::from).to_vec();
    let rows = vec![
        row("2.0", "north", "f", "0", "train"),
        row("4.0", "south", "m", "1", "train"),
        row("3.0", "north", "m", "1", "train"),
        row("2.5", "south", "f", "0", "validation"),
        row(test_gpa, "east", "f", "1", "test"),
    ];
    let schema = TabularSchema {
        columns: vec![
            ColumnSpec { name: "gpa".into(), kind: ColumnKind::Numeric },
            ColumnSpec { name: "school".into(), kind: ColumnKind::Categorical },
            ColumnSpec { name: "gender".into(), kind: ColumnKind::Sensitive },
            ColumnSpec { name: "admitted".into(), kind: ColumnKind::Label },
        ],
        split_column: Some("split".into()),
        encode_sensitive: true,
    };
    (TabularTable::new(headers, rows).unwrap(), schema)
}

#[test]
fn tabular_bundle_normalises_on_train() {
    let (table, schema) = admission_like("5.0");
    let groups = GroupFile { causal: vec!["gpa".into()], spurious: vec!["gender".into()] };
    let b = build_tabular_bundle(&table, &schema, &groups, 0).unwrap();
    let names = &b.bundle.feature_names;
    assert_eq!(names, &["gpa", "school=north", "school=south", "gender=f", "gender=m"]);
    assert_eq!(b.bundle.groups.causal(), &[0]);
    assert_eq!(b.bundle.groups.spurious(), &[3, 4]);

    let train = &b.bundle.train.features;
    assert_eq!(train.row_dense(0), vec![0.0, 1.0, 0.0, 1.0, 0.0]);
    assert_eq!(train.row_dense(2), vec![0.5, 1.0, 0.0, 0.0, 1.0]);
    // Out-of-range test value is clipped; the unseen category is all zeros.
    assert_eq!(b.bundle.test.features.row_dense(0), vec![1.0, 0.0, 0.0, 1.0, 0.0]);
    assert_eq!(b.bundle.test.sensitive.as_ref().unwrap().values, vec!["f"]);
}

#[test]
fn tabular_features_do_not_depend_on_held_out_rows() {
    let groups = GroupFile::default();
    let (t1, schema) = admission_like("3.5");
    let (t2, _) = admission_like("900");
    let a = build_tabular_bundle(&t1, &schema, &groups, 0).unwrap();
    let b = build_tabular_bundle(&t2, &schema, &groups, 0).unwrap();
    assert_eq!(a.encoder, b.encoder);
    assert_eq!(a.bundle.train, b.bundle.train);
    assert_eq!(a.bundle.validation, b.bundle.validation);
}

#[test]
fn default_generator_plants_the_requested_correlation() {
    let data = synth_generate(&SynthConfig::default()).unwrap();
    let rate = spurious_agreement(&data.bundle.train, &data.truth);
    assert!((rate - 0.9).abs() <= 0.03, "train agreement {rate}");
    // The twins keep the spurious words but flip the label.
    let twin = data.bundle.train.twin.as_ref().unwrap();
    let flipped = spurious_agreement(twin, &data.truth);
    assert!((flipped - 0.1).abs() <= 0.03, "twin agreement {flipped}");
}

#[test]
fn causal_oracle_is_perfect_on_twins_without_label_noise() {
    let cfg = SynthConfig {
        spurious_train_corr: 0.95,
        flip_noise: 0.0,
        ..SynthConfig::default()
    };
    let data = synth_generate(&cfg).unwrap();
    let oracle = data.truth.oracle_model(data.bundle.dim());
    for split in [&data.bundle.train, &data.bundle.validation, &data.bundle.test] {
        assert_eq!(counterfactual_accuracy(&oracle, split).unwrap(), 1.0);
    }
}

#[test]
fn uncorrelated_spurious_words_make_their_penalty_irrelevant() {
    let cfg = SynthConfig {
        spurious_train_corr: 0.5,
        ..SynthConfig::default()
    };
    let bundle = synth_generate(&cfg).unwrap().bundle;
    for (plain, grouped) in [((0.0, 0.0, 0.0), (0.0, 100.0, 0.0)), ((0.1, 0.1, 0.1), (0.1, 100.0, 0.1))] {
        let run = |p: (f64, f64, f64)| {
            let cfg = PenaltyConfig::new(p.0, p.1, p.2).unwrap();
            repeat_seeds(&bundle, &cfg, &fast(), 10, 1).unwrap().mean.ctf_accuracy.unwrap()
        };
        let (a, b) = (run(plain), run(grouped));
        assert!((a - b).abs() <= 0.02, "{plain:?} ctf {a} vs {grouped:?} ctf {b}");
    }
}

fn small_synth() -> causalreg::data::DataBundle {
    synth_generate(&SynthConfig {
        n: 600,
        d: 60,
        n_causal: 10,
        n_spurious: 10,
        spurious_rate: 0.08,
        ..SynthConfig::default()
    })
    .unwrap()
    .bundle
}

#[test]
fn single_triple_grid_has_one_setting() {
    let bundle = small_synth();
    let p = PenaltyConfig::new(0.0, 10.0, 1.0).unwrap();
    let report = grid_search(&bundle, &GridSpec::single(p), &fast(), Selection::CtfValidation, &[0, 1], 1).unwrap();
    assert_eq!(report.settings.len(), 1);
    assert_eq!(report.selected().unwrap().0, &p);
    assert_eq!(report.per_seed_metrics.len(), 2);
}

#[test]
fn full_grid_has_156_admissible_triples() {
    let triples = GridSpec::full().triples().unwrap();
    assert_eq!(triples.len(), 156);
    assert!(triples.iter().all(|t| t.is_admissible()));
}

#[test]
fn baselines_transform_the_data_as_described() {
    let bundle = small_synth();
    let seeds = seed_sequence(0, 2);
    let lambdas = vec![0.0, 0.1, 1.0];
    let opts = BaselineOptions {
        lambdas: lambdas.clone(),
        selection: Selection::CtfValidation,
        seeds: seeds.clone(),
        jobs: 1,
        glove: None,
    };
    let rows = run_baselines(&bundle, &fast(), &opts).unwrap();
    let row = |name: &str| rows.iter().find(|r| r.name == name).unwrap();

    let fs = row(BASELINE_FEATURE_SELECTION);
    assert_eq!(fs.features, bundle.dim() - bundle.groups.spurious().len());
    assert_eq!(fs.train_rows, bundle.train.len());

    let aug = row(BASELINE_AUGMENTATION);
    assert_eq!(aug.train_rows, 2 * bundle.train.len());
    assert_eq!(aug.features, bundle.dim());

    // The L2 row is the uniform slice of the grid, selected by the same rule.
    let l2 = row(BASELINE_L2_BOW).result.as_ref().unwrap();
    let uniform: Vec<PenaltyConfig> = lambdas.iter().map(|&l| PenaltyConfig::uniform(l).unwrap()).collect();
    let grid = evaluate_settings(&bundle, &uniform, &fast(), &seeds, 1).unwrap();
    let same = grid.iter().find(|s| s.penalty == l2.penalty).unwrap();
    assert!((same.mean.test_accuracy - l2.mean.test_accuracy).abs() <= 1e-10);
    assert!((same.mean.ctf_accuracy.unwrap() - l2.mean.ctf_accuracy.unwrap()).abs() <= 1e-10);
    let best = grid
        .iter()
        .map(|s| s.mean.ctf_val_accuracy.unwrap())
        .fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(l2.mean.ctf_val_accuracy.unwrap(), best);
}

#[test]
fn grid_values_are_zero_and_powers_of_ten() {
    assert_eq!(GRID_VALUES, [0.0, 0.0001, 0.001, 0.01, 0.1, 1.0, 10.0, 100.0, 1000.0]);
}
