//! The four baseline rows on the synthetic corpus: L2 on bag of words, L2
//! on mean word vectors, L2 without the spurious columns, and L2 on the
//! training set doubled by its counterfactual twins.

use causalreg::data::{
    build_text_bundle, bundle_to_corpus, synth_generate, EmbeddingTable, GroupFile, GroupWeightTriple, SynthConfig,
    TextRepresentation,
};
use causalreg::experiments::{run_baselines, BaselineOptions, Selection, GRID_VALUES};
use causalreg::optim::TrainConfig;

fn main() -> causalreg::Result<()> {
    let data = synth_generate(&SynthConfig::default())?;
    let corpus = bundle_to_corpus(&data.bundle)?;
    let labels = GroupFile::from_groups(&data.bundle.groups, &data.bundle.feature_names);
    let table = EmbeddingTable::random(&data.bundle.feature_names, 50, 7);
    let bow = build_text_bundle(&corpus, &labels, TextRepresentation::Bow, 1)?;
    let glove = build_text_bundle(
        &corpus,
        &labels,
        TextRepresentation::Glove {
            table: &table,
            weights: GroupWeightTriple::UNIFORM,
        },
        1,
    )?;
    let opts = BaselineOptions {
        lambdas: GRID_VALUES.to_vec(),
        selection: Selection::CtfValidation,
        seeds: vec![0, 1, 2],
        jobs: 0,
        glove: Some(&glove.bundle),
    };
    let tcfg = TrainConfig {
        learning_rate: 0.05,
        ..TrainConfig::default()
    };
    for row in run_baselines(&bow.bundle, &tcfg, &opts)? {
        match &row.result {
            Some(r) => println!(
                "{:<18} λ {:<20} rows {:>5} features {:>4}  test {:.3}  ctf {:.3}",
                row.name,
                r.penalty.to_string(),
                row.train_rows,
                row.features,
                r.mean.test_accuracy,
                r.mean.ctf_accuracy.unwrap_or(f64::NAN)
            ),
            None => println!("{:<18} skipped: {}", row.name, row.skipped.as_deref().unwrap_or("")),
        }
    }
    Ok(())
}
