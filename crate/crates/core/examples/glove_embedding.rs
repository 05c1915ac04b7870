//! Dense document vectors: the mean of word vectors, optionally with causal
//! and spurious words re-weighted before averaging.

use causalreg::data::{
    build_text_bundle, bundle_to_corpus, embed_document, synth_generate, EmbeddingTable, GroupFile, GroupWeightTriple,
    SynthConfig, TextRepresentation,
};
use causalreg::experiments::run_single;
use causalreg::optim::TrainConfig;
use causalreg::PenaltyConfig;

fn main() -> causalreg::Result<()> {
    let mut table = EmbeddingTable::new(2);
    table.insert("good", vec![1.0, 0.0])?;
    table.insert("film", vec![0.0, 1.0])?;
    let doc: Vec<String> = ["good", "film", "unknown"].map(String::from).to_vec();
    let groups = GroupFile {
        causal: vec!["good".into()],
        spurious: vec![],
    }
    .token_groups()?;
    let w = GroupWeightTriple::new(10.0, 0.1, 1.0)?;
    println!("plain mean    {:?}", embed_document(&doc, &table, &groups, &GroupWeightTriple::UNIFORM));
    println!("causal ×10    {:?}", embed_document(&doc, &table, &groups, &w));

    // Random vectors stand in for a pre-trained GloVe file here; use
    // `EmbeddingTable::read_glove` for a real one.
    let data = synth_generate(&SynthConfig::default())?;
    let corpus = bundle_to_corpus(&data.bundle)?;
    let labels = GroupFile::from_groups(&data.bundle.groups, &data.bundle.feature_names);
    let table = EmbeddingTable::random(&data.bundle.feature_names, 50, 7);
    let tcfg = TrainConfig {
        learning_rate: 0.05,
        ..TrainConfig::default()
    };
    for (name, weights) in [
        ("mean", GroupWeightTriple::UNIFORM),
        ("weighted", GroupWeightTriple::new(2.0, 0.1, 1.0)?),
    ] {
        let repr = TextRepresentation::Glove { table: &table, weights };
        let tb = build_text_bundle(&corpus, &labels, repr, 1)?;
        let (m, _) = run_single(&tb.bundle, &PenaltyConfig::uniform(0.01)?, &tcfg)?;
        println!(
            "{name:<9} test {:.3}  ctf {:.3}",
            m.metrics.test_accuracy,
            m.metrics.ctf_accuracy.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
