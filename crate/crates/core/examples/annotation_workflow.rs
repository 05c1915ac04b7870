//! The labelling loop on a text corpus: train plain L2, export the
//! largest-weight words, label them, and retrain with the grouped penalty.
//! The planted structure of the synthetic corpus stands in for the human
//! annotator.

use std::collections::HashSet;

use causalreg::cli::annotation_tsv;
use causalreg::data::{build_text_bundle, bundle_to_corpus, synth_generate, GroupFile, SynthConfig, TextRepresentation};
use causalreg::experiments::{recommended_defaults, run_single};
use causalreg::optim::TrainConfig;
use causalreg::PenaltyConfig;

fn main() -> causalreg::Result<()> {
    let data = synth_generate(&SynthConfig::default())?;
    let corpus = bundle_to_corpus(&data.bundle)?;
    let names = &data.bundle.feature_names;
    let tcfg = TrainConfig {
        learning_rate: 0.05,
        ..TrainConfig::default()
    };

    let plain = build_text_bundle(&corpus, &GroupFile::default(), TextRepresentation::Bow, 1)?;
    let (m, initial) = run_single(&plain.bundle, &PenaltyConfig::zero(), &tcfg)?;
    println!("plain model: test {:.3}  ctf {:.3}", m.metrics.test_accuracy, m.metrics.ctf_accuracy.unwrap_or(f64::NAN));

    let export = annotation_tsv(&initial.model, &plain.bundle.feature_names, 0.5);
    let listed: Vec<&str> = export.lines().skip(2).filter_map(|l| l.split('\t').next()).collect();
    println!("exported {} words with |w| > 0.5", listed.len());

    let causal: HashSet<&str> = data.bundle.groups.causal().iter().map(|&i| names[i].as_str()).collect();
    let spurious: HashSet<&str> = data.bundle.groups.spurious().iter().map(|&i| names[i].as_str()).collect();
    let labels = GroupFile {
        causal: listed.iter().filter(|w| causal.contains(*w)).map(|w| w.to_string()).collect(),
        spurious: listed.iter().filter(|w| spurious.contains(*w)).map(|w| w.to_string()).collect(),
    };
    println!("labelled {} causal, {} spurious", labels.causal.len(), labels.spurious.len());

    let grouped = build_text_bundle(&corpus, &labels, TextRepresentation::Bow, 1)?;
    let (m, _) = run_single(&grouped.bundle, &recommended_defaults(), &tcfg)?;
    println!("grouped model: test {:.3}  ctf {:.3}", m.metrics.test_accuracy, m.metrics.ctf_accuracy.unwrap_or(f64::NAN));
    Ok(())
}
