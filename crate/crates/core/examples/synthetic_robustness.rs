//! Plain L2 against the grouped penalty on the planted-spurious corpus:
//! test accuracy, accuracy on counterfactual twins and the causal share of
//! the ten largest weights.

use causalreg::data::{synth_generate, SynthConfig};
use causalreg::experiments::{recommended_defaults, repeat_seeds, tuned_l2, BaselineOptions, Selection, GRID_VALUES};
use causalreg::optim::TrainConfig;

fn main() -> causalreg::Result<()> {
    let data = synth_generate(&SynthConfig::default())?;
    let tcfg = TrainConfig {
        learning_rate: 0.05,
        ..TrainConfig::default()
    };
    let seeds = 5;
    let opts = BaselineOptions {
        lambdas: GRID_VALUES.to_vec(),
        selection: Selection::CtfValidation,
        seeds: (0..seeds).collect(),
        jobs: 0,
        glove: None,
    };
    let l2 = tuned_l2("L2", &data.bundle, &tcfg, &opts)?.result.expect("not skipped");
    let grouped = repeat_seeds(&data.bundle, &recommended_defaults(), &tcfg, seeds as usize, 0)?;

    println!("{:<10} {:<12} {:>8} {:>8} {:>8}", "model", "λ (c,s,r)", "test", "ctf", "top-10");
    for (name, r) in [("L2", &l2), ("grouped", &grouped)] {
        println!(
            "{name:<10} {:<12} {:>8.3} {:>8.3} {:>8.2}",
            r.penalty.to_string(),
            r.mean.test_accuracy,
            r.mean.ctf_accuracy.unwrap_or(f64::NAN),
            r.mean.causal_fraction_top10.unwrap_or(f64::NAN),
        );
    }
    Ok(())
}
