//! Admission data whose historical labels are biased against one gender.
//! Grid search with the fairness selection rule against tuned plain L2.

use causalreg::data::{synth_admission, AdmissionConfig};
use causalreg::experiments::{grid_search, seed_sequence, tuned_l2, BaselineOptions, GridSpec, Selection, GRID_VALUES};
use causalreg::optim::TrainConfig;

fn main() -> causalreg::Result<()> {
    let bundle = synth_admission(&AdmissionConfig::default())?;
    println!("features: {}", bundle.feature_names.join(", "));
    let tcfg = TrainConfig {
        learning_rate: 0.05,
        ..TrainConfig::default()
    };
    let seeds = seed_sequence(0, 3);
    let report = grid_search(&bundle, &GridSpec::full(), &tcfg, Selection::Fairness, &seeds, 0)?;
    let opts = BaselineOptions {
        lambdas: GRID_VALUES.to_vec(),
        selection: Selection::Fairness,
        seeds,
        jobs: 0,
        glove: None,
    };
    let l2 = tuned_l2("L2", &bundle, &tcfg, &opts)?.result.expect("not skipped");
    let (p, m, _) = report.selected().expect("grid search selects");
    for (name, p, m) in [("L2", &l2.penalty, &l2.mean), ("grouped", p, m)] {
        println!(
            "{name:<8} {:<18} acc {:.3}  ΔEO {:.3}  ΔDP {:.3}",
            p.to_string(),
            m.test_accuracy,
            m.delta_eo.unwrap_or(f64::NAN),
            m.delta_dp.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
