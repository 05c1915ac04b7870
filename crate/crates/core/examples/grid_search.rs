//! Constrained grid search with counterfactual-validation model selection.
//! A reduced grid keeps the run short; `GridSpec::full()` is the full one.

use causalreg::data::{synth_generate, SynthConfig};
use causalreg::experiments::{grid_search, seed_sequence, ConstraintMode, GridSpec, Selection};
use causalreg::optim::TrainConfig;

fn main() -> causalreg::Result<()> {
    let data = synth_generate(&SynthConfig::default())?;
    let grid = GridSpec {
        lambda_c: vec![0.0, 0.01, 1.0],
        lambda_s: vec![0.0, 1.0, 100.0],
        lambda_r: vec![0.0, 0.01, 10.0],
        constraint: ConstraintMode::Ordered,
    };
    println!("{} admissible triples (full grid: {})", grid.triples()?.len(), GridSpec::full().triples()?.len());
    let tcfg = TrainConfig {
        learning_rate: 0.05,
        ..TrainConfig::default()
    };
    let report = grid_search(&data.bundle, &grid, &tcfg, Selection::CtfValidation, &seed_sequence(0, 3), 0)?;
    for i in 0..report.settings.len() {
        let (p, m, _) = report.setting(i);
        println!(
            "{:<14} ctf-val {:.3}  test {:.3}  ctf {:.3}",
            p.to_string(),
            m.ctf_val_accuracy.unwrap_or(f64::NAN),
            m.test_accuracy,
            m.ctf_accuracy.unwrap_or(f64::NAN)
        );
    }
    let sel = report.selection.as_ref().expect("grid search selects");
    println!("selected {} ({} = {:.3})", sel.selected, sel.statistic, sel.score);
    Ok(())
}
