//! Moves one penalty strength at a time away from (0, 0, 0) and reports how
//! far counterfactual accuracy moves for each group.

use causalreg::data::{synth_generate, SynthConfig};
use causalreg::experiments::{lambda_sweep, seed_sequence, GRID_VALUES};
use causalreg::optim::TrainConfig;
use causalreg::Group;

fn main() -> causalreg::Result<()> {
    let data = synth_generate(&SynthConfig::default())?;
    let tcfg = TrainConfig {
        learning_rate: 0.05,
        ..TrainConfig::default()
    };
    let report = lambda_sweep(&data.bundle, &GRID_VALUES, &tcfg, &seed_sequence(0, 3), 0)?;
    let sweep = report.sweep.as_ref().expect("sweep summary");
    for (k, g) in Group::ALL.iter().enumerate() {
        print!("{g:<10}");
        for p in sweep.points.iter().filter(|p| p.varied == *g) {
            let (_, m, _) = report.setting(p.setting);
            print!(" {:.3}", m.ctf_accuracy.unwrap_or(f64::NAN));
        }
        println!("   max change {:.3}", sweep.max_ctf_change[k].unwrap_or(f64::NAN));
    }
    println!("values: {GRID_VALUES:?}");
    Ok(())
}
