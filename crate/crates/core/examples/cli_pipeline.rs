//! The file-based workflow the `causalreg` binary runs: write synthetic
//! data, grid-search it, then score the saved model.

use causalreg::cli::{execute, Command, RunConfig};
use causalreg::data::SynthConfig;
use causalreg::experiments::{ConstraintMode, GridSpec};

fn main() -> causalreg::Result<()> {
    let dir = tempfile::tempdir().expect("temp dir");
    let data = dir.path().join("data");

    let mut synth = RunConfig::new(None, &data);
    synth.synth = SynthConfig {
        n: 1000,
        ..SynthConfig::default()
    };
    synth.seeds = 2;
    synth.train.learning_rate = 0.05;
    execute(Command::Synth, &synth)?;

    let mut grid = RunConfig::load(&data.join("grid_config.json"))?;
    grid.grid = Some(GridSpec {
        lambda_c: vec![0.0, 1.0],
        lambda_s: vec![0.0, 100.0],
        lambda_r: vec![0.0, 10.0],
        constraint: ConstraintMode::Ordered,
    });
    grid.baseline_lambdas = Some(vec![0.0, 0.1, 1.0]);
    let out = execute(Command::Grid, &grid)?;

    let mut eval = grid.clone();
    eval.model = Some(out.join("model.json"));
    eval.output_dir = dir.path().join("eval");
    execute(Command::Eval, &eval)?;
    for entry in std::fs::read_dir(dir.path()).expect("listing") {
        let entry = entry.expect("entry");
        let files: Vec<String> = std::fs::read_dir(entry.path())
            .expect("listing")
            .map(|f| f.expect("entry").file_name().to_string_lossy().into_owned())
            .collect();
        println!("{}: {}", entry.file_name().to_string_lossy(), files.join(" "));
    }
    Ok(())
}
