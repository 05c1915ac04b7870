use std::path::PathBuf;
use std::process::ExitCode;

use causalreg::cli::{execute, Command, Overrides, RunConfig};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "causalreg", version, about = "Grouped-L2 logistic regression with causal/spurious feature labels")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Train a plain L2 model and export its top features for labelling
    AnnotateExport(Common),
    /// Train one penalty setting over several seeds
    Train(Common),
    /// Score a saved model
    Eval(Common),
    /// Constrained grid search with model selection and baselines
    Grid(Common),
    /// Vary one penalty strength at a time from (0, 0, 0)
    Sweep(Common),
    /// Write synthetic datasets and ready-to-run configs
    Synth(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    lambda_c: Option<f64>,
    #[arg(long)]
    lambda_s: Option<f64>,
    #[arg(long)]
    lambda_r: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    jobs: Option<usize>,
    /// Overrides `output_dir` from the config
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Cmd::AnnotateExport(a) => (Command::AnnotateExport, a),
        Cmd::Train(a) => (Command::Train, a),
        Cmd::Eval(a) => (Command::Eval, a),
        Cmd::Grid(a) => (Command::Grid, a),
        Cmd::Sweep(a) => (Command::Sweep, a),
        Cmd::Synth(a) => (Command::Synth, a),
    };
    let overrides = Overrides {
        lambda_c: args.lambda_c,
        lambda_s: args.lambda_s,
        lambda_r: args.lambda_r,
        seed: args.seed,
        jobs: args.jobs,
        output_dir: args.out,
    };
    let result = RunConfig::load(&args.config).and_then(|mut cfg| {
        cfg.apply(&overrides);
        execute(command, &cfg)
    });
    match result {
        Ok(dir) => {
            eprintln!("wrote {}", dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
