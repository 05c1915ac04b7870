use std::path::{Path, PathBuf};
use std::process::{Command as Process, Stdio};

use causalreg::cli::{
    annotation_tsv, cmd_annotate_export, cmd_eval, cmd_train, execute, prepare, Command, DatasetConfig, ModelFile,
    RunConfig,
};
use causalreg::data::{AdmissionConfig, SynthConfig};
use causalreg::experiments::{evaluate_model, run_single};
use causalreg::optim::TrainConfig;
use causalreg::{Error, LinearModel, PenaltyConfig};

fn small_synth() -> SynthConfig {
    SynthConfig {
        n: 300,
        d: 40,
        n_causal: 6,
        n_spurious: 6,
        spurious_rate: 0.1,
        ..SynthConfig::default()
    }
}

fn fast() -> TrainConfig {
    TrainConfig {
        learning_rate: 0.05,
        max_epochs: 200,
        ..TrainConfig::default()
    }
}

/// Runs `synth` into `dir/data` and returns the text grid config it wrote.
fn synth_files(dir: &Path) -> PathBuf {
    let mut cfg = RunConfig::new(None, dir.join("data"));
    cfg.synth = small_synth();
    cfg.admission = AdmissionConfig {
        n: 400,
        ..AdmissionConfig::default()
    };
    cfg.train = fast();
    cfg.seeds = 2;
    execute(Command::Synth, &cfg).unwrap();
    dir.join("data/grid_config.json")
}

fn synthetic_config(out: &Path) -> RunConfig {
    let mut cfg = RunConfig::new(Some(DatasetConfig::Synthetic { config: small_synth() }), out);
    cfg.train = fast();
    cfg.seeds = 2;
    cfg
}

fn binary(args: &[&str], config: &Path, out: &Path) -> i32 {
    Process::new(env!("CARGO_BIN_EXE_causalreg"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .status()
        .unwrap()
        .code()
        .unwrap()
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn synth_output_is_enough_for_a_grid_run() {
    let dir = tempfile::tempdir().unwrap();
    let config = synth_files(dir.path());
    let names: Vec<String> = read_dir_sorted(&dir.path().join("data")).into_iter().map(|f| f.0).collect();
    for f in ["corpus.tsv", "groups.json", "glove.txt", "admission.csv", "admission_schema.json", "grid_config.json"] {
        assert!(names.iter().any(|n| n == f), "missing {f}");
    }
    let mut cfg = RunConfig::load(&config).unwrap();
    cfg.output_dir = dir.path().join("grid");
    cfg.grid = Some(causalreg::experiments::GridSpec {
        lambda_c: vec![0.0],
        lambda_s: vec![0.0, 10.0],
        lambda_r: vec![0.0, 1.0],
        constraint: causalreg::experiments::ConstraintMode::Ordered,
    });
    cfg.baseline_lambdas = Some(vec![0.0, 1.0]);
    execute(Command::Grid, &cfg).unwrap();
    for f in ["report.json", "report.txt", "model.json"] {
        assert!(dir.path().join("grid").join(f).is_file(), "missing {f}");
    }
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("grid/report.json")).unwrap()).unwrap();
    for key in ["settings", "per_seed_metrics", "aggregate", "baselines", "selection"] {
        assert!(report.get(key).is_some(), "report lacks {key}");
    }
    // Every baseline row runs: the generated data has GloVe vectors, spurious labels and twins.
    assert!(report["baselines"].as_array().unwrap().iter().all(|b| b["skipped"].is_null()));
}

#[test]
fn model_file_round_trip_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = synthetic_config(dir.path());
    let out = cmd_train(&cfg).unwrap();
    let stored = out.model.unwrap();
    let text = std::str::from_utf8(out.files.iter().find(|f| f.0 == "model.json").unwrap().1.as_slice()).unwrap().to_owned();
    let loaded = ModelFile::from_json(&text, Path::new("model.json")).unwrap();
    assert_eq!(loaded, stored);
    let test = &prepare(&cfg).unwrap().bundle.test.features;
    let a = stored.model.predict_proba_matrix(test).unwrap();
    let b = loaded.model.predict_proba_matrix(test).unwrap();
    assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
}

#[test]
fn model_file_rejects_other_formats() {
    let dir = tempfile::tempdir().unwrap();
    let stored = cmd_train(&synthetic_config(dir.path())).unwrap().model.unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&stored.to_json()).unwrap();
    v["version"] = 99.into();
    assert!(ModelFile::from_json(&v.to_string(), Path::new("m.json")).is_err());
}

#[test]
fn train_then_eval_reproduces_in_process_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let config = synth_files(dir.path());
    let mut cfg = RunConfig::load(&config).unwrap();
    cfg.penalty = Some(PenaltyConfig::zero());
    cfg.baselines = false;
    cfg.output_dir = dir.path().join("train");
    execute(Command::Train, &cfg).unwrap();

    cfg.model = Some(dir.path().join("train/model.json"));
    cfg.output_dir = dir.path().join("eval");
    let report = cmd_eval(&cfg).unwrap().report.unwrap();
    let (_, from_file, _) = report.setting(0);

    let bundle = prepare(&cfg).unwrap().bundle;
    let (_, trained) = run_single(&bundle, &PenaltyConfig::zero(), &cfg.train).unwrap();
    let in_process = evaluate_model(&bundle, &trained.model).unwrap();
    assert_eq!(from_file, &in_process);
}

#[test]
fn config_errors_leave_no_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = RunConfig::new(
        Some(DatasetConfig::Text {
            corpus: dir.path().join("missing.tsv"),
            embeddings: None,
            min_df: 1,
            random_split: None,
        }),
        &out,
    );
    let err = execute(Command::Train, &cfg).unwrap_err();
    assert!(matches!(err, Error::Config { .. }), "{err}");
    assert!(!out.exists());

    // An existing directory from an earlier run is left as it was.
    std::fs::create_dir(&out).unwrap();
    std::fs::write(out.join("report.json"), "old").unwrap();
    assert!(execute(Command::Train, &cfg).is_err());
    assert_eq!(read_dir_sorted(&out), vec![("report.json".to_string(), b"old".to_vec())]);
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let write = |name: &str, text: &str| {
        let p = dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        p
    };

    assert_eq!(binary(&["train"], &dir.path().join("nope.json"), &out), 2);
    let unknown = write("unknown.json", r#"{"output_dir": "x", "colour": "blue"}"#);
    assert_eq!(binary(&["train"], &unknown, &out), 2);

    write("bad.tsv", "text\tlabel\ngood\t1\nbad\t7\n");
    let bad = write("bad.json", r#"{"dataset": {"kind": "text", "corpus": "bad.tsv"}, "output_dir": "x"}"#);
    assert_eq!(binary(&["train"], &bad, &out), 3);

    let diverge = write(
        "diverge.json",
        r#"{"dataset": {"kind": "synthetic", "config": {"n": 200, "d": 30, "n_causal": 4, "n_spurious": 4}},
            "train": {"learning_rate": 1e300, "adjust_learning_rate": false}, "seeds": 1, "output_dir": "x"}"#,
    );
    assert_eq!(binary(&["train"], &diverge, &out), 4);
    assert!(!out.exists());

    let sweep = write(
        "sweep.json",
        r#"{"dataset": {"kind": "synthetic", "config": {"n": 200, "d": 30, "n_causal": 4, "n_spurious": 4}}, "output_dir": "x"}"#,
    );
    assert_eq!(binary(&["sweep", "--lambda-s", "10"], &sweep, &out), 2);
    assert_eq!(binary(&["train", "--lambda-s", "10", "--seed", "3", "--jobs", "1"], &sweep, &out), 0);
    let model = ModelFile::load(&out.join("model.json")).unwrap();
    assert_eq!(model.penalty.lambda_s, 10.0);
    assert_eq!(model.seed, 3);
}

#[test]
fn annotation_export_is_sorted_and_thresholded() {
    let names: Vec<String> = ["a", "b", "c", "d", "e"].iter().map(|s| s.to_string()).collect();
    let model = LinearModel::new(vec![0.5, -2.0, 2.0, 1.0, -0.25], 0.0);
    let tsv = annotation_tsv(&model, &names, 0.3);
    let lines: Vec<&str> = tsv.lines().collect();
    assert_eq!(lines, ["# threshold\t0.3", "feature\tweight", "b\t-2", "c\t2", "d\t1", "a\t0.5"]);
    assert_eq!(annotation_tsv(&model, &names, f64::INFINITY).lines().count(), 2);
}

#[test]
fn annotate_export_writes_a_ranked_list() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = synthetic_config(dir.path());
    cfg.annotate_threshold = 0.1;
    let out = cmd_annotate_export(&cfg).unwrap();
    let tsv = std::str::from_utf8(out.file("annotations.tsv").unwrap()).unwrap();
    let weights: Vec<f64> = tsv.lines().skip(2).map(|l| l.split('\t').nth(1).unwrap().parse().unwrap()).collect();
    assert!(!weights.is_empty());
    assert!(weights.iter().all(|w| w.abs() > 0.1));
    assert!(weights.windows(2).all(|w| w[0].abs() >= w[1].abs()));
    assert!(out.file("groups.template.json").is_some());

    cfg.penalty = Some(PenaltyConfig::new(0.0, 1.0, 0.0).unwrap());
    assert!(matches!(cmd_annotate_export(&cfg), Err(Error::Config { .. })));
}

#[test]
fn commands_are_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = synthetic_config(&dir.path().join("a"));
    cfg.sweep_values = Some(vec![0.0, 1.0, 100.0]);
    cfg.annotate_threshold = 0.1;
    for command in [Command::Train, Command::Sweep, Command::AnnotateExport] {
        cfg.output_dir = dir.path().join("a");
        execute(command, &cfg).unwrap();
        let first = read_dir_sorted(&cfg.output_dir);
        cfg.output_dir = dir.path().join("b");
        execute(command, &cfg).unwrap();
        assert_eq!(first, read_dir_sorted(&cfg.output_dir), "{command:?}");
    }
}

#[test]
fn relative_paths_resolve_against_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = synth_files(dir.path());
    let cfg = RunConfig::load(&config).unwrap();
    assert_eq!(cfg.output_dir, dir.path().join("data/grid-out"));
    assert!(cfg.validate().is_ok());
}
