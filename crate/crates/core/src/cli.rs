//! Configuration-driven commands behind the `causalreg` binary.
//!
//! Every command reads a JSON [`RunConfig`], computes everything in memory
//! and only then writes its output directory. Files are written to a
//! temporary sibling directory that is renamed into place, so a failing
//! command leaves no partial output behind.
//!
//! Relative paths inside a config file are resolved against the directory
//! holding the config file.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{
    assign_random_splits, build_tabular_bundle, build_tabular_bundle_with_encoder, build_text_bundle,
    build_text_bundle_with_vocab, bundle_to_corpus, filter_kindle, read_rated_tsv, synth_admission_table,
    synth_generate, AdmissionConfig, Corpus, DataBundle, EmbeddingTable, GroupFile, GroupWeightTriple,
    SynthConfig, TabularEncoder, TabularSchema, TabularTable, TextRepresentation, Vocabulary,
};
use crate::error::{Error, Result};
use crate::eval::rank_by_magnitude;
use crate::experiments::{
    evaluate_model, grid_search, lambda_sweep, recommended_defaults, repeat_seeds, run_baselines, run_single,
    seed_sequence, BaselineOptions, ExperimentReport, GridSpec, SeedMetrics, Selection, SettingResult, GRID_VALUES,
};
use crate::model::{FeatureGroups, LinearModel, PenaltyConfig};
use crate::optim::TrainConfig;

pub const MODEL_FORMAT: &str = "causalreg-model";
pub const MODEL_VERSION: u32 = 1;
pub const DEFAULT_ANNOTATION_THRESHOLD: f64 = 1.0;

/// Where the examples come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetConfig {
    /// Corpus TSV with columns `text`, `label` and optional `pair_id`,
    /// `split`.
    Text {
        corpus: PathBuf,
        /// GloVe text file, needed by the GloVe representations and the
        /// L2+GloVe baseline.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        embeddings: Option<PathBuf>,
        #[serde(default = "default_min_df")]
        min_df: usize,
        /// Re-split a corpus whose documents are all tagged `train`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        random_split: Option<[f64; 3]>,
    },
    /// Star-rated reviews (`text`, `rating`) of 5 to 40 tokens; 4–5 stars are
    /// positive, 1–2 negative, 3 dropped. Kept rows are split at random.
    Reviews {
        reviews: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        embeddings: Option<PathBuf>,
        #[serde(default = "default_min_df")]
        min_df: usize,
        #[serde(default = "default_review_split")]
        split: [f64; 3],
    },
    /// CSV table plus a JSON schema.
    Tabular { csv: PathBuf, schema: PathBuf },
    /// Generated bag-of-words data with planted groups and twins.
    Synthetic {
        #[serde(default)]
        config: SynthConfig,
    },
    /// Generated admission table with a sensitive `gender` column.
    Admission {
        #[serde(default)]
        config: AdmissionConfig,
    },
}

fn default_min_df() -> usize {
    1
}

fn default_review_split() -> [f64; 3] {
    [0.6, 0.2, 0.2]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Representation {
    Bow,
    Glove,
    GloveWeighted,
    Tabular,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Required by every command except `synth`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<DatasetConfig>,
    /// Feature-group file. Synthetic datasets carry their own groups.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub groups: Option<PathBuf>,
    /// Defaults to `bow` for text and `tabular` for tables.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub representation: Option<Representation>,
    /// Used by `glove_weighted` only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group_weights: Option<GroupWeightTriple>,
    /// Setting for `train` and `annotate-export`; `train` falls back to
    /// (0, 100, 10) and `annotate-export` to (0, 0, 0).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub penalty: Option<PenaltyConfig>,
    /// Grid for `grid`; defaults to the full constrained grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default = "default_selection")]
    pub selection: Selection,
    #[serde(default)]
    pub train: TrainConfig,
    /// Seeds per setting, starting at `train.seed`.
    #[serde(default = "default_seeds")]
    pub seeds: usize,
    /// Whether `grid` also runs the baseline rows.
    #[serde(default = "default_true")]
    pub baselines: bool,
    /// Uniform strengths the baselines are tuned over.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline_lambdas: Option<Vec<f64>>,
    /// Values visited by `sweep`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep_values: Option<Vec<f64>>,
    #[serde(default = "default_threshold")]
    pub annotate_threshold: f64,
    /// Model file read by `eval`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<PathBuf>,
    /// Seed for random train/validation/test assignment.
    #[serde(default)]
    pub data_seed: u64,
    pub output_dir: PathBuf,
    /// Worker threads; 0 uses every core.
    #[serde(default = "default_jobs")]
    pub jobs: usize,
    /// Generator settings for `synth`.
    #[serde(default, skip_serializing_if = "is_default")]
    pub synth: SynthConfig,
    #[serde(default, skip_serializing_if = "is_default")]
    pub admission: AdmissionConfig,
    /// Set by [`RunConfig::apply`] when a `--lambda-*` flag was given.
    #[serde(skip)]
    pub lambda_overridden: bool,
}

fn is_default<T: Default + PartialEq>(v: &T) -> bool {
    *v == T::default()
}

fn default_selection() -> Selection {
    Selection::CtfValidation
}

fn default_seeds() -> usize {
    10
}

fn default_true() -> bool {
    true
}

fn default_threshold() -> f64 {
    DEFAULT_ANNOTATION_THRESHOLD
}

fn default_jobs() -> usize {
    1
}

impl RunConfig {
    /// A config with every optional field at its default.
    pub fn new(dataset: Option<DatasetConfig>, output_dir: impl Into<PathBuf>) -> Self {
        Self {
            dataset,
            groups: None,
            representation: None,
            group_weights: None,
            penalty: None,
            grid: None,
            selection: default_selection(),
            train: TrainConfig::default(),
            seeds: default_seeds(),
            baselines: true,
            baseline_lambdas: None,
            sweep_values: None,
            annotate_threshold: DEFAULT_ANNOTATION_THRESHOLD,
            model: None,
            data_seed: 0,
            output_dir: output_dir.into(),
            jobs: default_jobs(),
            synth: SynthConfig::default(),
            admission: AdmissionConfig::default(),
            lambda_overridden: false,
        }
    }

    /// Reads a config file and resolves its relative paths.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(path.display().to_string(), format!("cannot read config: {e}")))?;
        let mut cfg: Self = serde_json::from_str(&text).map_err(|e| Error::config(path.display().to_string(), e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    /// Makes every relative path relative to `base` instead.
    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        match &mut self.dataset {
            Some(DatasetConfig::Text { corpus, embeddings, .. }) => {
                fix(corpus);
                embeddings.as_mut().map(fix);
            }
            Some(DatasetConfig::Reviews { reviews, embeddings, .. }) => {
                fix(reviews);
                embeddings.as_mut().map(fix);
            }
            Some(DatasetConfig::Tabular { csv, schema }) => {
                fix(csv);
                fix(schema);
            }
            _ => {}
        }
        self.groups.as_mut().map(fix);
        self.model.as_mut().map(fix);
        fix(&mut self.output_dir);
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.train.seed = s;
        }
        if let Some(j) = o.jobs {
            self.jobs = j;
        }
        if let Some(d) = &o.output_dir {
            self.output_dir = d.clone();
        }
        if o.has_lambda() {
            let mut p = self.penalty.unwrap_or_else(recommended_defaults);
            p.lambda_c = o.lambda_c.unwrap_or(p.lambda_c);
            p.lambda_s = o.lambda_s.unwrap_or(p.lambda_s);
            p.lambda_r = o.lambda_r.unwrap_or(p.lambda_r);
            self.penalty = Some(p);
            if let Some(g) = &mut self.grid {
                if let Some(v) = o.lambda_c {
                    g.lambda_c = vec![v];
                }
                if let Some(v) = o.lambda_s {
                    g.lambda_s = vec![v];
                }
                if let Some(v) = o.lambda_r {
                    g.lambda_r = vec![v];
                }
            }
        }
        self.lambda_overridden = o.has_lambda();
    }

    fn dataset(&self) -> Result<&DatasetConfig> {
        self.dataset
            .as_ref()
            .ok_or_else(|| Error::config("dataset", "this command needs a dataset"))
    }

    fn representation(&self) -> Result<Representation> {
        let dataset = self.dataset()?;
        let text = matches!(dataset, DatasetConfig::Text { .. } | DatasetConfig::Reviews { .. });
        let repr = self.representation.unwrap_or(match dataset {
            DatasetConfig::Tabular { .. } | DatasetConfig::Admission { .. } => Representation::Tabular,
            _ => Representation::Bow,
        });
        let ok = match repr {
            Representation::Bow => !matches!(dataset, DatasetConfig::Tabular { .. } | DatasetConfig::Admission { .. }),
            Representation::Glove | Representation::GloveWeighted => text,
            Representation::Tabular => !text && !matches!(dataset, DatasetConfig::Synthetic { .. }),
        };
        if !ok {
            return Err(Error::config(
                "representation",
                format!("{repr:?} does not apply to this dataset kind").to_lowercase(),
            ));
        }
        Ok(repr)
    }

    /// Checks everything that can be checked without reading data files.
    pub fn validate(&self) -> Result<()> {
        if let Some(d) = &self.dataset {
            self.representation()?;
            let exists = |field: &str, p: &Path| {
                if p.exists() {
                    Ok(())
                } else {
                    Err(Error::config(field, format!("{} does not exist", p.display())))
                }
            };
            match d {
                DatasetConfig::Text { corpus, embeddings, min_df, .. } | DatasetConfig::Reviews { reviews: corpus, embeddings, min_df, .. } => {
                    exists("dataset.corpus", corpus)?;
                    if let Some(e) = embeddings {
                        exists("dataset.embeddings", e)?;
                    }
                    if *min_df == 0 {
                        return Err(Error::config("dataset.min_df", "must be at least 1"));
                    }
                    let glove = matches!(self.representation, Some(Representation::Glove | Representation::GloveWeighted));
                    if glove && embeddings.is_none() {
                        return Err(Error::config("dataset.embeddings", "GloVe representations need an embedding file"));
                    }
                }
                DatasetConfig::Tabular { csv, schema } => {
                    exists("dataset.csv", csv)?;
                    exists("dataset.schema", schema)?;
                }
                DatasetConfig::Synthetic { config } => {
                    config.validate()?;
                    if self.groups.is_some() {
                        return Err(Error::config("groups", "synthetic datasets carry their planted groups"));
                    }
                }
                DatasetConfig::Admission { .. } => {}
            }
        }
        if let Some(g) = &self.groups {
            if !g.exists() {
                return Err(Error::config("groups", format!("{} does not exist", g.display())));
            }
        }
        if let Some(w) = &self.group_weights {
            w.validate().map_err(|e| Error::config("group_weights", e.to_string()))?;
        }
        if let Some(p) = &self.penalty {
            p.validate().map_err(|e| Error::config("penalty", e.to_string()))?;
        }
        if let Some(g) = &self.grid {
            g.validate()?;
        }
        self.train
            .validate()
            .map_err(|e| Error::config("train", e.to_string()))?;
        if self.seeds == 0 {
            return Err(Error::config("seeds", "must be at least 1"));
        }
        if self.annotate_threshold.is_nan() || self.annotate_threshold < 0.0 {
            return Err(Error::config("annotate_threshold", "must be a non-negative number"));
        }
        Ok(())
    }

    fn seed_list(&self) -> Vec<u64> {
        seed_sequence(self.train.seed, self.seeds)
    }
}

/// Command-line overrides applied on top of a config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub lambda_c: Option<f64>,
    pub lambda_s: Option<f64>,
    pub lambda_r: Option<f64>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub output_dir: Option<PathBuf>,
}

impl Overrides {
    pub fn has_lambda(&self) -> bool {
        self.lambda_c.is_some() || self.lambda_s.is_some() || self.lambda_r.is_some()
    }
}

/// A trained model with everything needed to featurize new data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub representation: Representation,
    pub feature_names: Vec<String>,
    pub groups: FeatureGroups,
    pub penalty: PenaltyConfig,
    pub seed: u64,
    pub model: LinearModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vocabulary: Option<Vocabulary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub encoder: Option<TabularEncoder>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group_weights: Option<GroupWeightTriple>,
}

impl ModelFile {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model is serialisable") + "\n"
    }

    pub fn from_json(text: &str, origin: &Path) -> Result<Self> {
        let m: Self = serde_json::from_str(text).map_err(|source| Error::Json {
            path: origin.to_owned(),
            source,
        })?;
        if m.format != MODEL_FORMAT || m.version != MODEL_VERSION {
            return Err(Error::Data(format!(
                "{}: unsupported model file {} v{} (expected {MODEL_FORMAT} v{MODEL_VERSION})",
                origin.display(),
                m.format,
                m.version
            )));
        }
        if m.model.dim() != m.feature_names.len() || m.groups.dim() != m.feature_names.len() {
            return Err(Error::Data(format!("{}: weights, names and groups disagree in length", origin.display())));
        }
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, path)
    }
}

/// Features the data was encoded with.
#[derive(Debug, Clone, PartialEq)]
enum Fitted {
    Vocabulary(Vocabulary),
    Encoder(TabularEncoder),
    Synthetic,
}

/// A dataset turned into a bundle.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub bundle: DataBundle,
    /// Unweighted mean-embedding version of the same splits.
    pub glove: Option<DataBundle>,
    pub representation: Representation,
    fitted: Fitted,
}

fn read_groups(cfg: &RunConfig) -> Result<GroupFile> {
    cfg.groups.as_deref().map_or_else(|| Ok(GroupFile::default()), GroupFile::read)
}

fn text_corpus(cfg: &RunConfig) -> Result<Option<(Corpus, Option<&Path>, usize)>> {
    Ok(match cfg.dataset()? {
        DatasetConfig::Text {
            corpus,
            embeddings,
            min_df,
            random_split,
        } => {
            let mut c = Corpus::read_tsv(corpus)?;
            if let Some(f) = random_split {
                c = assign_random_splits(&c, *f, cfg.data_seed)?;
            }
            Some((c, embeddings.as_deref(), *min_df))
        }
        DatasetConfig::Reviews {
            reviews,
            embeddings,
            min_df,
            split,
        } => {
            let c = filter_kindle(&read_rated_tsv(reviews)?);
            Some((assign_random_splits(&c, *split, cfg.data_seed)?, embeddings.as_deref(), *min_df))
        }
        _ => None,
    })
}

/// Loads and featurizes the configured dataset. With `stored`, the
/// vocabulary or encoder of that model is reused instead of being fitted.
fn prepare_with(cfg: &RunConfig, stored: Option<&ModelFile>) -> Result<Prepared> {
    cfg.validate()?;
    let repr = cfg.representation()?;
    let groups = read_groups(cfg)?;
    if let Some((corpus, embeddings, min_df)) = text_corpus(cfg)? {
        let table = embeddings.map(EmbeddingTable::read_glove).transpose()?;
        let weights = match repr {
            Representation::GloveWeighted => stored
                .and_then(|m| m.group_weights)
                .or(cfg.group_weights)
                .unwrap_or(GroupWeightTriple::UNIFORM),
            _ => GroupWeightTriple::UNIFORM,
        };
        let text_repr = match (repr, &table) {
            (Representation::Bow, _) => TextRepresentation::Bow,
            (_, Some(t)) => TextRepresentation::Glove { table: t, weights },
            (_, None) => return Err(Error::config("dataset.embeddings", "GloVe representations need an embedding file")),
        };
        let build = |r: TextRepresentation<'_>| match stored.and_then(|m| m.vocabulary.clone()) {
            Some(v) => build_text_bundle_with_vocab(&corpus, &groups, r, v),
            None => build_text_bundle(&corpus, &groups, r, min_df),
        };
        let tb = build(text_repr)?;
        let glove = match (&table, repr, stored) {
            (Some(t), Representation::Bow, None) if cfg.baselines => Some(
                build(TextRepresentation::Glove {
                    table: t,
                    weights: GroupWeightTriple::UNIFORM,
                })?
                .bundle,
            ),
            _ => None,
        };
        return Ok(Prepared {
            bundle: tb.bundle,
            glove,
            representation: repr,
            fitted: Fitted::Vocabulary(tb.vocab),
        });
    }
    let (table, schema, groups) = match cfg.dataset()? {
        DatasetConfig::Tabular { csv, schema } => (TabularTable::read_csv(csv)?, TabularSchema::read(schema)?, groups),
        DatasetConfig::Admission { config } => {
            let (t, s, g) = synth_admission_table(config)?;
            (t, s, if cfg.groups.is_some() { groups } else { g })
        }
        DatasetConfig::Synthetic { config } => {
            return Ok(Prepared {
                bundle: synth_generate(config)?.bundle,
                glove: None,
                representation: repr,
                fitted: Fitted::Synthetic,
            });
        }
        _ => unreachable!("text datasets handled above"),
    };
    let tb = match stored.and_then(|m| m.encoder.clone()) {
        Some(e) => build_tabular_bundle_with_encoder(&table, e, &groups, cfg.data_seed)?,
        None => build_tabular_bundle(&table, &schema, &groups, cfg.data_seed)?,
    };
    Ok(Prepared {
        bundle: tb.bundle,
        glove: None,
        representation: repr,
        fitted: Fitted::Encoder(tb.encoder),
    })
}

/// Loads and featurizes the configured dataset.
pub fn prepare(cfg: &RunConfig) -> Result<Prepared> {
    prepare_with(cfg, None)
}

impl Prepared {
    fn model_file(&self, penalty: PenaltyConfig, seed: u64, model: LinearModel, weights: Option<GroupWeightTriple>) -> ModelFile {
        let (vocabulary, encoder) = match &self.fitted {
            Fitted::Vocabulary(v) => (Some(v.clone()), None),
            Fitted::Encoder(e) => (None, Some(e.clone())),
            Fitted::Synthetic => (None, None),
        };
        ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            representation: self.representation,
            feature_names: self.bundle.feature_names.clone(),
            groups: self.bundle.groups.clone(),
            penalty,
            seed,
            model,
            vocabulary,
            encoder,
            group_weights: (self.representation == Representation::GloveWeighted).then(|| weights.unwrap_or(GroupWeightTriple::UNIFORM)),
        }
    }
}

/// Files a command wants to write, by name inside the output directory.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CommandOutput {
    pub files: Vec<(String, Vec<u8>)>,
    pub report: Option<ExperimentReport>,
    pub model: Option<ModelFile>,
}

impl CommandOutput {
    fn add(&mut self, name: &str, bytes: impl Into<Vec<u8>>) {
        self.files.push((name.to_owned(), bytes.into()));
    }

    fn with_report(mut self, report: ExperimentReport) -> Self {
        self.add("report.json", report.to_json());
        self.add("report.txt", report.to_table());
        self.report = Some(report);
        self
    }

    fn with_model(mut self, model: ModelFile) -> Self {
        self.add("model.json", model.to_json());
        self.model = Some(model);
        self
    }

    pub fn file(&self, name: &str) -> Option<&[u8]> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, b)| b.as_slice())
    }
}

/// Replaces `dir` with a directory holding exactly `files`. The new content
/// appears in one rename; a previous directory is removed afterwards.
pub fn write_output_dir(dir: &Path, files: &[(String, Vec<u8>)]) -> Result<()> {
    let parent = match dir.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_owned(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&parent).map_err(|e| Error::io(&parent, e))?;
    let staging = tempfile::Builder::new()
        .prefix(".causalreg-")
        .tempdir_in(&parent)
        .map_err(|e| Error::io(&parent, e))?;
    for (name, bytes) in files {
        let path = staging.path().join(name);
        std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
    }
    let staged = staging.keep();
    let old = if dir.exists() {
        let old = parent.join(format!(
            ".causalreg-old-{}",
            staged.file_name().and_then(|n| n.to_str()).unwrap_or("out")
        ));
        std::fs::rename(dir, &old).map_err(|e| Error::io(dir, e))?;
        Some(old)
    } else {
        None
    };
    if let Err(e) = std::fs::rename(&staged, dir) {
        if let Some(old) = &old {
            let _ = std::fs::rename(old, dir);
        }
        let _ = std::fs::remove_dir_all(&staged);
        return Err(Error::io(dir, e));
    }
    if let Some(old) = old {
        std::fs::remove_dir_all(&old).map_err(|e| Error::io(&old, e))?;
    }
    Ok(())
}

/// Tab-separated `feature\tweight` lines of every feature with
/// |weight| > `threshold`, largest magnitude first, ties by index.
pub fn annotation_tsv(model: &LinearModel, names: &[String], threshold: f64) -> String {
    let mut out = format!("# threshold\t{threshold}\nfeature\tweight\n");
    for i in rank_by_magnitude(&model.weights) {
        let w = model.weights[i];
        if w.abs() <= threshold {
            break;
        }
        let _ = writeln!(out, "{}\t{w}", names[i]);
    }
    out
}

/// Trains a uniform-λ model on the configured data and exports its
/// largest-magnitude features for labelling.
pub fn cmd_annotate_export(cfg: &RunConfig) -> Result<CommandOutput> {
    let penalty = cfg.penalty.unwrap_or_else(PenaltyConfig::zero);
    if !penalty.is_uniform() {
        return Err(Error::config("penalty", "annotate-export trains a plain L2 model; use equal strengths"));
    }
    let prep = prepare(cfg)?;
    let (_, result) = run_single(&prep.bundle, &penalty, &cfg.train)?;
    let model = result.model;
    if !model.is_finite() {
        return Err(Error::DegenerateModel("non-finite weights".into()));
    }
    if model.weights.iter().all(|&w| w == 0.0) {
        return Err(Error::DegenerateModel("every weight is zero".into()));
    }
    let mut out = CommandOutput::default();
    out.add("annotations.tsv", annotation_tsv(&model, &prep.bundle.feature_names, cfg.annotate_threshold));
    out.add(
        "groups.template.json",
        serde_json::to_string_pretty(&GroupFile::default()).expect("serialisable") + "\n",
    );
    let file = prep.model_file(penalty, cfg.train.seed, model, cfg.group_weights);
    Ok(out.with_model(file))
}

/// Trains one setting over `seeds` seeds. The model file holds the first
/// seed's model.
pub fn cmd_train(cfg: &RunConfig) -> Result<CommandOutput> {
    let prep = prepare(cfg)?;
    let penalty = cfg.penalty.unwrap_or_else(recommended_defaults);
    let setting = repeat_seeds(&prep.bundle, &penalty, &cfg.train, cfg.seeds, cfg.jobs)?;
    let (_, first) = run_single(&prep.bundle, &penalty, &cfg.train)?;
    let file = prep.model_file(penalty, cfg.train.seed, first.model, cfg.group_weights);
    Ok(CommandOutput::default()
        .with_report(ExperimentReport::new(vec![setting], Vec::new(), None))
        .with_model(file))
}

/// Scores a saved model on the configured data, featurized with the
/// model's own vocabulary or encoder.
pub fn cmd_eval(cfg: &RunConfig) -> Result<CommandOutput> {
    let path = cfg
        .model
        .as_deref()
        .ok_or_else(|| Error::config("model", "eval needs a model file"))?;
    let stored = ModelFile::load(path)?;
    if cfg.representation.is_some_and(|r| r != stored.representation) {
        return Err(Error::config("representation", "differs from the model file"));
    }
    let mut cfg = cfg.clone();
    cfg.representation = Some(stored.representation);
    cfg.baselines = false;
    let prep = prepare_with(&cfg, Some(&stored))?;
    if prep.bundle.feature_names != stored.feature_names {
        return Err(Error::Data("dataset features do not match the model's features".into()));
    }
    let bundle = prep.bundle.with_groups(stored.groups.clone())?;
    let metrics = evaluate_model(&bundle, &stored.model)?;
    let run = SeedMetrics {
        penalty: stored.penalty,
        seed: stored.seed,
        epochs_run: 0,
        best_epoch: 0,
        learning_rate: 0.0,
        metrics,
    };
    let setting = SettingResult::from_runs(stored.penalty, vec![run]);
    Ok(CommandOutput::default().with_report(ExperimentReport::new(vec![setting], Vec::new(), None)))
}

/// Grid search with model selection, plus the baseline rows.
pub fn cmd_grid(cfg: &RunConfig) -> Result<CommandOutput> {
    let prep = prepare(cfg)?;
    let grid = cfg.grid.clone().unwrap_or_default();
    let seeds = cfg.seed_list();
    let mut report = grid_search(&prep.bundle, &grid, &cfg.train, cfg.selection, &seeds, cfg.jobs)?;
    if cfg.baselines {
        let opts = BaselineOptions {
            lambdas: cfg.baseline_lambdas.clone().unwrap_or_else(|| GRID_VALUES.to_vec()),
            selection: cfg.selection,
            seeds,
            jobs: cfg.jobs,
            glove: prep.glove.as_ref(),
        };
        report.baselines = run_baselines(&prep.bundle, &cfg.train, &opts)?;
    }
    let chosen = report.selection.as_ref().expect("grid search selects").selected;
    let (_, best) = run_single(&prep.bundle, &chosen, &cfg.train)?;
    let file = prep.model_file(chosen, cfg.train.seed, best.model, cfg.group_weights);
    Ok(CommandOutput::default().with_report(report).with_model(file))
}

/// One-at-a-time sweep of λc, λs and λr from (0, 0, 0).
pub fn cmd_sweep(cfg: &RunConfig) -> Result<CommandOutput> {
    if cfg.lambda_overridden {
        return Err(Error::config("lambda", "sweep varies every strength; --lambda-* overrides do not apply"));
    }
    let prep = prepare(cfg)?;
    let values = cfg.sweep_values.clone().unwrap_or_else(|| GRID_VALUES.to_vec());
    if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::config("sweep_values", "values must be finite and non-negative"));
    }
    let report = lambda_sweep(&prep.bundle, &values, &cfg.train, &cfg.seed_list(), cfg.jobs)?;
    Ok(CommandOutput::default().with_report(report))
}

/// Writes a synthetic text corpus and admission table with their group
/// files, an embedding table and ready-to-run configs.
pub fn cmd_synth(cfg: &RunConfig) -> Result<CommandOutput> {
    let mut synth = cfg.synth.clone();
    synth.seed = cfg.train.seed.wrapping_add(synth.seed);
    let data = synth_generate(&synth)?;
    let corpus = bundle_to_corpus(&data.bundle)?;
    let text_groups = GroupFile::from_groups(&data.bundle.groups, &data.bundle.feature_names);
    let glove = EmbeddingTable::random(&data.bundle.feature_names, 50, synth.seed);
    let (table, schema, admission_groups) = synth_admission_table(&cfg.admission)?;

    let mut out = CommandOutput::default();
    let tmp = tempfile::tempdir().map_err(|e| Error::io(std::env::temp_dir(), e))?;
    let stage = |name: &str, write: &dyn Fn(&Path) -> Result<()>| -> Result<Vec<u8>> {
        let p = tmp.path().join(name);
        write(&p)?;
        std::fs::read(&p).map_err(|e| Error::io(&p, e))
    };
    out.add("corpus.tsv", stage("corpus.tsv", &|p| corpus.write_tsv(p))?);
    out.add("groups.json", stage("groups.json", &|p| text_groups.write(p))?);
    out.add("glove.txt", stage("glove.txt", &|p| glove.write_glove(p))?);
    out.add("admission.csv", stage("admission.csv", &|p| table.write_csv(p))?);
    out.add("admission_schema.json", serde_json::to_string_pretty(&schema).expect("serialisable") + "\n");
    out.add("admission_groups.json", stage("admission_groups.json", &|p| admission_groups.write(p))?);
    out.add("truth.json", serde_json::to_string_pretty(&data.truth).expect("serialisable") + "\n");

    let mut text = RunConfig::new(
        Some(DatasetConfig::Text {
            corpus: "corpus.tsv".into(),
            embeddings: Some("glove.txt".into()),
            min_df: 1,
            random_split: None,
        }),
        "grid-out",
    );
    text.groups = Some("groups.json".into());
    text.train = cfg.train.clone();
    text.seeds = cfg.seeds;
    text.jobs = cfg.jobs;
    let mut fair = RunConfig::new(
        Some(DatasetConfig::Tabular {
            csv: "admission.csv".into(),
            schema: "admission_schema.json".into(),
        }),
        "fairness-out",
    );
    fair.groups = Some("admission_groups.json".into());
    fair.selection = Selection::Fairness;
    fair.train = cfg.train.clone();
    fair.seeds = cfg.seeds;
    fair.jobs = cfg.jobs;
    out.add("grid_config.json", config_json(&text));
    out.add("fairness_config.json", config_json(&fair));
    Ok(out)
}

fn config_json(cfg: &RunConfig) -> String {
    serde_json::to_string_pretty(cfg).expect("serialisable") + "\n"
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    AnnotateExport,
    Train,
    Eval,
    Grid,
    Sweep,
    Synth,
}

/// Runs `command` and writes its output directory. Returns the directory.
pub fn execute(command: Command, cfg: &RunConfig) -> Result<PathBuf> {
    let out = match command {
        Command::AnnotateExport => cmd_annotate_export(cfg),
        Command::Train => cmd_train(cfg),
        Command::Eval => cmd_eval(cfg),
        Command::Grid => cmd_grid(cfg),
        Command::Sweep => cmd_sweep(cfg),
        Command::Synth => cmd_synth(cfg),
    }?;
    write_output_dir(&cfg.output_dir, &out.files)?;
    if let Some(r) = &out.report {
        print!("{}", r.to_table());
    }
    Ok(cfg.output_dir.clone())
}
