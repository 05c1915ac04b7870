//! Experiment drivers: constrained grid search with model selection, seed
//! repetition, the baseline rows and one-at-a-time λ sweeps.
//!
//! Every (penalty, seed) training run is an independent job. Jobs run on a
//! rayon pool and results are gathered in job order, so reports do not
//! depend on the number of threads.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{DataBundle, PairedDataset};
use crate::error::{Error, Result};
use crate::eval::{accuracy, causal_fraction_topn, counterfactual_accuracy, f1, fairness_report};
use crate::model::{bce_loss, Group, LinearModel, PenaltyConfig, DECISION_THRESHOLD};
use crate::optim::{train, TrainConfig, TrainResult};

/// Candidate strengths for each of λc, λs and λr.
pub const GRID_VALUES: [f64; 9] = [0.0, 1e-4, 1e-3, 1e-2, 0.1, 1.0, 10.0, 100.0, 1000.0];

/// Accuracy slack used by the fairness selection rule.
pub const FAIRNESS_ACCURACY_SLACK: f64 = 0.01;

/// Top-n size reported for the causal-fraction diagnostic.
pub const TOP_N: usize = 10;

/// Recommended fixed setting `(λc, λs, λr) = (0, 100, 10)`.
pub fn recommended_defaults() -> PenaltyConfig {
    PenaltyConfig {
        lambda_c: 0.0,
        lambda_s: 100.0,
        lambda_r: 10.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstraintMode {
    /// Keep only triples with `λs ≥ λr ≥ λc` and `λs > λc`.
    Ordered,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lambda_c: Vec<f64>,
    pub lambda_s: Vec<f64>,
    pub lambda_r: Vec<f64>,
    pub constraint: ConstraintMode,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self::full()
    }
}

impl GridSpec {
    /// All nine values on every axis, constrained.
    pub fn full() -> Self {
        Self {
            lambda_c: GRID_VALUES.to_vec(),
            lambda_s: GRID_VALUES.to_vec(),
            lambda_r: GRID_VALUES.to_vec(),
            constraint: ConstraintMode::Ordered,
        }
    }

    /// A grid holding one triple, unconstrained.
    pub fn single(cfg: PenaltyConfig) -> Self {
        Self {
            lambda_c: vec![cfg.lambda_c],
            lambda_s: vec![cfg.lambda_s],
            lambda_r: vec![cfg.lambda_r],
            constraint: ConstraintMode::None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (field, values) in [
            ("grid.lambda_c", &self.lambda_c),
            ("grid.lambda_s", &self.lambda_s),
            ("grid.lambda_r", &self.lambda_r),
        ] {
            if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
                return Err(Error::config(field, format!("{v} is not a finite non-negative value")));
            }
        }
        Ok(())
    }

    /// Admissible triples in ascending lexicographic `(λc, λs, λr)` order,
    /// duplicates removed.
    pub fn triples(&self) -> Result<Vec<PenaltyConfig>> {
        self.validate()?;
        let sorted = |v: &[f64]| {
            let mut v = v.to_vec();
            v.sort_by(f64::total_cmp);
            v.dedup();
            v
        };
        let mut out = Vec::new();
        for &c in &sorted(&self.lambda_c) {
            for &s in &sorted(&self.lambda_s) {
                for &r in &sorted(&self.lambda_r) {
                    let p = PenaltyConfig {
                        lambda_c: c,
                        lambda_s: s,
                        lambda_r: r,
                    };
                    if self.constraint == ConstraintMode::None || p.is_admissible() {
                        out.push(p);
                    }
                }
            }
        }
        if out.is_empty() {
            return Err(Error::EmptyGrid);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    /// Highest mean accuracy on the counterfactual validation twins. Without
    /// such twins, lowest mean validation cross-entropy.
    CtfValidation,
    /// Lowest mean validation ΔEO among settings whose mean validation
    /// accuracy is within 0.01 of the best.
    Fairness,
}

/// Metrics of one trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedMetrics {
    pub penalty: PenaltyConfig,
    pub seed: u64,
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub learning_rate: f64,
    pub metrics: MetricSet,
}

/// One value per metric. Also used for the mean and standard deviation of
/// a setting across seeds.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub test_accuracy: f64,
    pub test_f1: f64,
    pub ctf_accuracy: Option<f64>,
    pub val_accuracy: f64,
    pub val_bce: f64,
    pub ctf_val_accuracy: Option<f64>,
    pub delta_eo: Option<f64>,
    pub delta_dp: Option<f64>,
    pub val_delta_eo: Option<f64>,
    pub causal_fraction_top10: Option<f64>,
    /// Squared norm of the spurious weights.
    pub spurious_norm_sq: f64,
}

impl MetricSet {
    fn fields(&self) -> [Option<f64>; 11] {
        [
            Some(self.test_accuracy),
            Some(self.test_f1),
            self.ctf_accuracy,
            Some(self.val_accuracy),
            Some(self.val_bce),
            self.ctf_val_accuracy,
            self.delta_eo,
            self.delta_dp,
            self.val_delta_eo,
            self.causal_fraction_top10,
            Some(self.spurious_norm_sq),
        ]
    }

    fn from_fields(f: [Option<f64>; 11]) -> Self {
        Self {
            test_accuracy: f[0].unwrap_or(0.0),
            test_f1: f[1].unwrap_or(0.0),
            ctf_accuracy: f[2],
            val_accuracy: f[3].unwrap_or(0.0),
            val_bce: f[4].unwrap_or(0.0),
            ctf_val_accuracy: f[5],
            delta_eo: f[6],
            delta_dp: f[7],
            val_delta_eo: f[8],
            causal_fraction_top10: f[9],
            spurious_norm_sq: f[10].unwrap_or(0.0),
        }
    }
}

/// Mean and sample standard deviation of each metric over `runs`. A metric
/// missing from any run is missing from the result. One run gives std 0.
pub fn aggregate(runs: &[MetricSet]) -> (MetricSet, MetricSet) {
    let n = runs.len();
    let mut mean = [None; 11];
    let mut std = [None; 11];
    for k in 0..11 {
        let vals: Option<Vec<f64>> = runs.iter().map(|r| r.fields()[k]).collect();
        let Some(vals) = vals.filter(|v| !v.is_empty()) else { continue };
        let m = vals.iter().sum::<f64>() / n as f64;
        let s = if n < 2 {
            0.0
        } else {
            (vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        };
        mean[k] = Some(m);
        std[k] = Some(s);
    }
    (MetricSet::from_fields(mean), MetricSet::from_fields(std))
}

/// Evaluates `model` on every available split of `bundle`.
pub fn evaluate_model(bundle: &DataBundle, model: &LinearModel) -> Result<MetricSet> {
    if model.dim() != bundle.dim() {
        return Err(Error::DimensionMismatch {
            expected: bundle.dim(),
            actual: model.dim(),
            context: "model weights vs bundle features",
        });
    }
    let test_pred = model.predict(&bundle.test.features)?;
    let val_probs = model.predict_proba_matrix(&bundle.validation.features)?;
    let val_pred: Vec<u8> = val_probs
        .iter()
        .map(|&p| u8::from(p >= DECISION_THRESHOLD))
        .collect();
    let has_twins = |s: &PairedDataset| s.twin.as_ref().is_some_and(|t| !t.is_empty());
    let fairness = |pred: &[u8], split: &PairedDataset| {
        let sens = split.sensitive.as_ref()?;
        match fairness_report(pred, &split.labels, sens, None) {
            Ok(r) => Some(r),
            Err(e) => {
                log::warn!("fairness metrics unavailable: {e}");
                None
            }
        }
    };
    let test_fair = fairness(&test_pred, &bundle.test);
    let val_fair = fairness(&val_pred, &bundle.validation);
    let top = if bundle.groups.size(Group::Causal) > 0 && bundle.dim() >= TOP_N {
        Some(causal_fraction_topn(model, &bundle.groups, &[TOP_N])?[0])
    } else {
        None
    };
    Ok(MetricSet {
        test_accuracy: accuracy(&test_pred, &bundle.test.labels)?,
        test_f1: f1(&test_pred, &bundle.test.labels)?,
        ctf_accuracy: if has_twins(&bundle.test) {
            Some(counterfactual_accuracy(model, &bundle.test)?)
        } else {
            None
        },
        val_accuracy: accuracy(&val_pred, &bundle.validation.labels)?,
        val_bce: bce_loss(&val_probs, &bundle.validation.labels)?,
        ctf_val_accuracy: if has_twins(&bundle.validation) {
            Some(counterfactual_accuracy(model, &bundle.validation)?)
        } else {
            None
        },
        delta_eo: test_fair.as_ref().map(|r| r.delta_eo),
        delta_dp: test_fair.as_ref().map(|r| r.delta_dp),
        val_delta_eo: val_fair.as_ref().map(|r| r.delta_eo),
        causal_fraction_top10: top,
        spurious_norm_sq: model.group_squared_norm(&bundle.groups, Group::Spurious),
    })
}

/// Trains on `bundle.train` with early stopping on `bundle.validation` and
/// evaluates on every available split.
pub fn run_single(
    bundle: &DataBundle,
    penalty: &PenaltyConfig,
    tcfg: &TrainConfig,
) -> Result<(SeedMetrics, TrainResult)> {
    let result = train(
        &bundle.train.features,
        &bundle.train.labels,
        &bundle.validation.features,
        &bundle.validation.labels,
        &bundle.groups,
        penalty,
        tcfg,
    )?;
    let metrics = evaluate_model(bundle, &result.model)?;
    Ok((
        SeedMetrics {
            penalty: *penalty,
            seed: tcfg.seed,
            epochs_run: result.epochs_run,
            best_epoch: result.best_epoch,
            learning_rate: result.learning_rate,
            metrics,
        },
        result,
    ))
}

/// Deterministic seed sequence `seed0, seed0 + 1, …, seed0 + k − 1`.
pub fn seed_sequence(seed0: u64, k: usize) -> Vec<u64> {
    (0..k as u64).map(|i| seed0.wrapping_add(i)).collect()
}

/// Runs `f` over `items` on a pool of `jobs` threads (0 = all cores),
/// keeping the input order.
pub fn parallel_map<T, R, F>(items: &[T], jobs: usize, f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Result<R> + Sync + Send,
{
    if jobs == 1 {
        return items.iter().map(f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::config("jobs", e.to_string()))?;
    pool.install(|| items.par_iter().map(f).collect())
}

/// A penalty setting evaluated over several seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettingResult {
    pub penalty: PenaltyConfig,
    pub seeds: Vec<u64>,
    pub single_seed: bool,
    pub per_seed: Vec<SeedMetrics>,
    pub mean: MetricSet,
    pub std: MetricSet,
}

impl SettingResult {
    pub fn from_runs(penalty: PenaltyConfig, per_seed: Vec<SeedMetrics>) -> Self {
        let runs: Vec<MetricSet> = per_seed.iter().map(|s| s.metrics.clone()).collect();
        let (mean, std) = aggregate(&runs);
        Self {
            penalty,
            seeds: per_seed.iter().map(|s| s.seed).collect(),
            single_seed: per_seed.len() < 2,
            per_seed,
            mean,
            std,
        }
    }
}

/// Trains every penalty in `penalties` with every seed in `seeds`.
pub fn evaluate_settings(
    bundle: &DataBundle,
    penalties: &[PenaltyConfig],
    tcfg: &TrainConfig,
    seeds: &[u64],
    jobs: usize,
) -> Result<Vec<SettingResult>> {
    if seeds.is_empty() {
        return Err(Error::config("seeds", "at least one seed is required"));
    }
    let work: Vec<(usize, u64)> = (0..penalties.len())
        .flat_map(|p| seeds.iter().map(move |&s| (p, s)))
        .collect();
    let runs = parallel_map(&work, jobs, |&(p, s)| {
        run_single(bundle, &penalties[p], &tcfg.with_seed(s)).map(|(m, _)| m)
    })?;
    let mut runs = runs.into_iter();
    Ok(penalties
        .iter()
        .map(|&p| SettingResult::from_runs(p, runs.by_ref().take(seeds.len()).collect()))
        .collect())
}

/// `k` seeds of one setting starting at `tcfg.seed`.
pub fn repeat_seeds(
    bundle: &DataBundle,
    penalty: &PenaltyConfig,
    tcfg: &TrainConfig,
    k: usize,
    jobs: usize,
) -> Result<SettingResult> {
    if k == 0 {
        return Err(Error::config("seeds", "k must be at least 1"));
    }
    let mut r = evaluate_settings(bundle, &[*penalty], tcfg, &seed_sequence(tcfg.seed, k), jobs)?;
    Ok(r.remove(0))
}

/// Which setting won and why.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionInfo {
    pub criterion: Selection,
    /// The statistic actually compared, e.g. `ctf_val_accuracy`.
    pub statistic: String,
    pub selected: PenaltyConfig,
    pub index: usize,
    pub score: f64,
}

/// Picks a setting from `settings` (assumed in ascending lexicographic
/// order, so the first of equal scores wins ties).
pub fn select(settings: &[SettingResult], criterion: Selection) -> Result<SelectionInfo> {
    if settings.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let pick = |statistic: &str, score: &dyn Fn(&SettingResult) -> Option<f64>, maximize: bool, eligible: &dyn Fn(&SettingResult) -> bool| {
        let mut best: Option<(usize, f64)> = None;
        for (i, s) in settings.iter().enumerate() {
            if !eligible(s) {
                continue;
            }
            let Some(v) = score(s) else { continue };
            let better = match best {
                None => true,
                Some((_, b)) => {
                    if maximize {
                        v > b
                    } else {
                        v < b
                    }
                }
            };
            if better {
                best = Some((i, v));
            }
        }
        best.map(|(index, score)| SelectionInfo {
            criterion,
            statistic: statistic.to_owned(),
            selected: settings[index].penalty,
            index,
            score,
        })
    };
    match criterion {
        Selection::CtfValidation => {
            if settings.iter().all(|s| s.mean.ctf_val_accuracy.is_some()) {
                Ok(pick("ctf_val_accuracy", &|s| s.mean.ctf_val_accuracy, true, &|_| true).expect("non-empty"))
            } else {
                log::warn!("no counterfactual validation split; selecting on validation cross-entropy");
                Ok(pick("val_bce", &|s| Some(s.mean.val_bce), false, &|_| true).expect("non-empty"))
            }
        }
        Selection::Fairness => {
            if settings.iter().any(|s| s.mean.val_delta_eo.is_none()) {
                return Err(Error::MissingSplit("validation sensitive attribute"));
            }
            let best_acc = settings
                .iter()
                .map(|s| s.mean.val_accuracy)
                .fold(f64::NEG_INFINITY, f64::max);
            let eligible = |s: &SettingResult| s.mean.val_accuracy >= best_acc - FAIRNESS_ACCURACY_SLACK;
            Ok(pick("val_delta_eo", &|s| s.mean.val_delta_eo, false, &eligible).expect("best setting is eligible"))
        }
    }
}

/// Grid search over the admissible triples of `grid`.
pub fn grid_search(
    bundle: &DataBundle,
    grid: &GridSpec,
    tcfg: &TrainConfig,
    selection: Selection,
    seeds: &[u64],
    jobs: usize,
) -> Result<ExperimentReport> {
    let triples = grid.triples()?;
    if selection == Selection::Fairness && bundle.validation.sensitive.is_none() {
        return Err(Error::MissingSplit("validation sensitive attribute"));
    }
    let settings = evaluate_settings(bundle, &triples, tcfg, seeds, jobs)?;
    let chosen = select(&settings, selection)?;
    Ok(ExperimentReport::new(settings, Vec::new(), Some(chosen)))
}

/// A baseline: a uniform-λ model on a transformed bundle, with λ tuned by
/// the same selection rule as the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineRow {
    pub name: String,
    /// Why the row was not run, when it was not.
    pub skipped: Option<String>,
    pub train_rows: usize,
    pub features: usize,
    pub result: Option<SettingResult>,
    pub selection: Option<SelectionInfo>,
}

impl BaselineRow {
    fn skipped(name: &str, reason: String) -> Self {
        log::warn!("baseline {name} skipped: {reason}");
        Self {
            name: name.to_owned(),
            skipped: Some(reason),
            train_rows: 0,
            features: 0,
            result: None,
            selection: None,
        }
    }
}

pub const BASELINE_L2_BOW: &str = "L2+BOW";
pub const BASELINE_L2_GLOVE: &str = "L2+GloVe";
pub const BASELINE_FEATURE_SELECTION: &str = "feature-selection";
pub const BASELINE_AUGMENTATION: &str = "data-augmentation";

/// Options shared by the baseline rows.
#[derive(Debug, Clone)]
pub struct BaselineOptions<'a> {
    /// Uniform strengths the L2 models are tuned over.
    pub lambdas: Vec<f64>,
    pub selection: Selection,
    pub seeds: Vec<u64>,
    pub jobs: usize,
    /// Dense GloVe version of the same splits, if available.
    pub glove: Option<&'a DataBundle>,
}

/// Tunes a uniform-λ model on `bundle`.
pub fn tuned_l2(
    name: &str,
    bundle: &DataBundle,
    tcfg: &TrainConfig,
    opts: &BaselineOptions<'_>,
) -> Result<BaselineRow> {
    let mut lambdas = opts.lambdas.clone();
    lambdas.sort_by(f64::total_cmp);
    lambdas.dedup();
    let penalties = lambdas
        .iter()
        .map(|&l| PenaltyConfig::uniform(l))
        .collect::<Result<Vec<_>>>()?;
    if penalties.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let mut settings = evaluate_settings(bundle, &penalties, tcfg, &opts.seeds, opts.jobs)?;
    let chosen = select(&settings, opts.selection)?;
    Ok(BaselineRow {
        name: name.to_owned(),
        skipped: None,
        train_rows: bundle.train.len(),
        features: bundle.dim(),
        result: Some(settings.swap_remove(chosen.index)),
        selection: Some(chosen),
    })
}

/// L2 on bag of words, L2 on GloVe, L2 after deleting the spurious columns,
/// and L2 on the training set doubled by its counterfactual twins.
pub fn run_baselines(
    bundle: &DataBundle,
    tcfg: &TrainConfig,
    opts: &BaselineOptions<'_>,
) -> Result<Vec<BaselineRow>> {
    let mut rows = vec![tuned_l2(BASELINE_L2_BOW, bundle, tcfg, opts)?];
    rows.push(match opts.glove {
        Some(g) => tuned_l2(BASELINE_L2_GLOVE, g, tcfg, opts)?,
        None => BaselineRow::skipped(BASELINE_L2_GLOVE, "no embedding table configured".into()),
    });
    let spurious = bundle.groups.spurious().to_vec();
    rows.push(if spurious.is_empty() {
        BaselineRow::skipped(BASELINE_FEATURE_SELECTION, "no spurious features labelled".into())
    } else {
        tuned_l2(BASELINE_FEATURE_SELECTION, &bundle.without_features(&spurious)?, tcfg, opts)?
    });
    rows.push(match bundle.augmented() {
        Ok(aug) => tuned_l2(BASELINE_AUGMENTATION, &aug, tcfg, opts)?,
        Err(Error::UnpairedRows(r)) => BaselineRow::skipped(BASELINE_AUGMENTATION, format!("unpaired training rows: {}", r.join(", "))),
        Err(e) => return Err(e),
    });
    Ok(rows)
}

/// One point of a λ sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub varied: Group,
    pub value: f64,
    /// Index into the report's settings.
    pub setting: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub points: Vec<SweepPoint>,
    /// Largest |ctf accuracy − ctf accuracy at the origin| per varied group,
    /// in causal, spurious, remaining order.
    pub max_ctf_change: [Option<f64>; 3],
    pub max_test_change: [f64; 3],
}

/// Starting from (0,0,0), moves one strength at a time across `values`.
/// The origin is trained once and shared by all three sweeps.
pub fn lambda_sweep(
    bundle: &DataBundle,
    values: &[f64],
    tcfg: &TrainConfig,
    seeds: &[u64],
    jobs: usize,
) -> Result<ExperimentReport> {
    let mut values = values.to_vec();
    values.sort_by(f64::total_cmp);
    values.dedup();
    let mut penalties = vec![PenaltyConfig::zero()];
    let mut points = Vec::new();
    for g in Group::ALL {
        for &v in &values {
            let mut p = PenaltyConfig::zero();
            match g {
                Group::Causal => p.lambda_c = v,
                Group::Spurious => p.lambda_s = v,
                Group::Remaining => p.lambda_r = v,
            }
            p.validate()?;
            let setting = if v == 0.0 {
                0
            } else {
                penalties.push(p);
                penalties.len() - 1
            };
            points.push(SweepPoint {
                varied: g,
                value: v,
                setting,
            });
        }
    }
    let settings = evaluate_settings(bundle, &penalties, tcfg, seeds, jobs)?;
    let origin = &settings[0].mean;
    let mut max_ctf_change = [None; 3];
    let mut max_test_change = [0.0f64; 3];
    for (k, g) in Group::ALL.iter().enumerate() {
        for pt in points.iter().filter(|p| p.varied == *g) {
            let m = &settings[pt.setting].mean;
            max_test_change[k] = max_test_change[k].max((m.test_accuracy - origin.test_accuracy).abs());
            if let (Some(a), Some(o)) = (m.ctf_accuracy, origin.ctf_accuracy) {
                let d = (a - o).abs();
                max_ctf_change[k] = Some(max_ctf_change[k].map_or(d, |c: f64| c.max(d)));
            }
        }
    }
    let mut report = ExperimentReport::new(settings, Vec::new(), None);
    report.sweep = Some(SweepSummary {
        points,
        max_ctf_change,
        max_test_change,
    });
    Ok(report)
}

/// Setting identity as listed in the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettingSummary {
    pub penalty: PenaltyConfig,
    pub seeds: Vec<u64>,
    pub single_seed: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    /// Aligned with `settings`.
    pub mean: Vec<MetricSet>,
    pub std: Vec<MetricSet>,
}

/// Everything an experiment produced, in a layout that serialises to
/// `{settings, per_seed_metrics, aggregate: {mean, std}, baselines, selection}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub settings: Vec<SettingSummary>,
    pub per_seed_metrics: Vec<SeedMetrics>,
    pub aggregate: Aggregate,
    pub baselines: Vec<BaselineRow>,
    pub selection: Option<SelectionInfo>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSummary>,
}

impl ExperimentReport {
    pub fn new(settings: Vec<SettingResult>, baselines: Vec<BaselineRow>, selection: Option<SelectionInfo>) -> Self {
        let mut report = Self {
            settings: Vec::with_capacity(settings.len()),
            per_seed_metrics: Vec::new(),
            aggregate: Aggregate::default(),
            baselines,
            selection,
            sweep: None,
        };
        for s in settings {
            report.settings.push(SettingSummary {
                penalty: s.penalty,
                seeds: s.seeds,
                single_seed: s.single_seed,
            });
            report.per_seed_metrics.extend(s.per_seed);
            report.aggregate.mean.push(s.mean);
            report.aggregate.std.push(s.std);
        }
        report
    }

    /// Mean and std of the setting at `index`.
    pub fn setting(&self, index: usize) -> (&PenaltyConfig, &MetricSet, &MetricSet) {
        (
            &self.settings[index].penalty,
            &self.aggregate.mean[index],
            &self.aggregate.std[index],
        )
    }

    pub fn find(&self, penalty: &PenaltyConfig) -> Option<usize> {
        self.settings.iter().position(|s| s.penalty == *penalty)
    }

    pub fn selected(&self) -> Option<(&PenaltyConfig, &MetricSet, &MetricSet)> {
        self.selection.as_ref().map(|s| self.setting(s.index))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is serialisable") + "\n"
    }

    /// Aligned text table: one row per baseline, then the selected setting
    /// (or every setting when nothing was selected).
    pub fn to_table(&self) -> String {
        let mut rows: Vec<[String; 7]> = vec![[
            "model".into(),
            "λ (c,s,r)".into(),
            "test acc".into(),
            "ctf acc".into(),
            "ΔEO".into(),
            "ΔDP".into(),
            "seeds".into(),
        ]];
        let pm = |m: Option<f64>, s: Option<f64>| match (m, s) {
            (Some(m), Some(s)) => format!("{m:.3} ± {s:.3}"),
            _ => "-".into(),
        };
        let row = |name: &str, p: &PenaltyConfig, m: &MetricSet, s: &MetricSet, n: usize| {
            [
                name.to_owned(),
                p.to_string(),
                pm(Some(m.test_accuracy), Some(s.test_accuracy)),
                pm(m.ctf_accuracy, s.ctf_accuracy),
                pm(m.delta_eo, s.delta_eo),
                pm(m.delta_dp, s.delta_dp),
                n.to_string(),
            ]
        };
        for b in &self.baselines {
            match &b.result {
                Some(r) => rows.push(row(&b.name, &r.penalty, &r.mean, &r.std, r.seeds.len())),
                None => rows.push([
                    b.name.clone(),
                    "skipped".into(),
                    "-".into(),
                    "-".into(),
                    "-".into(),
                    "-".into(),
                    "0".into(),
                ]),
            }
        }
        match &self.selection {
            Some(sel) => {
                let (p, m, s) = self.setting(sel.index);
                rows.push(row("grouped (selected)", p, m, s, self.settings[sel.index].seeds.len()));
            }
            None => {
                for i in 0..self.settings.len() {
                    let (p, m, s) = self.setting(i);
                    rows.push(row("grouped", p, m, s, self.settings[i].seeds.len()));
                }
            }
        }
        let widths: Vec<usize> = (0..7)
            .map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for (i, r) in rows.iter().enumerate() {
            let cells: Vec<String> = r
                .iter()
                .zip(&widths)
                .map(|(cell, &w)| format!("{cell}{}", " ".repeat(w - cell.chars().count())))
                .collect();
            let _ = writeln!(out, "{}", cells.join("  ").trim_end());
            if i == 0 {
                let _ = writeln!(out, "{}", "-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
            }
        }
        if let Some(sel) = &self.selection {
            let _ = writeln!(out, "\nselected {} by {} = {:.4}", sel.selected, sel.statistic, sel.score);
        }
        if let Some(sw) = &self.sweep {
            let _ = writeln!(out);
            for (k, g) in Group::ALL.iter().enumerate() {
                let ctf = sw.max_ctf_change[k].map_or("-".into(), |v| format!("{v:.4}"));
                let _ = writeln!(
                    out,
                    "sweep λ{}: max |Δ ctf acc| = {ctf}, max |Δ test acc| = {:.4}",
                    &g.to_string()[..1],
                    sw.max_test_change[k]
                );
            }
        }
        out
    }
}
