//! Synthetic stand-ins for the review and admission datasets.
//!
//! [`synth_generate`] builds a bag-of-words corpus whose label is decided by
//! antonym word pairs (the causal features). A block of spurious words is
//! correlated with the label, and the rest are background noise. The
//! counterfactual twin of a document swaps every antonym it mentions and
//! flips the label, but keeps its spurious words. A model that leans on the
//! spurious block therefore fails on the twins.
//!
//! [`synth_admission`] builds an admission-style table where historical
//! labels of one gender group were flipped from admitted to rejected at
//! random. That plants a sensitive column that predicts the label without
//! being a cause of it.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::dataset::{DataBundle, PairedDataset};
use crate::data::group_file::GroupFile;
use crate::data::tabular::{ColumnKind, ColumnSpec, TabularSchema, TabularTable};
use crate::data::text::{Corpus, Document, SplitTag};
use crate::error::{Error, Result};
use crate::model::{BinaryMatrix, DesignMatrix, FeatureGroups, LabelVector, LinearModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub seed: u64,
    /// Documents before splitting; each also gets a twin.
    pub n: usize,
    /// Vocabulary size.
    pub d: usize,
    /// Causal words, as `n_causal / 2` antonym pairs.
    pub n_causal: usize,
    pub n_spurious: usize,
    /// Fraction of a spurious word's occurrences that fall on its preferred
    /// label.
    pub spurious_train_corr: f64,
    /// Probability that an observed label disagrees with the causal rule.
    pub flip_noise: f64,
    /// Probability that a document mentions a given antonym pair.
    pub pair_rate: f64,
    /// Average occurrence probability of a spurious word.
    pub spurious_rate: f64,
    /// Occurrence probability of a remaining word.
    pub background_rate: f64,
    /// Train / validation / test fractions.
    pub split: [f64; 3],
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            n: 4000,
            d: 200,
            n_causal: 20,
            n_spurious: 30,
            spurious_train_corr: 0.9,
            flip_noise: 0.175,
            pair_rate: 0.15,
            spurious_rate: 0.02,
            background_rate: 0.05,
            split: [0.6, 0.2, 0.2],
        }
    }
}

fn probability(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::InfeasibleParameters(format!("{name} = {v} is not a probability")))
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InfeasibleParameters(m));
        if self.n_causal + self.n_spurious > self.d {
            return bad(format!(
                "n_causal + n_spurious = {} exceeds d = {}",
                self.n_causal + self.n_spurious,
                self.d
            ));
        }
        if self.n_causal == 0 || !self.n_causal.is_multiple_of(2) {
            return bad(format!("n_causal = {} must be a positive even number", self.n_causal));
        }
        probability("spurious_train_corr", self.spurious_train_corr)?;
        probability("flip_noise", self.flip_noise)?;
        probability("background_rate", self.background_rate)?;
        if !(self.pair_rate > 0.0 && self.pair_rate <= 1.0) {
            return bad(format!("pair_rate = {} must lie in (0, 1]", self.pair_rate));
        }
        let peak = 2.0 * self.spurious_rate * self.spurious_train_corr.max(1.0 - self.spurious_train_corr);
        if !(0.0..=1.0).contains(&peak) || self.spurious_rate < 0.0 {
            return bad(format!(
                "spurious_rate = {} with correlation {} needs an occurrence probability of {peak}",
                self.spurious_rate, self.spurious_train_corr
            ));
        }
        if self.split.iter().any(|&f| f.is_nan() || f <= 0.0) || (self.split.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return bad(format!("split fractions {:?} must be positive and sum to 1", self.split));
        }
        let sizes = split_sizes(self.n, self.split);
        if sizes.contains(&0) {
            return bad(format!("n = {} leaves an empty split", self.n));
        }
        Ok(())
    }
}

fn split_sizes(n: usize, f: [f64; 3]) -> [usize; 3] {
    let train = (n as f64 * f[0]).round() as usize;
    let val = ((n as f64 * f[1]).round() as usize).min(n - train.min(n));
    [train.min(n), val, n - train.min(n) - val]
}

/// Where the generator put each kind of word, in column indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedStructure {
    /// `(positive word, negative word)` column of each antonym pair.
    pub causal_pairs: Vec<(usize, usize)>,
    /// Strength of each pair in the labelling rule.
    pub betas: Vec<f64>,
    /// Spurious column and the label it co-occurs with.
    pub spurious_polarity: Vec<(usize, u8)>,
}

impl PlantedStructure {
    /// The noise-free labelling rule as a linear model over causal words.
    pub fn oracle_model(&self, dim: usize) -> LinearModel {
        let mut w = vec![0.0; dim];
        for (&(p, n), &b) in self.causal_pairs.iter().zip(&self.betas) {
            w[p] = b;
            w[n] = -b;
        }
        LinearModel::new(w, 0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthData {
    pub bundle: DataBundle,
    pub truth: PlantedStructure,
}

/// Generates a bag-of-words bundle with ground-truth groups and
/// counterfactual twins for every split. Same config, same bytes.
pub fn synth_generate(cfg: &SynthConfig) -> Result<SynthData> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let pairs = cfg.n_causal / 2;

    // Layout before shuffling: pair k is words 2k and 2k+1, then the
    // spurious block, then the background.
    let betas: Vec<f64> = (0..pairs).map(|_| rng.random_range(0.5..1.5)).collect();
    let mut polarity: Vec<u8> = (0..cfg.n_spurious).map(|s| u8::from(s < cfg.n_spurious / 2)).collect();
    polarity.shuffle(&mut rng);
    let mut column: Vec<usize> = (0..cfg.d).collect();
    column.shuffle(&mut rng);

    let mut rows = Vec::with_capacity(cfg.n);
    let mut twin_rows = Vec::with_capacity(cfg.n);
    let mut labels = Vec::with_capacity(cfg.n);
    for _ in 0..cfg.n {
        let mentions: Vec<(usize, bool)> = loop {
            let mut m = Vec::new();
            for k in 0..pairs {
                if rng.random_bool(cfg.pair_rate) {
                    m.push((k, rng.random_bool(0.5)));
                }
            }
            if !m.is_empty() {
                break m;
            }
        };
        let score: f64 = mentions.iter().map(|&(k, pos)| if pos { betas[k] } else { -betas[k] }).sum();
        let clean = u8::from(score > 0.0);
        let y = if rng.random_bool(cfg.flip_noise) { 1 - clean } else { clean };

        let mut shared = Vec::new();
        for (s, &pol) in polarity.iter().enumerate() {
            let agree = if y == pol { cfg.spurious_train_corr } else { 1.0 - cfg.spurious_train_corr };
            if rng.random_bool(2.0 * cfg.spurious_rate * agree) {
                shared.push(cfg.n_causal + s);
            }
        }
        for j in cfg.n_causal + cfg.n_spurious..cfg.d {
            if rng.random_bool(cfg.background_rate) {
                shared.push(j);
            }
        }
        let word = |k: usize, pos: bool| if pos { 2 * k } else { 2 * k + 1 };
        let mut row: Vec<usize> = mentions.iter().map(|&(k, pos)| column[word(k, pos)]).collect();
        let mut twin: Vec<usize> = mentions.iter().map(|&(k, pos)| column[word(k, !pos)]).collect();
        row.extend(shared.iter().map(|&j| column[j]));
        twin.extend(shared.iter().map(|&j| column[j]));
        rows.push(row);
        twin_rows.push(twin);
        labels.push(y);
    }

    let [n_train, n_val, _] = split_sizes(cfg.n, cfg.split);
    let bounds = [0, n_train, n_train + n_val, cfg.n];
    let mut splits = Vec::with_capacity(3);
    for w in bounds.windows(2) {
        let (a, b) = (w[0], w[1]);
        let y = LabelVector::new(labels[a..b].to_vec())?;
        let y_twin = LabelVector::new(labels[a..b].iter().map(|l| 1 - l).collect())?;
        let x = DesignMatrix::Binary(BinaryMatrix::from_rows(cfg.d, rows[a..b].iter().cloned())?);
        let x_twin = DesignMatrix::Binary(BinaryMatrix::from_rows(cfg.d, twin_rows[a..b].iter().cloned())?);
        splits.push(PairedDataset::new(x, y)?.with_twin(PairedDataset::new(x_twin, y_twin)?)?);
    }
    let test = splits.pop().expect("three splits");
    let validation = splits.pop().expect("three splits");
    let train = splits.pop().expect("three splits");

    let groups = FeatureGroups::new(
        cfg.d,
        (0..cfg.n_causal).map(|j| column[j]),
        (cfg.n_causal..cfg.n_causal + cfg.n_spurious).map(|j| column[j]),
    )?;
    let truth = PlantedStructure {
        causal_pairs: (0..pairs).map(|k| (column[2 * k], column[2 * k + 1])).collect(),
        betas,
        spurious_polarity: polarity
            .iter()
            .enumerate()
            .map(|(s, &p)| (column[cfg.n_causal + s], p))
            .collect(),
    };
    let bundle = DataBundle::new(synth_feature_names(cfg.d), groups, train, validation, test)?;
    Ok(SynthData { bundle, truth })
}

/// Neutral word names `w000`, `w001`, ... that sort in column order.
pub fn synth_feature_names(d: usize) -> Vec<String> {
    let width = d.saturating_sub(1).to_string().len().max(3);
    (0..d).map(|j| format!("w{j:0width$}")).collect()
}

/// Pooled agreement rate P(label = polarity | spurious word present) over
/// the rows of `split`.
pub fn spurious_agreement(split: &PairedDataset, truth: &PlantedStructure) -> f64 {
    let (mut hits, mut total) = (0usize, 0usize);
    for i in 0..split.len() {
        let y = split.labels.as_slice()[i];
        for &(col, pol) in &truth.spurious_polarity {
            if split.features.get(i, col) != 0.0 {
                total += 1;
                hits += usize::from(y == pol);
            }
        }
    }
    hits as f64 / total.max(1) as f64
}

/// Writes a binary bundle out as documents made of the active feature names,
/// with every twin in the matching `ctf_*` split under a shared pair id.
pub fn bundle_to_corpus(bundle: &DataBundle) -> Result<Corpus> {
    let mut documents = Vec::new();
    for (tag, split) in [
        (SplitTag::Train, &bundle.train),
        (SplitTag::Validation, &bundle.validation),
        (SplitTag::Test, &bundle.test),
    ] {
        let DesignMatrix::Binary(x) = &split.features else {
            return Err(Error::Data("only bag-of-words bundles can be written as text".into()));
        };
        let text = |m: &BinaryMatrix, i: usize| {
            m.row_indices(i).map(|j| bundle.feature_names[j].as_str()).collect::<Vec<_>>().join(" ")
        };
        let twin = split.twin.as_deref();
        for i in 0..split.len() {
            let paired = i < split.paired_rows;
            documents.push(Document {
                text: text(x, i),
                label: split.labels.as_slice()[i],
                split: tag,
                pair_id: paired.then(|| format!("{tag}-{i}")),
            });
        }
        if let Some(t) = twin {
            let DesignMatrix::Binary(tx) = &t.features else {
                return Err(Error::Data("only bag-of-words bundles can be written as text".into()));
            };
            let ctf = tag.counterfactual().expect("original split");
            for i in 0..t.len() {
                documents.push(Document {
                    text: text(tx, i),
                    label: t.labels.as_slice()[i],
                    split: ctf,
                    pair_id: (i < split.paired_rows).then(|| format!("{tag}-{i}")),
                });
            }
        }
    }
    Ok(Corpus::new(documents))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdmissionConfig {
    pub seed: u64,
    pub n: usize,
    /// Probability that an admitted applicant of the disadvantaged group is
    /// recorded as rejected.
    pub historical_bias: f64,
    /// Scale of the logistic noise in the merit score.
    pub merit_noise: f64,
    /// Train / validation / test fractions.
    pub split: [f64; 3],
}

impl Default for AdmissionConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            n: 5_000,
            historical_bias: 0.15,
            merit_noise: 0.8,
            split: [0.5, 0.2, 0.3],
        }
    }
}

/// Raw admission records with their schema and group labels: `lsat` and
/// `ugpa` are causal, `gender` is spurious (and sensitive), the other
/// columns are unrelated to the outcome.
pub fn synth_admission_table(cfg: &AdmissionConfig) -> Result<(TabularTable, TabularSchema, GroupFile)> {
    probability("historical_bias", cfg.historical_bias)?;
    if !(cfg.merit_noise >= 0.0 && cfg.merit_noise.is_finite()) {
        return Err(Error::InfeasibleParameters(format!("merit_noise = {}", cfg.merit_noise)));
    }
    if cfg.split.iter().any(|&f| f.is_nan() || f <= 0.0) || (cfg.split.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::InfeasibleParameters(format!("split fractions {:?}", cfg.split)));
    }
    let sizes = split_sizes(cfg.n, cfg.split);
    if sizes.contains(&0) {
        return Err(Error::InfeasibleParameters(format!("n = {} leaves an empty split", cfg.n)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let headers = ["lsat", "ugpa", "age", "resident", "race", "fulltime", "gender", "admit", "split"];
    let races = ["asian", "black", "hispanic", "other", "white"];
    let mut rows = Vec::with_capacity(cfg.n);
    for i in 0..cfg.n {
        let lsat01: f64 = rng.random();
        let gpa01: f64 = rng.random();
        let u: f64 = rng.random_range(f64::EPSILON..1.0);
        let noise = cfg.merit_noise * (u / (1.0 - u)).ln();
        let merit = 4.0 * lsat01 + 3.0 * gpa01 - 3.8 + noise;
        let female = rng.random_bool(0.5);
        let mut admit = merit > 0.0;
        if female && admit && rng.random_bool(cfg.historical_bias) {
            admit = false;
        }
        let age = rng.random_range(20..40);
        let resident = rng.random_bool(0.6);
        let race = races[rng.random_range(0..races.len())];
        let fulltime = rng.random_bool(0.9);
        let split = if i < sizes[0] {
            "train"
        } else if i < sizes[0] + sizes[1] {
            "validation"
        } else {
            "test"
        };
        rows.push(vec![
            format!("{:.1}", 120.0 + 60.0 * lsat01),
            format!("{:.3}", 1.0 + 3.0 * gpa01),
            age.to_string(),
            if resident { "yes" } else { "no" }.into(),
            race.into(),
            if fulltime { "yes" } else { "no" }.into(),
            if female { "female" } else { "male" }.into(),
            u8::from(admit).to_string(),
            split.into(),
        ]);
    }
    let table = TabularTable::new(headers.iter().map(|h| h.to_string()).collect(), rows)?;
    let col = |name: &str, kind| ColumnSpec {
        name: name.into(),
        kind,
    };
    let schema = TabularSchema {
        columns: vec![
            col("lsat", ColumnKind::Numeric),
            col("ugpa", ColumnKind::Numeric),
            col("age", ColumnKind::Numeric),
            col("resident", ColumnKind::Categorical),
            col("race", ColumnKind::Categorical),
            col("fulltime", ColumnKind::Categorical),
            col("gender", ColumnKind::Sensitive),
            col("admit", ColumnKind::Label),
        ],
        split_column: Some("split".into()),
        encode_sensitive: true,
    };
    let groups = GroupFile {
        causal: vec!["lsat".into(), "ugpa".into()],
        spurious: vec!["gender".into()],
    };
    Ok((table, schema, groups))
}

/// Encoded admission bundle with a `gender` sensitive column.
pub fn synth_admission(cfg: &AdmissionConfig) -> Result<DataBundle> {
    let (table, schema, groups) = synth_admission_table(cfg)?;
    Ok(crate::data::pipeline::build_tabular_bundle(&table, &schema, &groups, cfg.seed)?.bundle)
}
