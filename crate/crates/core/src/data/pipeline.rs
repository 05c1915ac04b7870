use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::dataset::{DataBundle, PairedDataset};
use crate::data::embedding::{embed_document, EmbeddingTable, GroupWeightTriple};
use crate::data::group_file::GroupFile;
use crate::data::tabular::{split_rows, TabularEncoder, TabularSchema, TabularSplits, TabularTable};
use crate::data::text::{split_labels, tokenize, vectorize_bow, Corpus, SplitTag, Vocabulary};
use crate::error::{Error, Result};
use crate::model::{DenseMatrix, DesignMatrix, FeatureGroups};

/// How documents become feature rows.
#[derive(Debug, Clone, Copy)]
pub enum TextRepresentation<'a> {
    /// Binary bag of words over the training vocabulary.
    Bow,
    /// Group-weighted mean of word vectors. `GroupWeightTriple::UNIFORM`
    /// gives the plain mean.
    Glove {
        table: &'a EmbeddingTable,
        weights: GroupWeightTriple,
    },
}

/// A text bundle together with the vocabulary fitted on its training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextBundle {
    pub bundle: DataBundle,
    pub vocab: Vocabulary,
}

/// Row order used for one split: originals with a twin first, in corpus
/// order, then originals without one. Twin rows follow the same order, with
/// counterfactual rows lacking an original appended.
struct SplitLayout {
    rows: Vec<usize>,
    twin_rows: Vec<usize>,
    paired: usize,
}

fn layout(corpus: &Corpus, twins: &[Option<usize>], split: SplitTag) -> SplitLayout {
    let originals = corpus.indices(split);
    let ctf = split.counterfactual().expect("original split");
    let has_twin = |i: usize| twins[i].is_some_and(|t| corpus.documents[t].split == ctf);
    let mut rows: Vec<usize> = originals.iter().copied().filter(|&i| has_twin(i)).collect();
    let paired = rows.len();
    let mut twin_rows: Vec<usize> = rows.iter().map(|&i| twins[i].expect("filtered")).collect();
    rows.extend(originals.iter().copied().filter(|&i| !has_twin(i)));
    let orphans: Vec<usize> = corpus
        .indices(ctf)
        .into_iter()
        .filter(|&i| twins[i].is_none())
        .collect();
    if !orphans.is_empty() {
        log::warn!("{} {ctf} rows have no original; kept for evaluation only", orphans.len());
    }
    twin_rows.extend(orphans);
    SplitLayout {
        rows,
        twin_rows,
        paired,
    }
}

/// Builds train/validation/test datasets from a corpus. The vocabulary is
/// fitted on the training documents only. `ctf_*` documents become the twin
/// split of their original split.
pub fn build_text_bundle(
    corpus: &Corpus,
    groups: &GroupFile,
    repr: TextRepresentation<'_>,
    min_df: usize,
) -> Result<TextBundle> {
    let tokens: Vec<Vec<String>> = corpus.documents.iter().map(|d| tokenize(&d.text)).collect();
    let train_rows = corpus.indices(SplitTag::Train);
    if train_rows.is_empty() {
        return Err(Error::MissingSplit("train"));
    }
    let vocab = Vocabulary::fit(train_rows.iter().map(|&i| tokens[i].as_slice()), min_df);
    if vocab.is_empty() {
        return Err(Error::Data("training vocabulary is empty".into()));
    }
    assemble_text(corpus, &tokens, groups, repr, vocab)
}

/// Like [`build_text_bundle`] with a vocabulary fitted elsewhere, e.g. the
/// one stored in a model file.
pub fn build_text_bundle_with_vocab(
    corpus: &Corpus,
    groups: &GroupFile,
    repr: TextRepresentation<'_>,
    vocab: Vocabulary,
) -> Result<TextBundle> {
    let tokens: Vec<Vec<String>> = corpus.documents.iter().map(|d| tokenize(&d.text)).collect();
    assemble_text(corpus, &tokens, groups, repr, vocab)
}

fn assemble_text(
    corpus: &Corpus,
    tokens: &[Vec<String>],
    groups: &GroupFile,
    repr: TextRepresentation<'_>,
    vocab: Vocabulary,
) -> Result<TextBundle> {
    let twins = corpus.twins()?;
    let token_groups = groups.token_groups()?;

    let features = |rows: &[usize]| -> Result<DesignMatrix> {
        match repr {
            TextRepresentation::Bow => {
                let docs: Vec<&[String]> = rows.iter().map(|&i| tokens[i].as_slice()).collect();
                Ok(vectorize_bow(&docs, &vocab))
            }
            TextRepresentation::Glove { table, weights } => {
                weights.validate()?;
                let mut data = Vec::with_capacity(rows.len() * table.dim());
                for &i in rows {
                    data.extend(embed_document(&tokens[i], table, &token_groups, &weights));
                }
                Ok(DesignMatrix::Dense(DenseMatrix::new(rows.len(), table.dim(), data)?))
            }
        }
    };
    let dataset = |rows: &[usize]| -> Result<PairedDataset> {
        PairedDataset::new(features(rows)?, split_labels(corpus, rows))
    };

    let mut splits = Vec::with_capacity(3);
    for (split, name) in [
        (SplitTag::Train, "train"),
        (SplitTag::Validation, "validation"),
        (SplitTag::Test, "test"),
    ] {
        let l = layout(corpus, &twins, split);
        if l.rows.is_empty() {
            return Err(Error::MissingSplit(name));
        }
        let mut ds = dataset(&l.rows)?;
        if !l.twin_rows.is_empty() {
            ds = ds.with_partial_twin(dataset(&l.twin_rows)?, l.paired)?;
        }
        splits.push(ds);
    }
    let test = splits.pop().expect("three splits");
    let validation = splits.pop().expect("three splits");
    let train = splits.pop().expect("three splits");

    let (names, feature_groups) = match repr {
        TextRepresentation::Bow => (vocab.tokens().to_vec(), groups.resolve_vocab(&vocab)?),
        TextRepresentation::Glove { table, .. } => (
            (0..table.dim()).map(|k| format!("dim{k}")).collect(),
            FeatureGroups::all_remaining(table.dim()),
        ),
    };
    Ok(TextBundle {
        bundle: DataBundle::new(names, feature_groups, train, validation, test)?,
        vocab,
    })
}

/// Tags every `train` document of a corpus with no validation or test rows
/// into train/validation/test at random, keeping twins with their original.
pub fn assign_random_splits(corpus: &Corpus, fractions: [f64; 3], seed: u64) -> Result<Corpus> {
    let twins = corpus.twins()?;
    let mut originals = corpus.indices(SplitTag::Train);
    originals.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n = originals.len();
    let n_train = (n as f64 * fractions[0]).round() as usize;
    let n_val = (n as f64 * fractions[1]).round() as usize;
    let mut out = corpus.clone();
    for (k, &i) in originals.iter().enumerate() {
        let tag = if k < n_train {
            SplitTag::Train
        } else if k < n_train + n_val {
            SplitTag::Validation
        } else {
            SplitTag::Test
        };
        out.documents[i].split = tag;
        if let Some(t) = twins[i] {
            out.documents[t].split = tag.counterfactual().expect("original split");
        }
    }
    Ok(out)
}

/// A tabular bundle with its fitted encoder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularBundle {
    pub bundle: DataBundle,
    pub encoder: TabularEncoder,
}

/// Splits the table (schema split column, or seeded 50/20/30), fits the
/// encoder on the training rows and encodes every split.
pub fn build_tabular_bundle(
    table: &TabularTable,
    schema: &TabularSchema,
    groups: &GroupFile,
    seed: u64,
) -> Result<TabularBundle> {
    let rows = split_rows(table, schema, seed)?;
    let encoder = TabularEncoder::fit(table, schema, &rows.train)?;
    assemble_tabular(table, &rows, groups, encoder)
}

/// Like [`build_tabular_bundle`] with an encoder fitted elsewhere.
pub fn build_tabular_bundle_with_encoder(
    table: &TabularTable,
    encoder: TabularEncoder,
    groups: &GroupFile,
    seed: u64,
) -> Result<TabularBundle> {
    let rows = split_rows(table, encoder.schema(), seed)?;
    assemble_tabular(table, &rows, groups, encoder)
}

fn assemble_tabular(
    table: &TabularTable,
    rows: &TabularSplits,
    groups: &GroupFile,
    encoder: TabularEncoder,
) -> Result<TabularBundle> {
    let split = |r: &[usize]| -> Result<PairedDataset> {
        let e = encoder.encode(table, r)?;
        let ds = PairedDataset::new(e.features, e.labels)?;
        match e.sensitive {
            Some(s) => ds.with_sensitive(s),
            None => Ok(ds),
        }
    };
    let bundle = DataBundle::new(
        encoder.feature_names(),
        groups.resolve_tabular(&encoder)?,
        split(&rows.train)?,
        split(&rows.validation)?,
        split(&rows.test)?,
    )?;
    Ok(TabularBundle { bundle, encoder })
}
