use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BinaryMatrix, DesignMatrix, LabelVector};

/// Lowercases, replaces every non-alphanumeric character with a space and
/// splits on whitespace.
pub fn tokenize(text: &str) -> Vec<String> {
    let cleaned: String = text
        .chars()
        .flat_map(char::to_lowercase)
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect();
    cleaned.split_whitespace().map(str::to_owned).collect()
}

/// Token → column index map, dense in `0..len()`, sorted by token.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl From<Vec<String>> for Vocabulary {
    fn from(tokens: Vec<String>) -> Self {
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Self { tokens, index }
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(v: Vocabulary) -> Self {
        v.tokens
    }
}

impl Vocabulary {
    /// Keeps tokens occurring in at least `min_df` documents.
    pub fn fit<'a, I>(documents: I, min_df: usize) -> Self
    where
        I: IntoIterator<Item = &'a [String]>,
    {
        let mut df: BTreeMap<&str, usize> = BTreeMap::new();
        for doc in documents {
            let distinct: BTreeSet<&str> = doc.iter().map(String::as_str).collect();
            for t in distinct {
                *df.entry(t).or_default() += 1;
            }
        }
        let tokens: Vec<String> = df
            .into_iter()
            .filter(|&(_, n)| n >= min_df.max(1))
            .map(|(t, _)| t.to_owned())
            .collect();
        Self::from(tokens)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Vocabulary without the given column indices.
    pub fn without(&self, removed: &[usize]) -> Vocabulary {
        let drop: BTreeSet<usize> = removed.iter().copied().collect();
        Self::from(
            self.tokens
                .iter()
                .enumerate()
                .filter(|(i, _)| !drop.contains(i))
                .map(|(_, t)| t.clone())
                .collect::<Vec<_>>(),
        )
    }
}

/// Binary bag-of-words: entry (i, j) is 1 iff token j occurs in document i.
/// Tokens outside the vocabulary are dropped.
pub fn vectorize_bow<S: AsRef<[String]>>(documents: &[S], vocab: &Vocabulary) -> DesignMatrix {
    let rows = documents.iter().map(|doc| {
        doc.as_ref()
            .iter()
            .filter_map(|t| vocab.get(t))
            .collect::<Vec<_>>()
    });
    DesignMatrix::Binary(
        BinaryMatrix::from_rows(vocab.len(), rows).expect("vocabulary indices are in range"),
    )
}

/// Split membership of a corpus row. The `ctf_*` tags hold counterfactual
/// twins of rows in the matching split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitTag {
    Train,
    Validation,
    Test,
    CtfTrain,
    CtfValidation,
    CtfTest,
}

impl SplitTag {
    /// The split whose rows this counterfactual split mirrors.
    pub fn original(self) -> Option<SplitTag> {
        match self {
            SplitTag::CtfTrain => Some(SplitTag::Train),
            SplitTag::CtfValidation => Some(SplitTag::Validation),
            SplitTag::CtfTest => Some(SplitTag::Test),
            _ => None,
        }
    }

    pub fn counterfactual(self) -> Option<SplitTag> {
        match self {
            SplitTag::Train => Some(SplitTag::CtfTrain),
            SplitTag::Validation => Some(SplitTag::CtfValidation),
            SplitTag::Test => Some(SplitTag::CtfTest),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SplitTag::Train => "train",
            SplitTag::Validation => "validation",
            SplitTag::Test => "test",
            SplitTag::CtfTrain => "ctf_train",
            SplitTag::CtfValidation => "ctf_validation",
            SplitTag::CtfTest => "ctf_test",
        }
    }
}

impl fmt::Display for SplitTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SplitTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "train" => SplitTag::Train,
            "validation" | "val" | "dev" => SplitTag::Validation,
            "test" => SplitTag::Test,
            "ctf_train" => SplitTag::CtfTrain,
            "ctf_validation" | "ctf_val" | "ctf_dev" => SplitTag::CtfValidation,
            "ctf_test" => SplitTag::CtfTest,
            other => return Err(Error::Data(format!("unknown split tag `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub text: String,
    pub label: u8,
    pub split: SplitTag,
    /// Shared by a document and its counterfactual twin.
    pub pair_id: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    pub documents: Vec<Document>,
}

impl Corpus {
    pub fn new(documents: Vec<Document>) -> Self {
        Self { documents }
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn indices(&self, split: SplitTag) -> Vec<usize> {
        self.documents
            .iter()
            .enumerate()
            .filter(|(_, d)| d.split == split)
            .map(|(i, _)| i)
            .collect()
    }

    /// Row index of each document's counterfactual twin.
    ///
    /// A pair id may appear at most twice, the two rows must carry opposite
    /// labels, and a `ctf_*` row must pair with a row of its original split.
    pub fn twins(&self) -> Result<Vec<Option<usize>>> {
        let mut by_id: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, d) in self.documents.iter().enumerate() {
            if let Some(id) = d.pair_id.as_deref().filter(|s| !s.is_empty()) {
                by_id.entry(id).or_default().push(i);
            }
        }
        let mut twin = vec![None; self.documents.len()];
        for (id, rows) in by_id {
            match rows.as_slice() {
                [_] => {}
                &[a, b] => {
                    let (da, db) = (&self.documents[a], &self.documents[b]);
                    if da.label == db.label {
                        return Err(Error::Data(format!(
                            "pair `{id}`: twins must have opposite labels"
                        )));
                    }
                    let consistent = da.split.original() == Some(db.split)
                        || db.split.original() == Some(da.split);
                    if !consistent {
                        return Err(Error::Data(format!(
                            "pair `{id}`: splits {} and {} do not form an original/counterfactual pair",
                            da.split, db.split
                        )));
                    }
                    twin[a] = Some(b);
                    twin[b] = Some(a);
                }
                _ => {
                    return Err(Error::Data(format!(
                        "pair `{id}` appears {} times",
                        rows.len()
                    )))
                }
            }
        }
        Ok(twin)
    }

    /// Reads a UTF-8 TSV with header columns `text`, `label` and optionally
    /// `pair_id` and `split` (rows without a split are training rows).
    pub fn read_tsv(path: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .delimiter(b'\t')
            .quoting(false)
            .flexible(false)
            .from_path(path)
            .map_err(|e| Error::Csv {
                path: path.into(),
                source: e,
            })?;
        let headers = reader
            .headers()
            .map_err(|e| Error::Csv {
                path: path.into(),
                source: e,
            })?
            .clone();
        let col = |name: &str| headers.iter().position(|h| h.trim() == name);
        let text_col = col("text")
            .ok_or_else(|| Error::Data(format!("{}: missing `text` column", path.display())))?;
        let label_col = col("label")
            .ok_or_else(|| Error::Data(format!("{}: missing `label` column", path.display())))?;
        let pair_col = col("pair_id");
        let split_col = col("split");

        let mut documents = Vec::new();
        for (line, record) in reader.records().enumerate() {
            let record = record.map_err(|e| Error::Csv {
                path: path.into(),
                source: e,
            })?;
            let row = line + 2;
            let label = match record[label_col].trim() {
                "0" => 0,
                "1" => 1,
                other => {
                    return Err(Error::Data(format!(
                        "{}:{row}: label `{other}` is not 0 or 1",
                        path.display()
                    )))
                }
            };
            let split = match split_col {
                Some(c) if !record[c].trim().is_empty() => record[c]
                    .parse()
                    .map_err(|e| Error::Data(format!("{}:{row}: {e}", path.display())))?,
                _ => SplitTag::Train,
            };
            documents.push(Document {
                text: record[text_col].to_owned(),
                label,
                split,
                pair_id: pair_col
                    .map(|c| record[c].trim().to_owned())
                    .filter(|s| !s.is_empty()),
            });
        }
        let corpus = Corpus { documents };
        corpus.twins()?;
        Ok(corpus)
    }

    pub fn write_tsv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("text\tlabel\tpair_id\tsplit\n");
        for d in &self.documents {
            if d.text.contains(['\t', '\n', '\r']) {
                return Err(Error::Data(
                    "document text contains a tab or newline".to_owned(),
                ));
            }
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\n",
                d.text,
                d.label,
                d.pair_id.as_deref().unwrap_or(""),
                d.split
            ));
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

/// Training set extended with the counterfactual twin of every training row.
/// Twins are relabelled as `train`; other splits are kept as they are.
pub fn augment_with_counterfactuals(corpus: &Corpus) -> Result<Corpus> {
    let twins = corpus.twins()?;
    let train = corpus.indices(SplitTag::Train);
    let unpaired: Vec<String> = train
        .iter()
        .filter(|&&i| twins[i].is_none())
        .map(|&i| {
            corpus.documents[i]
                .pair_id
                .clone()
                .unwrap_or_else(|| format!("row {i}"))
        })
        .collect();
    if !unpaired.is_empty() {
        return Err(Error::UnpairedRows(unpaired));
    }
    let mut documents = Vec::with_capacity(corpus.len() + train.len());
    for d in &corpus.documents {
        if d.split != SplitTag::CtfTrain {
            documents.push(d.clone());
        }
    }
    for &i in &train {
        let mut twin = corpus.documents[twins[i].expect("checked above")].clone();
        twin.split = SplitTag::Train;
        documents.push(twin);
    }
    Ok(Corpus { documents })
}

/// A review with its raw star rating, as found in product-review dumps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatedReview {
    pub text: String,
    pub rating: String,
}

pub const REVIEW_MIN_WORDS: usize = 5;
pub const REVIEW_MAX_WORDS: usize = 40;

/// Keeps reviews of 5 to 40 tokens, labelling ratings 4–5 positive and 1–2
/// negative. Rating 3 is dropped; malformed ratings are logged and skipped.
/// All kept rows are tagged `train`; splitting happens afterwards.
pub fn filter_kindle(reviews: &[RatedReview]) -> Corpus {
    let mut documents = Vec::new();
    for (i, r) in reviews.iter().enumerate() {
        let rating = match r.rating.trim().parse::<f64>() {
            Ok(v) if v.fract() == 0.0 && (1.0..=5.0).contains(&v) => v as u8,
            _ => {
                warn!("review {i}: malformed rating `{}`, skipped", r.rating);
                continue;
            }
        };
        let label = match rating {
            4 | 5 => 1,
            1 | 2 => 0,
            _ => continue,
        };
        let words = tokenize(&r.text).len();
        if !(REVIEW_MIN_WORDS..=REVIEW_MAX_WORDS).contains(&words) {
            continue;
        }
        documents.push(Document {
            text: r.text.clone(),
            label,
            split: SplitTag::Train,
            pair_id: None,
        });
    }
    Corpus { documents }
}

/// Reads a TSV with `text` and `rating` columns.
pub fn read_rated_tsv(path: &Path) -> Result<Vec<RatedReview>> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .quoting(false)
        .from_path(path)
        .map_err(|e| Error::Csv {
            path: path.into(),
            source: e,
        })?;
    let headers = reader
        .headers()
        .map_err(|e| Error::Csv {
            path: path.into(),
            source: e,
        })?
        .clone();
    let text_col = headers.iter().position(|h| h == "text");
    let rating_col = headers.iter().position(|h| h == "rating");
    let (Some(tc), Some(rc)) = (text_col, rating_col) else {
        return Err(Error::Data(format!(
            "{}: expected `text` and `rating` columns",
            path.display()
        )));
    };
    reader
        .records()
        .map(|r| {
            let r = r.map_err(|e| Error::Csv {
                path: path.into(),
                source: e,
            })?;
            Ok(RatedReview {
                text: r[tc].to_owned(),
                rating: r[rc].to_owned(),
            })
        })
        .collect()
}

/// Labels for the documents of one split, in corpus order.
pub fn split_labels(corpus: &Corpus, rows: &[usize]) -> LabelVector {
    LabelVector::new(rows.iter().map(|&i| corpus.documents[i].label).collect())
        .expect("document labels are validated on construction")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &[&str]) -> Vec<String> {
        s.iter().map(|t| t.to_string()).collect()
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(
            tokenize("The film, directed by Spielberg!"),
            toks(&["the", "film", "directed", "by", "spielberg"])
        );
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("A a A"), toks(&["a", "a", "a"]));
        assert_eq!(tokenize("don't\tstop"), toks(&["don", "t", "stop"]));
    }

    #[test]
    fn bow_is_binary_and_drops_oov() {
        let docs = vec![
            toks(&["good", "good", "good", "good", "good"]),
            toks(&["zzz", "qqq"]),
        ];
        let vocab = Vocabulary::from(toks(&["bad", "good"]));
        let m = vectorize_bow(&docs, &vocab);
        assert_eq!(m.row_dense(0), vec![0.0, 1.0]);
        assert_eq!(m.row_dense(1), vec![0.0, 0.0]);
    }

    #[test]
    fn bow_matches_membership_oracle() {
        let texts = ["the cat sat", "a dog sat on the mat", "cat cat dog"];
        let docs: Vec<Vec<String>> = texts.iter().map(|t| tokenize(t)).collect();
        let vocab = Vocabulary::fit(docs.iter().map(Vec::as_slice), 1);
        let m = vectorize_bow(&docs, &vocab);
        assert_eq!(m.rows(), 3);
        assert_eq!(m.cols(), vocab.len());
        for (i, text) in texts.iter().enumerate() {
            let words: Vec<&str> = text.split(' ').collect();
            for (j, tok) in vocab.tokens().iter().enumerate() {
                let expected = if words.contains(&tok.as_str()) { 1.0 } else { 0.0 };
                assert_eq!(m.get(i, j), expected, "doc {i} token {tok}");
            }
        }
    }

    #[test]
    fn vocabulary_min_df() {
        let docs = [toks(&["a", "b", "b"]), toks(&["a", "c"])];
        let v = Vocabulary::fit(docs.iter().map(Vec::as_slice), 2);
        assert_eq!(v.tokens(), &toks(&["a"])[..]);
        let v = Vocabulary::fit(docs.iter().map(Vec::as_slice), 1);
        assert_eq!(v.tokens(), &toks(&["a", "b", "c"])[..]);
        assert_eq!(v.without(&[1]).tokens(), &toks(&["a", "c"])[..]);
    }

    fn review(words: usize, rating: &str) -> RatedReview {
        RatedReview {
            text: vec!["word"; words].join(" "),
            rating: rating.to_owned(),
        }
    }

    #[test]
    fn kindle_filter_rules() {
        let c = filter_kindle(&[review(4, "5")]);
        assert!(c.is_empty());
        let c = filter_kindle(&[review(40, "5")]);
        assert_eq!(c.len(), 1);
        assert_eq!(c.documents[0].label, 1);
        assert!(filter_kindle(&[review(10, "3")]).is_empty());
        assert!(filter_kindle(&[review(41, "1")]).is_empty());
        let c = filter_kindle(&[review(5, "2"), review(10, "x"), review(10, "7"), review(10, "4.5")]);
        assert_eq!(c.len(), 1);
        assert_eq!(c.documents[0].label, 0);
    }

    fn doc(text: &str, label: u8, split: SplitTag, pair: Option<&str>) -> Document {
        Document {
            text: text.into(),
            label,
            split,
            pair_id: pair.map(str::to_owned),
        }
    }

    #[test]
    fn twins_form_an_involution() {
        let c = Corpus::new(vec![
            doc("good", 1, SplitTag::Train, Some("p1")),
            doc("bad", 0, SplitTag::CtfTrain, Some("p1")),
            doc("fine", 1, SplitTag::Test, Some("p2")),
            doc("awful", 0, SplitTag::CtfTest, Some("p2")),
            doc("meh", 0, SplitTag::Validation, None),
        ]);
        let t = c.twins().unwrap();
        for (i, ti) in t.iter().enumerate() {
            if let Some(j) = ti {
                assert_eq!(t[*j], Some(i));
                assert_ne!(c.documents[i].label, c.documents[*j].label);
            }
        }
        assert_eq!(t[4], None);
    }

    #[test]
    fn twins_reject_same_labels_and_triples() {
        let c = Corpus::new(vec![
            doc("a", 1, SplitTag::Train, Some("p")),
            doc("b", 1, SplitTag::CtfTrain, Some("p")),
        ]);
        assert!(c.twins().is_err());
        let c = Corpus::new(vec![
            doc("a", 1, SplitTag::Train, Some("p")),
            doc("b", 0, SplitTag::CtfTrain, Some("p")),
            doc("c", 0, SplitTag::CtfTrain, Some("p")),
        ]);
        assert!(c.twins().is_err());
        let c = Corpus::new(vec![
            doc("a", 1, SplitTag::Train, Some("p")),
            doc("b", 0, SplitTag::CtfTest, Some("p")),
        ]);
        assert!(c.twins().is_err());
    }

    #[test]
    fn augmentation_doubles_train() {
        let c = Corpus::new(vec![
            doc("good", 1, SplitTag::Train, Some("p1")),
            doc("bad", 0, SplitTag::CtfTrain, Some("p1")),
            doc("nice", 1, SplitTag::Train, Some("p2")),
            doc("nasty", 0, SplitTag::CtfTrain, Some("p2")),
            doc("ok", 1, SplitTag::Test, None),
        ]);
        let a = augment_with_counterfactuals(&c).unwrap();
        let train = a.indices(SplitTag::Train);
        assert_eq!(train.len(), 4);
        let labels: Vec<u8> = train.iter().map(|&i| a.documents[i].label).collect();
        assert_eq!(labels, vec![1, 1, 0, 0]);
        assert_eq!(a.indices(SplitTag::Test).len(), 1);
    }

    #[test]
    fn augmentation_lists_unpaired_rows() {
        let c = Corpus::new(vec![
            doc("good", 1, SplitTag::Train, Some("p1")),
            doc("solo", 0, SplitTag::Train, None),
        ]);
        match augment_with_counterfactuals(&c) {
            Err(Error::UnpairedRows(rows)) => assert_eq!(rows, vec!["p1", "row 1"]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn tsv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.tsv");
        let c = Corpus::new(vec![
            doc("good movie", 1, SplitTag::Train, Some("p1")),
            doc("bad movie", 0, SplitTag::CtfTrain, Some("p1")),
            doc("so \"so\"", 0, SplitTag::Validation, None),
        ]);
        c.write_tsv(&path).unwrap();
        assert_eq!(Corpus::read_tsv(&path).unwrap(), c);
    }

    #[test]
    fn tsv_rejects_bad_label() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.tsv");
        std::fs::write(&path, "text\tlabel\nhello\t2\n").unwrap();
        assert!(Corpus::read_tsv(&path).is_err());
        std::fs::write(&path, "label\n1\n").unwrap();
        assert!(Corpus::read_tsv(&path).is_err());
    }
}
