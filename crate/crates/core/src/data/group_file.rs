use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::embedding::TokenGroups;
use crate::data::tabular::TabularEncoder;
use crate::data::text::Vocabulary;
use crate::error::{Error, Result};
use crate::model::{FeatureGroups, Group};

/// Human-edited feature labels: token strings for text data, source column
/// names for tabular data. Everything unlisted is `remaining`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupFile {
    #[serde(default)]
    pub causal: Vec<String>,
    #[serde(default)]
    pub spurious: Vec<String>,
}

impl GroupFile {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let g: Self = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_owned(),
            source,
        })?;
        g.check_disjoint()?;
        Ok(g)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("serialisable");
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    fn normalized(entries: &[String]) -> BTreeSet<String> {
        entries.iter().map(|t| t.trim().to_lowercase()).filter(|t| !t.is_empty()).collect()
    }

    fn check_disjoint(&self) -> Result<()> {
        let c = Self::normalized(&self.causal);
        if let Some(t) = Self::normalized(&self.spurious).intersection(&c).next() {
            return Err(Error::InvalidGroups(format!("`{t}` is listed as both causal and spurious")));
        }
        Ok(())
    }

    /// Labelled tokens, lowercased to match the tokenizer.
    pub fn token_groups(&self) -> Result<TokenGroups> {
        self.check_disjoint()?;
        let mut map = TokenGroups::new();
        for t in Self::normalized(&self.causal) {
            map.insert(t, Group::Causal);
        }
        for t in Self::normalized(&self.spurious) {
            map.insert(t, Group::Spurious);
        }
        Ok(map)
    }

    /// Groups over vocabulary columns. Listed tokens absent from the
    /// vocabulary are skipped with a warning.
    pub fn resolve_vocab(&self, vocab: &Vocabulary) -> Result<FeatureGroups> {
        let lookup = |entries: &[String], what: &str| {
            let mut out = Vec::new();
            for t in Self::normalized(entries) {
                match vocab.get(&t) {
                    Some(i) => out.push(i),
                    None => log::warn!("{what} token `{t}` is not in the training vocabulary"),
                }
            }
            out
        };
        self.check_disjoint()?;
        FeatureGroups::new(
            vocab.len(),
            lookup(&self.causal, "causal"),
            lookup(&self.spurious, "spurious"),
        )
    }

    /// Groups over encoded tabular columns: naming a source column labels
    /// every feature derived from it.
    pub fn resolve_tabular(&self, encoder: &TabularEncoder) -> Result<FeatureGroups> {
        let lookup = |entries: &[String]| -> Result<Vec<usize>> {
            let mut out = Vec::new();
            for name in entries {
                let cols = encoder.columns_for(name.trim()).ok_or_else(|| {
                    Error::InvalidGroups(format!("`{name}` is not an encoded feature column"))
                })?;
                out.extend(cols);
            }
            Ok(out)
        };
        FeatureGroups::new(encoder.dim(), lookup(&self.causal)?, lookup(&self.spurious)?)
    }

    /// The labels of `groups`, written back as feature names.
    pub fn from_groups(groups: &FeatureGroups, names: &[String]) -> Self {
        Self {
            causal: groups.causal().iter().map(|&i| names[i].clone()).collect(),
            spurious: groups.spurious().iter().map(|&i| names[i].clone()).collect(),
        }
    }
}
