use std::collections::HashMap;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Group;

/// Pre-trained word vectors. Tokens missing from the table map to the zero
/// vector.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
    zero: Vec<f64>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            vectors: HashMap::new(),
            zero: vec![0.0; dim],
        }
    }

    pub fn insert(&mut self, token: impl Into<String>, vector: Vec<f64>) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: vector.len(),
                context: "embedding vector",
            });
        }
        self.vectors.insert(token.into(), vector);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.vectors.get(token).map(Vec::as_slice)
    }

    /// The token's vector, or the zero fallback.
    pub fn vector(&self, token: &str) -> &[f64] {
        self.get(token).unwrap_or(&self.zero)
    }

    /// Parses the GloVe text format: one token per line followed by its
    /// space-separated components. All lines must agree on the dimension.
    pub fn read_glove(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::parse_glove(BufReader::new(file), &path.display().to_string())
    }

    pub fn parse_glove<R: BufRead>(reader: R, origin: &str) -> Result<Self> {
        let mut table: Option<EmbeddingTable> = None;
        for (n, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io(origin, e))?;
            let line = line.trim_end();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split(' ');
            let token = parts.next().unwrap_or_default().to_owned();
            let vector = parts
                .map(|p| p.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Data(format!("{origin}:{}: {e}", n + 1)))?;
            if vector.is_empty() || vector.iter().any(|v| !v.is_finite()) {
                return Err(Error::Data(format!(
                    "{origin}:{}: expected finite vector components after the token",
                    n + 1
                )));
            }
            let table = table.get_or_insert_with(|| EmbeddingTable::new(vector.len()));
            table
                .insert(token, vector)
                .map_err(|e| Error::Data(format!("{origin}:{}: {e}", n + 1)))?;
        }
        table.ok_or_else(|| Error::Data(format!("{origin}: no embedding vectors")))
    }

    pub fn write_glove(&self, path: &Path) -> Result<()> {
        let mut tokens: Vec<&String> = self.vectors.keys().collect();
        tokens.sort();
        let mut out = String::new();
        for t in tokens {
            out.push_str(t);
            for v in &self.vectors[t] {
                out.push(' ');
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    /// Random Gaussian vectors for `tokens`, for corpora without real
    /// embeddings.
    pub fn random(tokens: &[String], dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 1.0 / (dim as f64).sqrt()).expect("positive scale");
        let mut table = Self::new(dim);
        for t in tokens {
            let v = (0..dim).map(|_| normal.sample(&mut rng)).collect();
            table.vectors.insert(t.clone(), v);
        }
        table
    }
}

/// Per-group multipliers applied to token vectors before averaging.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupWeightTriple {
    pub causal_weight: f64,
    pub spurious_weight: f64,
    pub remain_weight: f64,
}

impl Default for GroupWeightTriple {
    fn default() -> Self {
        Self::UNIFORM
    }
}

impl GroupWeightTriple {
    pub const UNIFORM: Self = Self {
        causal_weight: 1.0,
        spurious_weight: 1.0,
        remain_weight: 1.0,
    };

    pub fn new(causal_weight: f64, spurious_weight: f64, remain_weight: f64) -> Result<Self> {
        let w = Self {
            causal_weight,
            spurious_weight,
            remain_weight,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        for v in [self.causal_weight, self.spurious_weight, self.remain_weight] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(
                    "group_weights",
                    format!("weights must be positive, got {v}"),
                ));
            }
        }
        Ok(())
    }

    pub fn weight(&self, group: Group) -> f64 {
        match group {
            Group::Causal => self.causal_weight,
            Group::Spurious => self.spurious_weight,
            Group::Remaining => self.remain_weight,
        }
    }
}

/// Token → labelled group. Tokens not in the map are `remaining`.
pub type TokenGroups = HashMap<String, Group>;

/// Mean over all tokens of `group_weight(token) · vector(token)`.
///
/// Out-of-table tokens contribute the zero vector but still count in the
/// mean. An empty token list gives the zero vector.
pub fn embed_document(
    tokens: &[String],
    table: &EmbeddingTable,
    groups: &TokenGroups,
    weights: &GroupWeightTriple,
) -> Vec<f64> {
    let mut out = vec![0.0; table.dim()];
    if tokens.is_empty() {
        return out;
    }
    for t in tokens {
        let Some(v) = table.get(t) else { continue };
        let g = groups.get(t).copied().unwrap_or(Group::Remaining);
        let w = weights.weight(g);
        for (o, x) in out.iter_mut().zip(v) {
            *o += w * x;
        }
    }
    let n = tokens.len() as f64;
    for o in &mut out {
        *o /= n;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> EmbeddingTable {
        EmbeddingTable::parse_glove(
            "good 1.0 2.0\nbad -1.5 0.5\nmovie 0.25 -4\n".as_bytes(),
            "mem",
        )
        .unwrap()
    }

    fn toks(s: &[&str]) -> Vec<String> {
        s.iter().map(|t| t.to_string()).collect()
    }

    #[test]
    fn parses_glove_text() {
        let t = table();
        assert_eq!(t.dim(), 2);
        assert_eq!(t.len(), 3);
        assert_eq!(t.get("movie"), Some(&[0.25, -4.0][..]));
        assert_eq!(t.vector("unknown"), &[0.0, 0.0]);
    }

    #[test]
    fn rejects_ragged_vectors() {
        assert!(EmbeddingTable::parse_glove("a 1 2\nb 1\n".as_bytes(), "mem").is_err());
        assert!(EmbeddingTable::parse_glove("a x y\n".as_bytes(), "mem").is_err());
        assert!(EmbeddingTable::parse_glove("".as_bytes(), "mem").is_err());
    }

    #[test]
    fn identity_weighting_returns_vector() {
        let t = table();
        let v = embed_document(&toks(&["good"]), &t, &TokenGroups::new(), &GroupWeightTriple::UNIFORM);
        assert_eq!(v, vec![1.0, 2.0]);
    }

    #[test]
    fn oov_and_empty_give_zero() {
        let t = table();
        let w = GroupWeightTriple::UNIFORM;
        assert_eq!(embed_document(&toks(&["x", "y"]), &t, &TokenGroups::new(), &w), vec![0.0, 0.0]);
        assert_eq!(embed_document(&[], &t, &TokenGroups::new(), &w), vec![0.0, 0.0]);
    }

    #[test]
    fn weighted_mean_matches_hand_arithmetic() {
        let t = table();
        let mut groups = TokenGroups::new();
        groups.insert("good".into(), Group::Causal);
        groups.insert("movie".into(), Group::Spurious);
        let w = GroupWeightTriple::new(10.0, 0.1, 1.0).unwrap();
        let v = embed_document(&toks(&["good", "movie"]), &t, &groups, &w);
        let expected = [(10.0 * 1.0 + 0.1 * 0.25) / 2.0, (10.0 * 2.0 + 0.1 * -4.0) / 2.0];
        assert!((v[0] - expected[0]).abs() < 1e-15);
        assert!((v[1] - expected[1]).abs() < 1e-15);
    }

    #[test]
    fn weights_must_be_positive() {
        assert!(GroupWeightTriple::new(0.0, 1.0, 1.0).is_err());
        assert!(GroupWeightTriple::new(1.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn glove_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.txt");
        let t = table();
        t.write_glove(&p).unwrap();
        assert_eq!(EmbeddingTable::read_glove(&p).unwrap(), t);
    }
}
