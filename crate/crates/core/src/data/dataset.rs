use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::SensitiveAssignment;
use crate::model::{DesignMatrix, FeatureGroups, LabelVector};

/// Features and labels of one split, with the optional counterfactual twin
/// split and sensitive-attribute column.
///
/// When a twin split is present, its first `paired_rows` rows are the
/// counterfactuals of the first `paired_rows` rows here, in order. Any
/// further twin rows are counterfactual examples without a known original.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedDataset {
    pub features: DesignMatrix,
    pub labels: LabelVector,
    pub sensitive: Option<SensitiveAssignment>,
    pub twin: Option<Box<PairedDataset>>,
    #[serde(default)]
    pub paired_rows: usize,
}

impl PairedDataset {
    pub fn new(features: DesignMatrix, labels: LabelVector) -> Result<Self> {
        if features.rows() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: features.rows(),
                actual: labels.len(),
                context: "labels vs feature rows",
            });
        }
        Ok(Self {
            features,
            labels,
            sensitive: None,
            twin: None,
            paired_rows: 0,
        })
    }

    pub fn with_sensitive(mut self, sensitive: SensitiveAssignment) -> Result<Self> {
        if sensitive.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                actual: sensitive.len(),
                context: "sensitive column",
            });
        }
        self.sensitive = Some(sensitive);
        Ok(self)
    }

    /// Attaches a twin split aligned row-for-row with this one.
    pub fn with_twin(self, twin: PairedDataset) -> Result<Self> {
        let paired = self.len().min(twin.len());
        self.with_partial_twin(twin, paired)
    }

    /// Attaches a twin split whose first `paired_rows` rows mirror the first
    /// `paired_rows` rows here.
    pub fn with_partial_twin(mut self, twin: PairedDataset, paired_rows: usize) -> Result<Self> {
        if paired_rows > self.len().min(twin.len()) {
            return Err(Error::DimensionMismatch {
                expected: self.len().min(twin.len()),
                actual: paired_rows,
                context: "paired twin rows",
            });
        }
        if twin.features.cols() != self.features.cols() {
            return Err(Error::DimensionMismatch {
                expected: self.features.cols(),
                actual: twin.features.cols(),
                context: "counterfactual twin columns",
            });
        }
        self.twin = Some(Box::new(twin));
        self.paired_rows = paired_rows;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn select_columns(&self, keep: &[usize]) -> Result<Self> {
        Ok(Self {
            features: self.features.select_columns(keep)?,
            labels: self.labels.clone(),
            sensitive: self.sensitive.clone(),
            twin: match &self.twin {
                Some(t) => Some(Box::new(t.select_columns(keep)?)),
                None => None,
            },
            paired_rows: self.paired_rows,
        })
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self {
            features: self.features.select_rows(rows),
            labels: self.labels.select(rows),
            sensitive: self.sensitive.as_ref().map(|s| s.select(rows)),
            twin: None,
            paired_rows: 0,
        }
    }

    /// Originals stacked on top of their counterfactual twins. Every row
    /// must have a twin.
    pub fn augmented(&self) -> Result<Self> {
        let twin = self.twin.as_deref().ok_or_else(|| {
            Error::UnpairedRows(vec![format!(
                "all {} rows: no counterfactual twins available",
                self.len()
            )])
        })?;
        if self.paired_rows != self.len() || twin.len() != self.len() {
            return Err(Error::UnpairedRows(vec![format!(
                "{} of {} rows lack a counterfactual twin, {} twins lack an original",
                self.len() - self.paired_rows,
                self.len(),
                twin.len() - self.paired_rows
            )]));
        }
        let sensitive = match (&self.sensitive, &twin.sensitive) {
            (Some(a), Some(b)) => Some(a.concat(b)?),
            _ => None,
        };
        Ok(Self {
            features: self.features.vstack(&twin.features)?,
            labels: self.labels.concat(&twin.labels),
            sensitive,
            twin: None,
            paired_rows: 0,
        })
    }
}

/// Train / validation / test splits sharing one feature space and one
/// causal/spurious/remaining partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataBundle {
    pub feature_names: Vec<String>,
    pub groups: FeatureGroups,
    pub train: PairedDataset,
    pub validation: PairedDataset,
    pub test: PairedDataset,
}

impl DataBundle {
    pub fn new(
        feature_names: Vec<String>,
        groups: FeatureGroups,
        train: PairedDataset,
        validation: PairedDataset,
        test: PairedDataset,
    ) -> Result<Self> {
        let dim = groups.dim();
        if feature_names.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: feature_names.len(),
                context: "feature names vs groups",
            });
        }
        for split in [&train, &validation, &test] {
            if split.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: split.dim(),
                    context: "split columns vs groups",
                });
            }
        }
        Ok(Self {
            feature_names,
            groups,
            train,
            validation,
            test,
        })
    }

    pub fn dim(&self) -> usize {
        self.groups.dim()
    }

    pub fn has_counterfactual_validation(&self) -> bool {
        self.validation.twin.as_ref().is_some_and(|t| !t.is_empty())
    }

    /// Same bundle with the given feature columns deleted and the groups
    /// renumbered.
    pub fn without_features(&self, removed: &[usize]) -> Result<Self> {
        let (groups, kept) = self.groups.without(removed)?;
        Ok(Self {
            feature_names: kept.iter().map(|&i| self.feature_names[i].clone()).collect(),
            groups,
            train: self.train.select_columns(&kept)?,
            validation: self.validation.select_columns(&kept)?,
            test: self.test.select_columns(&kept)?,
        })
    }

    /// Same bundle with the training split doubled by its twins.
    pub fn augmented(&self) -> Result<Self> {
        Ok(Self {
            train: self.train.augmented()?,
            ..self.clone()
        })
    }

    /// Same splits with a different partition of the features.
    pub fn with_groups(&self, groups: FeatureGroups) -> Result<Self> {
        if groups.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: groups.dim(),
                context: "replacement groups",
            });
        }
        Ok(Self {
            groups,
            ..self.clone()
        })
    }
}

/// Deletes feature columns from a matrix and its name list.
pub fn remove_features(
    matrix: &DesignMatrix,
    names: &[String],
    removed: &[usize],
) -> Result<(DesignMatrix, Vec<String>)> {
    if names.len() != matrix.cols() {
        return Err(Error::DimensionMismatch {
            expected: matrix.cols(),
            actual: names.len(),
            context: "feature names vs matrix columns",
        });
    }
    let mut drop = vec![false; names.len()];
    for &i in removed {
        *drop.get_mut(i).ok_or_else(|| Error::DimensionMismatch {
            expected: names.len(),
            actual: i + 1,
            context: "removed feature index",
        })? = true;
    }
    let kept: Vec<usize> = (0..names.len()).filter(|&i| !drop[i]).collect();
    Ok((
        matrix.select_columns(&kept)?,
        kept.iter().map(|&i| names[i].clone()).collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BinaryMatrix, Group};

    fn bin(cols: usize, rows: Vec<Vec<usize>>) -> DesignMatrix {
        DesignMatrix::Binary(BinaryMatrix::from_rows(cols, rows).unwrap())
    }

    fn split(rows: Vec<Vec<usize>>, labels: Vec<u8>) -> PairedDataset {
        PairedDataset::new(bin(4, rows), LabelVector::new(labels).unwrap()).unwrap()
    }

    #[test]
    fn remove_nothing_is_identity() {
        let m = bin(3, vec![vec![0, 2], vec![1]]);
        let names: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let (r, n) = remove_features(&m, &names, &[]).unwrap();
        assert_eq!(r, m);
        assert_eq!(n, names);
        let (r, n) = remove_features(&m, &names, &[1]).unwrap();
        assert_eq!(n, vec!["a", "c"]);
        assert_eq!(r.row_dense(0), vec![1.0, 1.0]);
        assert!(remove_features(&m, &names, &[5]).is_err());
    }

    #[test]
    fn bundle_feature_removal_keeps_partition() {
        let groups = FeatureGroups::new(4, [0], [1, 3]).unwrap();
        let names = (0..4).map(|i| format!("t{i}")).collect();
        let train = split(vec![vec![0, 1], vec![2, 3]], vec![1, 0])
            .with_twin(split(vec![vec![1], vec![3]], vec![0, 1]))
            .unwrap();
        let b = DataBundle::new(
            names,
            groups,
            train,
            split(vec![vec![0]], vec![1]),
            split(vec![vec![3]], vec![0]),
        )
        .unwrap();
        let reduced = b.without_features(b.groups.spurious()).unwrap();
        assert_eq!(reduced.dim(), 2);
        assert_eq!(reduced.feature_names, vec!["t0", "t2"]);
        assert_eq!(reduced.groups.size(Group::Spurious), 0);
        assert_eq!(
            reduced.groups.size(Group::Causal) + reduced.groups.size(Group::Remaining),
            2
        );
        assert_eq!(reduced.train.twin.as_ref().unwrap().dim(), 2);
    }

    #[test]
    fn augmentation_requires_full_pairing() {
        let s = split(vec![vec![0], vec![1]], vec![1, 0]);
        assert!(matches!(s.augmented(), Err(Error::UnpairedRows(_))));
        let partial = s.clone().with_twin(split(vec![vec![2]], vec![0])).unwrap();
        assert!(matches!(partial.augmented(), Err(Error::UnpairedRows(_))));
        let full = s
            .with_twin(split(vec![vec![2], vec![3]], vec![0, 1]))
            .unwrap();
        let a = full.augmented().unwrap();
        assert_eq!(a.len(), 4);
        assert_eq!(a.labels.as_slice(), &[1, 0, 0, 1]);
    }
}
