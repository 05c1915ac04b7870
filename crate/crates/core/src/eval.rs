//! Accuracy, F1, counterfactual accuracy, group-fairness gaps and the causal
//! share of the largest weights.
//!
//! Predictions are hard 0/1 labels obtained at the 0.5 threshold.

use std::collections::BTreeSet;

use log::debug;
use serde::{Deserialize, Serialize};

use crate::data::PairedDataset;
use crate::error::{Error, Result};
use crate::model::{FeatureGroups, Group, LabelVector, LinearModel};

/// Per-row value of a sensitive attribute such as gender.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SensitiveAssignment {
    pub attribute: String,
    pub values: Vec<String>,
}

impl SensitiveAssignment {
    pub fn new(attribute: impl Into<String>, values: Vec<String>) -> Self {
        Self {
            attribute: attribute.into(),
            values,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Distinct group values, sorted.
    pub fn groups(&self) -> Vec<String> {
        self.values
            .iter()
            .cloned()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    /// The two smallest group values, used when no pair is given.
    pub fn default_pair(&self) -> Result<(String, String)> {
        let groups = self.groups();
        match groups.as_slice() {
            [a, b, ..] => Ok((a.clone(), b.clone())),
            _ => Err(Error::UndefinedMetric(format!(
                "attribute `{}` needs at least two groups, found {}",
                self.attribute,
                groups.len()
            ))),
        }
    }

    pub fn select(&self, rows: &[usize]) -> Self {
        Self {
            attribute: self.attribute.clone(),
            values: rows.iter().map(|&i| self.values[i].clone()).collect(),
        }
    }

    pub fn concat(&self, other: &Self) -> Result<Self> {
        if self.attribute != other.attribute {
            return Err(Error::Data(format!(
                "cannot join sensitive columns `{}` and `{}`",
                self.attribute, other.attribute
            )));
        }
        let mut values = self.values.clone();
        values.extend_from_slice(&other.values);
        Ok(Self {
            attribute: self.attribute.clone(),
            values,
        })
    }
}

fn check_lengths(preds: &[u8], n: usize) -> Result<()> {
    if preds.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: preds.len(),
            context: "predictions",
        });
    }
    if preds.is_empty() {
        return Err(Error::EmptyInput("predictions"));
    }
    Ok(())
}

pub fn accuracy(preds: &[u8], labels: &LabelVector) -> Result<f64> {
    check_lengths(preds, labels.len())?;
    let correct = preds
        .iter()
        .zip(labels.as_slice())
        .filter(|(p, y)| p == y)
        .count();
    Ok(correct as f64 / preds.len() as f64)
}

/// F1 of the positive class. Defined as 0 when there are neither predicted
/// nor actual positives.
pub fn f1(preds: &[u8], labels: &LabelVector) -> Result<f64> {
    check_lengths(preds, labels.len())?;
    let (mut tp, mut fp, mut fneg) = (0usize, 0usize, 0usize);
    for (&p, &y) in preds.iter().zip(labels.as_slice()) {
        match (p, y) {
            (1, 1) => tp += 1,
            (1, 0) => fp += 1,
            (0, 1) => fneg += 1,
            _ => {}
        }
    }
    let denom = 2 * tp + fp + fneg;
    if denom == 0 {
        debug!("f1: no predicted or actual positives, reporting 0");
        return Ok(0.0);
    }
    Ok(2.0 * tp as f64 / denom as f64)
}

fn rate(preds: &[u8], rows: impl Iterator<Item = usize>) -> Option<f64> {
    let (mut n, mut pos) = (0usize, 0usize);
    for i in rows {
        n += 1;
        pos += usize::from(preds[i] == 1);
    }
    (n > 0).then(|| pos as f64 / n as f64)
}

/// `Pr(ŷ = 1 | S = group, y = 1)`.
pub fn true_positive_rate(
    preds: &[u8],
    labels: &LabelVector,
    sens: &SensitiveAssignment,
    group: &str,
) -> Result<f64> {
    check_lengths(preds, labels.len())?;
    check_lengths(preds, sens.len())?;
    rate(
        preds,
        (0..preds.len()).filter(|&i| labels.as_slice()[i] == 1 && sens.values[i] == group),
    )
    .ok_or_else(|| {
        Error::UndefinedMetric(format!(
            "no positive-label rows with {} = {group}",
            sens.attribute
        ))
    })
}

/// `Pr(ŷ = 1 | S = group)`.
pub fn positive_rate(preds: &[u8], sens: &SensitiveAssignment, group: &str) -> Result<f64> {
    check_lengths(preds, sens.len())?;
    rate(preds, (0..preds.len()).filter(|&i| sens.values[i] == group)).ok_or_else(|| {
        Error::UndefinedMetric(format!("no rows with {} = {group}", sens.attribute))
    })
}

/// Equal-opportunity difference `|TPR_i − TPR_j|`.
pub fn delta_eo(
    preds: &[u8],
    labels: &LabelVector,
    sens: &SensitiveAssignment,
    pair: (&str, &str),
) -> Result<f64> {
    let a = true_positive_rate(preds, labels, sens, pair.0)?;
    let b = true_positive_rate(preds, labels, sens, pair.1)?;
    Ok((a - b).abs())
}

/// Signed demographic-parity difference `Pr(ŷ=1|S=i) − Pr(ŷ=1|S=j)`.
pub fn delta_dp_signed(preds: &[u8], sens: &SensitiveAssignment, pair: (&str, &str)) -> Result<f64> {
    Ok(positive_rate(preds, sens, pair.0)? - positive_rate(preds, sens, pair.1)?)
}

/// Demographic-parity difference, reported as an absolute value.
pub fn delta_dp(preds: &[u8], sens: &SensitiveAssignment, pair: (&str, &str)) -> Result<f64> {
    Ok(delta_dp_signed(preds, sens, pair)?.abs())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRates {
    pub group: String,
    pub positive_rate: f64,
    pub true_positive_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessReport {
    pub attribute: String,
    pub delta_eo: f64,
    pub delta_dp: f64,
    pub delta_dp_signed: f64,
    pub groups: [GroupRates; 2],
}

pub fn fairness_report(
    preds: &[u8],
    labels: &LabelVector,
    sens: &SensitiveAssignment,
    pair: Option<(&str, &str)>,
) -> Result<FairnessReport> {
    let owned;
    let (i, j) = match pair {
        Some(p) => p,
        None => {
            owned = sens.default_pair()?;
            (owned.0.as_str(), owned.1.as_str())
        }
    };
    let rates = |g: &str| -> Result<GroupRates> {
        Ok(GroupRates {
            group: g.to_owned(),
            positive_rate: positive_rate(preds, sens, g)?,
            true_positive_rate: true_positive_rate(preds, labels, sens, g)?,
        })
    };
    let (a, b) = (rates(i)?, rates(j)?);
    let signed = a.positive_rate - b.positive_rate;
    Ok(FairnessReport {
        attribute: sens.attribute.clone(),
        delta_eo: (a.true_positive_rate - b.true_positive_rate).abs(),
        delta_dp: signed.abs(),
        delta_dp_signed: signed,
        groups: [a, b],
    })
}

/// Feature indices ordered by decreasing `|weight|`, ties by lower index.
pub fn rank_by_magnitude(weights: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        weights[b]
            .abs()
            .total_cmp(&weights[a].abs())
            .then(a.cmp(&b))
    });
    order
}

/// Share of causal features among the `n` largest-magnitude weights, for
/// each `n` in `n_list`.
pub fn causal_fraction_topn(
    model: &LinearModel,
    groups: &FeatureGroups,
    n_list: &[usize],
) -> Result<Vec<f64>> {
    if groups.dim() != model.dim() {
        return Err(Error::InvalidGroups(format!(
            "groups cover {} features but the model has {}",
            groups.dim(),
            model.dim()
        )));
    }
    let order = rank_by_magnitude(&model.weights);
    n_list
        .iter()
        .map(|&n| {
            if n == 0 || n > model.dim() {
                return Err(Error::DimensionMismatch {
                    expected: model.dim(),
                    actual: n,
                    context: "top-n size must be in 1..=dim",
                });
            }
            let causal = order[..n]
                .iter()
                .filter(|&&i| groups.group_of(i) == Group::Causal)
                .count();
            Ok(causal as f64 / n as f64)
        })
        .collect()
}

/// Accuracy on the counterfactual twins of `split`, against their own
/// (flipped) labels.
pub fn counterfactual_accuracy(model: &LinearModel, split: &PairedDataset) -> Result<f64> {
    let twin = split
        .twin
        .as_deref()
        .ok_or(Error::MissingSplit("counterfactual"))?;
    if twin.is_empty() {
        return Err(Error::EmptyInput("counterfactual split"));
    }
    accuracy(&model.predict(&twin.features)?, &twin.labels)
}
