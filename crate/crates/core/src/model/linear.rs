use serde::{Deserialize, Serialize};

use super::groups::{FeatureGroups, Group, PenaltyConfig};
use super::matrix::{DesignMatrix, LabelVector};
use crate::error::{Error, Result};

/// Probabilities are clamped to `[EPS_CLIP, 1 - EPS_CLIP]` before taking logs.
pub const EPS_CLIP: f64 = 1e-12;

/// Classification threshold on predicted probabilities.
pub const DECISION_THRESHOLD: f64 = 0.5;

const PROB_MAX: f64 = 1.0 - f64::EPSILON / 2.0;

/// Logistic sigmoid, stable for any finite logit and strictly inside (0, 1).
#[inline]
pub fn sigmoid(z: f64) -> f64 {
    let p = if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    };
    p.clamp(f64::MIN_POSITIVE, PROB_MAX)
}

/// Logistic-regression classifier `σ(<x, w> + b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearModel {
    pub fn zeros(dim: usize) -> Self {
        Self {
            weights: vec![0.0; dim],
            bias: 0.0,
        }
    }

    pub fn new(weights: Vec<f64>, bias: f64) -> Self {
        Self { weights, bias }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn is_finite(&self) -> bool {
        self.bias.is_finite() && self.weights.iter().all(|w| w.is_finite())
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: x.len(),
                context: "feature row",
            });
        }
        let z: f64 = x.iter().zip(&self.weights).map(|(x, w)| x * w).sum::<f64>() + self.bias;
        Ok(sigmoid(z))
    }

    fn check_matrix(&self, data: &DesignMatrix) -> Result<()> {
        if data.cols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: data.cols(),
                context: "design matrix columns",
            });
        }
        Ok(())
    }

    pub fn predict_proba_matrix(&self, data: &DesignMatrix) -> Result<Vec<f64>> {
        self.check_matrix(data)?;
        Ok(self.probabilities_unchecked(data))
    }

    fn probabilities_unchecked(&self, data: &DesignMatrix) -> Vec<f64> {
        (0..data.rows())
            .map(|i| sigmoid(data.row_dot(i, &self.weights) + self.bias))
            .collect()
    }

    /// Hard 0/1 predictions at the 0.5 threshold.
    pub fn predict(&self, data: &DesignMatrix) -> Result<Vec<u8>> {
        Ok(self
            .predict_proba_matrix(data)?
            .into_iter()
            .map(|p| u8::from(p >= DECISION_THRESHOLD))
            .collect())
    }

    /// Weights of the features in one group, in index order.
    pub fn group_weights(&self, groups: &FeatureGroups, group: Group) -> Vec<f64> {
        groups
            .indices(group)
            .iter()
            .map(|&i| self.weights[i])
            .collect()
    }

    pub fn group_squared_norm(&self, groups: &FeatureGroups, group: Group) -> f64 {
        groups
            .indices(group)
            .iter()
            .map(|&i| self.weights[i] * self.weights[i])
            .sum()
    }
}

/// Mean binary cross-entropy with probabilities clamped by [`EPS_CLIP`].
pub fn bce_loss(probs: &[f64], labels: &LabelVector) -> Result<f64> {
    if probs.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            actual: probs.len(),
            context: "probabilities vs labels",
        });
    }
    if probs.is_empty() {
        return Err(Error::EmptyInput("bce_loss"));
    }
    Ok(bce_sum(probs, labels.as_slice()) / probs.len() as f64)
}

fn bce_sum(probs: &[f64], labels: &[u8]) -> f64 {
    probs
        .iter()
        .zip(labels)
        .map(|(&p, &y)| {
            let p = p.clamp(EPS_CLIP, 1.0 - EPS_CLIP);
            if y == 1 {
                -p.ln()
            } else {
                -(1.0 - p).ln()
            }
        })
        .sum()
}

/// Per-feature penalty coefficients `λ_g / |G|` for the group `G` holding
/// each feature. Features in a group with zero strength get 0.
pub fn penalty_coefficients(groups: &FeatureGroups, cfg: &PenaltyConfig) -> Vec<f64> {
    let per_group = Group::ALL.map(|g| {
        let size = groups.size(g);
        if size == 0 {
            0.0
        } else {
            cfg.strength(g) / size as f64
        }
    });
    groups
        .assignment()
        .iter()
        .map(|&g| per_group[g as usize])
        .collect()
}

fn check_groups(model: &LinearModel, groups: &FeatureGroups) -> Result<()> {
    if groups.dim() != model.dim() {
        return Err(Error::InvalidGroups(format!(
            "groups cover {} features but the model has {}",
            groups.dim(),
            model.dim()
        )));
    }
    Ok(())
}

/// Size-normalised grouped L2 penalty
/// `λc/|C| Σ w_c² + λs/|S| Σ w_s² + λr/|R| Σ w_r²`.
///
/// Empty groups contribute nothing. The bias is never penalised.
pub fn grouped_penalty(
    model: &LinearModel,
    groups: &FeatureGroups,
    cfg: &PenaltyConfig,
) -> Result<f64> {
    check_groups(model, groups)?;
    cfg.validate()?;
    Ok(Group::ALL
        .iter()
        .map(|&g| {
            let size = groups.size(g);
            if size == 0 {
                0.0
            } else {
                cfg.strength(g) / size as f64 * model.group_squared_norm(groups, g)
            }
        })
        .sum())
}

/// Mean BCE over `data` plus the grouped penalty.
pub fn total_loss(
    model: &LinearModel,
    data: &DesignMatrix,
    labels: &LabelVector,
    groups: &FeatureGroups,
    cfg: &PenaltyConfig,
) -> Result<f64> {
    check_shapes(model, data, labels)?;
    let probs = model.probabilities_unchecked(data);
    Ok(bce_loss(&probs, labels)? + grouped_penalty(model, groups, cfg)?)
}

fn check_shapes(model: &LinearModel, data: &DesignMatrix, labels: &LabelVector) -> Result<()> {
    model.check_matrix(data)?;
    if data.rows() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: data.rows(),
            actual: labels.len(),
            context: "labels vs design matrix rows",
        });
    }
    Ok(())
}

/// Gradient of [`total_loss`] with respect to the weights and the bias.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub weights: Vec<f64>,
    pub bias: f64,
}

pub fn gradient(
    model: &LinearModel,
    batch: &DesignMatrix,
    labels: &LabelVector,
    groups: &FeatureGroups,
    cfg: &PenaltyConfig,
) -> Result<Gradient> {
    check_shapes(model, batch, labels)?;
    check_groups(model, groups)?;
    cfg.validate()?;
    if batch.rows() == 0 {
        return Err(Error::EmptyInput("gradient batch"));
    }
    let coefs = penalty_coefficients(groups, cfg);
    Ok(Objective::new(batch, labels, &coefs).gradient(model, None))
}

/// Precomputed pieces of the training objective over one dataset.
pub(crate) struct Objective<'a> {
    data: &'a DesignMatrix,
    labels: &'a LabelVector,
    coefs: &'a [f64],
}

impl<'a> Objective<'a> {
    pub(crate) fn new(data: &'a DesignMatrix, labels: &'a LabelVector, coefs: &'a [f64]) -> Self {
        Self {
            data,
            labels,
            coefs,
        }
    }

    pub(crate) fn penalty(&self, model: &LinearModel) -> f64 {
        self.coefs
            .iter()
            .zip(&model.weights)
            .map(|(c, w)| c * w * w)
            .sum()
    }

    pub(crate) fn loss(&self, model: &LinearModel) -> f64 {
        let probs = model.probabilities_unchecked(self.data);
        bce_sum(&probs, self.labels.as_slice()) / probs.len() as f64 + self.penalty(model)
    }

    /// Gradient over `rows` (all rows when `None`).
    pub(crate) fn gradient(&self, model: &LinearModel, rows: Option<&[usize]>) -> Gradient {
        let mut gw = vec![0.0; model.dim()];
        let mut gb = 0.0;
        let mut accumulate = |i: usize| {
            let p = sigmoid(self.data.row_dot(i, &model.weights) + model.bias);
            let r = p - self.labels.value(i);
            self.data.add_row_scaled(i, r, &mut gw);
            gb += r;
        };
        let n = match rows {
            Some(rows) => {
                rows.iter().copied().for_each(&mut accumulate);
                rows.len()
            }
            None => {
                (0..self.data.rows()).for_each(&mut accumulate);
                self.data.rows()
            }
        };
        let n = n as f64;
        for ((g, c), w) in gw.iter_mut().zip(self.coefs).zip(&model.weights) {
            *g = *g / n + 2.0 * c * w;
        }
        Gradient {
            weights: gw,
            bias: gb / n,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::matrix::DenseMatrix;

    fn dense(rows: &[Vec<f64>]) -> DesignMatrix {
        DesignMatrix::Dense(DenseMatrix::from_rows(rows[0].len(), rows).unwrap())
    }

    #[test]
    fn zero_model_predicts_half() {
        let m = LinearModel::zeros(3);
        assert_eq!(m.predict_proba(&[1.0, -4.0, 9.0]).unwrap(), 0.5);
        let m = LinearModel::new(vec![1.0], 0.0);
        assert_eq!(m.predict_proba(&[0.0]).unwrap(), 0.5);
    }

    #[test]
    #[allow(clippy::excessive_precision)]
    fn predict_proba_matches_high_precision_value() {
        // σ(1.5) evaluated with 40 significant digits.
        let expected = 0.817_574_476_193_643_659_607_217_178_656_248_2;
        let m = LinearModel::new(vec![2.0, -1.0], 0.5);
        let p = m.predict_proba(&[1.0, 1.0]).unwrap();
        assert!((p - expected).abs() < 1e-15, "{p}");
    }

    #[test]
    fn predict_proba_dimension_mismatch() {
        let m = LinearModel::zeros(2);
        assert!(matches!(
            m.predict_proba(&[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn sigmoid_is_stable_at_extreme_logits() {
        for z in [-800.0, -700.0, -40.0, 0.0, 40.0, 700.0, 800.0, f64::MAX, -f64::MAX] {
            let p = sigmoid(z);
            assert!(p > 0.0 && p < 1.0, "σ({z}) = {p}");
        }
        assert!((sigmoid(-700.0) - (-700.0f64).exp()).abs() < 1e-310);
    }

    #[test]
    fn bce_of_half_is_ln2() {
        let y = LabelVector::new(vec![1]).unwrap();
        assert!((bce_loss(&[0.5], &y).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn bce_clamp_bound() {
        let y = LabelVector::new(vec![1, 0, 1]).unwrap();
        let loss = bce_loss(&[1.0, 0.0, 1.0], &y).unwrap();
        assert!(loss <= -(1.0 - EPS_CLIP).ln() + 1e-18);
        assert!(loss.is_finite());
    }

    #[test]
    #[allow(clippy::excessive_precision)]
    fn bce_matches_high_precision_sum() {
        // 40-digit reference for this instance.
        let expected = 0.263_583_612_735_130_753_401_964_484_413_357_98;
        let y = LabelVector::new(vec![0, 1, 1, 1, 0]).unwrap();
        let loss = bce_loss(&[0.12, 0.87, 0.5, 0.999, 0.3], &y).unwrap();
        assert!((loss - expected).abs() < 1e-12);
    }

    #[test]
    fn bce_errors() {
        let y = LabelVector::new(vec![]).unwrap();
        assert!(matches!(bce_loss(&[], &y), Err(Error::EmptyInput(_))));
        let y = LabelVector::new(vec![1]).unwrap();
        assert!(bce_loss(&[0.5, 0.5], &y).is_err());
    }

    #[test]
    fn penalty_examples() {
        let g = FeatureGroups::new(2, [0], [1]).unwrap();
        let m = LinearModel::new(vec![1.0, 1.0], 3.0);
        assert_eq!(
            grouped_penalty(&m, &g, &PenaltyConfig::zero()).unwrap(),
            0.0
        );
        let cfg = PenaltyConfig::new(1.0, 10.0, 0.0).unwrap();
        assert_eq!(grouped_penalty(&m, &g, &cfg).unwrap(), 11.0);

        let g = FeatureGroups::new(3, [0], [1, 2]).unwrap();
        let m = LinearModel::new(vec![0.5, -2.0, 3.0], 0.0);
        let cfg = PenaltyConfig::new(0.01, 100.0, 0.0).unwrap();
        // 0.01 * 0.25 + 100 / 2 * (4 + 9)
        assert!((grouped_penalty(&m, &g, &cfg).unwrap() - 650.0025).abs() < 1e-9);
    }

    #[test]
    fn penalty_skips_empty_groups_and_bias() {
        let g = FeatureGroups::new(2, [], []).unwrap();
        let m = LinearModel::new(vec![1.0, 2.0], 100.0);
        let cfg = PenaltyConfig::new(1e6, 1e6, 2.0).unwrap();
        assert_eq!(grouped_penalty(&m, &g, &cfg).unwrap(), 5.0);
    }

    #[test]
    fn penalty_rejects_mismatched_groups() {
        let g = FeatureGroups::new(3, [0], [1]).unwrap();
        let m = LinearModel::zeros(2);
        assert!(grouped_penalty(&m, &g, &PenaltyConfig::zero()).is_err());
    }

    #[test]
    fn total_loss_reduces_to_bce() {
        let x = dense(&[vec![1.0, 0.0], vec![0.3, -2.0], vec![0.0, 1.0]]);
        let y = LabelVector::new(vec![1, 0, 1]).unwrap();
        let g = FeatureGroups::new(2, [0], [1]).unwrap();
        let m = LinearModel::new(vec![0.4, -0.7], 0.1);
        let probs = m.predict_proba_matrix(&x).unwrap();
        assert_eq!(
            total_loss(&m, &x, &y, &g, &PenaltyConfig::zero()).unwrap(),
            bce_loss(&probs, &y).unwrap()
        );
        let single = dense(&[vec![5.0, -1.0]]);
        let y1 = LabelVector::new(vec![0]).unwrap();
        let l = total_loss(&LinearModel::zeros(2), &single, &y1, &g, &PenaltyConfig::zero())
            .unwrap();
        assert!((l - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn gradient_simple_cases() {
        let x = dense(&[vec![1.0]]);
        let y = LabelVector::new(vec![1]).unwrap();
        let g = FeatureGroups::all_remaining(1);
        let grad = gradient(&LinearModel::zeros(1), &x, &y, &g, &PenaltyConfig::zero()).unwrap();
        assert_eq!(grad.weights, vec![-0.5]);
        assert_eq!(grad.bias, -0.5);

        // symmetric X with balanced labels
        let x = dense(&[vec![1.0, -1.0], vec![-1.0, 1.0]]);
        let y = LabelVector::new(vec![1, 0]).unwrap();
        let g = FeatureGroups::all_remaining(2);
        let grad = gradient(&LinearModel::zeros(2), &x, &y, &g, &PenaltyConfig::zero()).unwrap();
        assert_eq!(grad.bias, 0.0);
    }

    #[test]
    fn gradient_errors() {
        let x = dense(&[vec![1.0, 2.0]]);
        let y = LabelVector::new(vec![1]).unwrap();
        let g = FeatureGroups::all_remaining(2);
        assert!(gradient(&LinearModel::zeros(3), &x, &y, &g, &PenaltyConfig::zero()).is_err());
        let y2 = LabelVector::new(vec![1, 0]).unwrap();
        assert!(gradient(&LinearModel::zeros(2), &x, &y2, &g, &PenaltyConfig::zero()).is_err());
    }

    #[test]
    fn binary_and_dense_storage_agree() {
        use crate::model::matrix::BinaryMatrix;
        let rows = vec![vec![0, 2], vec![1], vec![0, 1, 2]];
        let bin = DesignMatrix::Binary(BinaryMatrix::from_rows(3, rows).unwrap());
        let den = dense(&(0..3).map(|i| bin.row_dense(i)).collect::<Vec<_>>());
        let y = LabelVector::new(vec![1, 0, 1]).unwrap();
        let g = FeatureGroups::new(3, [0], [2]).unwrap();
        let cfg = PenaltyConfig::new(0.1, 3.0, 0.5).unwrap();
        let m = LinearModel::new(vec![0.2, -0.4, 1.1], -0.3);
        let a = gradient(&m, &bin, &y, &g, &cfg).unwrap();
        let b = gradient(&m, &den, &y, &g, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            total_loss(&m, &bin, &y, &g, &cfg).unwrap(),
            total_loss(&m, &den, &y, &g, &cfg).unwrap()
        );
    }
}
