//! Logistic-regression hypothesis, cross-entropy loss and the grouped
//! (causal / spurious / remaining) L2 penalty with its analytic gradient.

mod groups;
mod linear;
mod matrix;

pub use groups::{FeatureGroups, Group, PenaltyConfig};
pub(crate) use linear::Objective;
pub use linear::{
    bce_loss, gradient, grouped_penalty, penalty_coefficients, sigmoid, total_loss, Gradient,
    LinearModel, DECISION_THRESHOLD, EPS_CLIP,
};
pub use matrix::{BinaryMatrix, DenseMatrix, DesignMatrix, LabelVector};
