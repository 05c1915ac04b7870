//! Linear classifiers trained with separate L2 penalty strengths for causal,
//! spurious and remaining features, together with the data preparation,
//! robustness/fairness metrics and experiment drivers needed to evaluate them.
//!
//! The main entry points are:
//!
//! * [`model`]: the logistic model, loss, grouped penalty and gradient.
//! * [`optim`]: Adam training with validation early stopping.
//! * [`data`]: tokenisation, bag-of-words, tabular encoding, GloVe
//!   document embeddings, counterfactual pairing and synthetic bundles.
//! * [`eval`]: accuracy, F1, counterfactual accuracy, ΔEO, ΔDP and the
//!   causal share of the top-n weights.
//! * [`experiments`]: constrained grid search, seed repetition, baselines
//!   and one-at-a-time λ sweeps.
//! * [`cli`]: configuration-driven commands behind the `causalreg` binary.

pub mod cli;
pub mod data;
pub mod error;
pub mod eval;
pub mod experiments;
pub mod model;
pub mod optim;

pub use error::{Error, Result};
pub use model::{FeatureGroups, Group, LinearModel, PenaltyConfig};
