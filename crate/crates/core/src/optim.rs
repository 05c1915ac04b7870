//! Adam optimisation of the grouped-penalty objective with validation-loss
//! early stopping.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    penalty_coefficients, DesignMatrix, FeatureGroups, LabelVector, LinearModel, Objective,
    PenaltyConfig,
};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPSILON: f64 = 1e-8;

/// First/second moment estimates for Adam. The last slot holds the bias.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
            beta1: ADAM_BETA1,
            beta2: ADAM_BETA2,
            epsilon: ADAM_EPSILON,
        }
    }
}

/// One bias-corrected Adam update of `params` in place.
pub fn adam_step(state: &mut AdamState, params: &mut [f64], grads: &[f64], lr: f64) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(Error::DimensionMismatch {
            expected: state.m.len(),
            actual: if params.len() != state.m.len() {
                params.len()
            } else {
                grads.len()
            },
            context: "adam parameters",
        });
    }
    if let Some(index) = grads.iter().position(|g| !g.is_finite()) {
        return Err(Error::NonFiniteGradient {
            index,
            value: grads[index],
        });
    }
    state.t += 1;
    let t = state.t as i32;
    let (b1, b2) = (state.beta1, state.beta2);
    let c1 = 1.0 - b1.powi(t);
    let c2 = 1.0 - b2.powi(t);
    for (((p, &g), m), v) in params
        .iter_mut()
        .zip(grads)
        .zip(state.m.iter_mut())
        .zip(state.v.iter_mut())
    {
        *m = b1 * *m + (1.0 - b1) * g;
        *v = b2 * *v + (1.0 - b2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= lr * m_hat / (v_hat.sqrt() + state.epsilon);
    }
    Ok(())
}

fn default_learning_rate() -> f64 {
    0.001
}
fn default_patience() -> usize {
    10
}
fn default_max_epochs() -> usize {
    500
}
fn default_true() -> bool {
    true
}
fn default_init_scale() -> f64 {
    0.01
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    /// Epochs without a strict decrease of validation loss before stopping.
    #[serde(default = "default_patience")]
    pub patience: usize,
    #[serde(default = "default_max_epochs")]
    pub max_epochs: usize,
    /// Rows per mini-batch; `None` means full batch.
    #[serde(default)]
    pub batch_size: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    /// Scale the learning rate down for large penalties, see
    /// [`TrainConfig::effective_learning_rate`].
    #[serde(default = "default_true")]
    pub adjust_learning_rate: bool,
    /// Standard deviation of the Gaussian weight initialisation.
    #[serde(default = "default_init_scale")]
    pub init_scale: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: default_learning_rate(),
            patience: default_patience(),
            max_epochs: default_max_epochs(),
            batch_size: None,
            seed: 0,
            adjust_learning_rate: true,
            init_scale: default_init_scale(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::InvalidTrainConfig(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.patience == 0 {
            return Err(Error::InvalidTrainConfig("patience must be at least 1".into()));
        }
        if self.max_epochs == 0 {
            return Err(Error::InvalidTrainConfig("max_epochs must be at least 1".into()));
        }
        if self.batch_size == Some(0) {
            return Err(Error::InvalidTrainConfig("batch_size must be positive".into()));
        }
        if !(self.init_scale.is_finite() && self.init_scale >= 0.0) {
            return Err(Error::InvalidTrainConfig(format!(
                "init_scale must be non-negative, got {}",
                self.init_scale
            )));
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }

    /// `lr / max(1, log10(1 + max(λc, λs, λr)))` when adjustment is on.
    pub fn effective_learning_rate(&self, cfg: &PenaltyConfig) -> f64 {
        if !self.adjust_learning_rate {
            return self.learning_rate;
        }
        self.learning_rate / (1.0 + cfg.max_strength()).log10().max(1.0)
    }

    /// Seeded starting point: Gaussian weights, zero bias.
    pub fn initial_model(&self, dim: usize) -> LinearModel {
        let mut model = LinearModel::zeros(dim);
        if self.init_scale > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
            let normal = Normal::new(0.0, self.init_scale).expect("validated scale");
            for w in &mut model.weights {
                *w = normal.sample(&mut rng);
            }
        }
        model
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainResult {
    /// Snapshot with the lowest validation loss.
    pub model: LinearModel,
    /// 1-based epoch of the returned snapshot.
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub train_loss_history: Vec<f64>,
    pub val_loss_history: Vec<f64>,
    pub stopped_early: bool,
    pub learning_rate: f64,
}

impl TrainResult {
    pub fn best_val_loss(&self) -> f64 {
        self.val_loss_history[self.best_epoch - 1]
    }
}

/// Trains the grouped-penalty logistic model with Adam.
///
/// Each epoch is one pass over the training rows (a single full-batch step
/// unless `batch_size` is set). After every epoch the train and validation
/// total losses are recorded; training stops once the validation loss has
/// not strictly decreased for `patience` epochs, and the best validation
/// snapshot is returned.
pub fn train(
    train_x: &DesignMatrix,
    train_y: &LabelVector,
    val_x: &DesignMatrix,
    val_y: &LabelVector,
    groups: &FeatureGroups,
    cfg: &PenaltyConfig,
    tcfg: &TrainConfig,
) -> Result<TrainResult> {
    tcfg.validate()?;
    cfg.validate()?;
    let dim = groups.dim();
    for (m, y, ctx) in [
        (train_x, train_y, "training labels"),
        (val_x, val_y, "validation labels"),
    ] {
        if m.cols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: m.cols(),
                context: "design matrix columns vs feature groups",
            });
        }
        if m.rows() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: m.rows(),
                actual: y.len(),
                context: ctx,
            });
        }
    }
    if train_x.rows() == 0 {
        return Err(Error::EmptyInput("training set"));
    }
    if val_x.rows() == 0 {
        return Err(Error::EmptyInput("validation set"));
    }

    let lr = tcfg.effective_learning_rate(cfg);
    let coefs = penalty_coefficients(groups, cfg);
    let train_obj = Objective::new(train_x, train_y, &coefs);
    let val_obj = Objective::new(val_x, val_y, &coefs);

    let mut model = tcfg.initial_model(dim);
    let mut params: Vec<f64> = model.weights.iter().copied().chain([model.bias]).collect();
    let mut grads = vec![0.0; dim + 1];
    let mut adam = AdamState::new(dim + 1);

    let mut rng = ChaCha8Rng::seed_from_u64(tcfg.seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut order: Vec<usize> = (0..train_x.rows()).collect();

    let mut train_hist = Vec::new();
    let mut val_hist = Vec::new();
    let mut best = model.clone();
    let mut best_loss = f64::INFINITY;
    let mut best_epoch = 0;
    let mut stale = 0;
    let mut stopped_early = false;

    for epoch in 1..=tcfg.max_epochs {
        match tcfg.batch_size {
            Some(bs) if bs < order.len() => {
                order.shuffle(&mut rng);
                for chunk in order.chunks(bs) {
                    let g = train_obj.gradient(&model, Some(chunk));
                    step(&mut adam, &mut params, &mut grads, &g, lr, &mut model)?;
                }
            }
            _ => {
                let g = train_obj.gradient(&model, None);
                step(&mut adam, &mut params, &mut grads, &g, lr, &mut model)?;
            }
        }

        let train_loss = train_obj.loss(&model);
        let val_loss = val_obj.loss(&model);
        if !train_loss.is_finite() || !val_loss.is_finite() || !model.is_finite() {
            return Err(Error::Divergence {
                epoch,
                learning_rate: lr,
                loss: if train_loss.is_finite() {
                    val_loss
                } else {
                    train_loss
                },
            });
        }
        train_hist.push(train_loss);
        val_hist.push(val_loss);

        if val_loss < best_loss {
            best_loss = val_loss;
            best = model.clone();
            best_epoch = epoch;
            stale = 0;
        } else {
            stale += 1;
            if stale >= tcfg.patience {
                stopped_early = true;
                break;
            }
        }
    }

    Ok(TrainResult {
        model: best,
        best_epoch,
        epochs_run: val_hist.len(),
        train_loss_history: train_hist,
        val_loss_history: val_hist,
        stopped_early,
        learning_rate: lr,
    })
}

fn step(
    adam: &mut AdamState,
    params: &mut [f64],
    grads: &mut [f64],
    g: &crate::model::Gradient,
    lr: f64,
    model: &mut LinearModel,
) -> Result<()> {
    let dim = g.weights.len();
    grads[..dim].copy_from_slice(&g.weights);
    grads[dim] = g.bias;
    adam_step(adam, params, grads, lr)?;
    model.weights.copy_from_slice(&params[..dim]);
    model.bias = params[dim];
    Ok(())
}
