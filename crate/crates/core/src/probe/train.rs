use ndarray::{Array1, Array2, Zip};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{block_name, Gradients, ProbeConfig, ProbeData, ProbeError, ProbeModel, TaskKind, Targets};
use crate::metrics;

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// Adam moments shaped like the model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m_w: Vec<Array2<f64>>,
    pub v_w: Vec<Array2<f64>>,
    pub m_b: Vec<Array1<f64>>,
    pub v_b: Vec<Array1<f64>>,
    pub step: u64,
}

impl AdamState {
    pub fn new(model: &ProbeModel) -> AdamState {
        AdamState {
            m_w: model.layers.iter().map(|l| Array2::zeros(l.w.dim())).collect(),
            v_w: model.layers.iter().map(|l| Array2::zeros(l.w.dim())).collect(),
            m_b: model.layers.iter().map(|l| Array1::zeros(l.b.len())).collect(),
            v_b: model.layers.iter().map(|l| Array1::zeros(l.b.len())).collect(),
            step: 0,
        }
    }
}

/// One bias-corrected Adam update. The model and state are untouched when any
/// gradient entry is non-finite.
pub fn adam_step(model: &mut ProbeModel, state: &mut AdamState, grads: &Gradients, lr: f64) -> Result<(), ProbeError> {
    for (i, (gw, gb)) in grads.w.iter().zip(&grads.b).enumerate() {
        if gw.iter().any(|g| !g.is_finite()) {
            return Err(ProbeError::NonFiniteGradient(block_name(i, false)));
        }
        if gb.iter().any(|g| !g.is_finite()) {
            return Err(ProbeError::NonFiniteGradient(block_name(i, true)));
        }
    }
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - ADAM_BETA1.powi(t);
    let c2 = 1.0 - ADAM_BETA2.powi(t);
    let update = |p: &mut f64, m: &mut f64, v: &mut f64, g: &f64| {
        *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
        *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
        *p -= lr * (*m / c1) / ((*v / c2).sqrt() + ADAM_EPS);
    };
    for (i, layer) in model.layers.iter_mut().enumerate() {
        Zip::from(&mut layer.w)
            .and(&mut state.m_w[i])
            .and(&mut state.v_w[i])
            .and(&grads.w[i])
            .for_each(update);
        Zip::from(&mut layer.b)
            .and(&mut state.m_b[i])
            .and(&mut state.v_b[i])
            .and(&grads.b[i])
            .for_each(update);
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean of the mini-batch losses seen during the epoch.
    pub train_loss: f64,
    pub valid_loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    /// Parameters from the epoch with the lowest validation loss.
    pub model: ProbeModel,
    pub best_epoch: usize,
    pub best_valid_loss: f64,
    pub history: Vec<EpochRecord>,
}

impl TrainOutcome {
    pub fn history_json(&self) -> String {
        serde_json::to_string_pretty(&serde_json::json!({
            "best_epoch": self.best_epoch,
            "best_valid_loss": self.best_valid_loss,
            "history": self.history,
        }))
        .expect("history serializes")
    }
}

fn check_split(name: &'static str, data: &ProbeData, model: &ProbeModel) -> Result<(), ProbeError> {
    if data.is_empty() {
        return Err(ProbeError::EmptySplit(name));
    }
    if data.x.ncols() != model.input_dim() {
        return Err(ProbeError::FeatureDim {
            got: data.x.ncols(),
            expected: model.input_dim(),
        });
    }
    data.y.check(model.task)
}

/// Mini-batch Adam for `config.epochs` epochs over a seeded shuffle; returns
/// the best-validation snapshot and the per-epoch history.
pub fn train_probe(
    mut model: ProbeModel,
    train: &ProbeData,
    valid: &ProbeData,
    config: &ProbeConfig,
) -> Result<TrainOutcome, ProbeError> {
    config.validate()?;
    check_split("train", train, &model)?;
    check_split("valid", valid, &model)?;
    // separate stream from the one used for initialisation
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed_5eed_5eed_5eed);
    let mut state = AdamState::new(&model);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);
    // epoch 0 is the untrained model
    let mut best = (model.clone(), 0usize, model.loss(valid.x.view(), &valid.y));
    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(config.batch_size) {
            let part = train.select(batch);
            let (loss, grads) = model.loss_and_gradients(part.x.view(), &part.y);
            adam_step(&mut model, &mut state, &grads, config.learning_rate)?;
            total += loss * batch.len() as f64;
        }
        let valid_loss = model.loss(valid.x.view(), &valid.y);
        history.push(EpochRecord {
            epoch,
            train_loss: total / train.len() as f64,
            valid_loss,
        });
        if valid_loss < best.2 {
            best = (model.clone(), epoch, valid_loss);
        }
    }
    let (model, best_epoch, best_valid_loss) = best;
    Ok(TrainOutcome {
        model,
        best_epoch,
        best_valid_loss,
        history,
    })
}

/// Test-split scores. `loss` is MSE for regression and cross-entropy for
/// classification; `auc` is only set for binary tasks with both classes.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ProbeScores {
    pub loss: f64,
    pub auc: Option<f64>,
}

pub fn evaluate_probe(model: &ProbeModel, test: &ProbeData) -> Result<ProbeScores, ProbeError> {
    check_split("test", test, model)?;
    let out = model.forward(test.x.view());
    let loss = super::loss_and_delta(&out, &test.y).0;
    let auc = match (&test.y, model.task) {
        (Targets::Binary(labels), TaskKind::BinaryClassification) => {
            let scores: Vec<f64> = out.column(0).to_vec();
            let auc = metrics::roc_auc(&scores, labels).expect("lengths checked");
            if auc.is_none() {
                log::info!("test split has a single class; AUC undefined");
            }
            auc
        }
        _ => None,
    };
    Ok(ProbeScores { loss, auc })
}
