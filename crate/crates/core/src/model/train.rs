//! Minibatch Adam training on mean softmax cross-entropy, plus inference.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Tape, Tensor};
use crate::error::{Error, Result};
use crate::exec;
use crate::skeleton::{Dataset, Label, MotionSequence};

use super::{batch_input, GcnLstmAttModel, ModelConfig};

/// Sequences per gradient tape. Batches are split into fixed-size chunks so
/// tape memory stays bounded; chunk gradients are summed in order, keeping
/// results independent of the chunking.
const CHUNK: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub optimizer: Optimizer,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub weight_decay: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            optimizer: Optimizer::Adam,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            batch_size: 16,
            epochs: 100,
            seed: 0,
            weight_decay: 0.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        // learning_rate 0 is allowed as a documented no-op diagnostic
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning_rate must be finite and >= 0, got {}",
                self.learning_rate
            )));
        }
        if self.epochs < 1 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.batch_size < 1 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::Config(format!("{name} must lie in [0, 1), got {b}")));
            }
        }
        if self.eps.is_nan() || self.eps <= 0.0 {
            return Err(Error::Config(format!("eps must be > 0, got {}", self.eps)));
        }
        if self.weight_decay < 0.0 {
            return Err(Error::Config(format!(
                "weight_decay must be >= 0, got {}",
                self.weight_decay
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean cross-entropy over the epoch's training forwards.
    pub train_loss: f64,
    /// Running accuracy of the minibatch forwards during the epoch.
    pub train_acc: f64,
    /// Accuracy on the held-out split at the end of the epoch.
    pub test_acc: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochStats>,
}

pub(crate) fn argmax_lowest(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

struct AdamState {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    step: usize,
}

impl AdamState {
    fn new(model: &GcnLstmAttModel) -> AdamState {
        let zeros: Vec<Vec<f64>> = model
            .params()
            .iter()
            .map(|p| vec![0.0; p.values.len()])
            .collect();
        AdamState {
            m: zeros.clone(),
            v: zeros,
            step: 0,
        }
    }

    fn apply(&mut self, model: &mut GcnLstmAttModel, grads: &[Vec<f64>], cfg: &TrainConfig) {
        self.step += 1;
        let t = self.step as f64;
        let bc1 = 1.0 - cfg.beta1.powf(t);
        let bc2 = 1.0 - cfg.beta2.powf(t);
        for (pi, param) in model.params_mut().iter_mut().enumerate() {
            for (j, w) in param.values.iter_mut().enumerate() {
                let g = grads[pi][j] + cfg.weight_decay * *w;
                let m = &mut self.m[pi][j];
                let v = &mut self.v[pi][j];
                *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
                *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
                let m_hat = *m / bc1;
                let v_hat = *v / bc2;
                *w -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.eps);
            }
        }
    }
}

fn numeric_context(e: Error, epoch: usize, batch: usize) -> Error {
    match e {
        Error::Numeric(msg) => Error::Numeric(format!(
            "epoch {epoch}, batch {batch}: {msg}"
        )),
        other => other,
    }
}

fn check_ready(seqs: &[&MotionSequence]) -> Result<usize> {
    let first = seqs
        .first()
        .ok_or_else(|| Error::Validation("no sequences to process".into()))?;
    let t_len = first.frames.len();
    for s in seqs {
        if !s.preprocessed {
            return Err(Error::Validation(format!(
                "sequence {} has not been preprocessed",
                s.describe()
            )));
        }
        if s.frames.len() != t_len {
            return Err(Error::Shape(format!(
                "sequence {} has {} frames, expected {t_len}",
                s.describe(),
                s.frames.len()
            )));
        }
    }
    Ok(t_len)
}

/// Train on the dataset's training split. Deterministic for a fixed config:
/// initialization, shuffling, and dropout all derive from `cfg.seed`.
pub fn train(
    ds: &Dataset,
    mcfg: &ModelConfig,
    tcfg: &TrainConfig,
) -> Result<(GcnLstmAttModel, TrainHistory)> {
    mcfg.validate()?;
    tcfg.validate()?;
    let split = ds
        .split
        .as_ref()
        .ok_or_else(|| Error::Validation("training requires a train/test split".into()))?;
    if split.train.is_empty() {
        return Err(Error::Validation("training split is empty".into()));
    }
    let all: Vec<&MotionSequence> = ds.sequences.iter().collect();
    check_ready(&all)?;

    let graph = crate::skeleton::canonical_upper_limb_graph();
    let mut model = GcnLstmAttModel::init(mcfg, &graph, tcfg.seed)?;
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(tcfg.seed ^ 0xD1B5_4A32_D192_ED03);
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(tcfg.seed ^ 0x94D0_49BB_1331_11EB);
    let mut adam = AdamState::new(&model);
    let mut history = TrainHistory::default();
    let mut order = split.train.clone();
    let feat_dim = model.config.feature_dim();

    for epoch in 1..=tcfg.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut nll_sum = 0.0;
        let mut correct = 0usize;
        for (batch_no, batch) in order.chunks(tcfg.batch_size).enumerate() {
            let mut grads: Vec<Vec<f64>> = model
                .params()
                .iter()
                .map(|p| vec![0.0; p.values.len()])
                .collect();
            for chunk in batch.chunks(CHUNK) {
                let seqs: Vec<&MotionSequence> =
                    chunk.iter().map(|&i| &ds.sequences[i]).collect();
                let targets: Vec<usize> =
                    chunk.iter().map(|&i| ds.sequences[i].label.code()).collect();
                let tape = Tape::new();
                let leaves: Vec<Tensor> = model
                    .params()
                    .iter()
                    .map(|p| tape.leaf(&p.shape, p.values.clone()))
                    .collect::<Result<_>>()?;
                let bound = model.bind_tensors(leaves.clone())?;
                let x = batch_input(&seqs)?;
                let mask = if mcfg.dropout > 0.0 {
                    let keep = 1.0 - mcfg.dropout;
                    let data: Vec<f64> = (0..seqs.len() * feat_dim)
                        .map(|_| {
                            if dropout_rng.gen_range(0.0..1.0) < keep {
                                1.0 / keep
                            } else {
                                0.0
                            }
                        })
                        .collect();
                    Some(Tensor::constant(&[seqs.len(), feat_dim], data)?)
                } else {
                    None
                };
                let logits = bound
                    .forward(&x, mask.as_ref())
                    .map_err(|e| numeric_context(e, epoch, batch_no))?;
                for (r, &t) in targets.iter().enumerate() {
                    let row = &logits.data()[r * mcfg.n_classes..(r + 1) * mcfg.n_classes];
                    if argmax_lowest(row) == t {
                        correct += 1;
                    }
                }
                let nll = logits
                    .log_softmax_lastdim()?
                    .nll_sum(&targets)
                    .map_err(|e| numeric_context(e, epoch, batch_no))?;
                nll_sum += nll.item()?;
                let loss = nll.scale(1.0 / batch.len() as f64)?;
                loss.backward()
                    .map_err(|e| numeric_context(e, epoch, batch_no))?;
                for (pi, leaf) in leaves.iter().enumerate() {
                    if let Some(g) = leaf.grad() {
                        for (acc, gi) in grads[pi].iter_mut().zip(g.data()) {
                            *acc += gi;
                        }
                    }
                }
            }
            adam.apply(&mut model, &grads, tcfg);
        }
        let train_loss = nll_sum / order.len() as f64;
        if !train_loss.is_finite() {
            return Err(Error::Numeric(format!(
                "non-finite training loss at epoch {epoch}"
            )));
        }
        let test_acc = if split.test.is_empty() {
            f64::NAN
        } else {
            let seqs: Vec<&MotionSequence> =
                split.test.iter().map(|&i| &ds.sequences[i]).collect();
            let preds = predict_sequences(&model, &seqs)?;
            let hits = preds
                .iter()
                .zip(split.test.iter())
                .filter(|(p, &i)| **p == ds.sequences[i].label)
                .count();
            hits as f64 / seqs.len() as f64
        };
        history.epochs.push(EpochStats {
            epoch,
            train_loss,
            train_acc: correct as f64 / order.len() as f64,
            test_acc,
        });
    }
    Ok((model, history))
}

/// Predicted labels for a set of equal-length preprocessed sequences.
/// Argmax ties resolve to the lowest class code.
pub fn predict_sequences(
    model: &GcnLstmAttModel,
    seqs: &[&MotionSequence],
) -> Result<Vec<Label>> {
    if seqs.is_empty() {
        return Ok(Vec::new());
    }
    check_ready(seqs)?;
    let chunks: Vec<&[&MotionSequence]> = seqs.chunks(2 * CHUNK).collect();
    let results: Vec<Result<Vec<usize>>> = exec::map(&chunks, |chunk| {
        let bound = model.bind(None)?;
        let x = batch_input(chunk)?;
        let logits = bound.forward(&x, None)?;
        Ok(logits
            .data()
            .chunks(model.config.n_classes)
            .map(argmax_lowest)
            .collect())
    });
    let mut labels = Vec::with_capacity(seqs.len());
    for r in results {
        for code in r? {
            labels.push(Label::from_code(code)?);
        }
    }
    Ok(labels)
}

/// Predicted labels for every sequence of the dataset, in order.
pub fn predict(model: &GcnLstmAttModel, ds: &Dataset) -> Result<Vec<Label>> {
    let seqs: Vec<&MotionSequence> = ds.sequences.iter().collect();
    predict_sequences(model, &seqs)
}
