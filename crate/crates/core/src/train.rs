//! Deterministic mini-batch training, evaluation and parameter initialization.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::arch::{LayerSpec, ModelSkeleton};
use crate::data::Dataset;
use crate::linalg::Matrix;
use crate::nn::{softmax_cross_entropy, Block, DenseLayer, Layer, Model, TvscmLayer};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum OptimizerConfig {
    Sgd { lr: f64, momentum: f64 },
    Adam { lr: f64, beta1: f64, beta2: f64, eps: f64 },
}

impl OptimizerConfig {
    pub fn adam(lr: f64) -> Self {
        OptimizerConfig::Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn sgd(lr: f64, momentum: f64) -> Self {
        OptimizerConfig::Sgd { lr, momentum }
    }

    pub fn lr(&self) -> f64 {
        match *self {
            OptimizerConfig::Sgd { lr, .. } | OptimizerConfig::Adam { lr, .. } => lr,
        }
    }

    fn validate(&self) -> Result<()> {
        let lr = self.lr();
        // A zero rate is allowed: it freezes the model, which is useful for checks.
        if !(lr.is_finite() && lr >= 0.0) {
            return Err(Error::Config(format!("learning rate must be ≥ 0, got {lr}")));
        }
        match *self {
            OptimizerConfig::Sgd { momentum, .. } if !(0.0..1.0).contains(&momentum) => Err(
                Error::Config(format!("momentum must lie in [0, 1), got {momentum}")),
            ),
            OptimizerConfig::Adam {
                beta1, beta2, eps, ..
            } if !((0.0..1.0).contains(&beta1) && (0.0..1.0).contains(&beta2) && eps > 0.0) => {
                Err(Error::Config("Adam needs β₁, β₂ in [0, 1) and ε > 0".into()))
            }
            _ => Ok(()),
        }
    }
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig::adam(1e-3)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: OptimizerConfig,
    pub seed: u64,
    pub shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 20,
            batch_size: 32,
            optimizer: OptimizerConfig::default(),
            seed: 0,
            shuffle: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    /// Mean mini-batch loss over the epoch.
    pub loss: f64,
    /// Fraction of training samples classified correctly during the epoch.
    pub train_acc: f64,
    pub test_acc: Option<f64>,
    /// Wall-clock seconds of the training pass; `None` without a clock.
    pub seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub config: TrainConfig,
    pub records: Vec<EpochRecord>,
}

/// Time source for epoch timing. Returns seconds since an arbitrary origin,
/// or `None` when timing is disabled.
pub trait Clock {
    fn now(&self) -> Option<f64>;
}

/// Disables timing; reports carry `seconds: None`.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn now(&self) -> Option<f64> {
        None
    }
}

#[cfg(feature = "std")]
#[derive(Debug, Clone, Copy)]
pub struct WallClock(std::time::Instant);

#[cfg(feature = "std")]
impl Default for WallClock {
    fn default() -> Self {
        WallClock(std::time::Instant::now())
    }
}

#[cfg(feature = "std")]
impl Clock for WallClock {
    fn now(&self) -> Option<f64> {
        Some(self.0.elapsed().as_secs_f64())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub accuracy: f64,
    pub loss: f64,
}

/// Optimizer state, one buffer pair per parameter slot.
struct Optimizer {
    config: OptimizerConfig,
    step: i32,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl Optimizer {
    fn new(config: OptimizerConfig) -> Self {
        Optimizer {
            config,
            step: 0,
            first: Vec::new(),
            second: Vec::new(),
        }
    }

    fn buffers(store: &mut Vec<Vec<f64>>, slot: usize, len: usize) -> &mut Vec<f64> {
        if store.len() <= slot {
            store.resize_with(slot + 1, Vec::new);
        }
        let buf = &mut store[slot];
        if buf.len() != len {
            *buf = vec![0.0; len];
        }
        buf
    }

    fn apply(&mut self, model: &mut Model, grads: &crate::nn::GradientBundle) -> Result<()> {
        self.step += 1;
        let config = self.config;
        let step = self.step;
        let (first, second) = (&mut self.first, &mut self.second);
        model.update_parameters(grads, |slot, params, g| match config {
            OptimizerConfig::Sgd { lr, momentum } => {
                let velocity = Self::buffers(first, slot, params.len());
                for ((p, v), &gi) in params.iter_mut().zip(velocity.iter_mut()).zip(g) {
                    *v = momentum * *v + gi;
                    *p -= lr * *v;
                }
            }
            OptimizerConfig::Adam {
                lr,
                beta1,
                beta2,
                eps,
            } => {
                let c1 = 1.0 - libm::pow(beta1, f64::from(step));
                let c2 = 1.0 - libm::pow(beta2, f64::from(step));
                let m = Self::buffers(first, slot, params.len());
                for (mi, &gi) in m.iter_mut().zip(g) {
                    *mi = beta1 * *mi + (1.0 - beta1) * gi;
                }
                let v = Self::buffers(second, slot, params.len());
                let m = &first[slot];
                for ((p, (mi, vi)), &gi) in params.iter_mut().zip(m.iter().zip(v.iter_mut())).zip(g) {
                    *vi = beta2 * *vi + (1.0 - beta2) * gi * gi;
                    let m_hat = mi / c1;
                    let v_hat = *vi / c2;
                    *p -= lr * m_hat / (libm::sqrt(v_hat) + eps);
                }
            }
        })
    }
}

fn check_shapes(model: &Model, data: &Dataset) -> Result<()> {
    if data.dim() != model.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.input_dim(),
            actual: data.dim(),
        });
    }
    if data.classes() != model.classes() {
        return Err(Error::Model(format!(
            "model predicts {} classes but dataset has {}",
            model.classes(),
            data.classes()
        )));
    }
    Ok(())
}

fn correct_predictions(logits: &Matrix, labels: &[usize]) -> usize {
    logits
        .iter_rows()
        .zip(labels)
        .filter(|(row, &label)| crate::nn::model_argmax(row) == label)
        .count()
}

/// Trains `model` on `data`, scoring `test` (if given) after every epoch.
pub fn train(
    mut model: Model,
    data: &Dataset,
    test: Option<&Dataset>,
    config: &TrainConfig,
    clock: &dyn Clock,
) -> Result<(Model, TrainReport)> {
    check_shapes(&model, data)?;
    if let Some(t) = test {
        check_shapes(&model, t)?;
    }
    config.optimizer.validate()?;
    if config.epochs == 0 {
        return Err(Error::Config("epochs must be at least 1".into()));
    }
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if config.batch_size == 0 || config.batch_size > data.len() {
        return Err(Error::Config(format!(
            "batch size {} must lie in 1..={}",
            config.batch_size,
            data.len()
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let mut optimizer = Optimizer::new(config.optimizer);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut records = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        let start = clock.now();
        if config.shuffle {
            order.shuffle(&mut rng);
        }
        let mut loss_sum = 0.0;
        let mut batches = 0usize;
        let mut correct = 0usize;
        for (b, chunk) in order.chunks(config.batch_size).enumerate() {
            let (x, labels) = data.gather(chunk);
            let trace = model.forward_train(&x)?;
            let (loss, dlogits) = softmax_cross_entropy(trace.logits(), &labels)?;
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch, batch: b + 1 });
            }
            correct += correct_predictions(trace.logits(), &labels);
            loss_sum += loss;
            batches += 1;
            let grads = model.backward(&trace, &dlogits)?;
            optimizer.apply(&mut model, &grads).map_err(|e| match e {
                Error::NonFinite { .. } => Error::Divergence { epoch, batch: b + 1 },
                other => other,
            })?;
        }
        let seconds = match (start, clock.now()) {
            (Some(s), Some(e)) => Some((e - s).max(0.0)),
            _ => None,
        };
        let test_acc = match test {
            Some(t) => Some(evaluate(&model, t)?.accuracy),
            None => None,
        };
        records.push(EpochRecord {
            epoch,
            loss: loss_sum / batches as f64,
            train_acc: correct as f64 / data.len() as f64,
            test_acc,
            seconds,
        });
    }
    Ok((
        model,
        TrainReport {
            config: *config,
            records,
        },
    ))
}

/// Accuracy and mean cross-entropy over `data`.
pub fn evaluate(model: &Model, data: &Dataset) -> Result<Evaluation> {
    check_shapes(model, data)?;
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    const CHUNK: usize = 512;
    let mut correct = 0;
    let mut loss_sum = 0.0;
    let indices: Vec<usize> = (0..data.len()).collect();
    for chunk in indices.chunks(CHUNK) {
        let (x, labels) = data.gather(chunk);
        let logits = model.forward(&x)?;
        let (loss, _) = softmax_cross_entropy(&logits, &labels)?;
        loss_sum += loss * chunk.len() as f64;
        correct += correct_predictions(&logits, &labels);
    }
    Ok(Evaluation {
        accuracy: correct as f64 / data.len() as f64,
        loss: loss_sum / data.len() as f64,
    })
}

/// Draws initial parameters for `skeleton` from a stream fixed by `seed`.
///
/// Dense weights ~ U(−1/√fan_in, 1/√fan_in); TVSCM `a`, `b` ~ U(−1/√n, 1/√n);
/// all biases start at zero.
pub fn init_parameters(skeleton: &ModelSkeleton, seed: u64) -> Result<Model> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut blocks = Vec::with_capacity(skeleton.layers.len());
    for spec in &skeleton.layers {
        let layer = match *spec {
            LayerSpec::Tvscm { n, use_bias, .. } => {
                let bound = 1.0 / libm::sqrt(n as f64);
                let a = uniform(&mut rng, bound);
                let b = uniform(&mut rng, bound);
                Layer::Tvscm(TvscmLayer::new(a, b, n, use_bias)?)
            }
            LayerSpec::Dense {
                inputs, outputs, ..
            } => {
                let bound = 1.0 / libm::sqrt(inputs as f64);
                let w = (0..inputs * outputs).map(|_| uniform(&mut rng, bound)).collect();
                let w = Matrix::from_vec(outputs, inputs, w)?;
                Layer::Dense(DenseLayer::new(w, vec![0.0; outputs])?)
            }
        };
        blocks.push(Block {
            layer,
            activation: spec.activation(),
        });
    }
    Model::new(blocks, skeleton.classes)
}

fn uniform(rng: &mut ChaCha8Rng, bound: f64) -> f64 {
    if bound == 0.0 {
        0.0
    } else {
        rng.random_range(-bound..bound)
    }
}
