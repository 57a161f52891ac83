//! Loss, gradients, the optimisation loop and the Hamming accuracy rule.
//!
//! The loss is the per-qubit binary cross-entropy between `P(|1⟩_q)` and
//! the big-endian bits of the center-word index, summed over qubits.

use std::f64::consts::FRAC_PI_2;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::context::ContextWindow;
use crate::corpus::{target_bits, TargetBits, TrainPair};
use crate::error::{Error, Result};
use crate::model::{build_ansatz_ops, encode_context, forward_from_encoded, AnsatzParams, ModelConfig, Prediction};
use crate::optim::{Adam, AdamConfig};
use crate::qsim::{GateOp, StateVector};

/// Probabilities are clamped to `[ε, 1 - ε]` before taking logs.
pub const PROB_CLAMP: f64 = 1e-9;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GradMode {
    FiniteDifference,
    #[default]
    ParameterShift,
}

impl std::str::FromStr for GradMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "finite-difference" | "fd" => Ok(GradMode::FiniteDifference),
            "parameter-shift" | "ps" => Ok(GradMode::ParameterShift),
            other => Err(Error::Config(format!(
                "unknown gradient mode '{other}' (expected parameter-shift or finite-difference)"
            ))),
        }
    }
}

/// When the optimiser steps.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UpdateMode {
    /// One step per pair, pairs shuffled every epoch.
    PerSample,
    /// One step per epoch on the mean gradient.
    #[default]
    FullBatch,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainSettings {
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub grad_mode: GradMode,
    pub fd_epsilon: f64,
    pub accuracy_hamming_max: usize,
    /// Fraction of pairs used for training; the rest is held out.
    pub train_test_split: f64,
    pub update: UpdateMode,
    pub adam: AdamConfig,
}

impl Default for TrainSettings {
    fn default() -> Self {
        Self {
            epochs: 50,
            learning_rate: 0.05,
            seed: 42,
            grad_mode: GradMode::ParameterShift,
            fd_epsilon: 1e-5,
            accuracy_hamming_max: 1,
            train_test_split: 0.8,
            update: UpdateMode::FullBatch,
            adam: AdamConfig::default(),
        }
    }
}

impl TrainSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(Error::Config(format!(
                "learning rate must be non-negative, got {}",
                self.learning_rate
            )));
        }
        if !(self.fd_epsilon > 0.0 && self.fd_epsilon < 0.1) {
            return Err(Error::Config(format!(
                "finite-difference step must be in (0, 0.1), got {}",
                self.fd_epsilon
            )));
        }
        if !(self.train_test_split > 0.0 && self.train_test_split <= 1.0) {
            return Err(Error::Config(format!(
                "train fraction must be in (0, 1], got {}",
                self.train_test_split
            )));
        }
        Ok(())
    }
}

/// Metrics for one epoch.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainRecord {
    pub epoch: usize,
    pub mean_loss: f64,
    /// Accuracy on the held-out pairs (the training pairs when none are held out).
    pub accuracy: f64,
    pub train_accuracy: f64,
}

fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
}

/// `Σ_q -[b_q ln p_q + (1 - b_q) ln(1 - p_q)]`
pub fn loss(pred: &Prediction, target: &TargetBits) -> Result<f64> {
    check_lengths(pred, target)?;
    Ok(loss_unchecked(&pred.probs_one, target.bits()))
}

fn loss_unchecked(probs: &[f64], bits: &[u8]) -> f64 {
    probs
        .iter()
        .zip(bits)
        .map(|(&p, &b)| {
            let p = clamp_prob(p);
            if b == 1 {
                -p.ln()
            } else {
                -(1.0 - p).ln()
            }
        })
        .sum()
}

/// `∂loss/∂p_q`; zero where the clamp is active.
fn loss_grad_probs(probs: &[f64], bits: &[u8]) -> Vec<f64> {
    probs
        .iter()
        .zip(bits)
        .map(|(&p, &b)| {
            if !(PROB_CLAMP..=1.0 - PROB_CLAMP).contains(&p) {
                0.0
            } else if b == 1 {
                -1.0 / p
            } else {
                1.0 / (1.0 - p)
            }
        })
        .collect()
}

fn check_lengths(pred: &Prediction, target: &TargetBits) -> Result<()> {
    if pred.probs_one.len() != target.len() {
        return Err(Error::Shape(format!(
            "prediction has {} qubits, target has {} bits",
            pred.probs_one.len(),
            target.len()
        )));
    }
    Ok(())
}

/// A pair with its context already pushed through the encoding block.
#[derive(Clone, Debug)]
pub struct EncodedPair {
    pub encoded: StateVector,
    pub target: TargetBits,
}

impl EncodedPair {
    pub fn new(window: &ContextWindow, target: TargetBits, cfg: &ModelConfig) -> Result<Self> {
        if target.len() != cfg.num_qubits {
            return Err(Error::Shape(format!(
                "target has {} bits, model has {} qubits",
                target.len(),
                cfg.num_qubits
            )));
        }
        Ok(Self {
            encoded: encode_context(window, cfg)?,
            target,
        })
    }

    pub fn from_pair(pair: &TrainPair, vocab_size: usize, cfg: &ModelConfig) -> Result<Self> {
        let window = ContextWindow::new(pair.context.clone(), vocab_size)?;
        Self::new(&window, target_bits(pair.center, cfg.num_qubits)?, cfg)
    }

    pub fn predict(&self, params: &AnsatzParams) -> Result<Prediction> {
        forward_from_encoded(&self.encoded, params)
    }

    pub fn loss(&self, params: &AnsatzParams) -> Result<f64> {
        loss(&self.predict(params)?, &self.target)
    }

    /// Loss and its gradient with respect to the flat ansatz parameters.
    pub fn loss_and_gradient(
        &self,
        params: &AnsatzParams,
        mode: GradMode,
        fd_epsilon: f64,
    ) -> Result<(f64, Vec<f64>)> {
        match mode {
            GradMode::FiniteDifference => {
                Ok((self.loss(params)?, self.finite_difference(params, fd_epsilon)?))
            }
            GradMode::ParameterShift => self.parameter_shift(params),
        }
    }

    fn finite_difference(&self, params: &AnsatzParams, eps: f64) -> Result<Vec<f64>> {
        let (m, layers) = (params.num_qubits(), params.num_layers());
        let flat = params.to_flat();
        (0..flat.len())
            .into_par_iter()
            .map(|k| {
                let mut shifted = flat.clone();
                shifted[k] = flat[k] + eps;
                let plus = self.loss(&AnsatzParams::from_flat(m, layers, &shifted)?)?;
                shifted[k] = flat[k] - eps;
                let minus = self.loss(&AnsatzParams::from_flat(m, layers, &shifted)?)?;
                Ok((plus - minus) / (2.0 * eps))
            })
            .collect()
    }

    /// Two-term shift rule on every RX/RZ angle. A `CRZ(φ)` is rewritten as
    /// `CNOT · RZ_t(-φ/2) · CNOT · RZ_t(φ/2)` and each half is shifted.
    fn parameter_shift(&self, params: &AnsatzParams) -> Result<(f64, Vec<f64>)> {
        let ops = build_ansatz_ops(params);
        let mut prefixes = Vec::with_capacity(ops.len());
        let mut state = self.encoded.clone();
        for op in &ops {
            prefixes.push(state.clone());
            state.apply(op)?;
        }
        let probs = state.qubit_probabilities();
        let value = loss(&Prediction { probs_one: probs.clone() }, &self.target)?;
        let dloss_dp = loss_grad_probs(&probs, self.target.bits());

        let run = |k: usize, replacement: &[GateOp]| -> Result<Vec<f64>> {
            let mut s = prefixes[k].clone();
            s.apply_all(replacement)?;
            s.apply_all(&ops[k + 1..])?;
            Ok(s.expectations_z())
        };
        let shift_diff = |k: usize, make: &dyn Fn(f64) -> Vec<GateOp>| -> Result<Vec<f64>> {
            let plus = run(k, &make(FRAC_PI_2))?;
            let minus = run(k, &make(-FRAC_PI_2))?;
            Ok(plus.iter().zip(&minus).map(|(a, b)| (a - b) / 2.0).collect())
        };

        let grad = (0..ops.len())
            .into_par_iter()
            .map(|k| {
                let dz: Vec<f64> = match ops[k] {
                    GateOp::RX(q, a) => shift_diff(k, &|s| vec![GateOp::RX(q, a + s)])?,
                    GateOp::RZ(q, a) => shift_diff(k, &|s| vec![GateOp::RZ(q, a + s)])?,
                    GateOp::CRZ {
                        control,
                        target,
                        angle,
                    } => {
                        let cnot = GateOp::CNOT { control, target };
                        let first = shift_diff(k, &|s| {
                            vec![
                                GateOp::RZ(target, angle / 2.0 + s),
                                cnot,
                                GateOp::RZ(target, -angle / 2.0),
                                cnot,
                            ]
                        })?;
                        let second = shift_diff(k, &|s| {
                            vec![
                                GateOp::RZ(target, angle / 2.0),
                                cnot,
                                GateOp::RZ(target, -angle / 2.0 + s),
                                cnot,
                            ]
                        })?;
                        first
                            .iter()
                            .zip(&second)
                            .map(|(a, b)| 0.5 * a - 0.5 * b)
                            .collect()
                    }
                    other => {
                        return Err(Error::InvalidGate(format!(
                            "{other} is not a trainable ansatz gate"
                        )))
                    }
                };
                // p_q = (1 - ⟨Z_q⟩)/2
                Ok(dloss_dp
                    .iter()
                    .zip(&dz)
                    .map(|(g, d)| -0.5 * g * d)
                    .sum())
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok((value, grad))
    }
}

/// Gradient of the loss for one window/target with respect to the flat
/// ansatz parameters.
pub fn gradient(
    window: &ContextWindow,
    target: &TargetBits,
    params: &AnsatzParams,
    cfg: &ModelConfig,
    settings: &TrainSettings,
) -> Result<Vec<f64>> {
    let pair = EncodedPair::new(window, target.clone(), cfg)?;
    Ok(pair
        .loss_and_gradient(params, settings.grad_mode, settings.fd_epsilon)?
        .1)
}

/// A pair is correct when the thresholded prediction is within
/// `hamming_max` bit flips of the target.
pub fn is_correct(pred: &Prediction, target: &TargetBits, hamming_max: usize) -> bool {
    target.hamming(&pred.bits()) <= hamming_max
}

pub fn accuracy(pairs: &[EncodedPair], params: &AnsatzParams, hamming_max: usize) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::InvalidInput("accuracy needs at least one pair".into()));
    }
    let hits = pairs
        .par_iter()
        .map(|p| Ok(is_correct(&p.predict(params)?, &p.target, hamming_max)))
        .collect::<Result<Vec<bool>>>()?;
    Ok(hits.iter().filter(|&&h| h).count() as f64 / pairs.len() as f64)
}

pub fn mean_loss(pairs: &[EncodedPair], params: &AnsatzParams) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::InvalidInput("loss needs at least one pair".into()));
    }
    let losses = pairs
        .par_iter()
        .map(|p| p.loss(params))
        .collect::<Result<Vec<f64>>>()?;
    Ok(losses.iter().sum::<f64>() / losses.len() as f64)
}

/// Optimiser state carried across epochs.
#[derive(Clone, Debug)]
pub struct Trainer {
    params: AnsatzParams,
    adam: Adam,
    rng: ChaCha8Rng,
    settings: TrainSettings,
}

impl Trainer {
    pub fn new(params: AnsatzParams, settings: &TrainSettings) -> Result<Self> {
        settings.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
        rng.set_stream(2);
        Ok(Self {
            adam: Adam::new(params.num_params(), settings.learning_rate, settings.adam),
            params,
            rng,
            settings: settings.clone(),
        })
    }

    pub fn params(&self) -> &AnsatzParams {
        &self.params
    }

    pub fn into_params(self) -> AnsatzParams {
        self.params
    }

    /// One pass over `pairs`; returns the mean loss seen during the pass.
    pub fn train_epoch(&mut self, pairs: &[EncodedPair]) -> Result<f64> {
        if pairs.is_empty() {
            return Err(Error::InvalidInput("cannot train on zero pairs".into()));
        }
        let (m, layers) = (self.params.num_qubits(), self.params.num_layers());
        let mode = self.settings.grad_mode;
        let eps = self.settings.fd_epsilon;
        let mut flat = self.params.to_flat();
        let total = match self.settings.update {
            UpdateMode::PerSample => {
                let mut order: Vec<usize> = (0..pairs.len()).collect();
                order.shuffle(&mut self.rng);
                let mut total = 0.0;
                for i in order {
                    let (l, g) = pairs[i].loss_and_gradient(&self.params, mode, eps)?;
                    total += l;
                    self.adam.step(&mut flat, &g);
                    self.params = AnsatzParams::from_flat(m, layers, &flat)?;
                }
                total
            }
            UpdateMode::FullBatch => {
                let results = pairs
                    .par_iter()
                    .map(|p| p.loss_and_gradient(&self.params, mode, eps))
                    .collect::<Result<Vec<_>>>()?;
                let mut grad = vec![0.0; flat.len()];
                let mut total = 0.0;
                for (l, g) in &results {
                    total += l;
                    for (acc, x) in grad.iter_mut().zip(g) {
                        *acc += x;
                    }
                }
                let n = pairs.len() as f64;
                grad.iter_mut().for_each(|x| *x /= n);
                self.adam.step(&mut flat, &grad);
                self.params = AnsatzParams::from_flat(m, layers, &flat)?;
                total
            }
        };
        Ok(total / pairs.len() as f64)
    }
}

/// One epoch from a fresh optimiser; returns the updated parameters and the
/// mean loss.
pub fn train_epoch(
    pairs: &[EncodedPair],
    params: &AnsatzParams,
    settings: &TrainSettings,
) -> Result<(AnsatzParams, f64)> {
    let mut trainer = Trainer::new(params.clone(), settings)?;
    let loss = trainer.train_epoch(pairs)?;
    Ok((trainer.into_params(), loss))
}

/// Trains for `settings.epochs` epochs, evaluating after each one.
pub fn fit(
    train: &[EncodedPair],
    test: &[EncodedPair],
    params: AnsatzParams,
    settings: &TrainSettings,
) -> Result<(Vec<TrainRecord>, AnsatzParams)> {
    let mut trainer = Trainer::new(params, settings)?;
    let eval = if test.is_empty() { train } else { test };
    let mut records = Vec::with_capacity(settings.epochs);
    for epoch in 1..=settings.epochs {
        let mean_loss = trainer.train_epoch(train)?;
        let record = TrainRecord {
            epoch,
            mean_loss,
            accuracy: accuracy(eval, trainer.params(), settings.accuracy_hamming_max)?,
            train_accuracy: accuracy(train, trainer.params(), settings.accuracy_hamming_max)?,
        };
        log::debug!(
            "epoch {epoch}: loss {:.5} acc {:.4}",
            record.mean_loss,
            record.accuracy
        );
        records.push(record);
    }
    Ok((records, trainer.into_params()))
}
