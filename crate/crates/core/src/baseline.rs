//! Classical CBOW baseline with a single tied embedding matrix.
//!
//! The context embeddings are averaged and scored by dot product against
//! every row of the same matrix, so the model holds exactly `|V| · d`
//! trainable values.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::TrainPair;
use crate::error::{Error, Result};
use crate::optim::Adam;
use crate::train::{TrainRecord, TrainSettings};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CbowModel {
    vocab_size: usize,
    dim: usize,
    /// Row-major `|V| × d`.
    embedding: Vec<f64>,
}

impl CbowModel {
    /// Entries drawn uniformly from `[-0.5, 0.5)`.
    pub fn random<R: Rng + ?Sized>(vocab_size: usize, dim: usize, rng: &mut R) -> Self {
        Self {
            vocab_size,
            dim,
            embedding: (0..vocab_size * dim).map(|_| rng.gen_range(-0.5..0.5)).collect(),
        }
    }

    pub fn from_embedding(vocab_size: usize, dim: usize, embedding: Vec<f64>) -> Result<Self> {
        if embedding.len() != vocab_size * dim {
            return Err(Error::Shape(format!(
                "{} values for a {vocab_size}x{dim} embedding",
                embedding.len()
            )));
        }
        Ok(Self {
            vocab_size,
            dim,
            embedding,
        })
    }

    pub fn num_params(&self) -> usize {
        self.embedding.len()
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, word: usize) -> &[f64] {
        &self.embedding[word * self.dim..(word + 1) * self.dim]
    }

    fn check_context(&self, context: &[usize]) -> Result<()> {
        if context.is_empty() {
            return Err(Error::InvalidInput("CBOW needs a non-empty context".into()));
        }
        if let Some(&bad) = context.iter().find(|&&c| c >= self.vocab_size) {
            return Err(Error::InvalidInput(format!(
                "context word {bad} outside vocabulary of {}",
                self.vocab_size
            )));
        }
        Ok(())
    }

    fn hidden(&self, context: &[usize]) -> Vec<f64> {
        let mut h = vec![0.0; self.dim];
        for &c in context {
            for (acc, x) in h.iter_mut().zip(self.row(c)) {
                *acc += x;
            }
        }
        let n = context.len() as f64;
        h.iter_mut().for_each(|x| *x /= n);
        h
    }

    fn softmax_scores(&self, h: &[f64]) -> Vec<f64> {
        let scores: Vec<f64> = (0..self.vocab_size)
            .map(|v| self.row(v).iter().zip(h).map(|(a, b)| a * b).sum())
            .collect();
        let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
        let z: f64 = exps.iter().sum();
        exps.into_iter().map(|e| e / z).collect()
    }

    /// Softmax distribution over the vocabulary for the center word.
    pub fn forward(&self, context: &[usize]) -> Result<Vec<f64>> {
        self.check_context(context)?;
        Ok(self.softmax_scores(&self.hidden(context)))
    }

    pub fn predict(&self, context: &[usize]) -> Result<usize> {
        let probs = self.forward(context)?;
        Ok(argmax(&probs))
    }

    /// Cross-entropy for one pair and its gradient over the flat embedding.
    pub fn loss_and_gradient(&self, pair: &TrainPair) -> Result<(f64, Vec<f64>)> {
        self.check_context(&pair.context)?;
        if pair.center >= self.vocab_size {
            return Err(Error::InvalidInput(format!(
                "center word {} outside vocabulary",
                pair.center
            )));
        }
        let h = self.hidden(&pair.context);
        let probs = self.softmax_scores(&h);
        let loss = -probs[pair.center].max(1e-300).ln();

        let d = self.dim;
        let mut grad = vec![0.0; self.embedding.len()];
        let mut dh = vec![0.0; d];
        for (v, &p) in probs.iter().enumerate() {
            let err = p - f64::from(u8::from(v == pair.center));
            let row = self.row(v);
            for k in 0..d {
                grad[v * d + k] += err * h[k];
                dh[k] += err * row[k];
            }
        }
        let n = pair.context.len() as f64;
        for &c in &pair.context {
            for k in 0..d {
                grad[c * d + k] += dh[k] / n;
            }
        }
        Ok((loss, grad))
    }
}

fn argmax(xs: &[f64]) -> usize {
    xs.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &x)| if x > best.1 { (i, x) } else { best })
        .0
}

/// Top-1 accuracy of center-word prediction.
pub fn cbow_accuracy(model: &CbowModel, pairs: &[TrainPair]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::InvalidInput("accuracy needs at least one pair".into()));
    }
    let mut hits = 0usize;
    for p in pairs {
        if model.predict(&p.context)? == p.center {
            hits += 1;
        }
    }
    Ok(hits as f64 / pairs.len() as f64)
}

/// Per-sample Adam on the categorical cross-entropy of the center word.
/// Held-out accuracy uses `test` (or `train` when `test` is empty).
pub fn cbow_train(
    train: &[TrainPair],
    test: &[TrainPair],
    vocab_size: usize,
    dim: usize,
    settings: &TrainSettings,
) -> Result<(CbowModel, Vec<TrainRecord>)> {
    settings.validate()?;
    if dim == 0 {
        return Err(Error::Config("CBOW dimension must be at least 1".into()));
    }
    if train.is_empty() {
        return Err(Error::InvalidInput("cannot train on zero pairs".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    rng.set_stream(3);
    let mut model = CbowModel::random(vocab_size, dim, &mut rng);
    let mut adam = Adam::new(model.num_params(), settings.learning_rate, settings.adam);
    let eval = if test.is_empty() { train } else { test };
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut records = Vec::with_capacity(settings.epochs);
    for epoch in 1..=settings.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for &i in &order {
            let (l, g) = model.loss_and_gradient(&train[i])?;
            total += l;
            adam.step(&mut model.embedding, &g);
        }
        records.push(TrainRecord {
            epoch,
            mean_loss: total / train.len() as f64,
            accuracy: cbow_accuracy(&model, eval)?,
            train_accuracy: cbow_accuracy(&model, train)?,
        });
    }
    Ok((model, records))
}
