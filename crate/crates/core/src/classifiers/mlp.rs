//! One-hidden-layer perceptron baseline: rectifier hidden layer, sigmoid
//! output, BCE loss, Adam.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::classifiers::optim::{finite_diff_max_rel_err, Adam};
use crate::classifiers::{EpochStats, Scaler, TrainConfig, TrainTrace};
use crate::error::{Error, Result};
use crate::numeric::{bce_from_logit, derive_seed, sigmoid};

#[derive(Clone, Debug, PartialEq)]
pub struct MlpParams {
    pub input_dim: usize,
    pub hidden_dim: usize,
    /// Flat layout: W1 (H x D), b1 (H), w2 (H), b2 (1).
    pub weights: Vec<f64>,
}

impl MlpParams {
    pub fn n_params(input_dim: usize, hidden_dim: usize) -> usize {
        hidden_dim * input_dim + hidden_dim + hidden_dim + 1
    }

    pub fn init(input_dim: usize, hidden_dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = vec![0.0; Self::n_params(input_dim, hidden_dim)];
        let w1_scale = (6.0 / (input_dim + hidden_dim) as f64).sqrt();
        for w in weights.iter_mut().take(hidden_dim * input_dim) {
            *w = rng.gen_range(-w1_scale..w1_scale);
        }
        let w2_off = hidden_dim * input_dim + hidden_dim;
        let w2_scale = (6.0 / (hidden_dim + 1) as f64).sqrt();
        for j in 0..hidden_dim {
            weights[w2_off + j] = rng.gen_range(-w2_scale..w2_scale);
        }
        MlpParams {
            input_dim,
            hidden_dim,
            weights,
        }
    }

    fn b1_off(&self) -> usize {
        self.hidden_dim * self.input_dim
    }

    fn w2_off(&self) -> usize {
        self.b1_off() + self.hidden_dim
    }

    fn b2_off(&self) -> usize {
        self.w2_off() + self.hidden_dim
    }

    /// Logit and hidden activations for a standardized input.
    fn forward(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let (d, h) = (self.input_dim, self.hidden_dim);
        let w = &self.weights;
        let mut act = vec![0.0; h];
        for k in 0..h {
            let mut pre = w[self.b1_off() + k];
            let row = &w[k * d..(k + 1) * d];
            for (a, b) in row.iter().zip(x) {
                pre += a * b;
            }
            act[k] = pre.max(0.0);
        }
        let mut logit = w[self.b2_off()];
        for k in 0..h {
            logit += w[self.w2_off() + k] * act[k];
        }
        (logit, act)
    }
}

/// A trained MLP with its feature standardization.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpModel {
    pub params: MlpParams,
    pub scaler: Scaler,
}

impl MlpModel {
    /// Class-1 probability of a raw (unscaled) feature vector.
    pub fn predict_prob(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.params.input_dim {
            return Err(Error::invalid_input(format!(
                "feature dim {} != model dim {}",
                x.len(),
                self.params.input_dim
            )));
        }
        let z = self.scaler.transform(x);
        Ok(sigmoid(self.params.forward(&z).0))
    }
}

pub fn mlp_predict(model: &MlpModel, x: &[f64]) -> Result<u8> {
    Ok(u8::from(model.predict_prob(x)? >= 0.5))
}

/// Mean-BCE gradient over standardized rows, accumulated into `grad`.
fn batch_loss_grad(params: &MlpParams, xs: &[&[f64]], labels: &[f64]) -> (f64, Vec<f64>) {
    let (d, h) = (params.input_dim, params.hidden_dim);
    let mut grad = vec![0.0; params.weights.len()];
    let mut loss = 0.0;
    for (x, &y) in xs.iter().zip(labels) {
        let (logit, act) = params.forward(x);
        loss += bce_from_logit(logit, y);
        let dz = sigmoid(logit) - y;
        grad[params.b2_off()] += dz;
        for k in 0..h {
            grad[params.w2_off() + k] += dz * act[k];
            if act[k] > 0.0 {
                let dpre = dz * params.weights[params.w2_off() + k];
                grad[params.b1_off() + k] += dpre;
                let row = &mut grad[k * d..(k + 1) * d];
                for (g, &xv) in row.iter_mut().zip(*x) {
                    *g += dpre * xv;
                }
            }
        }
    }
    let n = xs.len() as f64;
    for g in &mut grad {
        *g /= n;
    }
    (loss / n, grad)
}

/// Train on raw features; standardization is fitted on this data and
/// stored in the returned model.
pub fn mlp_train(
    features: &[Vec<f64>],
    labels: &[u8],
    cfg: &TrainConfig,
) -> Result<(MlpModel, TrainTrace)> {
    cfg.validate()?;
    let n = features.len();
    if n < 2 || labels.len() != n {
        return Err(Error::invalid_input("need >= 2 labeled feature rows"));
    }
    if !(labels.contains(&0) && labels.contains(&1)) {
        return Err(Error::training("training data has a single class"));
    }
    let scaler = Scaler::fit(features)?;
    let xs: Vec<Vec<f64>> = features.iter().map(|x| scaler.transform(x)).collect();
    let ys: Vec<f64> = labels.iter().map(|&l| l as f64).collect();

    let mut params = MlpParams::init(scaler.dim(), cfg.mlp_hidden.max(1), cfg.seed);
    let mut adam = Adam::new(
        cfg.learning_rate,
        cfg.beta1,
        cfg.beta2,
        cfg.adam_eps,
        params.weights.len(),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 0xa11));
    let mut order: Vec<usize> = (0..n).collect();
    let mut trace = TrainTrace::default();

    for epoch in 0..cfg.epochs {
        for i in (1..order.len()).rev() {
            let j = rng.gen_range(0..=i);
            order.swap(i, j);
        }
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(cfg.batch_size.max(1)) {
            let bx: Vec<&[f64]> = chunk.iter().map(|&i| xs[i].as_slice()).collect();
            let by: Vec<f64> = chunk.iter().map(|&i| ys[i]).collect();
            let (loss, grad) = batch_loss_grad(&params, &bx, &by);
            if !loss.is_finite() {
                return Err(Error::training(format!("loss diverged (epoch {epoch})")));
            }
            epoch_loss += loss * chunk.len() as f64;
            adam.step(&mut params.weights, &grad);
        }
        let correct = xs
            .iter()
            .zip(labels)
            .filter(|(x, &l)| u8::from(sigmoid(params.forward(x).0) >= 0.5) == l)
            .count();
        trace.epochs.push(EpochStats {
            epoch,
            mean_loss: epoch_loss / n as f64,
            train_acc: correct as f64 / n as f64,
            val_acc: None,
        });
    }
    Ok((MlpModel { params, scaler }, trace))
}

/// Finite-difference agreement for the MLP gradient (standardized inputs).
pub fn mlp_gradient_check(params: &MlpParams, xs: &[Vec<f64>], labels: &[u8], h: f64) -> f64 {
    let refs: Vec<&[f64]> = xs.iter().map(Vec::as_slice).collect();
    let ys: Vec<f64> = labels.iter().map(|&l| l as f64).collect();
    let (_, analytic) = batch_loss_grad(params, &refs, &ys);
    let shape = (params.input_dim, params.hidden_dim);
    let loss_of = |weights: &[f64]| -> f64 {
        let candidate = MlpParams {
            input_dim: shape.0,
            hidden_dim: shape.1,
            weights: weights.to_vec(),
        };
        let total: f64 = refs
            .iter()
            .zip(&ys)
            .map(|(x, &y)| bce_from_logit(candidate.forward(x).0, y))
            .sum();
        total / refs.len() as f64
    };
    finite_diff_max_rel_err(loss_of, &params.weights, &analytic, h)
}
