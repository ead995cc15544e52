//! Linear SVM baseline: L2-regularized hinge loss minimized by seeded
//! stochastic subgradient descent over standardized features.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classifiers::{Scaler, TrainConfig};
use crate::error::{Error, Result};
use crate::numeric::derive_seed;

/// Which feature family a linear model binds to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    /// Clickstream length as the only feature.
    Length,
    /// A count per token type.
    Counts,
}

impl FeatureKind {
    pub fn parse(s: &str) -> Option<FeatureKind> {
        match s.trim().to_ascii_lowercase().as_str() {
            "length" => Some(FeatureKind::Length),
            "counts" => Some(FeatureKind::Counts),
            _ => None,
        }
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureKind::Length => "length",
            FeatureKind::Counts => "counts",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub feature_kind: FeatureKind,
    /// Standardization fitted on the training split; applied at predict time.
    pub scaler: Scaler,
}

impl LinearModel {
    /// Signed margin of a raw (unscaled) feature vector.
    pub fn margin(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.weights.len() {
            return Err(Error::invalid_input(format!(
                "feature dim {} != model dim {}",
                x.len(),
                self.weights.len()
            )));
        }
        let z = self.scaler.transform(x);
        Ok(self.weights.iter().zip(&z).map(|(w, x)| w * x).sum::<f64>() + self.bias)
    }
}

/// The regularized empirical risk: `lambda/2 (||w||^2 + b^2) + mean hinge`.
/// The bias is part of the regularized vector (it enters training as a
/// constant augmented feature). Inputs are already standardized; labels 0/1.
pub fn svm_objective(
    weights: &[f64],
    bias: f64,
    lambda: f64,
    xs: &[Vec<f64>],
    labels: &[u8],
) -> f64 {
    let reg = 0.5 * lambda * (weights.iter().map(|w| w * w).sum::<f64>() + bias * bias);
    let hinge: f64 = xs
        .iter()
        .zip(labels)
        .map(|(x, &l)| {
            let y = if l == 1 { 1.0 } else { -1.0 };
            let margin = weights.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() + bias;
            (1.0 - y * margin).max(0.0)
        })
        .sum();
    reg + hinge / xs.len() as f64
}

/// Train by Pegasos-style subgradient steps (step size `1/(lambda*t)`),
/// averaging iterates after the first epoch. The bias rides along as a
/// constant feature, so it is regularized with the weights; on data with
/// no usable signal the minimizer then predicts the majority class.
pub fn linear_svm_train(
    features: &[Vec<f64>],
    labels: &[u8],
    feature_kind: FeatureKind,
    cfg: &TrainConfig,
) -> Result<LinearModel> {
    cfg.validate()?;
    let n = features.len();
    if n < 2 || labels.len() != n {
        return Err(Error::invalid_input("need >= 2 labeled feature rows"));
    }
    if !(labels.contains(&0) && labels.contains(&1)) {
        return Err(Error::training("training data has a single class"));
    }
    let scaler = Scaler::fit(features)?;
    // Augment with the constant bias feature.
    let xs: Vec<Vec<f64>> = features
        .iter()
        .map(|x| {
            let mut z = scaler.transform(x);
            z.push(1.0);
            z
        })
        .collect();
    let dim = scaler.dim() + 1;
    let lambda = cfg.svm_lambda.max(1e-12);

    let mut w = vec![0.0f64; dim];
    let mut w_avg = vec![0.0f64; dim];
    let mut averaged = 0u64;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 0x5f3));
    let mut order: Vec<usize> = (0..n).collect();

    let mut t = 0u64;
    let epochs = cfg.svm_epochs.max(1);
    for epoch in 0..epochs {
        for i in (1..order.len()).rev() {
            let j = rng.gen_range(0..=i);
            order.swap(i, j);
        }
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let y = if labels[i] == 1 { 1.0 } else { -1.0 };
            let margin: f64 = w.iter().zip(&xs[i]).map(|(w, x)| w * x).sum();
            let shrink = 1.0 - eta * lambda;
            for wj in &mut w {
                *wj *= shrink;
            }
            if y * margin < 1.0 {
                for (wj, &xj) in w.iter_mut().zip(&xs[i]) {
                    *wj += eta * y * xj;
                }
            }
            if epoch > 0 || epochs == 1 {
                averaged += 1;
                for (a, &wj) in w_avg.iter_mut().zip(&w) {
                    *a += (wj - *a) / averaged as f64;
                }
            }
        }
    }
    let mut weights = if averaged > 0 { w_avg } else { w };
    let bias = weights.pop().expect("augmented bias slot");
    Ok(LinearModel {
        weights,
        bias,
        feature_kind,
        scaler,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> TrainConfig {
        TrainConfig {
            svm_epochs: 60,
            seed: 5,
            ..TrainConfig::default()
        }
    }

    fn accuracy(model: &LinearModel, xs: &[Vec<f64>], labels: &[u8]) -> f64 {
        let correct = xs
            .iter()
            .zip(labels)
            .filter(|(x, &l)| u8::from(model.margin(x).unwrap() >= 0.0) == l)
            .count();
        correct as f64 / xs.len() as f64
    }

    #[test]
    fn separable_lengths_reach_full_accuracy() {
        let xs: Vec<Vec<f64>> = (0..20)
            .map(|i| vec![if i % 2 == 0 { 10.0 } else { 1000.0 }])
            .collect();
        let labels: Vec<u8> = (0..20).map(|i| (i % 2) as u8).collect();
        let model = linear_svm_train(&xs, &labels, FeatureKind::Length, &cfg()).unwrap();
        assert_eq!(accuracy(&model, &xs, &labels), 1.0);
    }

    #[test]
    fn indicator_token_separates_counts() {
        // Class 1 always contains token q (index 2); class 0 never does.
        let mut xs = Vec::new();
        let mut labels = Vec::new();
        for i in 0..30 {
            let has_q = i % 2 == 1;
            xs.push(vec![
                (i % 5) as f64,
                ((i * 3) % 7) as f64,
                if has_q { 1.0 + (i % 3) as f64 } else { 0.0 },
            ]);
            labels.push(u8::from(has_q));
        }
        let model = linear_svm_train(&xs, &labels, FeatureKind::Counts, &cfg()).unwrap();
        assert_eq!(accuracy(&model, &xs, &labels), 1.0);
    }

    #[test]
    fn rejects_single_class() {
        let xs = vec![vec![1.0], vec![2.0]];
        assert!(linear_svm_train(&xs, &[1, 1], FeatureKind::Length, &cfg()).is_err());
    }

    #[test]
    fn margin_rejects_dim_mismatch() {
        let model = LinearModel {
            weights: vec![1.0, 2.0],
            bias: 0.0,
            feature_kind: FeatureKind::Counts,
            scaler: Scaler {
                mean: vec![0.0, 0.0],
                std: vec![1.0, 1.0],
            },
        };
        assert!(model.margin(&[1.0]).is_err());
    }

    #[test]
    fn training_is_seeded_and_reproducible() {
        let xs: Vec<Vec<f64>> = (0..12)
            .map(|i| vec![i as f64, (i * i % 5) as f64])
            .collect();
        let labels: Vec<u8> = (0..12).map(|i| u8::from(i >= 6)).collect();
        let a = linear_svm_train(&xs, &labels, FeatureKind::Counts, &cfg()).unwrap();
        let b = linear_svm_train(&xs, &labels, FeatureKind::Counts, &cfg()).unwrap();
        assert_eq!(a, b);
    }
}
