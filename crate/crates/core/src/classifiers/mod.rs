//! Sequence and baseline classifiers: an LSTM trained from scratch, a
//! linear SVM on length or count features, and a one-hidden-layer MLP.

pub mod linear;
pub mod lstm;
pub mod mlp;
pub mod optim;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{count_vector, SequenceSample};

pub use linear::{linear_svm_train, svm_objective, FeatureKind, LinearModel};
pub use lstm::{gradient_check, lstm_forward, lstm_train, LstmParams};
pub use mlp::{mlp_gradient_check, mlp_predict, mlp_train, MlpModel, MlpParams};
pub use optim::Adam;

/// Knobs shared by all trainers. Every field has a working default; the
/// unused ones are ignored by a given trainer (e.g. dropout for the SVM).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Inverted dropout on the pooled LSTM vector; 0 disables.
    pub dropout: f64,
    pub seed: u64,
    /// Longer sequences keep their earliest tokens.
    pub max_seq_len: usize,
    pub deterministic: bool,
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub mlp_hidden: usize,
    /// L2 regularization strength for the SVM.
    pub svm_lambda: f64,
    /// SVM subgradient epochs; decoupled from `epochs` because the SVM
    /// costs microseconds per pass and needs more of them to settle.
    pub svm_epochs: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            epochs: 20,
            batch_size: 32,
            dropout: 0.5,
            seed: 0,
            max_seq_len: 2000,
            deterministic: true,
            embed_dim: 32,
            hidden_dim: 64,
            mlp_hidden: 100,
            svm_lambda: 1e-4,
            svm_epochs: 100,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::invalid_input("learning_rate must be positive"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::invalid_input("dropout must be in [0, 1)"));
        }
        if self.max_seq_len == 0 || self.epochs == 0 || self.hidden_dim == 0 || self.embed_dim == 0
        {
            return Err(Error::invalid_input("zero-sized training dimension"));
        }
        Ok(())
    }
}

/// Borrowed view of a labeled sequence dataset.
#[derive(Clone, Copy)]
pub struct DatasetRef<'a> {
    pub sequences: &'a [Vec<u32>],
    pub labels: &'a [u8],
}

/// Count-vector features as f64 rows, for the vector-input baselines.
pub fn count_features(samples: &[SequenceSample], vocab_size: usize) -> Vec<Vec<f64>> {
    samples
        .iter()
        .map(|s| {
            count_vector(s, vocab_size)
                .into_iter()
                .map(|c| c as f64)
                .collect()
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub mean_loss: f64,
    pub train_acc: f64,
    pub val_acc: Option<f64>,
}

#[derive(Clone, Debug, Default)]
pub struct TrainTrace {
    pub epochs: Vec<EpochStats>,
}

impl TrainTrace {
    /// Write the `epoch,mean_loss,train_acc,val_acc` log.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "epoch,mean_loss,train_acc,val_acc")?;
        for e in &self.epochs {
            let val = e.val_acc.map_or(String::new(), |v| v.to_string());
            writeln!(out, "{},{},{},{}", e.epoch, e.mean_loss, e.train_acc, val)?;
        }
        Ok(())
    }
}

/// Per-feature standardization fitted on the training split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: Vec<f64>,
    /// Standard deviations, floored at 1e-12.
    pub std: Vec<f64>,
}

impl Scaler {
    pub fn fit(rows: &[Vec<f64>]) -> Result<Scaler> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::invalid_input("cannot fit scaler on empty data"));
        }
        let dim = rows[0].len();
        let mut mean = vec![0.0; dim];
        for row in rows {
            if row.len() != dim {
                return Err(Error::invalid_input("ragged feature rows"));
            }
            for (m, &x) in mean.iter_mut().zip(row) {
                *m += x;
            }
        }
        for m in &mut mean {
            *m /= n as f64;
        }
        let mut var = vec![0.0; dim];
        for row in rows {
            for ((v, &x), &m) in var.iter_mut().zip(row).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        let std = var
            .into_iter()
            .map(|v| (v / n as f64).sqrt().max(1e-12))
            .collect();
        Ok(Scaler { mean, std })
    }

    pub fn transform(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((&x, &m), &s)| (x - m) / s)
            .collect()
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Any trained classifier, for uniform prediction and serialization.
#[derive(Clone, Debug)]
pub enum TrainedClassifier {
    Lstm(LstmParams),
    Linear(LinearModel),
    Mlp(MlpModel),
}

/// Input to [`predict_label`]: token ids for the LSTM, a raw (unscaled)
/// feature vector for the baselines.
#[derive(Clone, Copy, Debug)]
pub enum ClassifierInput<'a> {
    Tokens(&'a [u32]),
    Vector(&'a [f64]),
}

/// Raw decision score: class-1 probability for sigmoid models, the signed
/// margin for the SVM.
pub fn predict_score(model: &TrainedClassifier, input: ClassifierInput<'_>) -> Result<f64> {
    match (model, input) {
        (TrainedClassifier::Lstm(params), ClassifierInput::Tokens(tokens)) => {
            lstm_forward(tokens, params, 0.0, None)
        }
        (TrainedClassifier::Linear(model), ClassifierInput::Vector(x)) => model.margin(x),
        (TrainedClassifier::Mlp(model), ClassifierInput::Vector(x)) => model.predict_prob(x),
        _ => Err(Error::invalid_input(
            "input kind does not match the model (tokens vs feature vector)",
        )),
    }
}

/// Hard label: sigmoid outputs threshold at 0.5 (exactly 0.5 maps to 1),
/// margins threshold at 0 (exactly 0 maps to 1).
pub fn predict_label(model: &TrainedClassifier, input: ClassifierInput<'_>) -> Result<u8> {
    let score = predict_score(model, input)?;
    let threshold = match model {
        TrainedClassifier::Linear(_) => 0.0,
        _ => 0.5,
    };
    Ok(u8::from(score >= threshold))
}

/// On-disk JSON form of any trained classifier: shape metadata, flat
/// row-major weights, the feature binding, and the full training config.
#[derive(Debug, Serialize, Deserialize)]
pub struct ClassifierFile {
    /// "lstm" | "svm" | "mlp".
    pub kind: String,
    /// Dimension names to sizes, in layout order.
    pub shape: Vec<(String, usize)>,
    pub weights: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub bias: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub feature_kind: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub scaler: Option<Scaler>,
    /// Token family the model was trained on: raw, category, or state.
    pub feature_set: String,
    /// FNV-1a hash of the vocabulary the model binds to.
    pub vocab_hash: String,
    pub train_config: TrainConfig,
}

/// FNV-1a over the vocabulary tokens, for provenance checks.
pub fn vocab_fingerprint<S: AsRef<str>>(tokens: &[S]) -> String {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for t in tokens {
        for b in t.as_ref().as_bytes() {
            hash ^= *b as u64;
            hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
        }
        hash ^= 0x1e;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{hash:016x}")
}

impl ClassifierFile {
    pub fn from_model(
        model: &TrainedClassifier,
        feature_set: String,
        vocab_hash: String,
        train_config: TrainConfig,
    ) -> Self {
        match model {
            TrainedClassifier::Lstm(p) => ClassifierFile {
                kind: "lstm".into(),
                shape: vec![
                    ("vocab_size".into(), p.vocab_size),
                    ("embed_dim".into(), p.embed_dim),
                    ("hidden_dim".into(), p.hidden_dim),
                ],
                weights: p.weights.clone(),
                bias: None,
                feature_kind: None,
                scaler: None,
                feature_set,
                vocab_hash,
                train_config,
            },
            TrainedClassifier::Linear(m) => ClassifierFile {
                kind: "svm".into(),
                shape: vec![("input_dim".into(), m.weights.len())],
                weights: m.weights.clone(),
                bias: Some(m.bias),
                feature_kind: Some(m.feature_kind.to_string()),
                scaler: Some(m.scaler.clone()),
                feature_set,
                vocab_hash,
                train_config,
            },
            TrainedClassifier::Mlp(m) => ClassifierFile {
                kind: "mlp".into(),
                shape: vec![
                    ("input_dim".into(), m.params.input_dim),
                    ("hidden_dim".into(), m.params.hidden_dim),
                ],
                weights: m.params.weights.clone(),
                bias: None,
                feature_kind: Some("counts".into()),
                scaler: Some(m.scaler.clone()),
                feature_set,
                vocab_hash,
                train_config,
            },
        }
    }

    pub fn into_model(self) -> Result<TrainedClassifier> {
        let dim = |name: &str| -> Result<usize> {
            self.shape
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, v)| *v)
                .ok_or_else(|| Error::invalid_model(format!("missing shape entry '{name}'")))
        };
        match self.kind.as_str() {
            "lstm" => {
                let (v, e, h) = (dim("vocab_size")?, dim("embed_dim")?, dim("hidden_dim")?);
                if self.weights.len() != LstmParams::n_params(v, e, h) {
                    return Err(Error::invalid_model("lstm weight count mismatch"));
                }
                Ok(TrainedClassifier::Lstm(LstmParams {
                    vocab_size: v,
                    embed_dim: e,
                    hidden_dim: h,
                    weights: self.weights,
                }))
            }
            "svm" => {
                let d = dim("input_dim")?;
                if self.weights.len() != d {
                    return Err(Error::invalid_model("svm weight count mismatch"));
                }
                let feature_kind = self
                    .feature_kind
                    .as_deref()
                    .and_then(FeatureKind::parse)
                    .ok_or_else(|| Error::invalid_model("svm needs a feature_kind"))?;
                let scaler = self
                    .scaler
                    .ok_or_else(|| Error::invalid_model("svm needs a scaler"))?;
                if scaler.dim() != d {
                    return Err(Error::invalid_model("scaler dimension mismatch"));
                }
                Ok(TrainedClassifier::Linear(LinearModel {
                    weights: self.weights,
                    bias: self.bias.unwrap_or(0.0),
                    feature_kind,
                    scaler,
                }))
            }
            "mlp" => {
                let (d, h) = (dim("input_dim")?, dim("hidden_dim")?);
                if self.weights.len() != MlpParams::n_params(d, h) {
                    return Err(Error::invalid_model("mlp weight count mismatch"));
                }
                let scaler = self
                    .scaler
                    .ok_or_else(|| Error::invalid_model("mlp needs a scaler"))?;
                Ok(TrainedClassifier::Mlp(MlpModel {
                    params: MlpParams {
                        input_dim: d,
                        hidden_dim: h,
                        weights: self.weights,
                    },
                    scaler,
                }))
            }
            other => Err(Error::invalid_model(format!(
                "unknown classifier kind '{other}'"
            ))),
        }
    }
}
