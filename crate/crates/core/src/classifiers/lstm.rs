//! Single-layer LSTM with mean pooling over time and a logistic output,
//! trained from scratch with full backpropagation through time.
//!
//! Parameters live in one flat vector so Adam, serialization, and
//! finite-difference checking all work on the same buffer. Inverted dropout
//! applies to the pooled vector only, in training mode.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::classifiers::optim::{finite_diff_max_rel_err, Adam};
use crate::classifiers::{DatasetRef, EpochStats, TrainConfig, TrainTrace};
use crate::error::{Error, Result};
use crate::numeric::{bce_from_logit, derive_seed, sigmoid};

/// Gate order inside the flat buffer.
const GATES: usize = 4;
const G_INPUT: usize = 0;
const G_FORGET: usize = 1;
const G_OUTPUT: usize = 2;
const G_CELL: usize = 3;

#[derive(Clone, Debug, PartialEq)]
pub struct LstmParams {
    pub vocab_size: usize,
    pub embed_dim: usize,
    pub hidden_dim: usize,
    /// Flat layout: embedding (V*E), gate input weights (4*H*E), gate
    /// recurrent weights (4*H*H), gate biases (4*H), output weights (H),
    /// output bias (1).
    pub weights: Vec<f64>,
}

impl LstmParams {
    pub fn n_params(vocab_size: usize, embed_dim: usize, hidden_dim: usize) -> usize {
        vocab_size * embed_dim
            + GATES * hidden_dim * embed_dim
            + GATES * hidden_dim * hidden_dim
            + GATES * hidden_dim
            + hidden_dim
            + 1
    }

    /// Zero-initialized parameters (forget-gate bias included).
    pub fn zeros(vocab_size: usize, embed_dim: usize, hidden_dim: usize) -> Self {
        LstmParams {
            vocab_size,
            embed_dim,
            hidden_dim,
            weights: vec![0.0; Self::n_params(vocab_size, embed_dim, hidden_dim)],
        }
    }

    /// Seeded initialization: uniform fan-in scaled weights, zero biases
    /// except the forget gate at 1.0.
    pub fn init(vocab_size: usize, embed_dim: usize, hidden_dim: usize, seed: u64) -> Self {
        let mut p = Self::zeros(vocab_size, embed_dim, hidden_dim);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (v, e, h) = (vocab_size, embed_dim, hidden_dim);
        let w0 = v * e;
        let u0 = w0 + GATES * h * e;
        let b0 = u0 + GATES * h * h;
        let o0 = b0 + GATES * h;
        let ranges = [
            (0..w0, 0.1),
            (w0..u0, (6.0 / (e + h) as f64).sqrt()),
            (u0..b0, (6.0 / (2 * h) as f64).sqrt()),
            (o0..o0 + h, (6.0 / (h + 1) as f64).sqrt()),
        ];
        for (range, scale) in ranges {
            for j in range {
                p.weights[j] = rng.gen_range(-scale..scale);
            }
        }
        for j in 0..h {
            p.weights[b0 + G_FORGET * h + j] = 1.0;
        }
        p
    }

    fn embed_offset(&self, token: usize) -> usize {
        token * self.embed_dim
    }

    fn w_offset(&self, gate: usize) -> usize {
        self.vocab_size * self.embed_dim + gate * self.hidden_dim * self.embed_dim
    }

    fn u_offset(&self, gate: usize) -> usize {
        self.vocab_size * self.embed_dim
            + GATES * self.hidden_dim * self.embed_dim
            + gate * self.hidden_dim * self.hidden_dim
    }

    fn bias_offset(&self, gate: usize) -> usize {
        self.vocab_size * self.embed_dim
            + GATES * self.hidden_dim * (self.embed_dim + self.hidden_dim)
            + gate * self.hidden_dim
    }

    fn out_offset(&self) -> usize {
        self.bias_offset(GATES - 1) + self.hidden_dim
    }

    fn out_bias_offset(&self) -> usize {
        self.out_offset() + self.hidden_dim
    }

    pub fn embedding(&self, token: usize) -> &[f64] {
        &self.weights[self.embed_offset(token)..self.embed_offset(token) + self.embed_dim]
    }
}

struct ForwardCache {
    /// Per-gate pre-nonlinearity outputs after the squash: i, f, o all
    /// sigmoids, g tanh. Each is T x H, row-major.
    gates: [Vec<f64>; GATES],
    cells: Vec<f64>,
    tanh_cells: Vec<f64>,
    hidden: Vec<f64>,
    pooled: Vec<f64>,
    /// Inverted-dropout multipliers for the pooled vector (all 1 in
    /// inference mode).
    mask: Vec<f64>,
    logit: f64,
    prob: f64,
}

fn run_forward(tokens: &[u32], params: &LstmParams, mask: Option<Vec<f64>>) -> ForwardCache {
    let h_dim = params.hidden_dim;
    let e_dim = params.embed_dim;
    let t_len = tokens.len();
    let w = &params.weights;

    let mut gates: [Vec<f64>; GATES] = std::array::from_fn(|_| vec![0.0; t_len * h_dim]);
    let mut cells = vec![0.0; t_len * h_dim];
    let mut tanh_cells = vec![0.0; t_len * h_dim];
    let mut hidden = vec![0.0; t_len * h_dim];

    let mut pre = vec![0.0f64; h_dim];
    for t in 0..t_len {
        let x = params.embedding(tokens[t] as usize);
        for gate in 0..GATES {
            let w_off = params.w_offset(gate);
            let u_off = params.u_offset(gate);
            let b_off = params.bias_offset(gate);
            for k in 0..h_dim {
                let mut acc = w[b_off + k];
                let wk = &w[w_off + k * e_dim..w_off + (k + 1) * e_dim];
                for (a, b) in wk.iter().zip(x) {
                    acc += a * b;
                }
                if t > 0 {
                    let uk = &w[u_off + k * h_dim..u_off + (k + 1) * h_dim];
                    let h_prev = &hidden[(t - 1) * h_dim..t * h_dim];
                    for (a, b) in uk.iter().zip(h_prev) {
                        acc += a * b;
                    }
                }
                pre[k] = acc;
            }
            let dst = &mut gates[gate][t * h_dim..(t + 1) * h_dim];
            if gate == G_CELL {
                for k in 0..h_dim {
                    dst[k] = pre[k].tanh();
                }
            } else {
                for k in 0..h_dim {
                    dst[k] = sigmoid(pre[k]);
                }
            }
        }
        for k in 0..h_dim {
            let idx = t * h_dim + k;
            let c_prev = if t == 0 {
                0.0
            } else {
                cells[(t - 1) * h_dim + k]
            };
            let c = gates[G_FORGET][idx] * c_prev + gates[G_INPUT][idx] * gates[G_CELL][idx];
            cells[idx] = c;
            tanh_cells[idx] = c.tanh();
            hidden[idx] = gates[G_OUTPUT][idx] * tanh_cells[idx];
        }
    }

    let mut pooled = vec![0.0; h_dim];
    for t in 0..t_len {
        for k in 0..h_dim {
            pooled[k] += hidden[t * h_dim + k];
        }
    }
    for p in &mut pooled {
        *p /= t_len as f64;
    }

    let mask = mask.unwrap_or_else(|| vec![1.0; h_dim]);
    let out_off = params.out_offset();
    let mut logit = w[params.out_bias_offset()];
    for k in 0..h_dim {
        logit += w[out_off + k] * pooled[k] * mask[k];
    }
    let prob = sigmoid(logit);
    ForwardCache {
        gates,
        cells,
        tanh_cells,
        hidden,
        pooled,
        mask,
        logit,
        prob,
    }
}

fn validate_tokens(tokens: &[u32], vocab_size: usize) -> Result<()> {
    if tokens.is_empty() {
        return Err(Error::invalid_input("empty token sequence"));
    }
    if let Some(&bad) = tokens.iter().find(|&&t| t as usize >= vocab_size) {
        return Err(Error::invalid_input(format!(
            "token id {bad} >= vocabulary size {vocab_size}"
        )));
    }
    Ok(())
}

/// Class-1 probability for one sequence. `rng` is required exactly when
/// `dropout > 0` (training mode); inference is deterministic.
pub fn lstm_forward(
    tokens: &[u32],
    params: &LstmParams,
    dropout: f64,
    rng: Option<&mut ChaCha8Rng>,
) -> Result<f64> {
    validate_tokens(tokens, params.vocab_size)?;
    let mask = if dropout > 0.0 {
        let rng =
            rng.ok_or_else(|| Error::invalid_input("dropout > 0 needs an rng (training mode)"))?;
        Some(dropout_mask(params.hidden_dim, dropout, rng))
    } else {
        None
    };
    Ok(run_forward(tokens, params, mask).prob)
}

fn dropout_mask(dim: usize, dropout: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let keep = 1.0 - dropout;
    (0..dim)
        .map(|_| {
            if rng.gen::<f64>() < keep {
                1.0 / keep
            } else {
                0.0
            }
        })
        .collect()
}

/// Gradient of the BCE loss of one sequence, written into `grad`
/// (accumulated). Returns the loss.
fn backward_into(
    tokens: &[u32],
    params: &LstmParams,
    cache: &ForwardCache,
    label: f64,
    grad: &mut [f64],
) -> f64 {
    let h_dim = params.hidden_dim;
    let e_dim = params.embed_dim;
    let t_len = tokens.len();
    let w = &params.weights;
    let loss = bce_from_logit(cache.logit, label);

    let dz = cache.prob - label;
    let out_off = params.out_offset();
    for k in 0..h_dim {
        grad[out_off + k] += dz * cache.pooled[k] * cache.mask[k];
    }
    grad[params.out_bias_offset()] += dz;

    // d(pooled) through the dropout mask, spread evenly over timesteps.
    let mut dh_base = vec![0.0; h_dim];
    for k in 0..h_dim {
        dh_base[k] = dz * w[out_off + k] * cache.mask[k] / t_len as f64;
    }

    let mut dh_rec = vec![0.0; h_dim];
    let mut dc = vec![0.0; h_dim];
    let mut da = [
        vec![0.0; h_dim],
        vec![0.0; h_dim],
        vec![0.0; h_dim],
        vec![0.0; h_dim],
    ];
    for t in (0..t_len).rev() {
        let idx = t * h_dim;
        for k in 0..h_dim {
            let i_g = cache.gates[G_INPUT][idx + k];
            let f_g = cache.gates[G_FORGET][idx + k];
            let o_g = cache.gates[G_OUTPUT][idx + k];
            let g_g = cache.gates[G_CELL][idx + k];
            let tc = cache.tanh_cells[idx + k];
            let c_prev = if t == 0 {
                0.0
            } else {
                cache.cells[idx - h_dim + k]
            };

            let dh = dh_base[k] + dh_rec[k];
            let d_o = dh * tc;
            let dc_k = dc[k] + dh * o_g * (1.0 - tc * tc);
            let d_i = dc_k * g_g;
            let d_g = dc_k * i_g;
            let d_f = dc_k * c_prev;

            da[G_INPUT][k] = d_i * i_g * (1.0 - i_g);
            da[G_FORGET][k] = d_f * f_g * (1.0 - f_g);
            da[G_OUTPUT][k] = d_o * o_g * (1.0 - o_g);
            da[G_CELL][k] = d_g * (1.0 - g_g * g_g);
            dc[k] = dc_k * f_g;
        }

        let x_off = params.embed_offset(tokens[t] as usize);
        let x = params.embedding(tokens[t] as usize);
        for gate in 0..GATES {
            let w_off = params.w_offset(gate);
            let u_off = params.u_offset(gate);
            let b_off = params.bias_offset(gate);
            for k in 0..h_dim {
                let d = da[gate][k];
                if d == 0.0 {
                    continue;
                }
                let gw = &mut grad[w_off + k * e_dim..w_off + (k + 1) * e_dim];
                for (slot, &xv) in gw.iter_mut().zip(x) {
                    *slot += d * xv;
                }
                if t > 0 {
                    let h_prev = &cache.hidden[(t - 1) * h_dim..t * h_dim];
                    let gu = &mut grad[u_off + k * h_dim..u_off + (k + 1) * h_dim];
                    for (slot, &hv) in gu.iter_mut().zip(h_prev) {
                        *slot += d * hv;
                    }
                }
                grad[b_off + k] += d;
            }
        }

        // dx and dh_prev.
        let mut dh_prev = vec![0.0; h_dim];
        for gate in 0..GATES {
            let w_off = params.w_offset(gate);
            let u_off = params.u_offset(gate);
            for k in 0..h_dim {
                let d = da[gate][k];
                if d == 0.0 {
                    continue;
                }
                for e in 0..e_dim {
                    grad[x_off + e] += d * w[w_off + k * e_dim + e];
                }
                if t > 0 {
                    for j in 0..h_dim {
                        dh_prev[j] += d * w[u_off + k * h_dim + j];
                    }
                }
            }
        }
        dh_rec = dh_prev;
        if t == 0 {
            break;
        }
    }
    loss
}

/// Loss and gradient of the mean BCE over a small batch, dropout off.
/// Used by the finite-difference check and the trainer.
fn batch_loss_grad(
    params: &LstmParams,
    batch: &[(&[u32], f64, Option<Vec<f64>>)],
) -> (f64, Vec<f64>) {
    let mut grad = vec![0.0; params.weights.len()];
    let mut loss = 0.0;
    for (tokens, label, mask) in batch {
        let cache = run_forward(tokens, params, mask.clone());
        loss += backward_into(tokens, params, &cache, *label, &mut grad);
    }
    let n = batch.len() as f64;
    for g in &mut grad {
        *g /= n;
    }
    (loss / n, grad)
}

/// Analytic-vs-numeric gradient agreement on a batch: the max over
/// parameters of the relative error, dropout disabled.
pub fn gradient_check(params: &LstmParams, batch: &[(Vec<u32>, u8)], h: f64) -> Result<f64> {
    for (tokens, _) in batch {
        validate_tokens(tokens, params.vocab_size)?;
    }
    let refs: Vec<(&[u32], f64, Option<Vec<f64>>)> = batch
        .iter()
        .map(|(t, l)| (t.as_slice(), *l as f64, None))
        .collect();
    let (_, analytic) = batch_loss_grad(params, &refs);
    let shape = (params.vocab_size, params.embed_dim, params.hidden_dim);
    let loss_of = |weights: &[f64]| -> f64 {
        let candidate = LstmParams {
            vocab_size: shape.0,
            embed_dim: shape.1,
            hidden_dim: shape.2,
            weights: weights.to_vec(),
        };
        let mut total = 0.0;
        for (tokens, label, _) in &refs {
            let cache = run_forward(tokens, &candidate, None);
            total += bce_from_logit(cache.logit, *label);
        }
        total / refs.len() as f64
    };
    Ok(finite_diff_max_rel_err(
        loss_of,
        &params.weights,
        &analytic,
        h,
    ))
}

/// Train the LSTM classifier with Adam on mean BCE.
///
/// Sequences longer than `max_seq_len` keep their earliest tokens. Batch
/// gradients reduce in a fixed order, so a fixed seed reproduces the same
/// parameters regardless of thread count.
pub fn lstm_train(
    train: DatasetRef<'_>,
    vocab_size: usize,
    cfg: &TrainConfig,
    val: Option<DatasetRef<'_>>,
) -> Result<(LstmParams, TrainTrace)> {
    cfg.validate()?;
    let n = train.sequences.len();
    if n < 2 || train.labels.len() != n {
        return Err(Error::invalid_input("need >= 2 labeled sequences"));
    }
    if !(train.labels.contains(&0) && train.labels.contains(&1)) {
        return Err(Error::training("training data has a single class"));
    }
    let truncated: Vec<Vec<u32>> = train
        .sequences
        .iter()
        .map(|s| {
            let mut t = s.clone();
            t.truncate(cfg.max_seq_len);
            t
        })
        .collect();
    for t in &truncated {
        validate_tokens(t, vocab_size)?;
    }

    let mut params = LstmParams::init(vocab_size, cfg.embed_dim, cfg.hidden_dim, cfg.seed);
    let mut adam = Adam::new(
        cfg.learning_rate,
        cfg.beta1,
        cfg.beta2,
        cfg.adam_eps,
        params.weights.len(),
    );
    let mut order: Vec<usize> = (0..n).collect();
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 0x5151));
    let mut trace = TrainTrace::default();

    for epoch in 0..cfg.epochs {
        shuffle(&mut order, &mut shuffle_rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(cfg.batch_size.max(1)) {
            let members: Vec<(&[u32], f64, Option<Vec<f64>>)> = chunk
                .iter()
                .map(|&i| {
                    let mask = if cfg.dropout > 0.0 {
                        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
                            cfg.seed,
                            (epoch * n + i) as u64 ^ 0xd50f,
                        ));
                        Some(dropout_mask(cfg.hidden_dim, cfg.dropout, &mut rng))
                    } else {
                        None
                    };
                    (truncated[i].as_slice(), train.labels[i] as f64, mask)
                })
                .collect();

            // Parallel map, ordered sequential reduce: bit-identical results
            // for any thread count.
            let per_member: Vec<(f64, Vec<f64>)> = members
                .par_iter()
                .map(|(tokens, label, mask)| {
                    let mut g = vec![0.0; params.weights.len()];
                    let cache = run_forward(tokens, &params, mask.clone());
                    let loss = backward_into(tokens, &params, &cache, *label, &mut g);
                    (loss, g)
                })
                .collect();
            let mut grad = vec![0.0; params.weights.len()];
            let mut batch_loss = 0.0;
            for (loss, g) in &per_member {
                batch_loss += loss;
                for (a, b) in grad.iter_mut().zip(g) {
                    *a += b;
                }
            }
            let scale = 1.0 / per_member.len() as f64;
            for g in &mut grad {
                *g *= scale;
            }
            batch_loss *= scale;
            if !batch_loss.is_finite() {
                return Err(Error::training(format!(
                    "loss diverged (epoch {epoch}): {batch_loss}"
                )));
            }
            epoch_loss += batch_loss * per_member.len() as f64;
            adam.step(&mut params.weights, &grad);
        }

        let train_acc = dataset_accuracy(&params, &truncated, train.labels);
        let val_acc = val.as_ref().map(|v| {
            let vs: Vec<Vec<u32>> = v
                .sequences
                .iter()
                .map(|s| {
                    let mut t = s.clone();
                    t.truncate(cfg.max_seq_len);
                    t
                })
                .collect();
            dataset_accuracy(&params, &vs, v.labels)
        });
        trace.epochs.push(EpochStats {
            epoch,
            mean_loss: epoch_loss / n as f64,
            train_acc,
            val_acc,
        });
    }
    Ok((params, trace))
}

fn dataset_accuracy(params: &LstmParams, sequences: &[Vec<u32>], labels: &[u8]) -> f64 {
    let correct: usize = sequences
        .par_iter()
        .zip(labels.par_iter())
        .map(|(s, &l)| {
            let p = run_forward(s, params, None).prob;
            usize::from((p >= 0.5) as u8 == l)
        })
        .sum();
    correct as f64 / sequences.len() as f64
}

fn shuffle(order: &mut [usize], rng: &mut ChaCha8Rng) {
    for i in (1..order.len()).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }
}
