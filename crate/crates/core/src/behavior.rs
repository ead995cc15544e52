//! Behavior models over session category-count vectors.
//!
//! A multinomial mixture model (MMM) clusters sessions independently; a
//! hidden Markov model (HMM) additionally models transitions between a
//! student's successive sessions. Both treat a session's clicks as draws
//! from a per-state multinomial over categories; the multinomial
//! coefficient is omitted throughout since it is constant per observation
//! and cancels in responsibilities and in argmax decoding.
//!
//! All probabilities live on an epsilon-floored simplex: every M-step is the
//! exact maximizer of the expected complete-data log-likelihood subject to
//! the floor, so the per-iteration observed-data log-likelihood is
//! non-decreasing up to floating-point noise.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::CategoryMap;
use crate::numeric::{
    argmax, derive_seed, floored_simplex_fit, logsumexp, sample_dirichlet,
    sample_dirichlet_symmetric, Matrix,
};

/// EM settings shared by MMM and HMM fitting.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FitConfig {
    /// Number of states/components (K).
    pub n_states: usize,
    pub max_iter: usize,
    /// Relative log-likelihood change that stops EM.
    pub tol: f64,
    pub seed: u64,
    /// Smoothing floor for every probability entry.
    pub epsilon: f64,
    /// Independent seeded starts; the fit with the best final
    /// log-likelihood wins. Guards against merged-state local optima.
    pub n_starts: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            n_states: 10,
            max_iter: 200,
            tol: 1e-6,
            seed: 0,
            epsilon: 1e-8,
            n_starts: 3,
        }
    }
}

impl FitConfig {
    fn validate(&self) -> Result<()> {
        if self.n_states < 1 {
            return Err(Error::invalid_input("n_states must be >= 1"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::invalid_input("tol must be positive"));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::invalid_input("epsilon must be positive"));
        }
        Ok(())
    }
}

/// Multinomial mixture model parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct MmmParams {
    /// Component priors, length K.
    pub mix: Vec<f64>,
    /// K x C per-component multinomial rows.
    pub emit: Matrix,
}

impl MmmParams {
    pub fn n_states(&self) -> usize {
        self.mix.len()
    }

    pub fn n_categories(&self) -> usize {
        self.emit.cols()
    }
}

/// Hidden Markov model parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct HmmParams {
    /// Initial state distribution, length K.
    pub init: Vec<f64>,
    /// K x K transition rows.
    pub trans: Matrix,
    /// K x C emission rows.
    pub emit: Matrix,
}

impl HmmParams {
    pub fn n_states(&self) -> usize {
        self.init.len()
    }

    pub fn n_categories(&self) -> usize {
        self.emit.cols()
    }
}

/// Per-fit diagnostics: one log-likelihood per EM iteration.
#[derive(Clone, Debug, Default)]
pub struct FitTrace {
    pub logliks: Vec<f64>,
    pub restarts: usize,
    pub converged: bool,
}

impl FitTrace {
    pub fn final_loglik(&self) -> f64 {
        self.logliks.last().copied().unwrap_or(f64::NEG_INFINITY)
    }

    pub fn iterations(&self) -> usize {
        self.logliks.len()
    }
}

/// Log-likelihood of a category-count vector under one multinomial row
/// (coefficient omitted): `sum_c counts[c] * ln(row[c])`.
pub fn emission_loglik(counts: &[u64], row: &[f64]) -> Result<f64> {
    if counts.len() != row.len() {
        return Err(Error::invalid_input(format!(
            "count vector length {} != row length {}",
            counts.len(),
            row.len()
        )));
    }
    if counts.iter().all(|&c| c == 0) {
        return Err(Error::invalid_input(
            "all-zero count vector (empty session upstream)",
        ));
    }
    let mut ll = 0.0;
    for (&n, &p) in counts.iter().zip(row) {
        if n > 0 {
            ll += n as f64 * p.ln();
        }
    }
    Ok(ll)
}

/// Counts stored as (category, count) pairs for the nonzero entries.
#[derive(Clone, Debug)]
struct SparseCounts {
    entries: Vec<(u32, f64)>,
}

impl SparseCounts {
    fn from_dense(counts: &[u64]) -> Result<Self> {
        if counts.iter().all(|&c| c == 0) {
            return Err(Error::invalid_input(
                "all-zero count vector (empty session upstream)",
            ));
        }
        Ok(SparseCounts {
            entries: counts
                .iter()
                .enumerate()
                .filter(|(_, &n)| n > 0)
                .map(|(c, &n)| (c as u32, n as f64))
                .collect(),
        })
    }

    fn loglik(&self, ln_row: &[f64]) -> f64 {
        self.entries
            .iter()
            .map(|&(c, n)| n * ln_row[c as usize])
            .sum()
    }
}

fn ln_matrix(m: &Matrix) -> Matrix {
    Matrix::from_flat(
        m.rows(),
        m.cols(),
        m.data().iter().map(|&x| x.ln()).collect(),
    )
}

fn global_distribution(sessions: &[SparseCounts], n_categories: usize) -> Vec<f64> {
    let mut totals = vec![0.0f64; n_categories];
    for s in sessions {
        for &(c, n) in &s.entries {
            totals[c as usize] += n;
        }
    }
    let sum: f64 = totals.iter().sum();
    if sum > 0.0 {
        for t in &mut totals {
            *t /= sum;
        }
    } else {
        totals.fill(1.0 / n_categories as f64);
    }
    totals
}

/// Emission row drawn around the global category distribution
/// (Dirichlet, concentration 10), floored at epsilon.
fn sample_emission_row(rng: &mut ChaCha8Rng, global: &[f64], eps: f64) -> Vec<f64> {
    let alphas: Vec<f64> = global.iter().map(|&p| 10.0 * p).collect();
    let draw = sample_dirichlet(rng, &alphas);
    floored_simplex_fit(&draw, eps)
}

fn init_mmm(rng: &mut ChaCha8Rng, k: usize, global: &[f64], eps: f64) -> MmmParams {
    let mix = floored_simplex_fit(&sample_dirichlet_symmetric(rng, k, 1.0), eps);
    let rows: Vec<Vec<f64>> = (0..k)
        .map(|_| sample_emission_row(rng, global, eps))
        .collect();
    MmmParams {
        mix,
        emit: Matrix::from_rows(rows),
    }
}

/// Per-session responsibilities and the total log-likelihood under an MMM.
pub fn mmm_posteriors(sessions: &[Vec<u64>], params: &MmmParams) -> Result<(Vec<Vec<f64>>, f64)> {
    let k = params.n_states();
    let ln_mix: Vec<f64> = params.mix.iter().map(|&p| p.ln()).collect();
    let ln_emit = ln_matrix(&params.emit);
    let mut resp = Vec::with_capacity(sessions.len());
    let mut ll = 0.0;
    for s in sessions {
        let sparse = SparseCounts::from_dense(s)?;
        let scores: Vec<f64> = (0..k)
            .map(|j| ln_mix[j] + sparse.loglik(ln_emit.row(j)))
            .collect();
        let lse = logsumexp(&scores);
        resp.push(scores.iter().map(|&sc| (sc - lse).exp()).collect());
        ll += lse;
    }
    Ok((resp, ll))
}

/// Fit an MMM to session count vectors by EM, from a seeded random start.
pub fn mmm_fit(sessions: &[Vec<u64>], cfg: &FitConfig) -> Result<(MmmParams, FitTrace)> {
    cfg.validate()?;
    let k = cfg.n_states;
    if sessions.len() < k {
        return Err(Error::invalid_input(format!(
            "need at least K = {k} sessions, got {}",
            sessions.len()
        )));
    }
    let n_categories = sessions[0].len();
    if n_categories < 2 {
        return Err(Error::invalid_input("need at least 2 categories"));
    }
    let sparse: Vec<SparseCounts> = check_sessions(sessions, n_categories)?;
    let global = global_distribution(&sparse, n_categories);
    let mut best: Option<(MmmParams, FitTrace)> = None;
    for start in 0..cfg.n_starts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, start as u64));
        let init = init_mmm(&mut rng, k, &global, cfg.epsilon);
        let (params, trace) = mmm_fit_from(init, sessions, cfg)?;
        if best
            .as_ref()
            .map_or(true, |(_, t)| trace.final_loglik() > t.final_loglik())
        {
            best = Some((params, trace));
        }
    }
    Ok(best.expect("at least one start"))
}

fn check_sessions(sessions: &[Vec<u64>], n_categories: usize) -> Result<Vec<SparseCounts>> {
    sessions
        .iter()
        .map(|s| {
            if s.len() != n_categories {
                return Err(Error::invalid_input("inconsistent count vector lengths"));
            }
            SparseCounts::from_dense(s)
        })
        .collect()
}

/// EM from explicit starting parameters (warm start or fixture).
pub fn mmm_fit_from(
    mut params: MmmParams,
    sessions: &[Vec<u64>],
    cfg: &FitConfig,
) -> Result<(MmmParams, FitTrace)> {
    cfg.validate()?;
    let k = params.n_states();
    let n_categories = params.n_categories();
    let sparse = check_sessions(sessions, n_categories)?;
    let global = global_distribution(&sparse, n_categories);

    let n = sparse.len();
    let mut trace = FitTrace::default();
    let mut restarts_left = vec![3u8; k];
    let mut prev_ll = f64::NEG_INFINITY;

    for _iter in 0..cfg.max_iter {
        let ln_mix: Vec<f64> = params.mix.iter().map(|&p| p.ln()).collect();
        let ln_emit = ln_matrix(&params.emit);

        // E-step.
        let stats: Vec<(Vec<f64>, Vec<f64>, f64)> = sparse
            .par_iter()
            .map(|s| {
                let scores: Vec<f64> = (0..k)
                    .map(|j| ln_mix[j] + s.loglik(ln_emit.row(j)))
                    .collect();
                let lse = logsumexp(&scores);
                let resp: Vec<f64> = scores.iter().map(|&sc| (sc - lse).exp()).collect();
                let mut emit_w = vec![0.0; k * n_categories];
                for (j, &r) in resp.iter().enumerate() {
                    for &(c, cnt) in &s.entries {
                        emit_w[j * n_categories + c as usize] += r * cnt;
                    }
                }
                (resp, emit_w, lse)
            })
            .collect();

        let mut mix_w = vec![0.0f64; k];
        let mut emit_w = vec![0.0f64; k * n_categories];
        let mut ll = 0.0;
        for (resp, ew, lse) in &stats {
            for (a, b) in mix_w.iter_mut().zip(resp) {
                *a += b;
            }
            for (a, b) in emit_w.iter_mut().zip(ew) {
                *a += b;
            }
            ll += lse;
        }
        trace.logliks.push(ll);

        // M-step.
        for j in 0..k {
            let row = floored_simplex_fit(
                &emit_w[j * n_categories..(j + 1) * n_categories],
                cfg.epsilon,
            );
            params.emit.row_mut(j).copy_from_slice(&row);
        }

        // Empty-component restart: re-seed starved components near the
        // global distribution and give them prior mass to compete for.
        let starve = 1e-6 * n as f64;
        for j in 0..k {
            if mix_w[j] < starve && restarts_left[j] > 0 {
                restarts_left[j] -= 1;
                trace.restarts += 1;
                let mut seed_rng =
                    ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, (trace.restarts + j) as u64));
                let row = sample_emission_row(&mut seed_rng, &global, cfg.epsilon);
                params.emit.row_mut(j).copy_from_slice(&row);
                mix_w[j] = n as f64 / k as f64;
            }
        }
        params.mix = floored_simplex_fit(&mix_w, cfg.epsilon);

        if prev_ll.is_finite() {
            let delta = (ll - prev_ll).abs();
            if delta / ll.abs().max(1.0) < cfg.tol {
                trace.converged = true;
                break;
            }
        }
        prev_ll = ll;
    }
    Ok((params, trace))
}

/// Most likely component for one session: argmax of prior plus emission
/// log-likelihood, ties to the lowest index.
pub fn mmm_assign(counts: &[u64], params: &MmmParams) -> Result<usize> {
    let scores: Vec<f64> = (0..params.n_states())
        .map(|j| Ok(params.mix[j].ln() + emission_loglik(counts, params.emit.row(j))?))
        .collect::<Result<_>>()?;
    Ok(argmax(&scores))
}

/// Per-timestep posteriors of one sequence under an HMM, computed with
/// log-space forward-backward.
#[derive(Clone, Debug)]
pub struct SequencePosteriors {
    /// `gammas[t][k]` = P(state_t = k | observations).
    pub gammas: Vec<Vec<f64>>,
    /// `xis[t]` (K x K) = P(state_t = i, state_t+1 = j | observations).
    pub xis: Vec<Matrix>,
    pub loglik: f64,
}

fn sparse_sequence(seq: &[Vec<u64>]) -> Result<Vec<SparseCounts>> {
    if seq.is_empty() {
        return Err(Error::invalid_input("empty session sequence"));
    }
    seq.iter().map(|s| SparseCounts::from_dense(s)).collect()
}

fn log_emissions(seq: &[SparseCounts], ln_emit: &Matrix) -> Matrix {
    let k = ln_emit.rows();
    let mut le = Matrix::zeros(seq.len(), k);
    for (t, s) in seq.iter().enumerate() {
        for j in 0..k {
            *le.at_mut(t, j) = s.loglik(ln_emit.row(j));
        }
    }
    le
}

struct LogSpace {
    ln_init: Vec<f64>,
    ln_trans: Matrix,
    ln_emit: Matrix,
}

impl LogSpace {
    fn new(params: &HmmParams) -> Self {
        LogSpace {
            ln_init: params.init.iter().map(|&p| p.ln()).collect(),
            ln_trans: ln_matrix(&params.trans),
            ln_emit: ln_matrix(&params.emit),
        }
    }
}

fn forward_lattice(le: &Matrix, ls: &LogSpace) -> Matrix {
    let (t_len, k) = (le.rows(), le.cols());
    let mut la = Matrix::zeros(t_len, k);
    for j in 0..k {
        *la.at_mut(0, j) = ls.ln_init[j] + le.at(0, j);
    }
    let mut scratch = vec![0.0f64; k];
    for t in 1..t_len {
        for j in 0..k {
            for i in 0..k {
                scratch[i] = la.at(t - 1, i) + ls.ln_trans.at(i, j);
            }
            *la.at_mut(t, j) = logsumexp(&scratch) + le.at(t, j);
        }
    }
    la
}

/// log P(observations | params) for one session sequence.
pub fn hmm_forward_loglik(seq: &[Vec<u64>], params: &HmmParams) -> Result<f64> {
    let sparse = sparse_sequence(seq)?;
    check_dims(&sparse, params)?;
    let ls = LogSpace::new(params);
    let le = log_emissions(&sparse, &ls.ln_emit);
    let la = forward_lattice(&le, &ls);
    Ok(logsumexp(la.row(le.rows() - 1)))
}

fn check_dims(seq: &[SparseCounts], params: &HmmParams) -> Result<()> {
    let c = params.n_categories() as u32;
    for s in seq {
        if s.entries.iter().any(|&(cat, _)| cat >= c) {
            return Err(Error::invalid_input(format!(
                "count vector has category >= C = {c}"
            )));
        }
    }
    Ok(())
}

/// Forward-backward posteriors for one sequence.
pub fn hmm_posteriors(seq: &[Vec<u64>], params: &HmmParams) -> Result<SequencePosteriors> {
    let sparse = sparse_sequence(seq)?;
    check_dims(&sparse, params)?;
    let ls = LogSpace::new(params);
    let le = log_emissions(&sparse, &ls.ln_emit);
    Ok(posteriors_from_lattice(&le, &ls))
}

fn posteriors_from_lattice(le: &Matrix, ls: &LogSpace) -> SequencePosteriors {
    let (t_len, k) = (le.rows(), le.cols());
    let la = forward_lattice(le, ls);
    let mut lb = Matrix::zeros(t_len, k);
    let mut scratch = vec![0.0f64; k];
    for t in (0..t_len - 1).rev() {
        for i in 0..k {
            for j in 0..k {
                scratch[j] = ls.ln_trans.at(i, j) + le.at(t + 1, j) + lb.at(t + 1, j);
            }
            *lb.at_mut(t, i) = logsumexp(&scratch);
        }
    }
    let loglik = logsumexp(la.row(t_len - 1));

    let gammas: Vec<Vec<f64>> = (0..t_len)
        .map(|t| {
            (0..k)
                .map(|i| (la.at(t, i) + lb.at(t, i) - loglik).exp())
                .collect()
        })
        .collect();
    let xis: Vec<Matrix> = (0..t_len - 1)
        .map(|t| {
            let mut xi = Matrix::zeros(k, k);
            for i in 0..k {
                for j in 0..k {
                    *xi.at_mut(i, j) =
                        (la.at(t, i) + ls.ln_trans.at(i, j) + le.at(t + 1, j) + lb.at(t + 1, j)
                            - loglik)
                            .exp();
                }
            }
            xi
        })
        .collect();
    SequencePosteriors {
        gammas,
        xis,
        loglik,
    }
}

/// Most probable state path and its joint log-probability, ties broken by
/// the lowest state index at every backtrack step.
pub fn hmm_viterbi(seq: &[Vec<u64>], params: &HmmParams) -> Result<(Vec<usize>, f64)> {
    let sparse = sparse_sequence(seq)?;
    check_dims(&sparse, params)?;
    let ls = LogSpace::new(params);
    let le = log_emissions(&sparse, &ls.ln_emit);
    let (t_len, k) = (le.rows(), le.cols());

    let mut delta = Matrix::zeros(t_len, k);
    let mut back = vec![vec![0usize; k]; t_len];
    for j in 0..k {
        *delta.at_mut(0, j) = ls.ln_init[j] + le.at(0, j);
    }
    for t in 1..t_len {
        for j in 0..k {
            let mut best_i = 0usize;
            let mut best = delta.at(t - 1, 0) + ls.ln_trans.at(0, j);
            for i in 1..k {
                let score = delta.at(t - 1, i) + ls.ln_trans.at(i, j);
                if score > best {
                    best = score;
                    best_i = i;
                }
            }
            back[t][j] = best_i;
            *delta.at_mut(t, j) = best + le.at(t, j);
        }
    }
    let last = argmax(delta.row(t_len - 1));
    let best_logprob = delta.at(t_len - 1, last);
    let mut path = vec![0usize; t_len];
    path[t_len - 1] = last;
    for t in (0..t_len - 1).rev() {
        path[t] = back[t + 1][path[t + 1]];
    }
    Ok((path, best_logprob))
}

fn init_hmm(rng: &mut ChaCha8Rng, k: usize, global: &[f64], eps: f64) -> HmmParams {
    let init = floored_simplex_fit(&sample_dirichlet_symmetric(rng, k, 1.0), eps);
    let trans_rows: Vec<Vec<f64>> = (0..k)
        .map(|_| floored_simplex_fit(&sample_dirichlet_symmetric(rng, k, 1.0), eps))
        .collect();
    let emit_rows: Vec<Vec<f64>> = (0..k)
        .map(|_| sample_emission_row(rng, global, eps))
        .collect();
    HmmParams {
        init,
        trans: Matrix::from_rows(trans_rows),
        emit: Matrix::from_rows(emit_rows),
    }
}

/// Fit an HMM over per-student session sequences with Baum-Welch, from a
/// seeded random start. Expected counts aggregate across all students'
/// sequences.
pub fn hmm_fit(sequences: &[Vec<Vec<u64>>], cfg: &FitConfig) -> Result<(HmmParams, FitTrace)> {
    cfg.validate()?;
    let k = cfg.n_states;
    if sequences.is_empty() {
        return Err(Error::invalid_input("no sequences"));
    }
    let n_categories = sequences
        .first()
        .and_then(|s| s.first())
        .map(Vec::len)
        .ok_or_else(|| Error::invalid_input("empty session sequence"))?;
    if n_categories < 2 {
        return Err(Error::invalid_input("need at least 2 categories"));
    }
    let sparse = check_sequences(sequences, n_categories)?;
    let all_sessions: Vec<SparseCounts> = sparse.iter().flat_map(|s| s.iter().cloned()).collect();
    let global = global_distribution(&all_sessions, n_categories);
    let mut best: Option<(HmmParams, FitTrace)> = None;
    for start in 0..cfg.n_starts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, start as u64));
        let init = init_hmm(&mut rng, k, &global, cfg.epsilon);
        let (params, trace) = hmm_fit_from(init, sequences, cfg)?;
        if best
            .as_ref()
            .map_or(true, |(_, t)| trace.final_loglik() > t.final_loglik())
        {
            best = Some((params, trace));
        }
    }
    Ok(best.expect("at least one start"))
}

fn check_sequences(
    sequences: &[Vec<Vec<u64>>],
    n_categories: usize,
) -> Result<Vec<Vec<SparseCounts>>> {
    sequences
        .iter()
        .map(|seq| {
            if seq.iter().any(|s| s.len() != n_categories) {
                return Err(Error::invalid_input("inconsistent count vector lengths"));
            }
            sparse_sequence(seq)
        })
        .collect()
}

/// Baum-Welch from explicit starting parameters.
pub fn hmm_fit_from(
    mut params: HmmParams,
    sequences: &[Vec<Vec<u64>>],
    cfg: &FitConfig,
) -> Result<(HmmParams, FitTrace)> {
    cfg.validate()?;
    let k = params.n_states();
    let n_categories = params.n_categories();
    let sparse = check_sequences(sequences, n_categories)?;
    let all_sessions: Vec<SparseCounts> = sparse.iter().flat_map(|s| s.iter().cloned()).collect();
    let total_sessions = all_sessions.len();
    let global = global_distribution(&all_sessions, n_categories);

    let mut trace = FitTrace::default();
    let mut restarts_left = vec![3u8; k];
    let mut prev_ll = f64::NEG_INFINITY;

    for _iter in 0..cfg.max_iter {
        let ls = LogSpace::new(&params);

        // E-step across students; reduction runs in a fixed order.
        struct SeqStats {
            init_w: Vec<f64>,
            trans_w: Vec<f64>,
            emit_w: Vec<f64>,
            loglik: f64,
        }
        let stats: Vec<SeqStats> = sparse
            .par_iter()
            .map(|seq| {
                let le = log_emissions(seq, &ls.ln_emit);
                let post = posteriors_from_lattice(&le, &ls);
                let mut init_w = vec![0.0; k];
                init_w.copy_from_slice(&post.gammas[0]);
                let mut trans_w = vec![0.0; k * k];
                for xi in &post.xis {
                    for (a, b) in trans_w.iter_mut().zip(xi.data()) {
                        *a += b;
                    }
                }
                let mut emit_w = vec![0.0; k * n_categories];
                for (t, s) in seq.iter().enumerate() {
                    for (j, &g) in post.gammas[t].iter().enumerate() {
                        for &(c, cnt) in &s.entries {
                            emit_w[j * n_categories + c as usize] += g * cnt;
                        }
                    }
                }
                SeqStats {
                    init_w,
                    trans_w,
                    emit_w,
                    loglik: post.loglik,
                }
            })
            .collect();

        let mut init_w = vec![0.0f64; k];
        let mut trans_w = vec![0.0f64; k * k];
        let mut emit_w = vec![0.0f64; k * n_categories];
        let mut ll = 0.0;
        for s in &stats {
            for (a, b) in init_w.iter_mut().zip(&s.init_w) {
                *a += b;
            }
            for (a, b) in trans_w.iter_mut().zip(&s.trans_w) {
                *a += b;
            }
            for (a, b) in emit_w.iter_mut().zip(&s.emit_w) {
                *a += b;
            }
            ll += s.loglik;
        }
        trace.logliks.push(ll);

        // M-step.
        params.init = floored_simplex_fit(&init_w, cfg.epsilon);
        for j in 0..k {
            let trow = floored_simplex_fit(&trans_w[j * k..(j + 1) * k], cfg.epsilon);
            params.trans.row_mut(j).copy_from_slice(&trow);
            let erow = floored_simplex_fit(
                &emit_w[j * n_categories..(j + 1) * n_categories],
                cfg.epsilon,
            );
            params.emit.row_mut(j).copy_from_slice(&erow);
        }

        // Starved-state restart, as in mmm_fit.
        let starve = 1e-6 * total_sessions as f64;
        for j in 0..k {
            let occupancy: f64 = emit_w[j * n_categories..(j + 1) * n_categories]
                .iter()
                .sum();
            if occupancy < starve && restarts_left[j] > 0 {
                restarts_left[j] -= 1;
                trace.restarts += 1;
                let mut seed_rng = ChaCha8Rng::seed_from_u64(derive_seed(
                    cfg.seed,
                    1000 + (trace.restarts + j) as u64,
                ));
                let row = sample_emission_row(&mut seed_rng, &global, cfg.epsilon);
                params.emit.row_mut(j).copy_from_slice(&row);
                let trow = floored_simplex_fit(
                    &sample_dirichlet_symmetric(&mut seed_rng, k, 1.0),
                    cfg.epsilon,
                );
                params.trans.row_mut(j).copy_from_slice(&trow);
            }
        }

        if prev_ll.is_finite() {
            let delta = (ll - prev_ll).abs();
            if delta / ll.abs().max(1.0) < cfg.tol {
                trace.converged = true;
                break;
            }
        }
        prev_ll = ll;
    }
    Ok((params, trace))
}

/// A fitted behavior model of either kind.
#[derive(Clone, Debug)]
pub enum BehaviorModel {
    Mmm(MmmParams),
    Hmm(HmmParams),
}

impl BehaviorModel {
    pub fn kind(&self) -> &'static str {
        match self {
            BehaviorModel::Mmm(_) => "mmm",
            BehaviorModel::Hmm(_) => "hmm",
        }
    }

    pub fn n_states(&self) -> usize {
        match self {
            BehaviorModel::Mmm(p) => p.n_states(),
            BehaviorModel::Hmm(p) => p.n_states(),
        }
    }

    pub fn n_categories(&self) -> usize {
        match self {
            BehaviorModel::Mmm(p) => p.n_categories(),
            BehaviorModel::Hmm(p) => p.n_categories(),
        }
    }

    /// Decode one student's session sequence to state ids: per-session MLE
    /// assignment for MMM, Viterbi for HMM.
    pub fn decode(&self, seq: &[Vec<u64>]) -> Result<Vec<usize>> {
        match self {
            BehaviorModel::Mmm(p) => seq.iter().map(|s| mmm_assign(s, p)).collect(),
            BehaviorModel::Hmm(p) => Ok(hmm_viterbi(seq, p)?.0),
        }
    }
}

/// Aggregate emission rows by super group: a K x 5 table whose rows sum
/// to the emission row sums (1 within tolerance).
pub fn summarize_behaviors(emit: &Matrix, map: &CategoryMap) -> Result<Matrix> {
    if emit.cols() != map.n_categories() {
        return Err(Error::invalid_input(format!(
            "emission columns {} != category count {}",
            emit.cols(),
            map.n_categories()
        )));
    }
    let mut out = Matrix::zeros(emit.rows(), 5);
    for state in 0..emit.rows() {
        for c in 0..emit.cols() {
            let g = map.super_group(c as u32).index();
            *out.at_mut(state, g) += emit.at(state, c);
        }
    }
    Ok(out)
}

/// Initial distribution, full transition table, and per-state top-3
/// outgoing transitions.
#[derive(Clone, Debug)]
pub struct TransitionReport {
    pub init: Vec<f64>,
    pub trans: Matrix,
    /// For each state: up to three (target, probability), descending.
    pub top_outgoing: Vec<Vec<(usize, f64)>>,
}

pub fn transition_report(params: &HmmParams) -> TransitionReport {
    let k = params.n_states();
    let top_outgoing = (0..k)
        .map(|i| {
            let mut row: Vec<(usize, f64)> =
                params.trans.row(i).iter().copied().enumerate().collect();
            row.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
            row.truncate(3);
            row
        })
        .collect();
    TransitionReport {
        init: params.init.clone(),
        trans: params.trans.clone(),
        top_outgoing,
    }
}

/// On-disk JSON form of a behavior model.
#[derive(Debug, Serialize, Deserialize)]
pub struct BehaviorModelFile {
    pub kind: String,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "C")]
    pub c: usize,
    pub pi: Vec<f64>,
    #[serde(rename = "A", skip_serializing_if = "Option::is_none", default)]
    pub a: Option<Vec<Vec<f64>>>,
    #[serde(rename = "B", skip_serializing_if = "Option::is_none", default)]
    pub b: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub theta: Option<Vec<Vec<f64>>>,
    pub category_names: Vec<String>,
    pub seed: u64,
    pub final_loglik: f64,
}

impl BehaviorModelFile {
    pub fn from_model(
        model: &BehaviorModel,
        category_names: Vec<String>,
        seed: u64,
        final_loglik: f64,
    ) -> Self {
        match model {
            BehaviorModel::Mmm(p) => BehaviorModelFile {
                kind: "mmm".into(),
                k: p.n_states(),
                c: p.n_categories(),
                pi: p.mix.clone(),
                a: None,
                b: None,
                theta: Some(p.emit.to_rows()),
                category_names,
                seed,
                final_loglik,
            },
            BehaviorModel::Hmm(p) => BehaviorModelFile {
                kind: "hmm".into(),
                k: p.n_states(),
                c: p.n_categories(),
                pi: p.init.clone(),
                a: Some(p.trans.to_rows()),
                b: Some(p.emit.to_rows()),
                theta: None,
                category_names,
                seed,
                final_loglik,
            },
        }
    }

    pub fn into_model(self) -> Result<BehaviorModel> {
        let check_rows = |rows: &[Vec<f64>], cols: usize, what: &str| -> Result<()> {
            for r in rows {
                if r.len() != cols {
                    return Err(Error::invalid_model(format!("{what} row length mismatch")));
                }
                let sum: f64 = r.iter().sum();
                if (sum - 1.0).abs() > 1e-6 || r.iter().any(|&x| x < 0.0) {
                    return Err(Error::invalid_model(format!(
                        "{what} row is not stochastic"
                    )));
                }
            }
            Ok(())
        };
        if self.pi.len() != self.k {
            return Err(Error::invalid_model("pi length != K"));
        }
        check_rows(std::slice::from_ref(&self.pi), self.k, "pi")?;
        match self.kind.as_str() {
            "mmm" => {
                let theta = self
                    .theta
                    .ok_or_else(|| Error::invalid_model("mmm needs theta"))?;
                if theta.len() != self.k {
                    return Err(Error::invalid_model("theta rows != K"));
                }
                check_rows(&theta, self.c, "theta")?;
                Ok(BehaviorModel::Mmm(MmmParams {
                    mix: self.pi,
                    emit: Matrix::from_rows(theta),
                }))
            }
            "hmm" => {
                let a = self.a.ok_or_else(|| Error::invalid_model("hmm needs A"))?;
                let b = self.b.ok_or_else(|| Error::invalid_model("hmm needs B"))?;
                if a.len() != self.k || b.len() != self.k {
                    return Err(Error::invalid_model("A/B rows != K"));
                }
                check_rows(&a, self.k, "A")?;
                check_rows(&b, self.c, "B")?;
                Ok(BehaviorModel::Hmm(HmmParams {
                    init: self.pi,
                    trans: Matrix::from_rows(a),
                    emit: Matrix::from_rows(b),
                }))
            }
            other => Err(Error::invalid_model(format!(
                "unknown model kind '{other}'"
            ))),
        }
    }
}
