//! Small numeric building blocks shared by the model-fitting modules.

use rand::Rng;
use rand_distr::{Distribution, Gamma};

/// Dense row-major matrix of `f64`.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let n = rows.len();
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        let mut data = Vec::with_capacity(n * cols);
        for r in rows {
            data.extend_from_slice(&r);
        }
        Matrix {
            rows: n,
            cols,
            data,
        }
    }

    pub fn from_flat(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }
}

/// log(sum(exp(xs))), computed against the running maximum.
pub fn logsumexp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = xs.iter().map(|&x| (x - max).exp()).sum();
    max + sum.ln()
}

/// Maximizer of `sum_c w[c] * ln(p[c])` over the simplex with every entry
/// floored at `eps`. Entries whose weight would push them below the floor
/// clamp to `eps`; the rest split the remaining mass proportionally.
///
/// With all-zero weights the result is uniform. Requires `eps * len < 1`.
pub fn floored_simplex_fit(weights: &[f64], eps: f64) -> Vec<f64> {
    let n = weights.len();
    assert!(n > 0 && eps > 0.0 && eps * (n as f64) < 1.0);
    debug_assert!(weights.iter().all(|&w| w >= 0.0));

    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return vec![1.0 / n as f64; n];
    }

    let mut clamped = vec![false; n];
    loop {
        let n_clamped = clamped.iter().filter(|&&c| c).count();
        let free_mass = 1.0 - eps * n_clamped as f64;
        let free_weight: f64 = weights
            .iter()
            .zip(&clamped)
            .filter(|(_, &c)| !c)
            .map(|(&w, _)| w)
            .sum();
        if free_weight <= 0.0 {
            // Everything meaningful is clamped; spread the rest uniformly.
            let n_free = n - n_clamped;
            let fill = if n_free > 0 {
                free_mass / n_free as f64
            } else {
                0.0
            };
            return (0..n)
                .map(|c| if clamped[c] { eps } else { fill })
                .collect();
        }
        let scale = free_mass / free_weight;
        let mut newly_clamped = false;
        for c in 0..n {
            if !clamped[c] && weights[c] * scale < eps {
                clamped[c] = true;
                newly_clamped = true;
            }
        }
        if !newly_clamped {
            return (0..n)
                .map(|c| if clamped[c] { eps } else { weights[c] * scale })
                .collect();
        }
    }
}

/// Draw from a symmetric Dirichlet(alpha) of dimension `n`.
pub fn sample_dirichlet_symmetric<R: Rng>(rng: &mut R, n: usize, alpha: f64) -> Vec<f64> {
    sample_dirichlet(rng, &vec![alpha; n])
}

/// Draw from Dirichlet(alphas) via independent Gamma variates.
pub fn sample_dirichlet<R: Rng>(rng: &mut R, alphas: &[f64]) -> Vec<f64> {
    let mut draws: Vec<f64> = alphas
        .iter()
        .map(|&a| {
            let gamma = Gamma::new(a.max(1e-3), 1.0).expect("gamma shape");
            gamma.sample(rng)
        })
        .collect();
    let total: f64 = draws.iter().sum();
    if total <= 0.0 {
        return vec![1.0 / alphas.len() as f64; alphas.len()];
    }
    for d in &mut draws {
        *d /= total;
    }
    draws
}

/// Numerically stable logistic function.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Binary cross entropy from the raw logit, stable for large |z|.
pub fn bce_from_logit(logit: f64, label: f64) -> f64 {
    logit.max(0.0) - logit * label + (-logit.abs()).exp().ln_1p()
}

/// Derive an independent stream seed from a base seed (splitmix64 finalizer).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Index of the maximum entry, lowest index on ties.
pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn logsumexp_matches_naive_on_small_values() {
        let xs = [-1.0f64, -2.0, -3.0];
        let naive: f64 = xs.iter().map(|x| x.exp()).sum::<f64>().ln();
        assert_abs_diff_eq!(logsumexp(&xs), naive, epsilon = 1e-12);
    }

    #[test]
    fn logsumexp_handles_extreme_magnitudes() {
        let xs = [-1000.0, -1000.5];
        let got = logsumexp(&xs);
        assert!(got.is_finite());
        assert_abs_diff_eq!(got, -1000.0 + (1.0 + (-0.5f64).exp()).ln(), epsilon = 1e-12);
        assert_eq!(logsumexp(&[]), f64::NEG_INFINITY);
    }

    #[test]
    fn floored_fit_plain_normalization_when_interior() {
        let p = floored_simplex_fit(&[2.0, 6.0], 1e-8);
        assert_abs_diff_eq!(p[0], 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(p[1], 0.75, epsilon = 1e-15);
    }

    #[test]
    fn floored_fit_clamps_zero_weights() {
        let eps = 1e-6;
        let p = floored_simplex_fit(&[0.0, 1.0, 3.0], eps);
        assert_eq!(p[0], eps);
        assert_abs_diff_eq!(p.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        assert!(p.iter().all(|&x| x >= eps));
        // Remaining mass split 1:3.
        assert_abs_diff_eq!(p[2] / p[1], 3.0, epsilon = 1e-9);
    }

    #[test]
    fn floored_fit_all_zero_is_uniform() {
        let p = floored_simplex_fit(&[0.0, 0.0], 1e-8);
        assert_eq!(p, vec![0.5, 0.5]);
    }

    #[test]
    fn floored_fit_improves_weighted_loglik_over_feasible_points() {
        // The fit should beat any other feasible candidate on the objective.
        let w = [5.0, 1.0, 0.0001, 2.0];
        let eps = 1e-3;
        let opt = floored_simplex_fit(&w, eps);
        let obj = |p: &[f64]| -> f64 { w.iter().zip(p).map(|(wi, pi)| wi * pi.ln()).sum() };
        let candidates = [
            vec![0.25, 0.25, 0.25, 0.25],
            floored_simplex_fit(&[1.0, 1.0, 1.0, 5.0], eps),
            floored_simplex_fit(&[5.0, 1.0, 1.0, 2.0], eps),
        ];
        for cand in &candidates {
            assert!(obj(&opt) >= obj(cand) - 1e-12);
        }
    }

    #[test]
    fn dirichlet_draws_are_stochastic_vectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let p = sample_dirichlet(&mut rng, &[0.5, 2.0, 10.0]);
            assert_abs_diff_eq!(p.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
            assert!(p.iter().all(|&x| x >= 0.0));
        }
    }

    #[test]
    fn sigmoid_is_stable_at_extremes() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(800.0) <= 1.0 && sigmoid(800.0) > 0.999);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(-800.0) < 1e-3);
    }

    #[test]
    fn bce_matches_direct_formula_in_safe_range() {
        for &(z, y) in &[(0.3, 1.0), (-1.2, 0.0), (2.0, 0.0), (-0.5, 1.0)] {
            let p = sigmoid(z);
            let direct = -(y * p.ln() + (1.0 - y) * (1.0 - p).ln());
            assert_abs_diff_eq!(bce_from_logit(z, y), direct, epsilon = 1e-12);
        }
    }

    #[test]
    fn argmax_breaks_ties_low() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0, 2.0]), 1);
        assert_eq!(argmax(&[0.0]), 0);
    }
}
