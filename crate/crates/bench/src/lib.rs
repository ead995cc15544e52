//! Fixture builders shared by the criterion benches.

use moocflow_core::behavior::HmmParams;
use moocflow_core::numeric::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_row(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut row: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    let sum: f64 = row.iter().sum();
    for v in &mut row {
        *v /= sum;
    }
    row
}

pub fn random_hmm(seed: u64, k: usize, c: usize) -> HmmParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    HmmParams {
        init: random_row(&mut rng, k),
        trans: Matrix::from_rows((0..k).map(|_| random_row(&mut rng, k)).collect()),
        emit: Matrix::from_rows((0..k).map(|_| random_row(&mut rng, c)).collect()),
    }
}

pub fn random_sequences(seed: u64, n: usize, t_len: usize, c: usize) -> Vec<Vec<Vec<u64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            (0..t_len)
                .map(|_| {
                    let mut counts: Vec<u64> = (0..c).map(|_| rng.gen_range(0..4)).collect();
                    if counts.iter().all(|&x| x == 0) {
                        counts[0] = 1;
                    }
                    counts
                })
                .collect()
        })
        .collect()
}

pub fn random_tokens(seed: u64, n: usize, t_len: usize, vocab: u32) -> Vec<Vec<u32>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| (0..t_len).map(|_| rng.gen_range(0..vocab)).collect())
        .collect()
}
