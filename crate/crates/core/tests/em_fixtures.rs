//! Single-EM-iteration fixtures with independently computed expectations,
//! a compensated-summation oracle for the emission log-likelihood, and
//! per-iteration monotonicity on random inputs.
//!
//! The fixture numbers were derived by exact rational arithmetic on the
//! stated parameters (responsibilities and M-step ratios are ratios of
//! products of the inputs), then rounded once to f64.

use moocflow_core::behavior::{
    emission_loglik, hmm_fit, hmm_fit_from, hmm_posteriors, mmm_fit, mmm_fit_from, mmm_posteriors,
    FitConfig, HmmParams, MmmParams,
};
use moocflow_core::numeric::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn assert_close(got: f64, want: f64, tol: f64, what: &str) {
    assert!((got - want).abs() < tol, "{what}: got {got}, want {want}");
}

#[test]
fn mmm_one_iteration_matches_hand_computation() {
    // K=2, C=2. pi = (0.6, 0.4); theta rows (0.8, 0.2) and (0.3, 0.7);
    // sessions (2,0), (0,2), (1,1).
    let params = MmmParams {
        mix: vec![0.6, 0.4],
        emit: Matrix::from_rows(vec![vec![0.8, 0.2], vec![0.3, 0.7]]),
    };
    let sessions = vec![vec![2u64, 0], vec![0, 2], vec![1, 1]];

    let (resp, ll) = mmm_posteriors(&sessions, &params).unwrap();
    // Responsibilities: r(n,0) = pi_0 prod theta_0^n / sum_k (same).
    // Session (2,0): (0.6*0.64, 0.4*0.09)ue -> 32/35, 3/35.
    let expect_resp = [
        [0.9142857142857143, 0.08571428571428572],
        [0.10909090909090909, 0.8909090909090909],
        [0.5333333333333333, 0.4666666666666667],
    ];
    for (n, want) in expect_resp.iter().enumerate() {
        assert_close(resp[n][0], want[0], 1e-9, "responsibility");
        assert_close(resp[n][1], want[1], 1e-9, "responsibility");
    }
    assert_close(ll, -4.096426728426425, 1e-9, "loglik");

    let cfg = FitConfig {
        n_states: 2,
        max_iter: 1,
        epsilon: 1e-8,
        ..FitConfig::default()
    };
    let (updated, trace) = mmm_fit_from(params, &sessions, &cfg).unwrap();
    assert_close(trace.logliks[0], -4.096426728426425, 1e-9, "trace ll");
    // M-step: pi = mean responsibility = (1798/3465, 1667/3465);
    // theta rows renormalize responsibility-weighted counts.
    assert_close(updated.mix[0], 0.5189033189033189, 1e-9, "pi0");
    assert_close(updated.mix[1], 0.4810966810966811, 1e-9, "pi1");
    assert_close(updated.emit.at(0, 0), 0.7586206896551724, 1e-9, "theta00");
    assert_close(updated.emit.at(0, 1), 0.2413793103448276, 1e-9, "theta01");
    assert_close(updated.emit.at(1, 0), 0.22105578884223157, 1e-9, "theta10");
    assert_close(updated.emit.at(1, 1), 0.7789442111577685, 1e-9, "theta11");
}

#[test]
fn baum_welch_one_iteration_matches_hand_computation() {
    // K=2, C=2, T=3. pi = (0.7, 0.3); A rows (0.8, 0.2), (0.4, 0.6);
    // B rows (0.9, 0.1), (0.2, 0.8); observations (1,0), (0,1), (2,0).
    let params = HmmParams {
        init: vec![0.7, 0.3],
        trans: Matrix::from_rows(vec![vec![0.8, 0.2], vec![0.4, 0.6]]),
        emit: Matrix::from_rows(vec![vec![0.9, 0.1], vec![0.2, 0.8]]),
    };
    let seq = vec![vec![1u64, 0], vec![0, 1], vec![2, 0]];

    let post = hmm_posteriors(&seq, &params).unwrap();
    assert_close(post.loglik, -2.5290140352997845, 1e-9, "loglik");
    let expect_gamma = [
        [0.8545629665302191, 0.14543703346978087],
        [0.43438478208523956, 0.5656152179147604],
        [0.9556946785456296, 0.044305321454370335],
    ];
    for (t, want) in expect_gamma.iter().enumerate() {
        assert_close(post.gammas[t][0], want[0], 1e-9, "gamma");
        assert_close(post.gammas[t][1], want[1], 1e-9, "gamma");
    }
    let expect_xi0 = [
        [0.4146400192631832, 0.4399229472670359],
        [0.019744762822056346, 0.12569227064772454],
    ];
    let expect_xi1 = [
        [0.4290874066939562, 0.005297375391283409],
        [0.5266072718516734, 0.039007946063086926],
    ];
    for i in 0..2 {
        for j in 0..2 {
            assert_close(post.xis[0].at(i, j), expect_xi0[i][j], 1e-9, "xi[0]");
            assert_close(post.xis[1].at(i, j), expect_xi1[i][j], 1e-9, "xi[1]");
        }
    }

    let cfg = FitConfig {
        n_states: 2,
        max_iter: 1,
        epsilon: 1e-8,
        ..FitConfig::default()
    };
    let (updated, _) = hmm_fit_from(params, &[seq], &cfg).unwrap();
    assert_close(updated.init[0], 0.8545629665302191, 1e-9, "pi0");
    assert_close(updated.init[1], 0.14543703346978087, 1e-9, "pi1");
    let expect_a = [
        [0.654586213338315, 0.34541378666168504],
        [0.7683711479850999, 0.2316288520149001],
    ];
    let expect_b = [
        [0.864269054247235, 0.13573094575276504],
        [0.2926829268292683, 0.7073170731707317],
    ];
    for i in 0..2 {
        for j in 0..2 {
            assert_close(updated.trans.at(i, j), expect_a[i][j], 1e-9, "A");
            assert_close(updated.emit.at(i, j), expect_b[i][j], 1e-9, "B");
        }
    }
}

#[test]
fn emission_loglik_matches_compensated_summation() {
    // Kahan-compensated reference accumulation of the same terms.
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..500 {
        let c = rng.gen_range(2..=30);
        let mut counts: Vec<u64> = (0..c).map(|_| rng.gen_range(0..40)).collect();
        if counts.iter().all(|&x| x == 0) {
            counts[0] = 1;
        }
        let mut row: Vec<f64> = (0..c).map(|_| rng.gen_range(1e-6..1.0)).collect();
        let sum: f64 = row.iter().sum();
        for v in &mut row {
            *v /= sum;
        }

        let mut acc = 0.0f64;
        let mut comp = 0.0f64;
        for (&n, &p) in counts.iter().zip(&row) {
            let term = n as f64 * p.ln();
            let y = term - comp;
            let t = acc + y;
            comp = (t - acc) - y;
            acc = t;
        }
        let got = emission_loglik(&counts, &row).unwrap();
        assert!(
            (got - acc).abs() < 1e-12 * acc.abs().max(1.0),
            "got {got}, reference {acc}"
        );
    }
}

fn random_sessions(rng: &mut ChaCha8Rng, n: usize, c: usize) -> Vec<Vec<u64>> {
    (0..n)
        .map(|_| {
            let mut v: Vec<u64> = (0..c).map(|_| rng.gen_range(0..6)).collect();
            if v.iter().all(|&x| x == 0) {
                v[rng.gen_range(0..c)] = 1;
            }
            v
        })
        .collect()
}

#[test]
fn em_loglik_never_decreases_on_random_inputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(64);
    for trial in 0..8 {
        let c = rng.gen_range(2..=6);
        let sessions = random_sessions(&mut rng, 60, c);
        let cfg = FitConfig {
            n_states: rng.gen_range(1..=4),
            max_iter: 60,
            seed: trial,
            ..FitConfig::default()
        };
        let (_, trace) = mmm_fit(&sessions, &cfg).unwrap();
        for w in trace.logliks.windows(2) {
            assert!(w[1] - w[0] >= -1e-8, "mmm delta {}", w[1] - w[0]);
        }

        let sequences: Vec<Vec<Vec<u64>>> = sessions.chunks(5).map(|ch| ch.to_vec()).collect();
        let (_, trace) = hmm_fit(&sequences, &cfg).unwrap();
        for w in trace.logliks.windows(2) {
            assert!(w[1] - w[0] >= -1e-8, "hmm delta {}", w[1] - w[0]);
        }
    }
}
