//! The t-test p-value against direct quadrature of the t density.

use moocflow_core::evaluation::stats::{ln_gamma, t_two_tailed_p};

fn t_pdf(x: f64, df: f64) -> f64 {
    let ln_norm =
        ln_gamma((df + 1.0) / 2.0) - ln_gamma(df / 2.0) - 0.5 * (df * std::f64::consts::PI).ln();
    (ln_norm - 0.5 * (df + 1.0) * (1.0 + x * x / df).ln()).exp()
}

/// Simpson's rule over [0, t].
fn simpson_cdf_from_zero(t: f64, df: f64, intervals: usize) -> f64 {
    let n = intervals + (intervals % 2); // even
    let h = t / n as f64;
    let mut acc = t_pdf(0.0, df) + t_pdf(t, df);
    for i in 1..n {
        let x = i as f64 * h;
        acc += t_pdf(x, df) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

#[test]
fn two_tailed_p_matches_quadrature_within_1e6() {
    for &df in &[1.0f64, 2.0, 3.0, 5.0, 8.0, 10.0, 18.0, 30.0, 100.0] {
        for &t in &[0.05f64, 0.3, 0.8, 1.5, 1.9590058081081436, 2.5, 3.5, 5.0] {
            let p_quad = 1.0 - 2.0 * simpson_cdf_from_zero(t, df, 60_000);
            let p_impl = t_two_tailed_p(t, df);
            assert!(
                (p_impl - p_quad).abs() < 1e-6,
                "df={df} t={t}: impl {p_impl} vs quadrature {p_quad}"
            );
        }
    }
}

#[test]
fn extreme_statistics_give_vanishing_p() {
    let p = t_two_tailed_p(50.0, 10.0);
    let p_quad = 1.0 - 2.0 * simpson_cdf_from_zero(50.0, 10.0, 200_000);
    assert!(p < 1e-9);
    assert!((p - p_quad).abs() < 1e-6);
}
