//! Adam over flat parameter vectors, plus a finite-difference checker.

/// Adam with bias correction. State is sized to the parameter vector.
#[derive(Clone, Debug)]
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    pub fn new(lr: f64, beta1: f64, beta2: f64, eps: f64, dim: usize) -> Self {
        Adam {
            lr,
            beta1,
            beta2,
            eps,
            m: vec![0.0; dim],
            v: vec![0.0; dim],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        assert_eq!(params.len(), grad.len());
        assert_eq!(params.len(), self.m.len());
        self.t += 1;
        let b1t = 1.0 - self.beta1.powi(self.t as i32);
        let b2t = 1.0 - self.beta2.powi(self.t as i32);
        for j in 0..params.len() {
            self.m[j] = self.beta1 * self.m[j] + (1.0 - self.beta1) * grad[j];
            self.v[j] = self.beta2 * self.v[j] + (1.0 - self.beta2) * grad[j] * grad[j];
            let m_hat = self.m[j] / b1t;
            let v_hat = self.v[j] / b2t;
            params[j] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

/// Max relative error between an analytic gradient and central finite
/// differences of `loss`, over every parameter.
pub fn finite_diff_max_rel_err<F>(loss: F, params: &[f64], analytic: &[f64], h: f64) -> f64
where
    F: Fn(&[f64]) -> f64,
{
    assert_eq!(params.len(), analytic.len());
    let mut work = params.to_vec();
    let mut worst = 0.0f64;
    for j in 0..params.len() {
        let orig = work[j];
        work[j] = orig + h;
        let up = loss(&work);
        work[j] = orig - h;
        let down = loss(&work);
        work[j] = orig;
        let numeric = (up - down) / (2.0 * h);
        let denom = analytic[j].abs().max(numeric.abs()).max(1e-8);
        let err = (analytic[j] - numeric).abs() / denom;
        if err > worst {
            worst = err;
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adam_zero_gradient_leaves_params_unchanged() {
        let mut adam = Adam::new(0.1, 0.9, 0.999, 1e-8, 3);
        let mut params = vec![1.0, -2.0, 0.5];
        adam.step(&mut params, &[0.0, 0.0, 0.0]);
        assert_eq!(params, vec![1.0, -2.0, 0.5]);
    }

    #[test]
    fn adam_descends_a_quadratic() {
        let mut adam = Adam::new(0.05, 0.9, 0.999, 1e-8, 1);
        let mut params = vec![3.0];
        for _ in 0..500 {
            let grad = vec![2.0 * params[0]];
            adam.step(&mut params, &grad);
        }
        assert!(params[0].abs() < 0.05, "got {}", params[0]);
    }

    #[test]
    fn finite_diff_agrees_on_analytic_quadratic() {
        let loss = |p: &[f64]| p[0] * p[0] + 3.0 * p[1];
        let params = [1.5, -0.7];
        let analytic = [3.0, 3.0];
        let err = finite_diff_max_rel_err(loss, &params, &analytic, 1e-5);
        assert!(err < 1e-7, "err {err}");
    }
}
