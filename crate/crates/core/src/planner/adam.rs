/// Adaptive-moment ascent state for a parameter vector.
#[derive(Debug, Clone)]
pub struct Adam {
    beta1: f64,
    beta2: f64,
    eps: f64,
    beta1_t: f64,
    beta2_t: f64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(dim: usize, beta1: f64, beta2: f64, eps: f64) -> Self {
        Self {
            beta1,
            beta2,
            eps,
            beta1_t: 1.0,
            beta2_t: 1.0,
            m: vec![0.0; dim],
            v: vec![0.0; dim],
        }
    }

    /// One ascent step `θ += lr · m̂ / (√v̂ + ε)`.
    pub fn ascend(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.beta1_t *= self.beta1;
        self.beta2_t *= self.beta2;
        let c1 = 1.0 - self.beta1_t;
        let c2 = 1.0 - self.beta2_t;
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] += lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}
