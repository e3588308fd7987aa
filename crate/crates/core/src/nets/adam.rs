/// Bias-corrected Adam.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// First-moment accumulator.
    pub m: Vec<f64>,
    /// Second-moment accumulator.
    pub v: Vec<f64>,
    pub step: u64,
}

impl AdamState {
    pub fn new(n_params: usize, learning_rate: f64) -> Self {
        AdamState {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            step: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        assert_eq!(params.len(), self.m.len(), "parameter count");
        assert_eq!(grads.len(), self.m.len(), "gradient count");
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for ((p, &g), (m, v)) in params.iter_mut().zip(grads).zip(self.m.iter_mut().zip(self.v.iter_mut())) {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut s = AdamState::new(3, 0.01);
        let mut p = vec![1.0, 2.0, 3.0];
        s.step(&mut p, &[0.0; 3]);
        assert_eq!(p, vec![1.0, 2.0, 3.0]);
        assert_eq!(s.step, 1);

        // Accumulated moments only decay under a zero gradient.
        s.m = vec![0.5, -0.2, 0.0];
        s.v = vec![0.3, 0.1, 0.0];
        s.step(&mut p, &[0.0; 3]);
        assert_eq!(s.m, vec![0.9 * 0.5, 0.9 * -0.2, 0.0]);
        assert_eq!(s.v, vec![0.999 * 0.3, 0.999 * 0.1, 0.0]);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        for g in [3.0, -0.02, 1e-3] {
            let mut s = AdamState::new(1, 1e-3);
            let mut p = [0.0];
            s.step(&mut p, &[g]);
            assert!((p[0] + 1e-3 * f64::signum(g)).abs() < 1e-6, "{g}: {}", p[0]);
        }
    }

    #[test]
    fn two_step_trace() {
        // Recurrence evaluated by hand for g = (0.5, -1.0), lr = 0.1.
        let (b1, b2, eps, lr) = (0.9f64, 0.999f64, 1e-8, 0.1);
        let mut m = 0.0;
        let mut v = 0.0;
        let mut p = 1.0;
        for (t, g) in [(1, 0.5), (2, -1.0)] {
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            p -= lr * (m / (1.0 - b1.powi(t))) / ((v / (1.0 - b2.powi(t))).sqrt() + eps);
        }
        let mut s = AdamState::new(1, lr);
        let mut q = [1.0];
        s.step(&mut q, &[0.5]);
        s.step(&mut q, &[-1.0]);
        assert!((q[0] - p).abs() < 1e-15);
        // m2 = 0.9*0.05 - 0.1 = -0.055, v2 = 0.999*0.00025 + 0.001 = 0.00124975
        // m̂ = -0.055/0.19, v̂ = 0.00124975/0.001999
        let expected = 1.0 - 0.1 * 0.5 / (0.5 + 1e-8) + 0.1 * (0.055 / 0.19) / ((0.00124975f64 / 0.001999).sqrt() + 1e-8);
        assert!((q[0] - expected).abs() < 1e-12, "{} vs {expected}", q[0]);
    }
}
