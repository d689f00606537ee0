use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// First/second moment buffers and the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    cfg: AdamConfig,
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
}

impl Adam {
    pub fn new(num_params: usize, cfg: AdamConfig) -> Self {
        Self { cfg, m: vec![0.0; num_params], v: vec![0.0; num_params], step: 0 }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn moments(&self) -> (&[f64], &[f64]) {
        (&self.m, &self.v)
    }

    /// One bias-corrected Adam update of `params` in place.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        assert_eq!(params.len(), self.m.len(), "parameter count changed under the optimizer");
        assert_eq!(grads.len(), self.m.len(), "gradient shape mismatch");
        self.step += 1;
        let AdamConfig { lr, beta1, beta2, eps } = self.cfg;
        let c1 = 1.0 - beta1.powi(self.step as i32);
        let c2 = 1.0 - beta2.powi(self.step as i32);
        for (((p, &g), m), v) in params.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut opt = Adam::new(3, AdamConfig::default());
        let mut p = vec![1.0, -2.0, 0.5];
        opt.step(&mut p, &[0.0; 3]);
        assert_eq!(p, vec![1.0, -2.0, 0.5]);
        assert_eq!(opt.step_count(), 1);
    }

    #[test]
    fn first_step_is_sign_like() {
        let cfg = AdamConfig::default();
        let mut opt = Adam::new(3, cfg);
        let g = [0.3, -4.0, 1e-9];
        let mut p = vec![0.0; 3];
        opt.step(&mut p, &g);
        for j in 0..3 {
            let expected = -cfg.lr * g[j] / (g[j].abs() + cfg.eps);
            assert!((p[j] - expected).abs() < 1e-15, "{} vs {expected}", p[j]);
        }
    }

    #[test]
    fn constant_gradient_steps_approach_learning_rate() {
        let cfg = AdamConfig::default();
        let mut opt = Adam::new(2, cfg);
        let mut p = vec![0.0, 0.0];
        let g = [2.5, -0.01];
        let mut prev = p.clone();
        for _ in 0..5000 {
            opt.step(&mut p, &g);
            let d0 = p[0] - prev[0];
            let d1 = p[1] - prev[1];
            assert!(d0 < 0.0 && d1 > 0.0);
            prev = p.clone();
        }
        let mut last = p.clone();
        opt.step(&mut last, &g);
        assert!(((p[0] - last[0]).abs() - cfg.lr).abs() < 1e-6);
        assert!(((last[1] - p[1]).abs() - cfg.lr).abs() < 1e-6);
    }
}
