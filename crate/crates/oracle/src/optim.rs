//! Scripted Adam recurrence for checking the optimizer step by step.

pub struct AdamRef {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    pub decoupled: bool,
}

impl AdamRef {
    /// Advance `params` through `grads_per_step`, returning the trajectory
    /// after every step (not including the initial point).
    pub fn run(&self, params: &[f64], grads_per_step: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let mut next = grads_per_step.iter().cloned();
        self.run_with(params, grads_per_step.len(), |_| {
            next.next().expect("gradient list exhausted")
        })
    }

    /// Same recurrence, but gradients are produced from the current point.
    pub fn run_with(
        &self,
        params: &[f64],
        steps: usize,
        mut grad_fn: impl FnMut(&[f64]) -> Vec<f64>,
    ) -> Vec<Vec<f64>> {
        let n = params.len();
        let mut p = params.to_vec();
        let mut m = vec![0.0; n];
        let mut v = vec![0.0; n];
        let mut out = Vec::new();
        for step in 0..steps {
            let grads = grad_fn(&p);
            assert_eq!(grads.len(), n);
            let t = (step + 1) as f64;
            for i in 0..n {
                let g = if self.decoupled {
                    grads[i]
                } else {
                    grads[i] + self.weight_decay * p[i]
                };
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g;
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g * g;
                let m_hat = m[i] / (1.0 - self.beta1.powf(t));
                let v_hat = v[i] / (1.0 - self.beta2.powf(t));
                let mut update = m_hat / (v_hat.sqrt() + self.eps);
                if self.decoupled {
                    update += self.weight_decay * p[i];
                }
                p[i] -= self.lr * update;
            }
            out.push(p.clone());
        }
        out
    }
}
