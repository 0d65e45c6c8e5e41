//! Adam with bias correction and L2 weight decay.

use crate::params::ParamSet;
use crate::real::Real;
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    /// false: decay is added to the gradient before the moment updates
    /// (coupled L2, the conventional default). true: decoupled (AdamW-style)
    /// decay applied directly to the parameter update.
    pub decoupled_decay: bool,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.0,
            decoupled_decay: false,
        }
    }
}

/// Per-parameter first/second moment state. Moment tensors are allocated on
/// first use and always mirror their parameter's shape.
pub struct AdamState<T> {
    cfg: AdamConfig,
    step: u64,
    m: Vec<Tensor<T>>,
    v: Vec<Tensor<T>>,
}

impl<T: Real> AdamState<T> {
    pub fn new(cfg: AdamConfig) -> Self {
        AdamState {
            cfg,
            step: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn config(&self) -> &AdamConfig {
        &self.cfg
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One update over `indices` into `params`, with `grads[i]` the gradient
    /// of `params[indices[i]]`. Every tracked parameter must have a gradient.
    pub fn step(&mut self, params: &mut ParamSet<T>, indices: &[usize], grads: &[Tensor<T>]) {
        assert_eq!(
            indices.len(),
            grads.len(),
            "adam_step: {} parameters tracked but {} gradients supplied",
            indices.len(),
            grads.len()
        );
        if self.m.is_empty() {
            self.m = indices
                .iter()
                .map(|&i| Tensor::zeros(params.tensor(i).shape()))
                .collect();
            self.v = self.m.clone();
        }
        assert_eq!(
            self.m.len(),
            indices.len(),
            "adam_step: state tracks {} parameters, got {}",
            self.m.len(),
            indices.len()
        );
        self.step += 1;
        let t = self.step as i32;
        let bc1 = T::from_f64(1.0 - self.cfg.beta1.powi(t));
        let bc2 = T::from_f64(1.0 - self.cfg.beta2.powi(t));
        let beta1 = T::from_f64(self.cfg.beta1);
        let beta2 = T::from_f64(self.cfg.beta2);
        let one_m_b1 = T::from_f64(1.0 - self.cfg.beta1);
        let one_m_b2 = T::from_f64(1.0 - self.cfg.beta2);
        let lr = T::from_f64(self.cfg.lr);
        let eps = T::from_f64(self.cfg.eps);
        let wd = T::from_f64(self.cfg.weight_decay);

        for (slot, (&pi, grad)) in indices.iter().zip(grads.iter()).enumerate() {
            assert_eq!(
                params.tensor(pi).shape(),
                grad.shape(),
                "adam_step: gradient shape {:?} != parameter {:?} ({})",
                grad.shape(),
                params.tensor(pi).shape(),
                params.name(pi)
            );
            let m = self.m[slot].data_mut();
            let v = self.v[slot].data_mut();
            let p = params.tensor_mut(pi).data_mut();
            let g = grad.data();
            for j in 0..p.len() {
                let mut gj = g[j];
                if !self.cfg.decoupled_decay {
                    gj += wd * p[j];
                }
                m[j] = beta1 * m[j] + one_m_b1 * gj;
                v[j] = beta2 * v[j] + one_m_b2 * gj * gj;
                let m_hat = m[j] / bc1;
                let v_hat = v[j] / bc2;
                let mut update = m_hat / (v_hat.sqrt() + eps);
                if self.cfg.decoupled_decay {
                    update += wd * p[j];
                }
                p[j] -= lr * update;
            }
        }
    }
}
