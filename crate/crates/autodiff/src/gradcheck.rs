//! Central finite-difference gradient verification.

use crate::tape::{Tape, Var};
use crate::tensor::Tensor;

/// Default step for central differences in f64.
pub const DEFAULT_STEP: f64 = 1e-5;

/// Below this magnitude the error is reported absolutely instead of
/// relatively, so near-zero gradients do not blow up the ratio.
const REL_FLOOR: f64 = 1e-6;

/// Compare analytic gradients of `build` against central finite differences
/// at the given inputs. Returns the max relative error over all input
/// coordinates.
///
/// `build` must construct a scalar loss from leaves handed to it; it is
/// re-invoked on perturbed copies of the inputs, so it must be a pure
/// function of them.
pub fn grad_check<F>(build: F, inputs: &[Tensor<f64>], step: f64) -> f64
where
    F: for<'t> Fn(&'t Tape<f64>, &[Var<'t, f64>]) -> Var<'t, f64>,
{
    let tape = Tape::new();
    let vars: Vec<Var<'_, f64>> = inputs.iter().map(|t| tape.leaf(t, true)).collect();
    let loss = build(&tape, &vars);
    let grads = tape.backward(loss);
    let analytic: Vec<Tensor<f64>> = vars.iter().map(|v| grads.get(*v)).collect();

    let eval = |perturbed: &[Tensor<f64>]| -> f64 {
        let tape = Tape::new();
        let vars: Vec<Var<'_, f64>> = perturbed.iter().map(|t| tape.leaf(t, false)).collect();
        build(&tape, &vars).scalar_value()
    };

    let mut max_err = 0.0f64;
    for i in 0..inputs.len() {
        for j in 0..inputs[i].numel() {
            let mut plus = inputs.to_vec();
            plus[i].data_mut()[j] += step;
            let mut minus = inputs.to_vec();
            minus[i].data_mut()[j] -= step;
            let fd = (eval(&plus) - eval(&minus)) / (2.0 * step);
            let a = analytic[i].data()[j];
            let denom = a.abs().max(fd.abs());
            let err = if denom < REL_FLOOR {
                (a - fd).abs()
            } else {
                (a - fd).abs() / denom
            };
            if err > max_err {
                max_err = err;
            }
        }
    }
    max_err
}
