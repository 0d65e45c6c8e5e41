//! Dense tensors with reverse-mode automatic differentiation.
//!
//! Design notes:
//! - A [`Tape`] records one computation graph; leaves are copied in, nodes
//!   are appended in topological order, and [`Tape::backward`] does a single
//!   reverse sweep. One forward/backward pass per tape; independent tapes
//!   can run on independent threads.
//! - Precision is a type parameter: f32 for training, f64 for oracles and
//!   finite-difference checks.
//! - Reductions use a fixed lane-split order so repeated runs are
//!   bit-identical.

mod adam;
mod checkpoint;
mod gradcheck;
mod kernels;
mod ops;
mod params;
mod real;
mod tape;
mod tensor;

pub use adam::{AdamConfig, AdamState};
pub use checkpoint::{load as load_checkpoint, save as save_checkpoint, CheckpointError};
pub use gradcheck::{grad_check, DEFAULT_STEP};
pub use ops::concat;
pub use params::ParamSet;
pub use real::{Precision, Real};
pub use tape::{Gradients, Tape, ValueView, Var};
pub use tensor::{numel, Tensor};
