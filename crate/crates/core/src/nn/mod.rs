//! Minimal deterministic neural engine with explicit forward/backward for
//! a fixed layer set, Adam, and a finite-difference gradient checker.
//!
//! Training runs in f32; gradient checks build the same graphs in f64.
//! All intra-layer parallelism writes disjoint output slices and keeps every
//! floating-point reduction inside a single task, so multi-threaded and
//! single-threaded runs produce bit-identical results.

mod act;
mod adam;
mod blocks;
mod conv;
mod dense;
mod gradcheck;
mod init;
mod loss;
mod norm;
mod pool;
mod scalar;
mod sequential;
mod tensor;

pub use act::{Relu, Sigmoid};
pub use adam::{Adam, AdamConfig};
pub use blocks::{Res2NetBlock, SeBlock};
pub use conv::Conv2d;
pub use dense::Linear;
pub use gradcheck::{check_layer_gradients, grad_check, GradCheckReport};
pub use init::kaiming_uniform;
pub use loss::{bonafide_log_prob, softmax_xent};
pub use norm::BatchNorm2d;
pub use pool::{AdaptiveAvgPool2d, GlobalAvgPool};
pub use scalar::Scalar;
pub use sequential::Sequential;
pub use tensor::Tensor4;

use std::sync::atomic::{AtomicBool, Ordering};

use crate::error::Result;

static FORCE_SINGLE_THREAD: AtomicBool = AtomicBool::new(false);

/// Forces all layer math onto the calling thread (the `--deterministic`
/// contract). Results are bit-identical either way; this only trades speed.
pub fn set_single_threaded(v: bool) {
    FORCE_SINGLE_THREAD.store(v, Ordering::Relaxed);
}

pub fn single_threaded() -> bool {
    FORCE_SINGLE_THREAD.load(Ordering::Relaxed)
}

/// Forward-pass mode; affects batch-norm statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// A named trainable tensor with its gradient buffer.
#[derive(Debug, Clone)]
pub struct Param<S> {
    pub name: String,
    pub shape: Vec<usize>,
    pub value: Vec<S>,
    pub grad: Vec<S>,
}

impl<S: Scalar> Param<S> {
    pub fn new(name: impl Into<String>, shape: Vec<usize>, value: Vec<S>) -> Self {
        let n = value.len();
        debug_assert_eq!(n, shape.iter().product::<usize>());
        Param {
            name: name.into(),
            shape,
            value,
            grad: vec![S::ZERO; n],
        }
    }

    pub fn numel(&self) -> usize {
        self.value.len()
    }
}

/// A named non-trainable state tensor (e.g. batch-norm running statistics).
#[derive(Debug, Clone)]
pub struct StateBuffer<S> {
    pub name: String,
    pub value: Vec<S>,
}

/// Anything that owns parameters and state buffers.
pub trait HasParams<S: Scalar> {
    fn visit_params(&self, f: &mut dyn FnMut(&Param<S>));
    fn visit_params_mut(&mut self, f: &mut dyn FnMut(&mut Param<S>));
    fn visit_buffers(&self, f: &mut dyn FnMut(&StateBuffer<S>)) {
        let _ = f;
    }
    fn visit_buffers_mut(&mut self, f: &mut dyn FnMut(&mut StateBuffer<S>)) {
        let _ = f;
    }

    fn zero_grad(&mut self) {
        self.visit_params_mut(&mut |p| p.grad.iter_mut().for_each(|g| *g = S::ZERO));
    }

    /// Number of trainable scalars.
    fn param_count(&self) -> usize {
        let mut n = 0;
        self.visit_params(&mut |p| n += p.numel());
        n
    }
}

/// One differentiable operation. `forward` caches whatever `backward` needs;
/// a model is exclusively owned during a training step.
pub trait Layer<S: Scalar>: HasParams<S> + Send + Sync {
    fn name(&self) -> &str;
    fn forward(&mut self, x: &Tensor4<S>, mode: Mode) -> Result<Tensor4<S>>;
    /// Propagates the upstream gradient, accumulating parameter gradients
    /// and returning the input gradient.
    fn backward(&mut self, grad_out: &Tensor4<S>) -> Result<Tensor4<S>>;
    fn clone_box(&self) -> Box<dyn Layer<S>>;
}

impl<S: Scalar> Clone for Box<dyn Layer<S>> {
    fn clone(&self) -> Self {
        self.clone_box()
    }
}
