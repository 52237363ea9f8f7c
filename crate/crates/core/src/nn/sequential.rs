//! Layer chaining.

use crate::error::Result;
use crate::nn::{HasParams, Layer, Mode, Param, Scalar, StateBuffer, Tensor4};

/// Runs layers in order; backward walks them in reverse.
#[derive(Clone)]
pub struct Sequential<S: Scalar> {
    name: String,
    layers: Vec<Box<dyn Layer<S>>>,
}

impl<S: Scalar> Sequential<S> {
    pub fn new(name: impl Into<String>) -> Self {
        Sequential {
            name: name.into(),
            layers: Vec::new(),
        }
    }

    pub fn push(&mut self, layer: Box<dyn Layer<S>>) -> &mut Self {
        self.layers.push(layer);
        self
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    pub fn layers_mut(&mut self) -> &mut [Box<dyn Layer<S>>] {
        &mut self.layers
    }
}

impl<S: Scalar> HasParams<S> for Sequential<S> {
    fn visit_params(&self, f: &mut dyn FnMut(&Param<S>)) {
        for l in &self.layers {
            l.visit_params(f);
        }
    }

    fn visit_params_mut(&mut self, f: &mut dyn FnMut(&mut Param<S>)) {
        for l in &mut self.layers {
            l.visit_params_mut(f);
        }
    }

    fn visit_buffers(&self, f: &mut dyn FnMut(&StateBuffer<S>)) {
        for l in &self.layers {
            l.visit_buffers(f);
        }
    }

    fn visit_buffers_mut(&mut self, f: &mut dyn FnMut(&mut StateBuffer<S>)) {
        for l in &mut self.layers {
            l.visit_buffers_mut(f);
        }
    }
}

impl<S: Scalar> Layer<S> for Sequential<S> {
    fn name(&self) -> &str {
        &self.name
    }

    fn forward(&mut self, x: &Tensor4<S>, mode: Mode) -> Result<Tensor4<S>> {
        let mut cur = x.clone();
        for l in &mut self.layers {
            cur = l.forward(&cur, mode)?;
        }
        Ok(cur)
    }

    fn backward(&mut self, grad_out: &Tensor4<S>) -> Result<Tensor4<S>> {
        let mut cur = grad_out.clone();
        for l in self.layers.iter_mut().rev() {
            cur = l.backward(&cur)?;
        }
        Ok(cur)
    }

    fn clone_box(&self) -> Box<dyn Layer<S>> {
        Box::new(self.clone())
    }
}
