//! Elementwise activations.

use crate::error::{Error, Result};
use crate::nn::{HasParams, Layer, Mode, Param, Scalar, Tensor4};

/// ReLU with the derivative-at-zero convention relu'(0) = 0.
#[derive(Debug, Clone, Default)]
pub struct Relu<S> {
    name: String,
    cached_x: Option<Tensor4<S>>,
}

impl<S: Scalar> Relu<S> {
    pub fn new(name: impl Into<String>) -> Self {
        Relu {
            name: name.into(),
            cached_x: None,
        }
    }
}

impl<S: Scalar> HasParams<S> for Relu<S> {
    fn visit_params(&self, _f: &mut dyn FnMut(&Param<S>)) {}
    fn visit_params_mut(&mut self, _f: &mut dyn FnMut(&mut Param<S>)) {}
}

impl<S: Scalar> Layer<S> for Relu<S> {
    fn name(&self) -> &str {
        &self.name
    }

    fn forward(&mut self, x: &Tensor4<S>, _mode: Mode) -> Result<Tensor4<S>> {
        self.cached_x = Some(x.clone());
        Ok(x.map(|v| if v > S::ZERO { v } else { S::ZERO }))
    }

    fn backward(&mut self, grad_out: &Tensor4<S>) -> Result<Tensor4<S>> {
        let x = self
            .cached_x
            .as_ref()
            .ok_or_else(|| Error::Shape("relu backward before forward".into()))?;
        let mut g = grad_out.clone();
        for (gv, &xv) in g.data_mut().iter_mut().zip(x.data()) {
            if xv <= S::ZERO {
                *gv = S::ZERO;
            }
        }
        Ok(g)
    }

    fn clone_box(&self) -> Box<dyn Layer<S>> {
        Box::new(self.clone())
    }
}

/// Logistic sigmoid.
#[derive(Debug, Clone, Default)]
pub struct Sigmoid<S> {
    name: String,
    cached_y: Option<Tensor4<S>>,
}

impl<S: Scalar> Sigmoid<S> {
    pub fn new(name: impl Into<String>) -> Self {
        Sigmoid {
            name: name.into(),
            cached_y: None,
        }
    }
}

impl<S: Scalar> HasParams<S> for Sigmoid<S> {
    fn visit_params(&self, _f: &mut dyn FnMut(&Param<S>)) {}
    fn visit_params_mut(&mut self, _f: &mut dyn FnMut(&mut Param<S>)) {}
}

impl<S: Scalar> Layer<S> for Sigmoid<S> {
    fn name(&self) -> &str {
        &self.name
    }

    fn forward(&mut self, x: &Tensor4<S>, _mode: Mode) -> Result<Tensor4<S>> {
        let y = x.map(|v| S::ONE / (S::ONE + (-v).exp()));
        self.cached_y = Some(y.clone());
        Ok(y)
    }

    fn backward(&mut self, grad_out: &Tensor4<S>) -> Result<Tensor4<S>> {
        let y = self
            .cached_y
            .as_ref()
            .ok_or_else(|| Error::Shape("sigmoid backward before forward".into()))?;
        let mut g = grad_out.clone();
        for (gv, &yv) in g.data_mut().iter_mut().zip(y.data()) {
            *gv *= yv * (S::ONE - yv);
        }
        Ok(g)
    }

    fn clone_box(&self) -> Box<dyn Layer<S>> {
        Box::new(self.clone())
    }
}
