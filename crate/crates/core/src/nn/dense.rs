//! Fully connected layer over flattened `C*H*W` features.

use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::nn::init::{bias_uniform, kaiming_uniform};
use crate::nn::{HasParams, Layer, Mode, Param, Scalar, Tensor4};

#[derive(Debug, Clone)]
pub struct Linear<S> {
    name: String,
    weight: Param<S>, // [out, in]
    bias: Param<S>,   // [out]
    in_features: usize,
    out_features: usize,
    cached_x: Option<Tensor4<S>>,
}

impl<S: Scalar> Linear<S> {
    pub fn new(
        name: impl Into<String>,
        in_features: usize,
        out_features: usize,
        rng: &mut ChaCha12Rng,
    ) -> Self {
        let name = name.into();
        let weight = Param::new(
            format!("{name}.weight"),
            vec![out_features, in_features],
            kaiming_uniform(out_features * in_features, in_features, rng),
        );
        let bias = Param::new(
            format!("{name}.bias"),
            vec![out_features],
            bias_uniform(out_features, in_features, rng),
        );
        Linear {
            name,
            weight,
            bias,
            in_features,
            out_features,
            cached_x: None,
        }
    }

    pub fn weight_mut(&mut self) -> &mut Param<S> {
        &mut self.weight
    }

    pub fn bias_mut(&mut self) -> &mut Param<S> {
        &mut self.bias
    }
}

impl<S: Scalar> HasParams<S> for Linear<S> {
    fn visit_params(&self, f: &mut dyn FnMut(&Param<S>)) {
        f(&self.weight);
        f(&self.bias);
    }

    fn visit_params_mut(&mut self, f: &mut dyn FnMut(&mut Param<S>)) {
        f(&mut self.weight);
        f(&mut self.bias);
    }
}

impl<S: Scalar> Layer<S> for Linear<S> {
    fn name(&self) -> &str {
        &self.name
    }

    fn forward(&mut self, x: &Tensor4<S>, _mode: Mode) -> Result<Tensor4<S>> {
        let [b, c, h, w] = x.shape();
        let in_f = c * h * w;
        if in_f != self.in_features {
            return Err(Error::Shape(format!(
                "{}: expected {} input features, got {in_f}",
                self.name, self.in_features
            )));
        }
        let mut out = Tensor4::zeros([b, self.out_features, 1, 1]);
        for bi in 0..b {
            let x_row = &x.data()[bi * in_f..(bi + 1) * in_f];
            for of in 0..self.out_features {
                let w_row = &self.weight.value[of * in_f..(of + 1) * in_f];
                let mut acc = self.bias.value[of];
                for (wv, xv) in w_row.iter().zip(x_row) {
                    acc += *wv * *xv;
                }
                *out.at_mut(bi, of, 0, 0) = acc;
            }
        }
        self.cached_x = Some(x.clone());
        Ok(out)
    }

    fn backward(&mut self, grad_out: &Tensor4<S>) -> Result<Tensor4<S>> {
        let x = self
            .cached_x
            .as_ref()
            .ok_or_else(|| Error::Shape(format!("{}: backward before forward", self.name)))?;
        let [b, ..] = x.shape();
        let in_f = self.in_features;
        if grad_out.shape() != [b, self.out_features, 1, 1] {
            return Err(Error::Shape(format!(
                "{}: upstream gradient shape {:?} inconsistent",
                self.name,
                grad_out.shape()
            )));
        }

        for of in 0..self.out_features {
            let mut acc = S::ZERO;
            for bi in 0..b {
                acc += grad_out.at(bi, of, 0, 0);
            }
            self.bias.grad[of] += acc;
        }
        for of in 0..self.out_features {
            let gw = &mut self.weight.grad[of * in_f..(of + 1) * in_f];
            for bi in 0..b {
                let g = grad_out.at(bi, of, 0, 0);
                let x_row = &x.data()[bi * in_f..(bi + 1) * in_f];
                for (gwv, xv) in gw.iter_mut().zip(x_row) {
                    *gwv += g * *xv;
                }
            }
        }

        let mut grad_x = Tensor4::zeros(x.shape());
        for bi in 0..b {
            let gx_row = &mut grad_x.data_mut()[bi * in_f..(bi + 1) * in_f];
            for of in 0..self.out_features {
                let g = grad_out.at(bi, of, 0, 0);
                let w_row = &self.weight.value[of * in_f..(of + 1) * in_f];
                for (gx, wv) in gx_row.iter_mut().zip(w_row) {
                    *gx += g * *wv;
                }
            }
        }
        Ok(grad_x)
    }

    fn clone_box(&self) -> Box<dyn Layer<S>> {
        Box::new(self.clone())
    }
}
