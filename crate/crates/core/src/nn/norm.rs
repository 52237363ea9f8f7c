//! Batch normalization over (B, H, W) per channel.

use crate::error::{Error, Result};
use crate::nn::tensor::{dot_unrolled, for_each_chunk_mut, sum_unrolled};
use crate::nn::{HasParams, Layer, Mode, Param, Scalar, StateBuffer, Tensor4};

const BN_EPS: f64 = 1e-5;
const BN_MOMENTUM: f64 = 0.1;

#[derive(Debug, Clone)]
struct BnCache<S> {
    xhat: Tensor4<S>,
    inv_std: Vec<S>,
    mode: Mode,
}

#[derive(Debug, Clone)]
pub struct BatchNorm2d<S> {
    name: String,
    gamma: Param<S>,
    beta: Param<S>,
    running_mean: StateBuffer<S>,
    running_var: StateBuffer<S>,
    channels: usize,
    cache: Option<BnCache<S>>,
}

impl<S: Scalar> BatchNorm2d<S> {
    pub fn new(name: impl Into<String>, channels: usize) -> Self {
        let name = name.into();
        BatchNorm2d {
            gamma: Param::new(
                format!("{name}.gamma"),
                vec![channels],
                vec![S::ONE; channels],
            ),
            beta: Param::new(
                format!("{name}.beta"),
                vec![channels],
                vec![S::ZERO; channels],
            ),
            running_mean: StateBuffer {
                name: format!("{name}.running_mean"),
                value: vec![S::ZERO; channels],
            },
            running_var: StateBuffer {
                name: format!("{name}.running_var"),
                value: vec![S::ONE; channels],
            },
            channels,
            name,
            cache: None,
        }
    }
}

impl<S: Scalar> HasParams<S> for BatchNorm2d<S> {
    fn visit_params(&self, f: &mut dyn FnMut(&Param<S>)) {
        f(&self.gamma);
        f(&self.beta);
    }

    fn visit_params_mut(&mut self, f: &mut dyn FnMut(&mut Param<S>)) {
        f(&mut self.gamma);
        f(&mut self.beta);
    }

    fn visit_buffers(&self, f: &mut dyn FnMut(&StateBuffer<S>)) {
        f(&self.running_mean);
        f(&self.running_var);
    }

    fn visit_buffers_mut(&mut self, f: &mut dyn FnMut(&mut StateBuffer<S>)) {
        f(&mut self.running_mean);
        f(&mut self.running_var);
    }
}

impl<S: Scalar> Layer<S> for BatchNorm2d<S> {
    fn name(&self) -> &str {
        &self.name
    }

    fn forward(&mut self, x: &Tensor4<S>, mode: Mode) -> Result<Tensor4<S>> {
        let [b, c, h, w] = x.shape();
        if c != self.channels {
            return Err(Error::Shape(format!(
                "{}: expected {} channels, got {c}",
                self.name, self.channels
            )));
        }
        let m = b * h * w;
        let plane = h * w;
        let (means, vars): (Vec<S>, Vec<S>) = match mode {
            Mode::Train => {
                if m < 2 {
                    return Err(Error::Shape(format!(
                        "{}: training batch-norm needs at least 2 values per channel, got {m}",
                        self.name
                    )));
                }
                let m_s = S::from_f64(m as f64);
                let mut means = vec![S::ZERO; c];
                let mut vars = vec![S::ZERO; c];
                for ci in 0..c {
                    let mut sum = S::ZERO;
                    for bi in 0..b {
                        sum += sum_unrolled(x.plane(bi, ci));
                    }
                    let mean = sum / m_s;
                    let mut var = S::ZERO;
                    for bi in 0..b {
                        let p = x.plane(bi, ci);
                        let mut acc = S::ZERO;
                        for v in p {
                            let d = *v - mean;
                            acc += d * d;
                        }
                        var += acc;
                    }
                    means[ci] = mean;
                    vars[ci] = var / m_s;
                }
                // running statistics use the unbiased variance
                let mom = S::from_f64(BN_MOMENTUM);
                let keep = S::from_f64(1.0 - BN_MOMENTUM);
                let unbias = S::from_f64(m as f64 / (m as f64 - 1.0));
                for ci in 0..c {
                    self.running_mean.value[ci] =
                        keep * self.running_mean.value[ci] + mom * means[ci];
                    self.running_var.value[ci] =
                        keep * self.running_var.value[ci] + mom * vars[ci] * unbias;
                }
                (means, vars)
            }
            Mode::Eval => (
                self.running_mean.value.clone(),
                self.running_var.value.clone(),
            ),
        };

        let eps = S::from_f64(BN_EPS);
        let inv_std: Vec<S> = vars.iter().map(|&v| S::ONE / (v + eps).sqrt()).collect();

        let mut xhat = Tensor4::zeros(x.shape());
        let mut y = Tensor4::zeros(x.shape());
        for_each_chunk_mut(xhat.data_mut(), plane, |idx, xh_plane| {
            let ci = idx % c;
            let (mean, istd) = (means[ci], inv_std[ci]);
            let src = &x.data()[idx * plane..(idx + 1) * plane];
            for (o, v) in xh_plane.iter_mut().zip(src) {
                *o = (*v - mean) * istd;
            }
        });
        {
            let gamma = &self.gamma.value;
            let beta = &self.beta.value;
            for_each_chunk_mut(y.data_mut(), plane, |idx, y_plane| {
                let ci = idx % c;
                let (g, be) = (gamma[ci], beta[ci]);
                let src = &xhat.data()[idx * plane..(idx + 1) * plane];
                for (o, xh) in y_plane.iter_mut().zip(src) {
                    *o = g * *xh + be;
                }
            });
        }
        self.cache = Some(BnCache {
            xhat,
            inv_std,
            mode,
        });
        Ok(y)
    }

    fn backward(&mut self, grad_out: &Tensor4<S>) -> Result<Tensor4<S>> {
        let cache = self
            .cache
            .as_ref()
            .ok_or_else(|| Error::Shape(format!("{}: backward before forward", self.name)))?;
        let [b, c, h, w] = grad_out.shape();
        let m = b * h * w;
        let m_s = S::from_f64(m as f64);
        let plane = h * w;

        let mut dgamma = vec![S::ZERO; c];
        let mut dbeta = vec![S::ZERO; c];
        for ci in 0..c {
            let mut dg = S::ZERO;
            let mut db = S::ZERO;
            for bi in 0..b {
                let g = grad_out.plane(bi, ci);
                let xh = cache.xhat.plane(bi, ci);
                dg += dot_unrolled(g, xh);
                db += sum_unrolled(g);
            }
            dgamma[ci] = dg;
            dbeta[ci] = db;
            self.gamma.grad[ci] += dg;
            self.beta.grad[ci] += db;
        }

        let mut grad_x = Tensor4::zeros(grad_out.shape());
        let gamma = &self.gamma.value;
        let xhat = &cache.xhat;
        let inv_std = &cache.inv_std;
        match cache.mode {
            Mode::Train => {
                // dx = inv_std/m * gamma * (m*g - sum(g) - xhat * sum(g*xhat))
                for_each_chunk_mut(grad_x.data_mut(), plane, |idx, gx_plane| {
                    let ci = idx % c;
                    let k = gamma[ci] * inv_std[ci] / m_s;
                    let (dg, db) = (dgamma[ci], dbeta[ci]);
                    let g = &grad_out.data()[idx * plane..(idx + 1) * plane];
                    let xh = &xhat.data()[idx * plane..(idx + 1) * plane];
                    for i in 0..plane {
                        gx_plane[i] = k * (m_s * g[i] - db - xh[i] * dg);
                    }
                });
            }
            Mode::Eval => {
                for_each_chunk_mut(grad_x.data_mut(), plane, |idx, gx_plane| {
                    let ci = idx % c;
                    let k = gamma[ci] * inv_std[ci];
                    let g = &grad_out.data()[idx * plane..(idx + 1) * plane];
                    for (o, gv) in gx_plane.iter_mut().zip(g) {
                        *o = k * *gv;
                    }
                });
            }
        }
        Ok(grad_x)
    }

    fn clone_box(&self) -> Box<dyn Layer<S>> {
        Box::new(self.clone())
    }
}
