//! Average-pooling layers.

use crate::error::{Error, Result};
use crate::nn::{HasParams, Layer, Mode, Param, Scalar, Tensor4};

/// Adaptive average pooling to a fixed (H*, W*): output bin `i` averages
/// input rows `[floor(i*H/H*), ceil((i+1)*H/H*))` (same rule per axis), so
/// bins may overlap when the sizes do not divide evenly.
#[derive(Debug, Clone)]
pub struct AdaptiveAvgPool2d<S> {
    name: String,
    target: (usize, usize),
    cached_in_shape: Option<[usize; 4]>,
    _marker: std::marker::PhantomData<S>,
}

fn bin_bounds(i: usize, n_in: usize, n_out: usize) -> (usize, usize) {
    let lo = i * n_in / n_out;
    let hi = ((i + 1) * n_in).div_ceil(n_out);
    (lo, hi)
}

impl<S: Scalar> AdaptiveAvgPool2d<S> {
    pub fn new(name: impl Into<String>, target: (usize, usize)) -> Self {
        AdaptiveAvgPool2d {
            name: name.into(),
            target,
            cached_in_shape: None,
            _marker: std::marker::PhantomData,
        }
    }

    pub fn target(&self) -> (usize, usize) {
        self.target
    }
}

impl<S: Scalar> HasParams<S> for AdaptiveAvgPool2d<S> {
    fn visit_params(&self, _f: &mut dyn FnMut(&Param<S>)) {}
    fn visit_params_mut(&mut self, _f: &mut dyn FnMut(&mut Param<S>)) {}
}

impl<S: Scalar> Layer<S> for AdaptiveAvgPool2d<S> {
    fn name(&self) -> &str {
        &self.name
    }

    fn forward(&mut self, x: &Tensor4<S>, _mode: Mode) -> Result<Tensor4<S>> {
        let [b, c, h, w] = x.shape();
        let (th, tw) = self.target;
        if th == 0 || tw == 0 {
            return Err(Error::Config("adaptive pool target must be positive".into()));
        }
        if th > h || tw > w {
            return Err(Error::Shape(format!(
                "{}: target {th}x{tw} exceeds input {h}x{w}",
                self.name
            )));
        }
        let mut out = Tensor4::zeros([b, c, th, tw]);
        for bi in 0..b {
            for ci in 0..c {
                let plane = x.plane(bi, ci);
                for oh in 0..th {
                    let (h0, h1) = bin_bounds(oh, h, th);
                    for ow in 0..tw {
                        let (w0, w1) = bin_bounds(ow, w, tw);
                        let mut acc = S::ZERO;
                        for ih in h0..h1 {
                            for iw in w0..w1 {
                                acc += plane[ih * w + iw];
                            }
                        }
                        *out.at_mut(bi, ci, oh, ow) =
                            acc / S::from_f64(((h1 - h0) * (w1 - w0)) as f64);
                    }
                }
            }
        }
        self.cached_in_shape = Some(x.shape());
        Ok(out)
    }

    fn backward(&mut self, grad_out: &Tensor4<S>) -> Result<Tensor4<S>> {
        let in_shape = self
            .cached_in_shape
            .ok_or_else(|| Error::Shape(format!("{}: backward before forward", self.name)))?;
        let [b, c, h, w] = in_shape;
        let (th, tw) = self.target;
        let mut grad_x = Tensor4::zeros(in_shape);
        for bi in 0..b {
            for ci in 0..c {
                for oh in 0..th {
                    let (h0, h1) = bin_bounds(oh, h, th);
                    for ow in 0..tw {
                        let (w0, w1) = bin_bounds(ow, w, tw);
                        let share = grad_out.at(bi, ci, oh, ow)
                            / S::from_f64(((h1 - h0) * (w1 - w0)) as f64);
                        for ih in h0..h1 {
                            for iw in w0..w1 {
                                *grad_x.at_mut(bi, ci, ih, iw) += share;
                            }
                        }
                    }
                }
            }
        }
        Ok(grad_x)
    }

    fn clone_box(&self) -> Box<dyn Layer<S>> {
        Box::new(self.clone())
    }
}

/// Mean over all spatial positions, `B x C x H x W -> B x C x 1 x 1`.
#[derive(Debug, Clone)]
pub struct GlobalAvgPool<S> {
    name: String,
    cached_in_shape: Option<[usize; 4]>,
    _marker: std::marker::PhantomData<S>,
}

impl<S: Scalar> GlobalAvgPool<S> {
    pub fn new(name: impl Into<String>) -> Self {
        GlobalAvgPool {
            name: name.into(),
            cached_in_shape: None,
            _marker: std::marker::PhantomData,
        }
    }
}

impl<S: Scalar> HasParams<S> for GlobalAvgPool<S> {
    fn visit_params(&self, _f: &mut dyn FnMut(&Param<S>)) {}
    fn visit_params_mut(&mut self, _f: &mut dyn FnMut(&mut Param<S>)) {}
}

impl<S: Scalar> Layer<S> for GlobalAvgPool<S> {
    fn name(&self) -> &str {
        &self.name
    }

    fn forward(&mut self, x: &Tensor4<S>, _mode: Mode) -> Result<Tensor4<S>> {
        let [b, c, h, w] = x.shape();
        let mut out = Tensor4::zeros([b, c, 1, 1]);
        let denom = S::from_f64((h * w) as f64);
        for bi in 0..b {
            for ci in 0..c {
                let mut acc = S::ZERO;
                for v in x.plane(bi, ci) {
                    acc += *v;
                }
                *out.at_mut(bi, ci, 0, 0) = acc / denom;
            }
        }
        self.cached_in_shape = Some(x.shape());
        Ok(out)
    }

    fn backward(&mut self, grad_out: &Tensor4<S>) -> Result<Tensor4<S>> {
        let in_shape = self
            .cached_in_shape
            .ok_or_else(|| Error::Shape(format!("{}: backward before forward", self.name)))?;
        let [b, c, h, w] = in_shape;
        let denom = S::from_f64((h * w) as f64);
        let mut grad_x = Tensor4::zeros(in_shape);
        for bi in 0..b {
            for ci in 0..c {
                let share = grad_out.at(bi, ci, 0, 0) / denom;
                let off = (bi * c + ci) * h * w;
                for v in &mut grad_x.data_mut()[off..off + h * w] {
                    *v = share;
                }
            }
        }
        Ok(grad_x)
    }

    fn clone_box(&self) -> Box<dyn Layer<S>> {
        Box::new(self.clone())
    }
}
