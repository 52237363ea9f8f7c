//! 2-D convolution (cross-correlation convention) with explicit backward.

use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::nn::init::{bias_uniform, kaiming_uniform};
use crate::nn::tensor::{dot_unrolled, for_each_chunk_mut, sum_unrolled};
use crate::nn::{HasParams, Layer, Mode, Param, Scalar, Tensor4};

#[derive(Debug, Clone)]
pub struct Conv2d<S> {
    name: String,
    weight: Param<S>,
    bias: Param<S>,
    in_channels: usize,
    out_channels: usize,
    kernel: (usize, usize),
    stride: (usize, usize),
    padding: (usize, usize),
    cached_x: Option<Tensor4<S>>,
}

impl<S: Scalar> Conv2d<S> {
    pub fn new(
        name: impl Into<String>,
        in_channels: usize,
        out_channels: usize,
        kernel: (usize, usize),
        stride: (usize, usize),
        padding: (usize, usize),
        rng: &mut ChaCha12Rng,
    ) -> Self {
        let name = name.into();
        let fan_in = in_channels * kernel.0 * kernel.1;
        let n_w = out_channels * fan_in;
        let weight = Param::new(
            format!("{name}.weight"),
            vec![out_channels, in_channels, kernel.0, kernel.1],
            kaiming_uniform(n_w, fan_in, rng),
        );
        let bias = Param::new(
            format!("{name}.bias"),
            vec![out_channels],
            bias_uniform(out_channels, fan_in, rng),
        );
        Conv2d {
            name,
            weight,
            bias,
            in_channels,
            out_channels,
            kernel,
            stride,
            padding,
            cached_x: None,
        }
    }

    pub fn out_spatial(&self, h: usize, w: usize) -> Result<(usize, usize)> {
        let (kh, kw) = self.kernel;
        let (sh, sw) = self.stride;
        let (ph, pw) = self.padding;
        if h + 2 * ph < kh || w + 2 * pw < kw {
            return Err(Error::Shape(format!(
                "input {h}x{w} too small for kernel {kh}x{kw} with padding {ph}x{pw}"
            )));
        }
        Ok(((h + 2 * ph - kh) / sh + 1, (w + 2 * pw - kw) / sw + 1))
    }

    #[inline]
    #[cfg(test)]
    fn w_at(&self, co: usize, ci: usize, kh: usize, kw: usize) -> S {
        let (k0, k1) = self.kernel;
        self.weight.value[((co * self.in_channels + ci) * k0 + kh) * k1 + kw]
    }

    /// Output-column range `ow` such that `ow*sw + kw - pw` lands inside
    /// `[0, w_in)`.
    #[inline]
    fn valid_ow(kw: usize, pw: usize, sw: usize, w_in: usize, w_out: usize) -> (usize, usize) {
        let lo = if kw >= pw {
            0
        } else {
            (pw - kw).div_ceil(sw)
        };
        let hi_excl = if w_in + pw > kw {
            (((w_in + pw - kw - 1) / sw) + 1).min(w_out)
        } else {
            0
        };
        (lo.min(hi_excl), hi_excl)
    }
}

impl<S: Scalar> HasParams<S> for Conv2d<S> {
    fn visit_params(&self, f: &mut dyn FnMut(&Param<S>)) {
        f(&self.weight);
        f(&self.bias);
    }

    fn visit_params_mut(&mut self, f: &mut dyn FnMut(&mut Param<S>)) {
        f(&mut self.weight);
        f(&mut self.bias);
    }
}

impl<S: Scalar> Layer<S> for Conv2d<S> {
    fn name(&self) -> &str {
        &self.name
    }

    fn forward(&mut self, x: &Tensor4<S>, _mode: Mode) -> Result<Tensor4<S>> {
        let [b, c_in, h, w] = x.shape();
        if c_in != self.in_channels {
            return Err(Error::Shape(format!(
                "{}: expected {} input channels, got {c_in}",
                self.name, self.in_channels
            )));
        }
        let (h_out, w_out) = self.out_spatial(h, w)?;
        let (kh_n, kw_n) = self.kernel;
        let (sh, sw) = self.stride;
        let (ph, pw) = self.padding;

        let mut out = Tensor4::zeros([b, self.out_channels, h_out, w_out]);
        let plane = h_out * w_out;
        let co_n = self.out_channels;
        let weight = &self.weight.value;
        let bias = &self.bias.value;

        // one task per batch row keeps tasks coarse; per-cell accumulation
        // order is identical in both threading modes
        for_each_chunk_mut(out.data_mut(), co_n * plane, |bi, out_row_planes| {
            for co in 0..co_n {
                let out_plane = &mut out_row_planes[co * plane..(co + 1) * plane];
                out_plane.iter_mut().for_each(|v| *v = bias[co]);
                for ci in 0..c_in {
                    for kh in 0..kh_n {
                        for kw in 0..kw_n {
                            let wv = weight[((co * c_in + ci) * kh_n + kh) * kw_n + kw];
                            let (ow_lo, ow_hi) = Self::valid_ow(kw, pw, sw, w, w_out);
                            if ow_lo >= ow_hi {
                                continue;
                            }
                            for oh in 0..h_out {
                                let ih = oh * sh + kh;
                                if ih < ph || ih - ph >= h {
                                    continue;
                                }
                                let x_row = x.row(bi, ci, ih - ph);
                                let out_row = &mut out_plane[oh * w_out..(oh + 1) * w_out];
                                if sw == 1 {
                                    let x_off = ow_lo + kw - pw;
                                    let n = ow_hi - ow_lo;
                                    let xs = &x_row[x_off..x_off + n];
                                    let os = &mut out_row[ow_lo..ow_hi];
                                    for (o, xv) in os.iter_mut().zip(xs) {
                                        *o += wv * *xv;
                                    }
                                } else {
                                    let xs = x_row[ow_lo * sw + kw - pw..]
                                        .iter()
                                        .step_by(sw)
                                        .take(ow_hi - ow_lo);
                                    for (o, xv) in out_row[ow_lo..ow_hi].iter_mut().zip(xs) {
                                        *o += wv * *xv;
                                    }
                                }
                            }
                        }
                    }
                }
            }
        });

        self.cached_x = Some(x.clone());
        Ok(out)
    }

    fn backward(&mut self, grad_out: &Tensor4<S>) -> Result<Tensor4<S>> {
        let x = self
            .cached_x
            .as_ref()
            .ok_or_else(|| Error::Shape(format!("{}: backward before forward", self.name)))?;
        let [b, c_in, h, w] = x.shape();
        let [gb, co_n, h_out, w_out] = grad_out.shape();
        if gb != b || co_n != self.out_channels {
            return Err(Error::Shape(format!(
                "{}: upstream gradient shape {:?} inconsistent",
                self.name,
                grad_out.shape()
            )));
        }
        let (kh_n, kw_n) = self.kernel;
        let (sh, sw) = self.stride;
        let (ph, pw) = self.padding;

        // bias gradient: per-channel sum of the upstream gradient
        for co in 0..co_n {
            let mut acc = S::ZERO;
            for bi in 0..b {
                acc += sum_unrolled(grad_out.plane(bi, co));
            }
            self.bias.grad[co] += acc;
        }

        // weight gradient, parallel over output channels (disjoint slices)
        let w_chunk = c_in * kh_n * kw_n;
        for_each_chunk_mut(&mut self.weight.grad, w_chunk, |co, gw| {
            for bi in 0..b {
                let g_plane = grad_out.plane(bi, co);
                for ci in 0..c_in {
                    for kh in 0..kh_n {
                        for kw in 0..kw_n {
                            let (ow_lo, ow_hi) = Self::valid_ow(kw, pw, sw, w, w_out);
                            if ow_lo >= ow_hi {
                                continue;
                            }
                            let mut acc = S::ZERO;
                            for oh in 0..h_out {
                                let ih = oh * sh + kh;
                                if ih < ph || ih - ph >= h {
                                    continue;
                                }
                                let x_row = x.row(bi, ci, ih - ph);
                                let g_row = &g_plane[oh * w_out..(oh + 1) * w_out];
                                if sw == 1 {
                                    let x_off = ow_lo + kw - pw;
                                    let n = ow_hi - ow_lo;
                                    acc += dot_unrolled(
                                        &g_row[ow_lo..ow_hi],
                                        &x_row[x_off..x_off + n],
                                    );
                                } else {
                                    let xs = x_row[ow_lo * sw + kw - pw..]
                                        .iter()
                                        .step_by(sw)
                                        .take(ow_hi - ow_lo);
                                    for (gv, xv) in g_row[ow_lo..ow_hi].iter().zip(xs) {
                                        acc += *gv * *xv;
                                    }
                                }
                            }
                            gw[(ci * kh_n + kh) * kw_n + kw] += acc;
                        }
                    }
                }
            }
        });

        // input gradient, one task per batch row
        let mut grad_x = Tensor4::zeros([b, c_in, h, w]);
        let weight = &self.weight.value;
        let in_plane = h * w;
        for_each_chunk_mut(grad_x.data_mut(), c_in * in_plane, |bi, gx_planes| {
            for ci in 0..c_in {
                let gx_plane = &mut gx_planes[ci * in_plane..(ci + 1) * in_plane];
                for co in 0..co_n {
                    let g_plane = grad_out.plane(bi, co);
                    for kh in 0..kh_n {
                        for kw in 0..kw_n {
                            let wv = weight[((co * c_in + ci) * kh_n + kh) * kw_n + kw];
                            let (ow_lo, ow_hi) = Self::valid_ow(kw, pw, sw, w, w_out);
                            if ow_lo >= ow_hi {
                                continue;
                            }
                            for oh in 0..h_out {
                                let ih = oh * sh + kh;
                                if ih < ph || ih - ph >= h {
                                    continue;
                                }
                                let gx_row = &mut gx_plane[(ih - ph) * w..(ih - ph + 1) * w];
                                let g_row = &g_plane[oh * w_out..(oh + 1) * w_out];
                                if sw == 1 {
                                    let x_off = ow_lo + kw - pw;
                                    let n = ow_hi - ow_lo;
                                    for (gx, gv) in gx_row[x_off..x_off + n]
                                        .iter_mut()
                                        .zip(&g_row[ow_lo..ow_hi])
                                    {
                                        *gx += wv * *gv;
                                    }
                                } else {
                                    let gxs = gx_row[ow_lo * sw + kw - pw..]
                                        .iter_mut()
                                        .step_by(sw)
                                        .take(ow_hi - ow_lo);
                                    for (gx, gv) in gxs.zip(&g_row[ow_lo..ow_hi]) {
                                        *gx += wv * *gv;
                                    }
                                }
                            }
                        }
                    }
                }
            }
        });

        Ok(grad_x)
    }

    fn clone_box(&self) -> Box<dyn Layer<S>> {
        Box::new(self.clone())
    }
}
