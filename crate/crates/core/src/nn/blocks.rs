//! Squeeze-and-excitation gating and the hierarchical multi-scale residual
//! block used by the backend.

use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::nn::{
    BatchNorm2d, Conv2d, GlobalAvgPool, HasParams, Layer, Linear, Mode, Param, Relu, Scalar,
    Sigmoid, StateBuffer, Tensor4,
};

/// Channel-wise gate: global average pool, bottleneck MLP (width
/// `ceil(C/r)`), sigmoid, then scale the input channels.
#[derive(Clone)]
pub struct SeBlock<S: Scalar> {
    name: String,
    pool: GlobalAvgPool<S>,
    fc1: Linear<S>,
    relu: Relu<S>,
    fc2: Linear<S>,
    sigmoid: Sigmoid<S>,
    cached: Option<(Tensor4<S>, Tensor4<S>)>, // (input, gate)
}

impl<S: Scalar> SeBlock<S> {
    pub fn new(
        name: impl Into<String>,
        channels: usize,
        reduction: usize,
        rng: &mut ChaCha12Rng,
    ) -> Self {
        let name = name.into();
        let hidden = channels.div_ceil(reduction.max(1)).max(1);
        SeBlock {
            pool: GlobalAvgPool::new(format!("{name}.pool")),
            fc1: Linear::new(format!("{name}.fc1"), channels, hidden, rng),
            relu: Relu::new(format!("{name}.relu")),
            fc2: Linear::new(format!("{name}.fc2"), hidden, channels, rng),
            sigmoid: Sigmoid::new(format!("{name}.sigmoid")),
            name,
            cached: None,
        }
    }

    /// Forces the gate wide open (large fc2 bias), for identity tests.
    pub fn force_open_gate(&mut self) {
        self.fc2.weight_mut().value.iter_mut().for_each(|v| *v = S::ZERO);
        self.fc2
            .bias_mut()
            .value
            .iter_mut()
            .for_each(|v| *v = S::from_f64(40.0));
    }
}

impl<S: Scalar> HasParams<S> for SeBlock<S> {
    fn visit_params(&self, f: &mut dyn FnMut(&Param<S>)) {
        self.fc1.visit_params(f);
        self.fc2.visit_params(f);
    }

    fn visit_params_mut(&mut self, f: &mut dyn FnMut(&mut Param<S>)) {
        self.fc1.visit_params_mut(f);
        self.fc2.visit_params_mut(f);
    }
}

impl<S: Scalar> Layer<S> for SeBlock<S> {
    fn name(&self) -> &str {
        &self.name
    }

    fn forward(&mut self, x: &Tensor4<S>, mode: Mode) -> Result<Tensor4<S>> {
        let pooled = self.pool.forward(x, mode)?;
        let a = self.fc1.forward(&pooled, mode)?;
        let r = self.relu.forward(&a, mode)?;
        let z = self.fc2.forward(&r, mode)?;
        let gate = self.sigmoid.forward(&z, mode)?;

        let [b, c, h, w] = x.shape();
        let mut out = Tensor4::zeros(x.shape());
        for bi in 0..b {
            for ci in 0..c {
                let g = gate.at(bi, ci, 0, 0);
                let off = (bi * c + ci) * h * w;
                for (o, xv) in out.data_mut()[off..off + h * w]
                    .iter_mut()
                    .zip(x.plane(bi, ci))
                {
                    *o = g * *xv;
                }
            }
        }
        self.cached = Some((x.clone(), gate));
        Ok(out)
    }

    fn backward(&mut self, grad_out: &Tensor4<S>) -> Result<Tensor4<S>> {
        let (x, gate) = self
            .cached
            .as_ref()
            .ok_or_else(|| Error::Shape(format!("{}: backward before forward", self.name)))?;
        let [b, c, h, w] = x.shape();

        // gradient w.r.t. the gate, then back through the MLP
        let mut dgate = Tensor4::zeros([b, c, 1, 1]);
        for bi in 0..b {
            for ci in 0..c {
                let mut acc = S::ZERO;
                for (g, xv) in grad_out.plane(bi, ci).iter().zip(x.plane(bi, ci)) {
                    acc += *g * *xv;
                }
                *dgate.at_mut(bi, ci, 0, 0) = acc;
            }
        }
        let dz = self.sigmoid.backward(&dgate)?;
        let dr = self.fc2.backward(&dz)?;
        let da = self.relu.backward(&dr)?;
        let dpooled = self.fc1.backward(&da)?;
        let dx_gate_path = self.pool.backward(&dpooled)?;

        // direct path: dL/dx = grad_out * gate, plus the gate-path share
        let mut grad_x = Tensor4::zeros(x.shape());
        for bi in 0..b {
            for ci in 0..c {
                let g = gate.at(bi, ci, 0, 0);
                let off = (bi * c + ci) * h * w;
                let gp = dx_gate_path.plane(bi, ci);
                let up = grad_out.plane(bi, ci);
                for i in 0..h * w {
                    grad_x.data_mut()[off + i] = up[i] * g + gp[i];
                }
            }
        }
        Ok(grad_x)
    }

    fn clone_box(&self) -> Box<dyn Layer<S>> {
        Box::new(self.clone())
    }
}

/// Stride-1 multi-scale residual block: 1x1 reduce, split into `scale`
/// groups with hierarchical 3x3 convolutions (group i processes its slice
/// plus group i-1's output), concat, 1x1 expand, SE gate, then the exact
/// identity residual. Output shape equals input shape.
#[derive(Clone)]
pub struct Res2NetBlock<S: Scalar> {
    name: String,
    channels: usize,
    scale: usize,
    group_width: usize,
    reduce: Conv2d<S>,
    bn_reduce: BatchNorm2d<S>,
    relu_reduce: Relu<S>,
    convs: Vec<Conv2d<S>>,
    bns: Vec<BatchNorm2d<S>>,
    relus: Vec<Relu<S>>,
    expand: Conv2d<S>,
    bn_expand: BatchNorm2d<S>,
    se: SeBlock<S>,
    cached_x: Option<Tensor4<S>>,
}

impl<S: Scalar> Res2NetBlock<S> {
    pub fn new(
        name: impl Into<String>,
        channels: usize,
        scale: usize,
        se_reduction: usize,
        rng: &mut ChaCha12Rng,
    ) -> Result<Self> {
        let name = name.into();
        if scale < 2 {
            return Err(Error::Config(format!(
                "{name}: multi-scale block needs scale >= 2"
            )));
        }
        if channels % scale != 0 {
            return Err(Error::Config(format!(
                "{name}: channels {channels} not divisible by scale {scale}"
            )));
        }
        let w = channels / scale;
        let mut convs = Vec::new();
        let mut bns = Vec::new();
        let mut relus = Vec::new();
        for i in 1..scale {
            convs.push(Conv2d::new(
                format!("{name}.conv{i}"),
                w,
                w,
                (3, 3),
                (1, 1),
                (1, 1),
                rng,
            ));
            bns.push(BatchNorm2d::new(format!("{name}.bn{i}"), w));
            relus.push(Relu::new(format!("{name}.relu{i}")));
        }
        Ok(Res2NetBlock {
            reduce: Conv2d::new(format!("{name}.reduce"), channels, channels, (1, 1), (1, 1), (0, 0), rng),
            bn_reduce: BatchNorm2d::new(format!("{name}.bn_reduce"), channels),
            relu_reduce: Relu::new(format!("{name}.relu_reduce")),
            convs,
            bns,
            relus,
            expand: Conv2d::new(format!("{name}.expand"), channels, channels, (1, 1), (1, 1), (0, 0), rng),
            bn_expand: BatchNorm2d::new(format!("{name}.bn_expand"), channels),
            se: SeBlock::new(format!("{name}.se"), channels, se_reduction, rng),
            channels,
            scale,
            group_width: w,
            name,
            cached_x: None,
        })
    }

    /// Zeroes every internal conv (weights and biases), for residual tests.
    pub fn zero_convs(&mut self) {
        let zero = |c: &mut Conv2d<S>| {
            c.visit_params_mut(&mut |p| p.value.iter_mut().for_each(|v| *v = S::ZERO));
        };
        zero(&mut self.reduce);
        for c in &mut self.convs {
            zero(c);
        }
        zero(&mut self.expand);
    }

    fn split(&self, t: &Tensor4<S>) -> Vec<Tensor4<S>> {
        let [b, _, h, w] = t.shape();
        let gw = self.group_width;
        (0..self.scale)
            .map(|g| {
                let mut out = Tensor4::zeros([b, gw, h, w]);
                for bi in 0..b {
                    for ci in 0..gw {
                        let src = t.plane(bi, g * gw + ci);
                        let off = (bi * gw + ci) * h * w;
                        out.data_mut()[off..off + h * w].copy_from_slice(src);
                    }
                }
                out
            })
            .collect()
    }

    fn concat(&self, parts: &[Tensor4<S>]) -> Tensor4<S> {
        let [b, gw, h, w] = parts[0].shape();
        let mut out = Tensor4::zeros([b, self.channels, h, w]);
        for (g, part) in parts.iter().enumerate() {
            for bi in 0..b {
                for ci in 0..gw {
                    let dst_off = ((bi * self.channels) + g * gw + ci) * h * w;
                    out.data_mut()[dst_off..dst_off + h * w].copy_from_slice(part.plane(bi, ci));
                }
            }
        }
        out
    }
}

impl<S: Scalar> HasParams<S> for Res2NetBlock<S> {
    fn visit_params(&self, f: &mut dyn FnMut(&Param<S>)) {
        self.reduce.visit_params(f);
        self.bn_reduce.visit_params(f);
        for i in 0..self.convs.len() {
            self.convs[i].visit_params(f);
            self.bns[i].visit_params(f);
        }
        self.expand.visit_params(f);
        self.bn_expand.visit_params(f);
        self.se.visit_params(f);
    }

    fn visit_params_mut(&mut self, f: &mut dyn FnMut(&mut Param<S>)) {
        self.reduce.visit_params_mut(f);
        self.bn_reduce.visit_params_mut(f);
        for i in 0..self.convs.len() {
            self.convs[i].visit_params_mut(f);
            self.bns[i].visit_params_mut(f);
        }
        self.expand.visit_params_mut(f);
        self.bn_expand.visit_params_mut(f);
        self.se.visit_params_mut(f);
    }

    fn visit_buffers(&self, f: &mut dyn FnMut(&StateBuffer<S>)) {
        self.bn_reduce.visit_buffers(f);
        for bn in &self.bns {
            bn.visit_buffers(f);
        }
        self.bn_expand.visit_buffers(f);
    }

    fn visit_buffers_mut(&mut self, f: &mut dyn FnMut(&mut StateBuffer<S>)) {
        self.bn_reduce.visit_buffers_mut(f);
        for bn in &mut self.bns {
            bn.visit_buffers_mut(f);
        }
        self.bn_expand.visit_buffers_mut(f);
    }
}

impl<S: Scalar> Layer<S> for Res2NetBlock<S> {
    fn name(&self) -> &str {
        &self.name
    }

    fn forward(&mut self, x: &Tensor4<S>, mode: Mode) -> Result<Tensor4<S>> {
        if x.channels() != self.channels {
            return Err(Error::Shape(format!(
                "{}: expected {} channels, got {}",
                self.name,
                self.channels,
                x.channels()
            )));
        }
        let reduced = self.relu_reduce.forward(
            &self.bn_reduce.forward(&self.reduce.forward(x, mode)?, mode)?,
            mode,
        )?;
        let groups = self.split(&reduced);

        let mut outs: Vec<Tensor4<S>> = Vec::with_capacity(self.scale);
        outs.push(groups[0].clone());
        for i in 1..self.scale {
            let mut inp = groups[i].clone();
            {
                let prev = outs[i - 1].data();
                for (a, p) in inp.data_mut().iter_mut().zip(prev) {
                    *a += *p;
                }
            }
            let y = self.relus[i - 1].forward(
                &self.bns[i - 1].forward(&self.convs[i - 1].forward(&inp, mode)?, mode)?,
                mode,
            )?;
            outs.push(y);
        }

        let merged = self.concat(&outs);
        let expanded = self
            .bn_expand
            .forward(&self.expand.forward(&merged, mode)?, mode)?;
        let gated = self.se.forward(&expanded, mode)?;

        let mut out = gated;
        for (o, xv) in out.data_mut().iter_mut().zip(x.data()) {
            *o += *xv;
        }
        self.cached_x = Some(x.clone());
        Ok(out)
    }

    fn backward(&mut self, grad_out: &Tensor4<S>) -> Result<Tensor4<S>> {
        if self.cached_x.is_none() {
            return Err(Error::Shape(format!("{}: backward before forward", self.name)));
        }
        // branch path
        let dgated = self.se.backward(grad_out)?;
        let dexpanded = self.expand.backward(&self.bn_expand.backward(&dgated)?)?;
        let dparts = self.split(&dexpanded);

        // hierarchical groups, reversed; carry holds the gradient flowing
        // into outs[i-1] from the (i)-th group's input sum
        let mut dgroups: Vec<Tensor4<S>> = vec![Tensor4::zeros(dparts[0].shape()); self.scale];
        let mut carry = Tensor4::zeros(dparts[0].shape());
        for i in (1..self.scale).rev() {
            let mut dy = dparts[i].clone();
            for (a, cv) in dy.data_mut().iter_mut().zip(carry.data()) {
                *a += *cv;
            }
            let dinp = self.convs[i - 1].backward(
                &self.bns[i - 1].backward(&self.relus[i - 1].backward(&dy)?)?,
            )?;
            dgroups[i] = dinp.clone();
            carry = dinp;
        }
        dgroups[0] = dparts[0].clone();
        for (a, cv) in dgroups[0].data_mut().iter_mut().zip(carry.data()) {
            *a += *cv;
        }

        let dreduced = self.concat(&dgroups);
        let dx_branch = self.reduce.backward(
            &self.bn_reduce.backward(&self.relu_reduce.backward(&dreduced)?)?,
        )?;

        // residual path
        let mut grad_x = dx_branch;
        for (g, up) in grad_x.data_mut().iter_mut().zip(grad_out.data()) {
            *g += *up;
        }
        Ok(grad_x)
    }

    fn clone_box(&self) -> Box<dyn Layer<S>> {
        Box::new(self.clone())
    }
}
