//! Model assembly: phase path plus backend under one of the three fusion
//! frameworks.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::featmap::SEGMENT_FRAMES;
use crate::models::framework::{framework_of, FrameworkKind};
use crate::models::{build_backend, build_phase_network, ModelConfig, PhaseNetConfig};
use crate::nn::{
    AdaptiveAvgPool2d, HasParams, Layer, Mode, Param, Scalar, Sequential, StateBuffer, Tensor4,
};

/// A complete detection model. Inputs are per-segment magnitude maps
/// (`B x 1 x 400 x mag_dim`) and, for the fusion frameworks, raw phase maps
/// (`B x 1 x 400 x phase_dim`); output is `B x 2 x 1 x 1` logits.
#[derive(Clone)]
pub struct FusionModel<S: Scalar> {
    config: ModelConfig,
    phase_net: Option<Sequential<S>>,
    raw_phase_pool: Option<AdaptiveAvgPool2d<S>>,
    backend: Sequential<S>,
}

impl<S: Scalar> FusionModel<S> {
    /// Builds the model from its config; the seed fully determines the
    /// initial weights (phase network drawn first, then backend).
    pub fn build(config: &ModelConfig) -> Result<Self> {
        let strat = framework_of(config.framework);
        strat.validate_pairing(&config.pairing)?;
        let mut rng = ChaCha12Rng::seed_from_u64(config.seed);

        let phase_net = if strat.has_phase_network() {
            Some(build_phase_network(
                &PhaseNetConfig {
                    in_dim: config.pairing.phase_dim,
                    stride: config.pairing.phase_stride,
                    pool_to: config.pairing.phase_pool.then_some(config.pairing.mag_dim),
                },
                &mut rng,
            )?)
        } else {
            None
        };

        let raw_phase_pool = if strat.needs_raw_phase_pool(&config.pairing) {
            Some(AdaptiveAvgPool2d::new(
                "raw_phase_pool",
                (config.pairing.mag_dim, SEGMENT_FRAMES),
            ))
        } else {
            None
        };

        let backend = build_backend(
            config.backend,
            strat.input_channels(),
            config.segment_shape(),
            &mut rng,
        )?;

        Ok(FusionModel {
            config: config.clone(),
            phase_net,
            raw_phase_pool,
            backend,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn uses_phase(&self) -> bool {
        framework_of(self.config.framework).uses_phase()
    }

    /// Parameter count of the phase network alone (0 when absent).
    pub fn phase_net_param_count(&self) -> usize {
        self.phase_net.as_ref().map_or(0, |p| p.param_count())
    }

    /// Runs the phase path alone (phase network or raw pool), returning the
    /// map that would be concatenated as channel 1.
    pub fn process_phase(&mut self, phase: &Tensor4<S>, mode: Mode) -> Result<Tensor4<S>> {
        if let Some(net) = &mut self.phase_net {
            net.forward(phase, mode)
        } else if let Some(pool) = &mut self.raw_phase_pool {
            pool.forward(phase, mode)
        } else {
            Ok(phase.clone())
        }
    }

    pub fn forward(
        &mut self,
        mag: &Tensor4<S>,
        phase: Option<&Tensor4<S>>,
        mode: Mode,
    ) -> Result<Tensor4<S>> {
        let expect_mag = [mag.batch(), 1, self.config.pairing.mag_dim, SEGMENT_FRAMES];
        if mag.shape() != expect_mag {
            return Err(Error::Shape(format!(
                "magnitude batch shape {:?}, expected {:?}",
                mag.shape(),
                expect_mag
            )));
        }
        match self.config.framework {
            FrameworkKind::AMagnitudeOnly => self.backend.forward(mag, mode),
            _ => {
                let phase = phase.ok_or_else(|| {
                    Error::Config(format!(
                        "framework {} needs a phase input",
                        self.config.framework.short_name()
                    ))
                })?;
                let expect_ph = [
                    mag.batch(),
                    1,
                    self.config.pairing.phase_dim,
                    SEGMENT_FRAMES,
                ];
                if phase.shape() != expect_ph {
                    return Err(Error::Shape(format!(
                        "phase batch shape {:?}, expected {:?}",
                        phase.shape(),
                        expect_ph
                    )));
                }
                let processed = self.process_phase(phase, mode)?;
                let stacked = concat_channels(mag, &processed)?;
                self.backend.forward(&stacked, mode)
            }
        }
    }

    /// Backpropagates the logit gradient; parameter gradients accumulate in
    /// the layers. Input gradients are discarded.
    pub fn backward(&mut self, grad_logits: &Tensor4<S>) -> Result<()> {
        let grad_in = self.backend.backward(grad_logits)?;
        if let Some(net) = &mut self.phase_net {
            let grad_phase_channel = split_channel(&grad_in, 1)?;
            net.backward(&grad_phase_channel)?;
        }
        Ok(())
    }
}

/// Converts a single-channel frequency-major tensor (`1 x 1 x D x T`) back
/// into a time-major feature map, for entropy analysis of processed phase.
pub fn tensor_to_feature_map<S: Scalar>(
    t: &Tensor4<S>,
    channel_kind: crate::dsp::ChannelKind,
    source: crate::dsp::FeatureSource,
) -> Result<crate::dsp::FeatureMap> {
    let [b, c, d, frames] = t.shape();
    if b != 1 || c != 1 {
        return Err(Error::Shape(format!(
            "expected a 1 x 1 x D x T tensor, got {:?}",
            t.shape()
        )));
    }
    let mut values = ndarray::Array2::zeros((frames, d));
    for j in 0..d {
        let row = t.row(0, 0, j);
        for ti in 0..frames {
            values[(ti, j)] = row[ti].to_f64();
        }
    }
    Ok(crate::dsp::FeatureMap {
        values,
        channel_kind,
        source,
    })
}

fn concat_channels<S: Scalar>(a: &Tensor4<S>, b: &Tensor4<S>) -> Result<Tensor4<S>> {
    let [ba, ca, h, w] = a.shape();
    let [bb, cb, hb, wb] = b.shape();
    if ba != bb || h != hb || w != wb {
        return Err(Error::Shape(format!(
            "cannot concatenate {:?} with {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let mut out = Tensor4::zeros([ba, ca + cb, h, w]);
    let plane = h * w;
    for bi in 0..ba {
        for c in 0..ca {
            let off = (bi * (ca + cb) + c) * plane;
            out.data_mut()[off..off + plane].copy_from_slice(a.plane(bi, c));
        }
        for c in 0..cb {
            let off = (bi * (ca + cb) + ca + c) * plane;
            out.data_mut()[off..off + plane].copy_from_slice(b.plane(bi, c));
        }
    }
    Ok(out)
}

fn split_channel<S: Scalar>(t: &Tensor4<S>, channel: usize) -> Result<Tensor4<S>> {
    let [b, c, h, w] = t.shape();
    if channel >= c {
        return Err(Error::Shape(format!("channel {channel} out of {c}")));
    }
    let mut out = Tensor4::zeros([b, 1, h, w]);
    let plane = h * w;
    for bi in 0..b {
        let off = bi * plane;
        out.data_mut()[off..off + plane].copy_from_slice(t.plane(bi, channel));
    }
    Ok(out)
}

impl<S: Scalar> HasParams<S> for FusionModel<S> {
    fn visit_params(&self, f: &mut dyn FnMut(&Param<S>)) {
        if let Some(net) = &self.phase_net {
            net.visit_params(f);
        }
        self.backend.visit_params(f);
    }

    fn visit_params_mut(&mut self, f: &mut dyn FnMut(&mut Param<S>)) {
        if let Some(net) = &mut self.phase_net {
            net.visit_params_mut(f);
        }
        self.backend.visit_params_mut(f);
    }

    fn visit_buffers(&self, f: &mut dyn FnMut(&StateBuffer<S>)) {
        if let Some(net) = &self.phase_net {
            net.visit_buffers(f);
        }
        self.backend.visit_buffers(f);
    }

    fn visit_buffers_mut(&mut self, f: &mut dyn FnMut(&mut StateBuffer<S>)) {
        if let Some(net) = &mut self.phase_net {
            net.visit_buffers_mut(f);
        }
        self.backend.visit_buffers_mut(f);
    }
}
