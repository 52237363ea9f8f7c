//! The classification backend: a stem convolution, stages of stride-1
//! multi-scale SE residual blocks joined by 1x1 transitions with spatial
//! halving, then global average pooling into a two-logit head.

use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{
    AdaptiveAvgPool2d, BatchNorm2d, Conv2d, GlobalAvgPool, Linear, Relu, Res2NetBlock, Scalar,
    Sequential,
};

/// Named backend size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendPreset {
    /// Desk-scale default (about 7.5k parameters).
    Lite,
    /// Reconstruction at the published scale, about 0.84M parameters.
    PaperScale,
}

/// Fully resolved backend architecture.
#[derive(Debug, Clone)]
pub struct BackendArch {
    pub stem_channels: usize,
    pub stem_stride: (usize, usize),
    pub stage_channels: Vec<usize>,
    pub blocks_per_stage: Vec<usize>,
    pub scale: usize,
    pub se_reduction: usize,
}

impl BackendPreset {
    pub fn arch(&self) -> BackendArch {
        match self {
            BackendPreset::Lite => BackendArch {
                stem_channels: 8,
                stem_stride: (2, 4),
                stage_channels: vec![8, 16, 32],
                blocks_per_stage: vec![1, 1, 1],
                scale: 4,
                se_reduction: 4,
            },
            BackendPreset::PaperScale => BackendArch {
                stem_channels: 16,
                stem_stride: (2, 4),
                stage_channels: vec![68, 136, 272],
                blocks_per_stage: vec![2, 2, 2],
                scale: 4,
                se_reduction: 16,
            },
        }
    }
}

/// Builds the backend for `in_channels` input channels and the given
/// segment spatial size (time frames x feature dimension).
pub fn build_backend<S: Scalar>(
    preset: BackendPreset,
    in_channels: usize,
    input_hw: (usize, usize),
    rng: &mut ChaCha12Rng,
) -> Result<Sequential<S>> {
    let arch = preset.arch();
    if arch.stage_channels.len() != arch.blocks_per_stage.len() {
        return Err(Error::Config("backend stage lists length mismatch".into()));
    }
    for &c in &arch.stage_channels {
        if c % arch.scale != 0 {
            return Err(Error::Config(format!(
                "backend stage width {c} not divisible by scale {}",
                arch.scale
            )));
        }
    }

    let mut net = Sequential::new("backend");
    let (mut h, mut w) = input_hw;

    net.push(Box::new(Conv2d::new(
        "backend.stem",
        in_channels,
        arch.stem_channels,
        (3, 3),
        arch.stem_stride,
        (1, 1),
        rng,
    )));
    h = (h + 2 - 3) / arch.stem_stride.0 + 1;
    w = (w + 2 - 3) / arch.stem_stride.1 + 1;
    net.push(Box::new(BatchNorm2d::new(
        "backend.stem_bn",
        arch.stem_channels,
    )));
    net.push(Box::new(Relu::new("backend.stem_relu")));

    let mut channels = arch.stem_channels;
    for (i, (&c, &n_blocks)) in arch
        .stage_channels
        .iter()
        .zip(&arch.blocks_per_stage)
        .enumerate()
    {
        if i > 0 || channels != c {
            net.push(Box::new(Conv2d::new(
                format!("backend.t{i}"),
                channels,
                c,
                (1, 1),
                (1, 1),
                (0, 0),
                rng,
            )));
            net.push(Box::new(BatchNorm2d::new(format!("backend.t{i}_bn"), c)));
            net.push(Box::new(Relu::new(format!("backend.t{i}_relu"))));
            if i > 0 {
                let target = ((h / 2).max(1), (w / 2).max(1));
                net.push(Box::new(AdaptiveAvgPool2d::new(
                    format!("backend.t{i}_pool"),
                    target,
                )));
                (h, w) = target;
            }
            channels = c;
        }
        for b in 0..n_blocks {
            net.push(Box::new(Res2NetBlock::new(
                format!("backend.stage{i}.block{b}"),
                c,
                arch.scale,
                arch.se_reduction,
                rng,
            )?));
        }
    }

    net.push(Box::new(GlobalAvgPool::new("backend.pool")));
    net.push(Box::new(Linear::new("backend.head", channels, 2, rng)));
    Ok(net)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{HasParams, Layer, Mode, Tensor4};
    use rand::SeedableRng;

    fn rng() -> ChaCha12Rng {
        ChaCha12Rng::seed_from_u64(17)
    }

    #[test]
    fn lite_forward_gives_two_logits_per_row() {
        let mut net: Sequential<f32> =
            build_backend(BackendPreset::Lite, 2, (108, 400), &mut rng()).unwrap();
        let x = Tensor4::zeros([2, 2, 108, 400]);
        let y = net.forward(&x, Mode::Eval).unwrap();
        assert_eq!(y.shape(), [2, 2, 1, 1]);
    }

    #[test]
    fn lite_parameter_count_is_reported_exactly() {
        let one: Sequential<f64> =
            build_backend(BackendPreset::Lite, 1, (108, 400), &mut rng()).unwrap();
        let two: Sequential<f64> =
            build_backend(BackendPreset::Lite, 2, (108, 400), &mut rng()).unwrap();
        // extra input channel costs one 3x3 stem kernel per stem channel
        assert_eq!(two.param_count(), one.param_count() + 8 * 9);
        // frozen so any architecture drift is caught
        assert_eq!(one.param_count(), 7_106);
    }

    #[test]
    fn paper_scale_lands_in_band() {
        let net: Sequential<f64> =
            build_backend(BackendPreset::PaperScale, 2, (108, 400), &mut rng()).unwrap();
        let n = net.param_count();
        assert!(
            (756_000..=924_000).contains(&n),
            "paper_scale has {n} parameters"
        );
    }
}
