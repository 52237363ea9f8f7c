//! The phase network: a shallow convolution ladder (1 -> 4 -> 4 -> 1
//! channels, kernels 3, 3, 1) that maps a raw phase segment to a
//! low-randomness single-channel map, optionally pooled to the magnitude
//! feature dimension.
//!
//! Tensors are frequency-major (`B x C x D x T`), so the frequency-axis
//! stride of the first convolution is its H stride. The ladder costs 209
//! parameters: 40 + 8 + 148 + 8 + 5 for conv1, bn1, conv2, bn2, conv3.

use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::featmap::SEGMENT_FRAMES;
use crate::nn::{AdaptiveAvgPool2d, BatchNorm2d, Conv2d, Relu, Scalar, Sequential};

/// Phase-network hyperparameters. The stride applies to the frequency axis
/// only (the time axis must stay at 400 frames for channel concatenation).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseNetConfig {
    /// Raw phase spectrum dimension (input height in model layout).
    pub in_dim: usize,
    /// Frequency-axis stride of the first convolution (1 or 2).
    pub stride: usize,
    /// Pool the output frequency dimension down to this target, when set.
    pub pool_to: Option<usize>,
}

/// Frequency dimension after the stride-`s` first convolution (3x3, pad 1).
pub fn phase_net_output_dim(in_dim: usize, stride: usize) -> usize {
    (in_dim + 2 - 3) / stride + 1
}

/// Builds the conv ladder:
/// `Conv2d(1->4, 3x3, freq stride S) -> BN -> ReLU -> Conv2d(4->4, 3x3) ->
/// BN -> ReLU -> Conv2d(4->1, 1x1) [-> adaptive pool to (D*, 400)]`.
pub fn build_phase_network<S: Scalar>(
    cfg: &PhaseNetConfig,
    rng: &mut ChaCha12Rng,
) -> Result<Sequential<S>> {
    if cfg.stride == 0 || cfg.stride > 2 {
        return Err(Error::Config(format!(
            "phase network stride must be 1 or 2, got {}",
            cfg.stride
        )));
    }
    if let Some(target) = cfg.pool_to {
        let width = phase_net_output_dim(cfg.in_dim, cfg.stride);
        if target > width {
            return Err(Error::Config(format!(
                "phase network cannot pool frequency dimension {width} up to {target}"
            )));
        }
    }
    let mut net = Sequential::new("phase_net");
    net.push(Box::new(Conv2d::new(
        "phase_net.conv1",
        1,
        4,
        (3, 3),
        (cfg.stride, 1),
        (1, 1),
        rng,
    )));
    net.push(Box::new(BatchNorm2d::new("phase_net.bn1", 4)));
    net.push(Box::new(Relu::new("phase_net.relu1")));
    net.push(Box::new(Conv2d::new(
        "phase_net.conv2",
        4,
        4,
        (3, 3),
        (1, 1),
        (1, 1),
        rng,
    )));
    net.push(Box::new(BatchNorm2d::new("phase_net.bn2", 4)));
    net.push(Box::new(Relu::new("phase_net.relu2")));
    net.push(Box::new(Conv2d::new(
        "phase_net.conv3",
        4,
        1,
        (1, 1),
        (1, 1),
        (0, 0),
        rng,
    )));
    if let Some(target) = cfg.pool_to {
        net.push(Box::new(AdaptiveAvgPool2d::new(
            "phase_net.pool",
            (target, SEGMENT_FRAMES),
        )));
    }
    Ok(net)
}
