//! The phase network, the multi-scale SE backend, and the three fusion
//! frameworks that assemble them.

mod backend;
mod checkpoint;
pub mod framework;
mod fusion;
mod phase_net;

pub use backend::{build_backend, BackendArch, BackendPreset};
pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointMeta, LoadedCheckpoint};
pub use framework::{framework, framework_names, Framework, FrameworkKind};
pub use fusion::{tensor_to_feature_map, FusionModel};
pub use phase_net::{build_phase_network, phase_net_output_dim, PhaseNetConfig};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::featmap::SEGMENT_FRAMES;

/// How magnitude and phase features are paired, with the dimensions the
/// models need. `mag_dim` is the magnitude feature dimension (the shared
/// target dimension after any phase-side pooling), `phase_dim` the raw
/// phase spectrum dimension.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairingConfig {
    pub name: String,
    pub mag_dim: usize,
    pub phase_dim: usize,
    /// Frequency-axis stride of the first phase-network convolution.
    pub phase_stride: usize,
    /// Whether the phase path is pooled down to `mag_dim`.
    pub phase_pool: bool,
}

impl PairingConfig {
    /// Log-power DFT + DFT phase (513/513, no pooling).
    pub fn lps() -> Self {
        PairingConfig {
            name: "lps".into(),
            mag_dim: 513,
            phase_dim: 513,
            phase_stride: 1,
            phase_pool: false,
        }
    }

    /// Log-power CQT + CQT phase (108/108, no pooling).
    pub fn cqt() -> Self {
        PairingConfig {
            name: "cqt".into(),
            mag_dim: 108,
            phase_dim: 108,
            phase_stride: 1,
            phase_pool: false,
        }
    }

    /// LFCC + DFT phase: dimensions differ (60 vs 513), so the phase path
    /// runs at stride 2 and pools down to 60.
    pub fn lfcc() -> Self {
        PairingConfig {
            name: "lfcc".into(),
            mag_dim: 60,
            phase_dim: 513,
            phase_stride: 2,
            phase_pool: true,
        }
    }

    /// Feature-domain controlled corpus: both channels share one dimension.
    pub fn controlled(dim: usize) -> Self {
        PairingConfig {
            name: "controlled".into(),
            mag_dim: dim,
            phase_dim: dim,
            phase_stride: 1,
            phase_pool: false,
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "lps" => Ok(Self::lps()),
            "cqt" => Ok(Self::cqt()),
            "lfcc" => Ok(Self::lfcc()),
            other => Err(Error::Config(format!(
                "unknown feature pairing {other:?} (available: lps, cqt, lfcc)"
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mag_dim == 0 || self.phase_dim == 0 {
            return Err(Error::Config("pairing dimensions must be positive".into()));
        }
        let needs_resize = self.mag_dim != self.phase_dim;
        if needs_resize != (self.phase_pool || self.phase_stride > 1) {
            return Err(Error::Config(format!(
                "pairing {}: stride {} / pool {} inconsistent with dims {} vs {}",
                self.name, self.phase_stride, self.phase_pool, self.mag_dim, self.phase_dim
            )));
        }
        if self.phase_pool {
            let conv_width = phase_net_output_dim(self.phase_dim, self.phase_stride);
            if self.mag_dim > conv_width {
                return Err(Error::Config(format!(
                    "pairing {}: cannot pool phase width {conv_width} up to {}",
                    self.name, self.mag_dim
                )));
            }
        }
        Ok(())
    }
}

/// Everything that determines a model's architecture; embedded in
/// checkpoints so evaluation is self-describing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub framework: FrameworkKind,
    pub pairing: PairingConfig,
    pub backend: BackendPreset,
    pub seed: u64,
}

impl ModelConfig {
    pub fn new(
        framework: FrameworkKind,
        pairing: PairingConfig,
        backend: BackendPreset,
        seed: u64,
    ) -> Self {
        ModelConfig {
            framework,
            pairing,
            backend,
            seed,
        }
    }

    /// Spatial size of segments entering the backend, in the model's
    /// frequency-major layout (feature dimension x time frames).
    pub fn segment_shape(&self) -> (usize, usize) {
        (self.pairing.mag_dim, SEGMENT_FRAMES)
    }
}
