//! Feature extraction strategies, registered by name.
//!
//! Each acoustic feature type (log-power DFT `lps`, log-power CQT `cqt`,
//! cepstral `lfcc`) sits behind the [`FeatureExtractor`] trait together with
//! its paired phase spectrum, so callers select one at runtime via
//! [`feature_extractor`].

use std::sync::OnceLock;

use crate::dataset::Waveform;
use crate::dsp::cqt::CqtKernels;
use crate::dsp::{
    lfcc, log_power, phase, stft, CqtConfig, FeatureMap, LfccConfig, StftConfig, DEFAULT_FLOOR_DB,
};
use crate::error::{Error, Result};
use crate::PIPELINE_SAMPLE_RATE;

/// A magnitude-like map plus its paired phase spectrum.
#[derive(Debug, Clone)]
pub struct FeaturePair {
    pub magnitude: FeatureMap,
    pub phase: Option<FeatureMap>,
}

/// One acoustic feature configuration: how to get the magnitude map, the
/// paired phase map, and their dimensions.
pub trait FeatureExtractor: Send + Sync {
    fn name(&self) -> &'static str;
    /// Dimension of the magnitude (or cepstral) map.
    fn magnitude_dim(&self) -> usize;
    /// Dimension of the paired phase spectrum.
    fn phase_dim(&self) -> usize;
    fn extract(&self, wave: &Waveform, with_phase: bool) -> Result<FeaturePair>;
}

/// Log-power DFT spectrum paired with DFT phase.
struct LpsExtractor {
    cfg: StftConfig,
}

impl FeatureExtractor for LpsExtractor {
    fn name(&self) -> &'static str {
        "lps"
    }

    fn magnitude_dim(&self) -> usize {
        self.cfg.n_bins()
    }

    fn phase_dim(&self) -> usize {
        self.cfg.n_bins()
    }

    fn extract(&self, wave: &Waveform, with_phase: bool) -> Result<FeaturePair> {
        let spec = stft(wave, &self.cfg)?;
        Ok(FeaturePair {
            magnitude: log_power(&spec, DEFAULT_FLOOR_DB),
            phase: with_phase.then(|| phase(&spec)),
        })
    }
}

/// Log-power CQT paired with CQT phase.
struct CqtExtractor {
    kernels: CqtKernels,
}

impl FeatureExtractor for CqtExtractor {
    fn name(&self) -> &'static str {
        "cqt"
    }

    fn magnitude_dim(&self) -> usize {
        108
    }

    fn phase_dim(&self) -> usize {
        108
    }

    fn extract(&self, wave: &Waveform, with_phase: bool) -> Result<FeaturePair> {
        let spec = self.kernels.apply(wave)?;
        Ok(FeaturePair {
            magnitude: log_power(&spec, DEFAULT_FLOOR_DB),
            phase: with_phase.then(|| phase(&spec)),
        })
    }
}

/// LFCC paired with the DFT phase spectrum (dimensions intentionally differ).
struct LfccExtractor {
    cfg: LfccConfig,
    dft: StftConfig,
}

impl FeatureExtractor for LfccExtractor {
    fn name(&self) -> &'static str {
        "lfcc"
    }

    fn magnitude_dim(&self) -> usize {
        self.cfg.output_dim()
    }

    fn phase_dim(&self) -> usize {
        self.dft.n_bins()
    }

    fn extract(&self, wave: &Waveform, with_phase: bool) -> Result<FeaturePair> {
        let magnitude = lfcc(wave, &self.cfg)?;
        let phase_map = if with_phase {
            Some(phase(&stft(wave, &self.dft)?))
        } else {
            None
        };
        Ok(FeaturePair {
            magnitude,
            phase: phase_map,
        })
    }
}

fn registry() -> &'static Vec<Box<dyn FeatureExtractor>> {
    static REGISTRY: OnceLock<Vec<Box<dyn FeatureExtractor>>> = OnceLock::new();
    REGISTRY.get_or_init(|| {
        vec![
            Box::new(LpsExtractor {
                cfg: StftConfig::default(),
            }),
            Box::new(CqtExtractor {
                kernels: CqtKernels::build(&CqtConfig::default(), PIPELINE_SAMPLE_RATE)
                    .expect("default cqt config is valid"),
            }),
            Box::new(LfccExtractor {
                cfg: LfccConfig::default(),
                dft: StftConfig::default(),
            }),
        ]
    })
}

/// Looks up an extractor by its registered name.
pub fn feature_extractor(name: &str) -> Result<&'static dyn FeatureExtractor> {
    registry()
        .iter()
        .find(|e| e.name() == name)
        .map(|e| e.as_ref())
        .ok_or_else(|| {
            Error::Config(format!(
                "unknown feature {name:?} (available: {})",
                feature_extractor_names().join(", ")
            ))
        })
}

/// Names of all registered extractors.
pub fn feature_extractor_names() -> Vec<&'static str> {
    registry().iter().map(|e| e.name()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Waveform;

    #[test]
    fn registry_exposes_all_three_features() {
        let names = feature_extractor_names();
        assert_eq!(names, vec!["lps", "cqt", "lfcc"]);
        assert!(feature_extractor("mel").is_err());
    }

    #[test]
    fn dimensions_match_their_specs() {
        assert_eq!(feature_extractor("lps").unwrap().magnitude_dim(), 513);
        assert_eq!(feature_extractor("cqt").unwrap().magnitude_dim(), 108);
        let lf = feature_extractor("lfcc").unwrap();
        assert_eq!(lf.magnitude_dim(), 60);
        assert_eq!(lf.phase_dim(), 513);
    }

    #[test]
    fn lfcc_pair_has_different_dims_and_frame_rates() {
        let samples: Vec<f64> = (0..32_000)
            .map(|i| (2.0 * std::f64::consts::PI * 220.0 * i as f64 / 16000.0).sin() * 0.5)
            .collect();
        let wave = Waveform::new(samples, 16_000, "u").unwrap();
        let pair = feature_extractor("lfcc")
            .unwrap()
            .extract(&wave, true)
            .unwrap();
        assert_eq!(pair.magnitude.dim(), 60);
        let ph = pair.phase.unwrap();
        assert_eq!(ph.dim(), 513);
        assert!(pair.magnitude.n_frames() > ph.n_frames());
    }
}
