//! Time-frequency front-end: STFT, constant-Q transform, LFCC, and the
//! magnitude / phase feature maps they produce.

mod cache;
mod cqt;
pub mod extractor;
mod lfcc;
mod stft;
mod window;

pub use cache::{read_feature_cache, write_feature_cache};
pub use cqt::{cqt, CqtConfig, CqtKernels};
pub use extractor::{feature_extractor, feature_extractor_names, FeatureExtractor, FeaturePair};
pub use lfcc::{lfcc, LfccConfig};
pub use stft::{stft, StftConfig};
pub use window::hann;

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Log-power floor in dB; absorbs exact zeros without reaching -inf.
pub const DEFAULT_FLOOR_DB: f64 = -100.0;

/// What a feature map's values represent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    Magnitude,
    Phase,
    Cepstral,
    ProcessedPhase,
}

/// Transform the map came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSource {
    Dft,
    Cqt,
    Lfcc,
}

/// Which complex transform produced a spectrogram.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrogramKind {
    Dft,
    Cqt,
}

/// Complex time-frequency matrix, frames along the first axis.
#[derive(Debug, Clone)]
pub struct ComplexSpectrogram {
    pub values: Array2<Complex64>,
    pub frame_times: Vec<f64>,
    pub kind: SpectrogramKind,
}

/// Real-valued time x frequency matrix with a channel tag.
#[derive(Debug, Clone)]
pub struct FeatureMap {
    pub values: Array2<f64>,
    pub channel_kind: ChannelKind,
    pub source: FeatureSource,
}

impl FeatureMap {
    pub fn n_frames(&self) -> usize {
        self.values.nrows()
    }

    pub fn dim(&self) -> usize {
        self.values.ncols()
    }
}

/// 10*log10(max(|z|^2, p_floor)) with p_floor = 10^(floor_db/10).
pub fn log_power(spec: &ComplexSpectrogram, floor_db: f64) -> FeatureMap {
    let p_floor = 10f64.powf(floor_db / 10.0);
    let values = spec.values.mapv(|z| 10.0 * z.norm_sqr().max(p_floor).log10());
    FeatureMap {
        values,
        channel_kind: ChannelKind::Magnitude,
        source: source_of(spec.kind),
    }
}

/// Wrapped phase in (-pi, pi]; zero maps to phase 0.
pub fn phase(spec: &ComplexSpectrogram) -> FeatureMap {
    let values = spec.values.mapv(|z| {
        if z.re == 0.0 && z.im == 0.0 {
            0.0
        } else {
            let p = z.im.atan2(z.re);
            if p <= -std::f64::consts::PI {
                std::f64::consts::PI
            } else {
                p
            }
        }
    });
    FeatureMap {
        values,
        channel_kind: ChannelKind::Phase,
        source: source_of(spec.kind),
    }
}

fn source_of(kind: SpectrogramKind) -> FeatureSource {
    match kind {
        SpectrogramKind::Dft => FeatureSource::Dft,
        SpectrogramKind::Cqt => FeatureSource::Cqt,
    }
}

/// Regression delta with half-width `(width-1)/2` and replicated edges.
pub fn delta(feat: &FeatureMap, width: usize) -> Result<FeatureMap> {
    if width < 3 || width % 2 == 0 {
        return Err(Error::Config(format!(
            "delta width must be an odd integer >= 3, got {width}"
        )));
    }
    let m = (width - 1) / 2;
    let t_len = feat.n_frames();
    let d = feat.dim();
    let denom: f64 = 2.0 * (1..=m).map(|k| (k * k) as f64).sum::<f64>();
    let mut out = Array2::zeros((t_len, d));
    for t in 0..t_len {
        for j in 0..d {
            let mut acc = 0.0;
            for k in 1..=m {
                let fwd = feat.values[((t + k).min(t_len - 1), j)];
                let bwd = feat.values[(t.saturating_sub(k), j)];
                acc += k as f64 * (fwd - bwd);
            }
            out[(t, j)] = acc / denom;
        }
    }
    Ok(FeatureMap {
        values: out,
        channel_kind: feat.channel_kind,
        source: feat.source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr2;

    fn spec_of(values: Array2<Complex64>) -> ComplexSpectrogram {
        let t = values.nrows();
        ComplexSpectrogram {
            values,
            frame_times: (0..t).map(|i| i as f64).collect(),
            kind: SpectrogramKind::Dft,
        }
    }

    #[test]
    fn log_power_known_values() {
        let spec = spec_of(arr2(&[[
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(10.0, 0.0),
        ]]));
        let lp = log_power(&spec, -100.0);
        assert!((lp.values[(0, 0)] - 0.0).abs() < 1e-12);
        assert!((lp.values[(0, 1)] - (-100.0)).abs() < 1e-12);
        assert!((lp.values[(0, 2)] - 20.0).abs() < 1e-12);
    }

    #[test]
    fn log_power_scale_by_10_shifts_20_db() {
        let z = Complex64::new(0.3, -0.4);
        let a = spec_of(arr2(&[[z]]));
        let b = spec_of(arr2(&[[z * 10.0]]));
        let la = log_power(&a, -100.0);
        let lb = log_power(&b, -100.0);
        assert!((lb.values[(0, 0)] - la.values[(0, 0)] - 20.0).abs() < 1e-10);
    }

    #[test]
    fn phase_conventions() {
        let spec = spec_of(arr2(&[[
            Complex64::new(0.0, 1.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(-1.0, 0.0),
            Complex64::new(-1.0, -0.0),
        ]]));
        let p = phase(&spec);
        assert!((p.values[(0, 0)] - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert_eq!(p.values[(0, 1)], 0.0);
        assert!((p.values[(0, 2)] - std::f64::consts::PI).abs() < 1e-15);
        // branch (-pi, pi]: the -0 imaginary side folds onto +pi
        assert!((p.values[(0, 3)] - std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn delta_of_constant_is_zero() {
        let feat = FeatureMap {
            values: Array2::from_elem((7, 3), 4.2),
            channel_kind: ChannelKind::Cepstral,
            source: FeatureSource::Lfcc,
        };
        let d = delta(&feat, 5).unwrap();
        assert!(d.values.iter().all(|&v| v.abs() < 1e-12));
    }

    #[test]
    fn delta_of_linear_ramp_is_one_inside() {
        let mut values = Array2::zeros((9, 1));
        for t in 0..9 {
            values[(t, 0)] = t as f64;
        }
        let feat = FeatureMap {
            values,
            channel_kind: ChannelKind::Cepstral,
            source: FeatureSource::Lfcc,
        };
        let d = delta(&feat, 5).unwrap();
        // interior frames see the full regression window
        for t in 2..7 {
            assert!((d.values[(t, 0)] - 1.0).abs() < 1e-12, "t={t}");
        }
    }

    #[test]
    fn delta_single_frame_is_zero() {
        let feat = FeatureMap {
            values: Array2::from_elem((1, 4), 3.0),
            channel_kind: ChannelKind::Cepstral,
            source: FeatureSource::Lfcc,
        };
        let d = delta(&feat, 5).unwrap();
        assert!(d.values.iter().all(|&v| v == 0.0));
    }
}
