//! Per-frame histogram entropy after global min-max normalization, plus the
//! uniform-noise reference map.
//!
//! The per-frame entropy of a feature map is what separates well-structured
//! magnitude spectra from wrapped phase spectra: phase behaves like uniform
//! noise, magnitude does not.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::dsp::{ChannelKind, FeatureMap, FeatureSource};
use crate::error::{Error, Result};

/// Histogram settings; defaults to 32 bins, base-2 logarithm.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EntropyConfig {
    pub n_bins: usize,
}

impl Default for EntropyConfig {
    fn default() -> Self {
        EntropyConfig { n_bins: 32 }
    }
}

impl EntropyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_bins < 2 {
            return Err(Error::Config("entropy needs at least 2 bins".into()));
        }
        Ok(())
    }
}

/// Per-frame entropies in bits.
#[derive(Debug, Clone)]
pub struct EntropyCurve {
    pub values: Vec<f64>,
    pub frame_times: Vec<f64>,
    pub source_label: String,
}

impl EntropyCurve {
    pub fn mean(&self) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Mean over the frames selected by `mask` (true = keep).
    pub fn mean_masked(&self, mask: &[bool]) -> f64 {
        let mut sum = 0.0;
        let mut n = 0usize;
        for (v, &keep) in self.values.iter().zip(mask) {
            if keep {
                sum += v;
                n += 1;
            }
        }
        if n == 0 {
            0.0
        } else {
            sum / n as f64
        }
    }
}

/// Maps the whole feature map affinely onto [0, 1]; a constant map becomes
/// all 0.5.
pub fn global_minmax_normalize(feat: &FeatureMap) -> FeatureMap {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &v in feat.values.iter() {
        min = min.min(v);
        max = max.max(v);
    }
    let values = if max > min {
        feat.values.mapv(|v| (v - min) / (max - min))
    } else {
        Array2::from_elem(feat.values.raw_dim(), 0.5)
    };
    FeatureMap {
        values,
        channel_kind: feat.channel_kind,
        source: feat.source,
    }
}

/// Histogram entropy of each frame: the frame's `D` values go into `n_bins`
/// equal-width bins over [0, 1] (the last bin includes its right edge) and
/// the entropy is `-sum p log2 p` over occupied bins.
///
/// Expects values already normalized to [0, 1].
pub fn frame_entropy(feat: &FeatureMap, cfg: &EntropyConfig, label: &str) -> Result<EntropyCurve> {
    cfg.validate()?;
    let d = feat.dim();
    if d == 0 {
        return Err(Error::Empty("feature map has no columns".into()));
    }
    let mut counts = vec![0usize; cfg.n_bins];
    let mut values = Vec::with_capacity(feat.n_frames());
    for t in 0..feat.n_frames() {
        counts.iter_mut().for_each(|c| *c = 0);
        for &v in feat.values.row(t) {
            debug_assert!((-1e-9..=1.0 + 1e-9).contains(&v), "value {v} outside [0,1]");
            let bin = ((v * cfg.n_bins as f64) as usize).min(cfg.n_bins - 1);
            counts[bin] += 1;
        }
        let mut h = 0.0;
        for &c in &counts {
            if c > 0 {
                let p = c as f64 / d as f64;
                h -= p * p.log2();
            }
        }
        values.push(h);
    }
    Ok(EntropyCurve {
        values,
        frame_times: (0..feat.n_frames()).map(|t| t as f64).collect(),
        source_label: label.to_string(),
    })
}

/// `T x D` i.i.d. uniform [0, 1) map, deterministic for a given seed.
pub fn random_noise_map(t: usize, d: usize, seed: u64) -> Result<FeatureMap> {
    if t < 1 || d < 1 {
        return Err(Error::Config("noise map needs T, D >= 1".into()));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let values = Array2::from_shape_fn((t, d), |_| rng.gen::<f64>());
    Ok(FeatureMap {
        values,
        channel_kind: ChannelKind::Magnitude,
        source: FeatureSource::Cqt,
    })
}

/// Emits per-frame and mean entropies as CSV, one column per curve.
pub fn entropy_report(curves: &[EntropyCurve]) -> Result<String> {
    if curves.is_empty() {
        return Err(Error::Empty("no entropy curves".into()));
    }
    let t = curves[0].values.len();
    if curves.iter().any(|c| c.values.len() != t) {
        return Err(Error::Shape(
            "entropy curves have different frame counts".into(),
        ));
    }
    let mut out = String::from("frame");
    for c in curves {
        out.push(',');
        out.push_str(&c.source_label);
    }
    out.push('\n');
    for i in 0..t {
        out.push_str(&i.to_string());
        for c in curves {
            out.push_str(&format!(",{:.6}", c.values[i]));
        }
        out.push('\n');
    }
    out.push_str("mean");
    for c in curves {
        out.push_str(&format!(",{:.6}", c.mean()));
    }
    out.push('\n');
    Ok(out)
}

/// Voiced-frame mask from per-frame energy of a complex spectrogram's
/// magnitude map (in dB): a frame is voiced when its linear-power energy
/// exceeds `threshold` times the loudest frame's.
pub fn voiced_mask_from_log_power(mag_db: &FeatureMap, threshold: f64) -> Vec<bool> {
    let energies: Vec<f64> = (0..mag_db.n_frames())
        .map(|t| {
            mag_db
                .values
                .row(t)
                .iter()
                .map(|&db| 10f64.powf(db / 10.0))
                .sum()
        })
        .collect();
    let max = energies.iter().fold(0.0f64, |m, &e| m.max(e));
    energies.iter().map(|&e| e > threshold * max).collect()
}
