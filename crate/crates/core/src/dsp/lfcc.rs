//! Linear-frequency cepstral coefficients: linear triangular filterbank on
//! the power spectrum, log, orthonormal DCT-II, plus delta and delta-delta.

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::dataset::Waveform;
use crate::dsp::{delta, hann, ChannelKind, FeatureMap, FeatureSource};
use crate::error::{Error, Result};

const LOG_ENERGY_FLOOR: f64 = 1e-10;

/// LFCC parameters; defaults give 20 ms / 10 ms framing, 512 FFT points,
/// 20 filters and 20 kept coefficients, so the static+delta+delta-delta
/// output dimension is 60.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LfccConfig {
    pub window_ms: f64,
    pub hop_ms: f64,
    pub n_fft: usize,
    pub n_filters: usize,
    pub n_ceps: usize,
    pub delta_width: usize,
}

impl Default for LfccConfig {
    fn default() -> Self {
        LfccConfig {
            window_ms: 20.0,
            hop_ms: 10.0,
            n_fft: 512,
            n_filters: 20,
            n_ceps: 20,
            delta_width: 5,
        }
    }
}

impl LfccConfig {
    pub fn output_dim(&self) -> usize {
        self.n_ceps * 3
    }

    fn validate(&self, sample_rate: u32) -> Result<()> {
        let win = (self.window_ms * sample_rate as f64 / 1000.0).round() as usize;
        if self.n_fft < win {
            return Err(Error::Config(format!(
                "lfcc n_fft {} smaller than window {win}",
                self.n_fft
            )));
        }
        if self.n_ceps > self.n_filters {
            return Err(Error::Config(
                "cannot keep more cepstra than filterbank channels".into(),
            ));
        }
        Ok(())
    }
}

/// Triangular filterbank with `n_filters` filters linearly spaced over
/// [0, fs/2], evaluated at FFT bin centers. Row-major `n_filters x n_bins`.
fn linear_filterbank(n_filters: usize, n_fft: usize, sample_rate: u32) -> Vec<Vec<f64>> {
    let n_bins = n_fft / 2 + 1;
    let nyquist = sample_rate as f64 / 2.0;
    let edges: Vec<f64> = (0..n_filters + 2)
        .map(|i| nyquist * i as f64 / (n_filters + 1) as f64)
        .collect();
    let bin_freq = |j: usize| j as f64 * sample_rate as f64 / n_fft as f64;

    let mut bank = vec![vec![0.0; n_bins]; n_filters];
    for m in 0..n_filters {
        let (lo, mid, hi) = (edges[m], edges[m + 1], edges[m + 2]);
        for j in 0..n_bins {
            let f = bin_freq(j);
            bank[m][j] = if f > lo && f < mid {
                (f - lo) / (mid - lo)
            } else if (f - mid).abs() < 1e-12 {
                1.0
            } else if f > mid && f < hi {
                (hi - f) / (hi - mid)
            } else {
                0.0
            };
        }
    }
    bank
}

/// Orthonormal DCT-II matrix, `n_ceps x n_filters`.
fn dct_matrix(n_ceps: usize, n_filters: usize) -> Vec<Vec<f64>> {
    let m = n_filters as f64;
    (0..n_ceps)
        .map(|k| {
            let scale = if k == 0 { (1.0 / m).sqrt() } else { (2.0 / m).sqrt() };
            (0..n_filters)
                .map(|j| {
                    scale
                        * (std::f64::consts::PI * k as f64 * (2.0 * j as f64 + 1.0) / (2.0 * m))
                            .cos()
                })
                .collect()
        })
        .collect()
}

/// Extracts LFCC with delta and delta-delta appended (`T x 3*n_ceps`).
pub fn lfcc(wave: &Waveform, cfg: &LfccConfig) -> Result<FeatureMap> {
    wave.check_pipeline_rate()?;
    cfg.validate(wave.sample_rate)?;
    let fs = wave.sample_rate;
    let win = (cfg.window_ms * fs as f64 / 1000.0).round() as usize;
    let hop = (cfg.hop_ms * fs as f64 / 1000.0).round() as usize;
    let n = wave.samples.len();
    if n < win {
        return Err(Error::TooShort(format!(
            "utterance has {n} samples, shorter than one {win}-sample window"
        )));
    }

    let n_frames = (n - win) / hop + 1;
    let n_bins = cfg.n_fft / 2 + 1;
    let window = hann(win);
    let bank = linear_filterbank(cfg.n_filters, cfg.n_fft, fs);
    let dct = dct_matrix(cfg.n_ceps, cfg.n_filters);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(cfg.n_fft);

    let mut statics = Array2::zeros((n_frames, cfg.n_ceps));
    let mut buf = vec![Complex64::new(0.0, 0.0); cfg.n_fft];
    let mut power = vec![0.0f64; n_bins];
    for t in 0..n_frames {
        let start = t * hop;
        for (i, b) in buf.iter_mut().enumerate() {
            *b = if i < win {
                Complex64::new(wave.samples[start + i] * window[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            };
        }
        fft.process(&mut buf);
        for (p, b) in power.iter_mut().zip(&buf) {
            *p = b.norm_sqr();
        }
        let log_e: Vec<f64> = bank
            .iter()
            .map(|filt| {
                let e: f64 = filt.iter().zip(&power).map(|(w, p)| w * p).sum();
                e.max(LOG_ENERGY_FLOOR).ln()
            })
            .collect();
        for (k, row) in dct.iter().enumerate() {
            statics[(t, k)] = row.iter().zip(&log_e).map(|(c, e)| c * e).sum();
        }
    }

    let static_map = FeatureMap {
        values: statics,
        channel_kind: ChannelKind::Cepstral,
        source: FeatureSource::Lfcc,
    };
    let d1 = delta(&static_map, cfg.delta_width)?;
    let d2 = delta(&d1, cfg.delta_width)?;

    let mut values = Array2::zeros((n_frames, cfg.output_dim()));
    for t in 0..n_frames {
        for k in 0..cfg.n_ceps {
            values[(t, k)] = static_map.values[(t, k)];
            values[(t, cfg.n_ceps + k)] = d1.values[(t, k)];
            values[(t, 2 * cfg.n_ceps + k)] = d2.values[(t, k)];
        }
    }
    Ok(FeatureMap {
        values,
        channel_kind: ChannelKind::Cepstral,
        source: FeatureSource::Lfcc,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Waveform;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn output_dimension_is_60() {
        let wave = Waveform::new(vec![0.1; 16_000], 16_000, "w").unwrap();
        let feat = lfcc(&wave, &LfccConfig::default()).unwrap();
        assert_eq!(feat.dim(), 60);
        assert_eq!(feat.n_frames(), (16_000 - 320) / 160 + 1);
    }

    #[test]
    fn all_zero_input_gives_constant_cepstra_and_zero_deltas() {
        let wave = Waveform::new(vec![0.0; 8_000], 16_000, "z").unwrap();
        let feat = lfcc(&wave, &LfccConfig::default()).unwrap();
        for t in 0..feat.n_frames() {
            for k in 0..20 {
                assert!((feat.values[(t, k)] - feat.values[(0, k)]).abs() < 1e-12);
            }
            for k in 20..60 {
                assert!(feat.values[(t, k)].abs() < 1e-12);
            }
        }
    }

    /// Monte-Carlo oracle: across white-noise trials the mean |c0| must
    /// dominate every other static coefficient, since c0 aggregates the
    /// (large, similar) log filterbank energies while higher coefficients
    /// see only their fluctuations.
    #[test]
    fn white_noise_c0_has_largest_mean_magnitude() {
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        let mut sums = [0.0f64; 20];
        for _ in 0..100 {
            let samples: Vec<f64> = (0..4_000).map(|_| rng.gen_range(-0.5..0.5)).collect();
            let wave = Waveform::new(samples, 16_000, "n").unwrap();
            let feat = lfcc(&wave, &LfccConfig::default()).unwrap();
            for k in 0..20 {
                let mean_abs: f64 = (0..feat.n_frames())
                    .map(|t| feat.values[(t, k)].abs())
                    .sum::<f64>()
                    / feat.n_frames() as f64;
                sums[k] += mean_abs;
            }
        }
        for k in 1..20 {
            assert!(
                sums[0] > sums[k],
                "c0 mean {} not above c{k} mean {}",
                sums[0],
                sums[k]
            );
        }
    }

    #[test]
    fn filterbank_covers_band_without_gaps() {
        let bank = linear_filterbank(20, 512, 16_000);
        // every interior bin is touched by at least one filter
        for j in 13..244 {
            let total: f64 = bank.iter().map(|f| f[j]).sum();
            assert!(total > 0.0, "bin {j} uncovered");
        }
    }

    #[test]
    fn dct_rows_are_orthonormal() {
        let d = dct_matrix(20, 20);
        for a in 0..20 {
            for b in 0..20 {
                let dot: f64 = (0..20).map(|j| d[a][j] * d[b][j]).sum();
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-12, "rows {a},{b}");
            }
        }
    }
}
