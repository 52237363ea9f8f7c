//! Constant-Q transform by direct sparse-kernel correlation.
//!
//! Each bin gets one Hann-windowed complex kernel of length `Q*fs/f_k`
//! evaluated on the hop grid. Kernels are normalized by `1/sqrt(len)` so a
//! white-noise input produces a flat floor across bins; absolute scale is a
//! calibration choice and everything downstream is scale-robust.

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dataset::Waveform;
use crate::dsp::{hann, ComplexSpectrogram, SpectrogramKind};
use crate::error::{Error, Result};

/// CQT analysis parameters. Defaults: 16 ms hop, 9 octaves x 12 bins from
/// 15.625 Hz, so the 108-bin ladder tops out at the 16 kHz Nyquist.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CqtConfig {
    pub hop_ms: f64,
    pub n_octaves: usize,
    pub bins_per_octave: usize,
    pub f_min: f64,
}

impl Default for CqtConfig {
    fn default() -> Self {
        CqtConfig {
            hop_ms: 16.0,
            n_octaves: 9,
            bins_per_octave: 12,
            f_min: 15.625,
        }
    }
}

impl CqtConfig {
    pub fn n_bins(&self) -> usize {
        self.n_octaves * self.bins_per_octave
    }

    pub fn hop_samples(&self, sample_rate: u32) -> usize {
        (self.hop_ms * sample_rate as f64 / 1000.0).round() as usize
    }

    /// Constant ratio of center frequency to bandwidth.
    pub fn q_factor(&self) -> f64 {
        1.0 / (2f64.powf(1.0 / self.bins_per_octave as f64) - 1.0)
    }

    /// Geometrically spaced center frequencies `f_min * 2^(k/bins_per_octave)`.
    pub fn center_frequencies(&self) -> Vec<f64> {
        (0..self.n_bins())
            .map(|k| self.f_min * 2f64.powf(k as f64 / self.bins_per_octave as f64))
            .collect()
    }

    pub fn validate(&self, sample_rate: u32) -> Result<()> {
        if self.n_bins() != 108 {
            return Err(Error::Config(format!(
                "cqt ladder must span 108 bins, got {} ({} octaves x {})",
                self.n_bins(),
                self.n_octaves,
                self.bins_per_octave
            )));
        }
        let top = self.f_min * 2f64.powi(self.n_octaves as i32);
        if top > sample_rate as f64 / 2.0 + 1e-6 {
            return Err(Error::Config(format!(
                "cqt top frequency {top} Hz exceeds Nyquist"
            )));
        }
        if self.hop_samples(sample_rate) == 0 {
            return Err(Error::Config("cqt hop must be positive".into()));
        }
        Ok(())
    }
}

struct Kernel {
    taps: Vec<Complex64>,
}

/// Precomputed CQT kernels; build once, share read-only across utterances.
pub struct CqtKernels {
    cfg: CqtConfig,
    sample_rate: u32,
    kernels: Vec<Kernel>,
    longest: usize,
}

impl CqtKernels {
    pub fn build(cfg: &CqtConfig, sample_rate: u32) -> Result<Self> {
        cfg.validate(sample_rate)?;
        let q = cfg.q_factor();
        let fs = sample_rate as f64;
        let mut kernels = Vec::with_capacity(cfg.n_bins());
        for f in cfg.center_frequencies() {
            let len = (q * fs / f).ceil() as usize;
            let window = hann(len);
            let norm = 1.0 / (len as f64).sqrt();
            let taps = (0..len)
                .map(|i| {
                    let angle = -2.0 * std::f64::consts::PI * f * i as f64 / fs;
                    Complex64::from_polar(window[i] * norm, angle)
                })
                .collect();
            kernels.push(Kernel { taps });
        }
        let longest = kernels.iter().map(|k| k.taps.len()).max().unwrap_or(0);
        Ok(CqtKernels {
            cfg: cfg.clone(),
            sample_rate,
            kernels,
            longest,
        })
    }

    /// Length of the longest (lowest-frequency) kernel in samples.
    pub fn longest_kernel(&self) -> usize {
        self.longest
    }

    pub fn apply(&self, wave: &Waveform) -> Result<ComplexSpectrogram> {
        wave.check_pipeline_rate()?;
        if wave.sample_rate != self.sample_rate {
            return Err(Error::SampleRate {
                got: wave.sample_rate,
                expected: self.sample_rate,
            });
        }
        let n = wave.samples.len();
        if n < self.longest {
            return Err(Error::TooShort(format!(
                "utterance has {n} samples, shorter than the {}-sample support of the lowest-frequency kernel",
                self.longest
            )));
        }
        let hop = self.cfg.hop_samples(self.sample_rate);
        let n_frames = (n - self.longest) / hop + 1;
        let n_bins = self.cfg.n_bins();

        let mut values = Array2::zeros((n_frames, n_bins));
        let mut frame_times = Vec::with_capacity(n_frames);
        for t in 0..n_frames {
            let center = self.longest / 2 + t * hop;
            for (k, kernel) in self.kernels.iter().enumerate() {
                let len = kernel.taps.len();
                let start = center - len / 2;
                let mut acc = Complex64::new(0.0, 0.0);
                for (x, tap) in wave.samples[start..start + len].iter().zip(&kernel.taps) {
                    acc += tap * *x;
                }
                values[(t, k)] = acc;
            }
            frame_times.push(center as f64 / self.sample_rate as f64);
        }

        Ok(ComplexSpectrogram {
            values,
            frame_times,
            kind: SpectrogramKind::Cqt,
        })
    }
}

/// One-shot CQT; builds the kernels and applies them.
pub fn cqt(wave: &Waveform, cfg: &CqtConfig) -> Result<ComplexSpectrogram> {
    CqtKernels::build(cfg, wave.sample_rate)?.apply(wave)
}
