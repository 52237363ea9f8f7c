//! Short-time Fourier transform with frames fully inside the signal.

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::dataset::Waveform;
use crate::dsp::{hann, ComplexSpectrogram, SpectrogramKind};
use crate::error::{Error, Result};

/// DFT analysis parameters; the defaults give 64 ms / 32 ms framing with
/// 1024 FFT points at 16 kHz (513 output bins).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StftConfig {
    pub window_ms: f64,
    pub hop_ms: f64,
    pub n_fft: usize,
}

impl Default for StftConfig {
    fn default() -> Self {
        StftConfig {
            window_ms: 64.0,
            hop_ms: 32.0,
            n_fft: 1024,
        }
    }
}

impl StftConfig {
    pub fn window_samples(&self, sample_rate: u32) -> usize {
        (self.window_ms * sample_rate as f64 / 1000.0).round() as usize
    }

    pub fn hop_samples(&self, sample_rate: u32) -> usize {
        (self.hop_ms * sample_rate as f64 / 1000.0).round() as usize
    }

    pub fn n_bins(&self) -> usize {
        self.n_fft / 2 + 1
    }

    pub fn validate(&self, sample_rate: u32) -> Result<()> {
        let win = self.window_samples(sample_rate);
        let hop = self.hop_samples(sample_rate);
        if hop == 0 || win == 0 {
            return Err(Error::Config("stft window/hop must be positive".into()));
        }
        if self.n_fft < win {
            return Err(Error::Config(format!(
                "n_fft {} smaller than window length {win}",
                self.n_fft
            )));
        }
        Ok(())
    }
}

/// Computes the one-sided STFT. Frame `t` covers samples
/// `[t*hop, t*hop + win)`; no padding is applied, so the frame count is
/// `floor((N - win)/hop) + 1`.
pub fn stft(wave: &Waveform, cfg: &StftConfig) -> Result<ComplexSpectrogram> {
    wave.check_pipeline_rate()?;
    cfg.validate(wave.sample_rate)?;
    let win = cfg.window_samples(wave.sample_rate);
    let hop = cfg.hop_samples(wave.sample_rate);
    let n = wave.samples.len();
    if n < win {
        return Err(Error::TooShort(format!(
            "utterance has {n} samples, shorter than one {win}-sample window"
        )));
    }

    let n_frames = (n - win) / hop + 1;
    let n_bins = cfg.n_bins();
    let window = hann(win);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(cfg.n_fft);

    let mut values = Array2::zeros((n_frames, n_bins));
    let mut frame_times = Vec::with_capacity(n_frames);
    let mut buf = vec![Complex64::new(0.0, 0.0); cfg.n_fft];
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
        for k in 0..n_bins {
            values[(t, k)] = buf[k];
        }
        frame_times.push((start as f64 + win as f64 / 2.0) / wave.sample_rate as f64);
    }

    Ok(ComplexSpectrogram {
        values,
        frame_times,
        kind: SpectrogramKind::Dft,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Waveform;

    fn tone(freq: f64, n: usize, amp: f64) -> Waveform {
        let samples = (0..n)
            .map(|i| amp * (2.0 * std::f64::consts::PI * freq * i as f64 / 16000.0).cos())
            .collect();
        Waveform::new(samples, 16_000, "tone").unwrap()
    }

    #[test]
    fn one_second_gives_30_frames_of_513_bins() {
        let spec = stft(&tone(440.0, 16_000, 1.0), &StftConfig::default()).unwrap();
        assert_eq!(spec.values.nrows(), 30);
        assert_eq!(spec.values.ncols(), 513);
    }

    #[test]
    fn cosine_at_1000_hz_peaks_at_bin_64() {
        let spec = stft(&tone(1000.0, 16_000, 1.0), &StftConfig::default()).unwrap();
        for t in 0..spec.values.nrows() {
            let row = spec.values.row(t);
            let argmax = row
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.norm_sqr().total_cmp(&b.1.norm_sqr()))
                .unwrap()
                .0;
            assert_eq!(argmax, 64, "frame {t}");
        }
    }

    /// Oracle: direct DFT of one windowed frame, the textbook O(n^2) sum.
    #[test]
    fn matches_direct_dft_oracle_on_one_frame() {
        let wave = tone(733.0, 4096, 0.7);
        let cfg = StftConfig::default();
        let spec = stft(&wave, &cfg).unwrap();
        let win = cfg.window_samples(16_000);
        let window = hann(win);
        let start = 2 * cfg.hop_samples(16_000); // frame 2
        for k in [0usize, 17, 47, 256, 512] {
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..win {
                let angle = -2.0 * std::f64::consts::PI * (k * i) as f64 / cfg.n_fft as f64;
                acc += Complex64::from_polar(wave.samples[start + i] * window[i], angle);
            }
            let got = spec.values[(2, k)];
            assert!(
                (got - acc).norm() < 1e-8,
                "bin {k}: got {got}, oracle {acc}"
            );
        }
    }

    #[test]
    fn all_zero_input_gives_zero_spectrogram() {
        let wave = Waveform::new(vec![0.0; 16_000], 16_000, "z").unwrap();
        let spec = stft(&wave, &StftConfig::default()).unwrap();
        assert!(spec.values.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn too_short_input_is_rejected() {
        let wave = Waveform::new(vec![0.1; 500], 16_000, "s").unwrap();
        assert!(matches!(
            stft(&wave, &StftConfig::default()),
            Err(Error::TooShort(_))
        ));
    }

    #[test]
    fn linearity_in_amplitude() {
        let a = stft(&tone(523.0, 8192, 1.0), &StftConfig::default()).unwrap();
        let b = stft(&tone(523.0, 8192, 2.5), &StftConfig::default()).unwrap();
        for (za, zb) in a.values.iter().zip(b.values.iter()) {
            assert!((zb - za * 2.5).norm() <= 1e-10 * (1.0 + zb.norm()));
        }
    }
}
