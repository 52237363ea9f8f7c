//! Synthetic harmonic corpus generation for desk-scale experiments.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::{save_wav, Label, Manifest, ManifestEntry, Scenario, Subset, TrialRecord, Waveform};
use crate::error::{Error, Result};
use crate::PIPELINE_SAMPLE_RATE;

/// How spoofed utterances are constructed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpoofMode {
    /// Harmonic amplitudes multiplied by a random per-utterance spectral tilt.
    MagnitudePerturbed,
    /// Amplitude statistics match the bona fide generator, but harmonic
    /// starting phases are re-drawn on every 32 ms block.
    PhaseRandomized,
}

/// Recipe for a synthetic corpus.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n_bonafide: usize,
    pub n_spoof: usize,
    pub spoof_mode: SpoofMode,
    pub duration_s: f64,
    pub seed: u64,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_bonafide < 1 || self.n_spoof < 1 {
            return Err(Error::Config(
                "synth spec requires at least one utterance per class".into(),
            ));
        }
        if self.duration_s <= 0.0 {
            return Err(Error::Config("synth spec duration must be positive".into()));
        }
        Ok(())
    }
}

/// Parameters of one harmonic utterance.
///
/// The rendered signal is `env(t) * sum_h a_h cos(2*pi*h*f0*t + phi_h)` plus
/// white Gaussian noise. The SNR is measured at active-speech level (the
/// maximum of a 64 ms moving average of the harmonic power), which is where
/// speech SNRs are conventionally quoted.
#[derive(Debug, Clone)]
pub struct HarmonicParams {
    pub f0_hz: f64,
    pub harmonic_amps: Vec<f64>,
    pub duration_s: f64,
    pub snr_db: f64,
    /// Attack/decay ramps plus a slow amplitude modulation, giving the
    /// utterance a speech-like energy contour.
    pub envelope: bool,
    /// When set, harmonic starting phases are re-drawn every this many
    /// samples with a short crossfade (the phase-scrambled spoof mode).
    pub scramble_phases_every: Option<usize>,
}

impl HarmonicParams {
    /// The fixed utterance used by the entropy analysis: 3 s at F0 = 150 Hz
    /// with five harmonics at -6 dB/harmonic rolloff and 30 dB SNR.
    pub fn reference_voice() -> Self {
        HarmonicParams {
            f0_hz: 150.0,
            harmonic_amps: vec![1.0, 0.5, 0.25, 0.125, 0.0625],
            duration_s: 3.0,
            snr_db: 30.0,
            envelope: true,
            scramble_phases_every: None,
        }
    }
}

const ENV_RAMP_S: f64 = 0.3;
const ENV_MOD_DEPTH: f64 = 0.9;
const ENV_MOD_RATE_HZ: f64 = 0.8;
const SCRAMBLE_CROSSFADE: usize = 128;
const ACTIVE_LEVEL_WIN: usize = 1024;

/// Renders a harmonic utterance; all randomness (phases, noise) comes from
/// the supplied generator.
pub fn render_harmonic(params: &HarmonicParams, rng: &mut ChaCha12Rng) -> Vec<f64> {
    let fs = PIPELINE_SAMPLE_RATE as f64;
    let n = (params.duration_s * fs).round() as usize;
    let dur = params.duration_s;
    let n_harm = params.harmonic_amps.len();

    let mut harm = vec![0.0f64; n];
    match params.scramble_phases_every {
        None => {
            let phases: Vec<f64> = (0..n_harm)
                .map(|_| rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI))
                .collect();
            for (i, out) in harm.iter_mut().enumerate() {
                let t = i as f64 / fs;
                for (h, &a) in params.harmonic_amps.iter().enumerate() {
                    let f = params.f0_hz * (h + 1) as f64;
                    *out += a * (2.0 * std::f64::consts::PI * f * t + phases[h]).cos();
                }
            }
        }
        Some(block) => {
            // Block-wise synthesis with fresh phases per block; raised-cosine
            // crossfade hides the discontinuities at block seams.
            let block = block.max(SCRAMBLE_CROSSFADE * 2);
            let mut start = 0usize;
            let mut prev_tail: Vec<f64> = Vec::new();
            while start < n {
                let end = (start + block).min(n);
                let phases: Vec<f64> = (0..n_harm)
                    .map(|_| rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI))
                    .collect();
                let len = end - start + if end < n { SCRAMBLE_CROSSFADE } else { 0 };
                let mut seg = vec![0.0f64; len];
                for (j, out) in seg.iter_mut().enumerate() {
                    let t = (start + j) as f64 / fs;
                    for (h, &a) in params.harmonic_amps.iter().enumerate() {
                        let f = params.f0_hz * (h + 1) as f64;
                        *out += a * (2.0 * std::f64::consts::PI * f * t + phases[h]).cos();
                    }
                }
                for (j, &v) in seg.iter().enumerate() {
                    let idx = start + j;
                    if idx >= n {
                        break;
                    }
                    let fade_in = if j < prev_tail.len() {
                        let w = 0.5 - 0.5 * (std::f64::consts::PI * j as f64 / prev_tail.len() as f64).cos();
                        prev_tail[j] * (1.0 - w) + v * w
                    } else {
                        v
                    };
                    harm[idx] = fade_in;
                }
                prev_tail = if end < n {
                    seg[(end - start)..].to_vec()
                } else {
                    Vec::new()
                };
                start = end;
            }
        }
    }

    if params.envelope {
        for (i, out) in harm.iter_mut().enumerate() {
            let t = i as f64 / fs;
            let ramp = (t / ENV_RAMP_S).min((dur - t) / ENV_RAMP_S).clamp(0.0, 1.0);
            let md = (1.0 - ENV_MOD_DEPTH)
                + ENV_MOD_DEPTH
                    * 0.5
                    * (1.0 + (2.0 * std::f64::consts::PI * ENV_MOD_RATE_HZ * t).cos());
            *out *= ramp * md;
        }
    }

    // Noise at snr_db below the active level of the harmonic part.
    let p_active = active_level(&harm);
    let sigma = (p_active / 10f64.powf(params.snr_db / 10.0)).sqrt();
    let normal = Normal::new(0.0, sigma.max(1e-300)).expect("valid sigma");
    let mut sig: Vec<f64> = harm
        .iter()
        .map(|&h| h + normal.sample(rng))
        .collect();

    // Scale into [-1, 1] with a little headroom.
    let peak = sig.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    if peak > 0.0 {
        let k = 0.9 / peak;
        for v in &mut sig {
            *v *= k;
        }
    }
    sig
}

fn active_level(x: &[f64]) -> f64 {
    let w = ACTIVE_LEVEL_WIN.min(x.len());
    if w == 0 {
        return 0.0;
    }
    let mut sum: f64 = x[..w].iter().map(|v| v * v).sum();
    let mut best = sum;
    for i in w..x.len() {
        sum += x[i] * x[i] - x[i - w] * x[i - w];
        best = best.max(sum);
    }
    best / w as f64
}

/// Generates a labeled corpus of WAV files under `out_dir` and returns the
/// manifest (also written as `manifest.json`). Bit-reproducible for a fixed
/// spec.
pub fn synth_corpus(spec: &SynthSpec, out_dir: &Path) -> Result<Manifest> {
    spec.validate()?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let mut entries = Vec::new();
    let total = spec.n_bonafide + spec.n_spoof;
    for idx in 0..total {
        let bonafide = idx < spec.n_bonafide;
        let mut rng = utterance_rng(spec.seed, idx as u64);

        let f0 = rng.gen_range(100.0..=300.0);
        let n_harm = rng.gen_range(3..=6usize);
        let mut amps: Vec<f64> = (0..n_harm)
            .map(|h| 0.5f64.powi(h as i32) * rng.gen_range(0.7..1.3))
            .collect();

        let mut scramble = None;
        if !bonafide {
            match spec.spoof_mode {
                SpoofMode::MagnitudePerturbed => {
                    let tilt = rng.gen_range(-0.5..0.5);
                    for (h, a) in amps.iter_mut().enumerate() {
                        *a *= (tilt * h as f64).exp();
                    }
                }
                SpoofMode::PhaseRandomized => {
                    scramble = Some(512);
                }
            }
        }

        let params = HarmonicParams {
            f0_hz: f0,
            harmonic_amps: amps,
            duration_s: spec.duration_s,
            snr_db: 30.0,
            envelope: true,
            scramble_phases_every: scramble,
        };
        let samples = render_harmonic(&params, &mut rng);

        let (utt_id, attack_id, label) = if bonafide {
            (format!("SYN_B_{idx:04}"), "-".to_string(), Label::Bonafide)
        } else {
            let attack = match spec.spoof_mode {
                SpoofMode::MagnitudePerturbed => "SM01",
                SpoofMode::PhaseRandomized => "SP01",
            };
            (format!("SYN_S_{idx:04}"), attack.to_string(), Label::Spoof)
        };
        let file = format!("{utt_id}.wav");
        let wave = Waveform::new(samples, PIPELINE_SAMPLE_RATE, utt_id.clone())?;
        save_wav(&out_dir.join(&file), &wave)?;

        entries.push(ManifestEntry {
            record: TrialRecord::new(utt_id, "SYN", attack_id, label, Subset::LA)?,
            path: file,
        });
    }

    let manifest = Manifest::new(out_dir, Scenario::KnownKind, entries)?;
    manifest.save(&out_dir.join("manifest.json"))?;
    Ok(manifest)
}

fn utterance_rng(seed: u64, index: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed ^ (index.wrapping_mul(0x9E37_79B9_7F4A_7C15)).wrapping_add(index))
}
