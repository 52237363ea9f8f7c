//! Criterion-1 numbers for candidate reference-voice seeds.

use phasefuse_core::dataset::{render_harmonic, HarmonicParams, Waveform};
use phasefuse_core::dsp::feature_extractor;
use phasefuse_core::entropy::{
    frame_entropy, global_minmax_normalize, random_noise_map, voiced_mask_from_log_power,
    EntropyConfig,
};
use rand::SeedableRng;

fn main() {
    let extractor = feature_extractor("cqt").unwrap();
    let cfg = EntropyConfig::default();
    for seed in 1..=12u64 {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
        let samples = render_harmonic(&HarmonicParams::reference_voice(), &mut rng);
        let wave = Waveform::new(samples, 16_000, "ref").unwrap();
        let pair = extractor.extract(&wave, true).unwrap();
        let phase = pair.phase.as_ref().unwrap();

        let mag_norm = global_minmax_normalize(&pair.magnitude);
        let phase_norm = global_minmax_normalize(phase);
        let e_mag = frame_entropy(&mag_norm, &cfg, "m").unwrap();
        let e_phase = frame_entropy(&phase_norm, &cfg, "p").unwrap();
        let noise = random_noise_map(phase.n_frames(), phase.dim(), seed).unwrap();
        let e_noise = frame_entropy(&noise, &cfg, "n").unwrap();

        let voiced = voiced_mask_from_log_power(&pair.magnitude, 0.02);
        let n_voiced = voiced.iter().filter(|&&v| v).count();
        let d1 = e_noise.mean() - e_phase.mean();
        let d2 = e_phase.mean() - e_mag.mean_masked(&voiced);
        println!(
            "seed {seed:>2}: voiced {n_voiced:>3}/{} noise {:.3} phase {:.3} mag|v {:.3}  d1={d1:.3} (<=0.15) d2={d2:.3} (>=1.0)",
            e_noise.values.len(),
            e_noise.mean(),
            e_phase.mean(),
            e_mag.mean_masked(&voiced),
        );
    }
}
