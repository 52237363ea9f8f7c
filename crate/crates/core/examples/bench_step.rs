//! Rough training-step timing at candidate feature dimensions.

use std::time::Instant;

use phasefuse_core::featmap::{synth_feature_corpus, FeatureCorpusSpec, MagnitudeMode, PhaseMode};
use phasefuse_core::models::{
    BackendPreset, FrameworkKind, FusionModel, ModelConfig, PairingConfig,
};
use phasefuse_core::nn::{softmax_xent, Adam, AdamConfig, HasParams, Mode};
use phasefuse_core::train::SegmentDataset;

fn main() {
    for d in [16usize, 24, 32, 48] {
        let items = synth_feature_corpus(&FeatureCorpusSpec {
            n_per_class: 32,
            t: 400,
            d,
            phase_mode: PhaseMode::Structured,
            magnitude_mode: MagnitudeMode::SharedDistribution,
            seed: 1,
        })
        .unwrap();
        let ds = SegmentDataset::from_feature_corpus(&items, true).unwrap();
        for fw in [FrameworkKind::AMagnitudeOnly, FrameworkKind::CPhaseNetworkConcat] {
            let cfg = ModelConfig::new(fw, PairingConfig::controlled(d), BackendPreset::Lite, 1);
            let mut model: FusionModel<f32> = FusionModel::build(&cfg).unwrap();
            let with_phase = model.uses_phase();
            let indices: Vec<usize> = (0..32).collect();
            let (mag, phase, labels) = ds.make_batch(&indices, with_phase).unwrap();
            let mut adam = Adam::new(AdamConfig::default()).unwrap();
            for _ in 0..2 {
                model.zero_grad();
                let logits = model.forward(&mag, phase.as_ref(), Mode::Train).unwrap();
                let (_, grad) = softmax_xent(&logits, &labels).unwrap();
                model.backward(&grad).unwrap();
                adam.step(&mut model).unwrap();
            }
            let n = 6;
            let t0 = Instant::now();
            for _ in 0..n {
                model.zero_grad();
                let logits = model.forward(&mag, phase.as_ref(), Mode::Train).unwrap();
                let (_, grad) = softmax_xent(&logits, &labels).unwrap();
                model.backward(&grad).unwrap();
                adam.step(&mut model).unwrap();
            }
            let per_step = t0.elapsed().as_secs_f64() / n as f64;
            let t1 = Instant::now();
            for _ in 0..n {
                let _ = model.forward(&mag, phase.as_ref(), Mode::Eval).unwrap();
            }
            let per_fwd = t1.elapsed().as_secs_f64() / n as f64;
            // one epoch = 2000/32 train steps + 400-utterance dev forward
            let epoch = 63.0 * per_step + (400.0 / 32.0) * per_fwd;
            println!(
                "D={d:>2} fw={fw:?}: step(B=32) {per_step:.3}s fwd {per_fwd:.3}s -> epoch ~{epoch:.1}s, 30ep ~{:.0}s",
                30.0 * epoch
            );
        }
    }
}
