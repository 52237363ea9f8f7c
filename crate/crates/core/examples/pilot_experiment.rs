//! Pilot run of the controlled phase-discrimination experiment: one seed of
//! frameworks A, B and C on the feature-domain corpus.

use std::time::Instant;

use phasefuse_core::entropy::{frame_entropy, global_minmax_normalize, EntropyConfig};
use phasefuse_core::featmap::{synth_feature_corpus, FeatureCorpusSpec, MagnitudeMode, PhaseMode};
use phasefuse_core::dataset::Label;
use phasefuse_core::metrics::compute_eer;
use phasefuse_core::models::{
    tensor_to_feature_map, BackendPreset, FrameworkKind, ModelConfig, PairingConfig,
};
use phasefuse_core::nn::{Mode, Tensor4};
use phasefuse_core::train::{evaluate_dataset, fit, SegmentDataset, TrainConfig};



fn dim() -> usize {
    std::env::var("PILOT_D").ok().and_then(|v| v.parse().ok()).unwrap_or(16)
}

fn corpus(n_per_class: usize, seed: u64) -> Vec<phasefuse_core::featmap::CorpusItem> {
    synth_feature_corpus(&FeatureCorpusSpec {
        n_per_class,
        t: 400,
        d: dim(),
        phase_mode: PhaseMode::Structured,
        magnitude_mode: MagnitudeMode::SharedDistribution,
        seed,
    })
    .unwrap()
}

fn main() {
    let seed: u64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(1);

    let train_items = corpus(1000, 9000);
    let dev_items = corpus(200, 9001);
    let eval_items = corpus(200, 9002);
    let train_set = SegmentDataset::from_feature_corpus(&train_items, true).unwrap();
    let dev_set = SegmentDataset::from_feature_corpus(&dev_items, true).unwrap();
    let eval_set = SegmentDataset::from_feature_corpus(&eval_items, true).unwrap();
    println!("corpus ready: {} train segments", train_set.len());

    for fw in [
        FrameworkKind::AMagnitudeOnly,
        FrameworkKind::BRawConcat,
        FrameworkKind::CPhaseNetworkConcat,
    ] {
        let t0 = Instant::now();
        let cfg = ModelConfig::new(fw, PairingConfig::controlled(dim()), BackendPreset::Lite, seed);
        let mut result = fit(&cfg, &train_set, &dev_set, &TrainConfig {
            seed,
            ..TrainConfig::default()
        })
        .unwrap();
        let scores = evaluate_dataset(&mut result.model, &eval_set, 32).unwrap();
        let (eer, _) = compute_eer(&scores).unwrap();
        println!(
            "fw={} seed={seed}: best_dev={:.1}% (epoch {}) eval={:.1}%  [{:.0}s]",
            fw.short_name(),
            result.meta.best_dev_eer * 100.0,
            result.meta.epoch_of_best,
            eer * 100.0,
            t0.elapsed().as_secs_f64()
        );
        for h in result.history.iter().step_by(5) {
            println!(
                "   epoch {:>2}: loss {:.4} dev {:.1}%",
                h.epoch,
                h.train_loss,
                h.dev_eer * 100.0
            );
        }

        // entropy of phase-network outputs vs raw phase (criterion-2 shape)
        if fw == FrameworkKind::CPhaseNetworkConcat {
            let ecfg = EntropyConfig::default();
            let mut raw_sum = 0.0;
            let mut out_sum = 0.0;
            let mut n = 0usize;
            for item in eval_items.iter().take(40) {
                let raw = global_minmax_normalize(&item.phase);
                raw_sum += frame_entropy(&raw, &ecfg, "raw").unwrap().mean();
                // run the phase path alone
                let d = dim();
                let mut ph = Tensor4::<f32>::zeros([1, 1, d, 400]);
                for t in 0..400 {
                    for j in 0..d {
                        *ph.at_mut(0, 0, j, t) = item.phase.values[(t, j)] as f32;
                    }
                }
                let out = result.model.process_phase(&ph, Mode::Eval).unwrap();
                let map = tensor_to_feature_map(
                    &out,
                    phasefuse_core::dsp::ChannelKind::ProcessedPhase,
                    phasefuse_core::dsp::FeatureSource::Cqt,
                )
                .unwrap();
                let norm = global_minmax_normalize(&map);
                out_sum += frame_entropy(&norm, &ecfg, "out").unwrap().mean();
                n += 1;
            }
            println!(
                "   phase entropy: raw {:.2} bits, processed {:.2} bits (need <= raw - 1.0)",
                raw_sum / n as f64,
                out_sum / n as f64
            );
            let spoof_mean = scores.scores_of(Label::Spoof).iter().sum::<f64>()
                / scores.scores_of(Label::Spoof).len() as f64;
            let bona_mean = scores.scores_of(Label::Bonafide).iter().sum::<f64>()
                / scores.scores_of(Label::Bonafide).len() as f64;
            println!("   mean scores: bona {bona_mean:.3} spoof {spoof_mean:.3}");
        }
    }
}
