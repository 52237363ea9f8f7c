//! Utterance-level evaluation: segment scores averaged per utterance.

use std::collections::HashMap;

use crate::dataset::Label;
use crate::error::Result;
use crate::featmap::aggregate_scores;
use crate::metrics::{ScoreFile, ScoreRow};
use crate::models::FusionModel;
use crate::nn::{bonafide_log_prob, Mode};
use crate::train::SegmentDataset;

/// Scores every segment (eval mode) and averages per utterance.
pub fn evaluate_dataset(
    model: &mut FusionModel<f32>,
    ds: &SegmentDataset,
    batch_size: usize,
) -> Result<ScoreFile> {
    let with_phase = model.uses_phase();
    let n = ds.len();
    let mut per_segment: Vec<f64> = Vec::with_capacity(n);
    let mut start = 0usize;
    while start < n {
        let end = (start + batch_size).min(n);
        let indices: Vec<usize> = (start..end).collect();
        let (mag, phase, _) = ds.make_batch(&indices, with_phase)?;
        let logits = model.forward(&mag, phase.as_ref(), Mode::Eval)?;
        per_segment.extend(bonafide_log_prob(&logits)?);
        start = end;
    }

    // group by utterance, preserving first-seen order
    let mut order: Vec<String> = Vec::new();
    let mut grouped: HashMap<String, (String, Label, Vec<f64>)> = HashMap::new();
    for (sample, &score) in ds.samples().iter().zip(&per_segment) {
        let entry = grouped
            .entry(sample.utterance_id.clone())
            .or_insert_with(|| {
                order.push(sample.utterance_id.clone());
                (sample.attack_id.clone(), sample.label, Vec::new())
            });
        entry.2.push(score);
    }

    let mut rows = Vec::with_capacity(order.len());
    for utt in order {
        let (attack_id, label, scores) = grouped.remove(&utt).expect("grouped");
        rows.push(ScoreRow {
            utterance_id: utt,
            attack_id,
            label,
            score: aggregate_scores(&scores)?,
        });
    }
    ScoreFile::new(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::featmap::{synth_feature_corpus, FeatureCorpusSpec, MagnitudeMode, PhaseMode};
    use crate::models::{BackendPreset, FrameworkKind, FusionModel, ModelConfig, PairingConfig};

    fn dataset(t: usize) -> SegmentDataset {
        let items = synth_feature_corpus(&FeatureCorpusSpec {
            n_per_class: 2,
            t,
            d: 8,
            phase_mode: PhaseMode::Structured,
            magnitude_mode: MagnitudeMode::SharedDistribution,
            seed: 9,
        })
        .unwrap();
        SegmentDataset::from_feature_corpus(&items, true).unwrap()
    }

    fn model() -> FusionModel<f32> {
        FusionModel::build(&ModelConfig::new(
            FrameworkKind::CPhaseNetworkConcat,
            PairingConfig::controlled(8),
            BackendPreset::Lite,
            3,
        ))
        .unwrap()
    }

    #[test]
    fn one_row_per_utterance() {
        let ds = dataset(800); // 3 segments per utterance
        let mut m = model();
        let sf = evaluate_dataset(&mut m, &ds, 4).unwrap();
        assert_eq!(sf.rows.len(), 4);
    }

    #[test]
    fn evaluation_is_deterministic() {
        let ds = dataset(400);
        let mut m = model();
        let a = evaluate_dataset(&mut m, &ds, 3).unwrap();
        let b = evaluate_dataset(&mut m, &ds, 3).unwrap();
        assert_eq!(a, b);
    }

    /// With 200-periodic content every hop-200 segment carries identical
    /// values, so the utterance score (mean of equal segment scores) equals
    /// the single-segment score exactly.
    #[test]
    fn repeated_identical_segments_average_to_the_single_score() {
        let base = synth_feature_corpus(&FeatureCorpusSpec {
            n_per_class: 1,
            t: 200,
            d: 8,
            phase_mode: PhaseMode::Structured,
            magnitude_mode: MagnitudeMode::SharedDistribution,
            seed: 21,
        })
        .unwrap();
        let tile = |m: &crate::dsp::FeatureMap, t_out: usize| {
            let mut v = ndarray::Array2::zeros((t_out, 8));
            for t in 0..t_out {
                v.row_mut(t).assign(&m.values.row(t % 200));
            }
            crate::dsp::FeatureMap {
                values: v,
                channel_kind: m.channel_kind,
                source: m.source,
            }
        };
        let mut items_short = base.clone();
        let mut items_long = base;
        for (s, l) in items_short.iter_mut().zip(&mut items_long) {
            s.magnitude = tile(&s.magnitude, 400);
            s.phase = tile(&s.phase, 400);
            l.magnitude = tile(&l.magnitude, 1200);
            l.phase = tile(&l.phase, 1200);
        }
        let ds_short = SegmentDataset::from_feature_corpus(&items_short, true).unwrap();
        let ds_long = SegmentDataset::from_feature_corpus(&items_long, true).unwrap();
        assert_eq!(ds_long.len(), 5 * ds_short.len());

        let mut m = model();
        let a = evaluate_dataset(&mut m, &ds_short, 8).unwrap();
        let b = evaluate_dataset(&mut m, &ds_long, 8).unwrap();
        assert!((a.rows[0].score - b.rows[0].score).abs() < 1e-9);
    }
}
