//! Per-attack EER breakdown with pooled metrics.

use crate::dataset::Label;
use crate::error::{Error, Result};
use crate::metrics::{compute_eer, compute_min_tdcf, AsvOperatingPoint, ScoreFile};

#[derive(Debug, Clone)]
pub struct AttackRow {
    pub attack_id: String,
    pub n_trials: usize,
    pub eer: f64,
}

#[derive(Debug, Clone)]
pub struct BreakdownReport {
    pub attacks: Vec<AttackRow>,
    pub pooled_eer: f64,
    pub pooled_min_tdcf: f64,
    /// Attacks present in the rows but skipped (no usable trials).
    pub skipped: Vec<String>,
    /// Set when the pooled EER exceeds 0.5, i.e. the score direction looks
    /// inverted.
    pub inversion_warning: bool,
}

/// EER per attack (each attack's spoof trials against the shared bona fide
/// pool), plus pooled EER and pooled min t-DCF over all rows.
pub fn per_attack_breakdown(
    scores: &ScoreFile,
    op: &AsvOperatingPoint,
) -> Result<BreakdownReport> {
    let bona: Vec<_> = scores
        .rows
        .iter()
        .filter(|r| r.label == Label::Bonafide)
        .cloned()
        .collect();
    if bona.is_empty() {
        return Err(Error::Metric("breakdown needs bona fide trials".into()));
    }

    let mut attack_ids: Vec<String> = scores
        .rows
        .iter()
        .filter(|r| r.label == Label::Spoof)
        .map(|r| r.attack_id.clone())
        .collect();
    attack_ids.sort();
    attack_ids.dedup();
    if attack_ids.is_empty() {
        return Err(Error::Metric("breakdown needs spoof trials".into()));
    }

    let mut attacks = Vec::new();
    let mut skipped = Vec::new();
    for attack in &attack_ids {
        let subset: Vec<_> = scores
            .rows
            .iter()
            .filter(|r| r.label == Label::Spoof && &r.attack_id == attack)
            .cloned()
            .collect();
        if subset.is_empty() {
            skipped.push(attack.clone());
            continue;
        }
        let mut rows = bona.clone();
        let n_trials = subset.len();
        rows.extend(subset);
        let sf = ScoreFile { rows };
        let (eer, _) = compute_eer(&sf)?;
        attacks.push(AttackRow {
            attack_id: attack.clone(),
            n_trials,
            eer,
        });
    }

    let (pooled_eer, _) = compute_eer(scores)?;
    let (pooled_min_tdcf, _) = compute_min_tdcf(scores, op)?;
    Ok(BreakdownReport {
        attacks,
        pooled_eer,
        pooled_min_tdcf,
        skipped,
        inversion_warning: pooled_eer > 0.5,
    })
}

impl BreakdownReport {
    /// Plain-text table.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("{:<10} {:>8} {:>10}\n", "attack", "trials", "EER(%)"));
        for a in &self.attacks {
            out.push_str(&format!(
                "{:<10} {:>8} {:>10.3}\n",
                a.attack_id,
                a.n_trials,
                a.eer * 100.0
            ));
        }
        out.push_str(&format!(
            "pooled EER(%) {:.3}  pooled min t-DCF {:.5}\n",
            self.pooled_eer * 100.0,
            self.pooled_min_tdcf
        ));
        if self.inversion_warning {
            out.push_str("warning: pooled EER above 50%; score direction looks inverted\n");
        }
        out
    }

    /// CSV form: attack rows then a pooled row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("attack,trials,eer\n");
        for a in &self.attacks {
            out.push_str(&format!("{},{},{:.6}\n", a.attack_id, a.n_trials, a.eer));
        }
        out.push_str(&format!(
            "pooled,{},{:.6},min_tdcf={:.6}\n",
            self.attacks.iter().map(|a| a.n_trials).sum::<usize>(),
            self.pooled_eer,
            self.pooled_min_tdcf
        ));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::ScoreRow;

    fn rows() -> Vec<ScoreRow> {
        let mut rows = Vec::new();
        for (i, s) in [0.9, 0.85, 0.7].iter().enumerate() {
            rows.push(ScoreRow {
                utterance_id: format!("b{i}"),
                attack_id: "-".into(),
                label: Label::Bonafide,
                score: *s,
            });
        }
        for (i, (a, s)) in [("A17", 0.75), ("A17", 0.1), ("A18", 0.2), ("A19", 0.05)]
            .iter()
            .enumerate()
        {
            rows.push(ScoreRow {
                utterance_id: format!("s{i}"),
                attack_id: (*a).into(),
                label: Label::Spoof,
                score: *s,
            });
        }
        rows
    }

    #[test]
    fn one_row_per_attack_sorted() {
        let sf = ScoreFile::new(rows()).unwrap();
        let rep = per_attack_breakdown(&sf, &AsvOperatingPoint::default()).unwrap();
        let ids: Vec<&str> = rep.attacks.iter().map(|a| a.attack_id.as_str()).collect();
        assert_eq!(ids, vec!["A17", "A18", "A19"]);
        assert!(rep.skipped.is_empty());
        assert!(!rep.inversion_warning);
    }

    #[test]
    fn single_attack_gives_single_row() {
        let rows: Vec<ScoreRow> = rows()
            .into_iter()
            .filter(|r| r.label == Label::Bonafide || r.attack_id == "A17")
            .collect();
        let sf = ScoreFile::new(rows).unwrap();
        let rep = per_attack_breakdown(&sf, &AsvOperatingPoint::default()).unwrap();
        assert_eq!(rep.attacks.len(), 1);
    }

    #[test]
    fn perfectly_separated_attacks_pool_to_zero() {
        let mut rows = Vec::new();
        for i in 0..3 {
            rows.push(ScoreRow {
                utterance_id: format!("b{i}"),
                attack_id: "-".into(),
                label: Label::Bonafide,
                score: 1.0 + i as f64,
            });
        }
        for (i, a) in ["A01", "A02", "A03"].iter().enumerate() {
            rows.push(ScoreRow {
                utterance_id: format!("s{i}"),
                attack_id: (*a).into(),
                label: Label::Spoof,
                score: -(i as f64),
            });
        }
        let rep =
            per_attack_breakdown(&ScoreFile::new(rows).unwrap(), &AsvOperatingPoint::default())
                .unwrap();
        assert_eq!(rep.pooled_eer, 0.0);
        assert!(rep.attacks.iter().all(|a| a.eer == 0.0));
    }

    /// Filter-then-compute oracle: each attack row must equal the EER
    /// computed independently on the filtered subset.
    #[test]
    fn rows_match_filtered_recomputation() {
        let sf = ScoreFile::new(rows()).unwrap();
        let rep = per_attack_breakdown(&sf, &AsvOperatingPoint::default()).unwrap();
        for a in &rep.attacks {
            let subset: Vec<ScoreRow> = sf
                .rows
                .iter()
                .filter(|r| r.label == Label::Bonafide || r.attack_id == a.attack_id)
                .cloned()
                .collect();
            let (want, _) = compute_eer(&ScoreFile::new(subset).unwrap()).unwrap();
            assert_eq!(a.eer, want, "attack {}", a.attack_id);
        }
    }

    #[test]
    fn inversion_sets_the_warning() {
        let mut rows = Vec::new();
        for i in 0..3 {
            rows.push(ScoreRow {
                utterance_id: format!("b{i}"),
                attack_id: "-".into(),
                label: Label::Bonafide,
                score: -(i as f64),
            });
            rows.push(ScoreRow {
                utterance_id: format!("s{i}"),
                attack_id: "A01".into(),
                label: Label::Spoof,
                score: 1.0 + i as f64,
            });
        }
        let rep =
            per_attack_breakdown(&ScoreFile::new(rows).unwrap(), &AsvOperatingPoint::default())
                .unwrap();
        assert!(rep.inversion_warning);
    }
}
