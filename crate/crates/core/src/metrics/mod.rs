//! Detection metrics: EER, normalized minimum t-DCF, and the per-attack
//! breakdown. Score direction is fixed crate-wide: higher means more
//! bona fide (scores are bona fide log-probabilities), and the accept rule
//! is `score >= threshold`.

mod breakdown;
mod eer;
mod tdcf;

pub use breakdown::{per_attack_breakdown, AttackRow, BreakdownReport};
pub use eer::compute_eer;
pub use tdcf::{compute_min_tdcf, AsvOperatingPoint};

use std::path::Path;

use crate::dataset::Label;
use crate::error::{Error, Result};

/// One scored trial.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow {
    pub utterance_id: String,
    pub attack_id: String,
    pub label: Label,
    pub score: f64,
}

/// Per-utterance scores joined to labels and attack ids.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreFile {
    pub rows: Vec<ScoreRow>,
}

impl ScoreFile {
    pub fn new(rows: Vec<ScoreRow>) -> Result<Self> {
        let sf = ScoreFile { rows };
        sf.validate()?;
        Ok(sf)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for r in &self.rows {
            if !r.score.is_finite() {
                return Err(Error::Score(format!(
                    "non-finite score for {}",
                    r.utterance_id
                )));
            }
            if !seen.insert(r.utterance_id.as_str()) {
                return Err(Error::Score(format!(
                    "duplicate utterance {}",
                    r.utterance_id
                )));
            }
        }
        Ok(())
    }

    pub fn scores_of(&self, label: Label) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.label == label)
            .map(|r| r.score)
            .collect()
    }

    /// Text form: one `utt_id attack_id label score` row per line.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for r in &self.rows {
            let label = match r.label {
                Label::Bonafide => "bonafide",
                Label::Spoof => "spoof",
            };
            out.push_str(&format!(
                "{} {} {} {:.17e}\n",
                r.utterance_id, r.attack_id, label, r.score
            ));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 4 {
                return Err(Error::Score(format!(
                    "line {}: expected 4 fields, got {}",
                    idx + 1,
                    fields.len()
                )));
            }
            let label = match fields[2] {
                "bonafide" => Label::Bonafide,
                "spoof" => Label::Spoof,
                other => {
                    return Err(Error::Score(format!("line {}: bad label {other:?}", idx + 1)))
                }
            };
            let score: f64 = fields[3]
                .parse()
                .map_err(|e| Error::Score(format!("line {}: bad score: {e}", idx + 1)))?;
            rows.push(ScoreRow {
                utterance_id: fields[0].to_string(),
                attack_id: fields[1].to_string(),
                label,
                score,
            });
        }
        ScoreFile::new(rows)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.serialize()).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(id: &str, attack: &str, label: Label, score: f64) -> ScoreRow {
        ScoreRow {
            utterance_id: id.into(),
            attack_id: attack.into(),
            label,
            score,
        }
    }

    #[test]
    fn roundtrip_is_exact() {
        let sf = ScoreFile::new(vec![
            row("u1", "-", Label::Bonafide, 0.12345678901234567),
            row("u2", "A17", Label::Spoof, -3.5e-12),
        ])
        .unwrap();
        let back = ScoreFile::parse(&sf.serialize()).unwrap();
        assert_eq!(back, sf);
    }

    #[test]
    fn non_finite_scores_rejected() {
        assert!(ScoreFile::new(vec![row("u", "-", Label::Bonafide, f64::NAN)]).is_err());
        assert!(ScoreFile::new(vec![row("u", "-", Label::Bonafide, f64::INFINITY)]).is_err());
    }

    #[test]
    fn duplicate_utterances_rejected() {
        assert!(ScoreFile::new(vec![
            row("u", "-", Label::Bonafide, 0.0),
            row("u", "A17", Label::Spoof, 1.0),
        ])
        .is_err());
    }
}
