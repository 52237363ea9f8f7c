//! ASVspoof-style countermeasure protocol files: one trial per line,
//! `SPEAKER UTT_ID <unused> ATTACK_ID KEY`.

use crate::dataset::{Label, Subset, TrialRecord};
use crate::error::{Error, Result};

/// Parses a protocol text into trial records.
///
/// The subset is inferred from the utterance/speaker id prefix (`LA_` or
/// `PA_`); lines without a recognizable prefix default to LA.
pub fn parse_protocol(text: &str) -> Result<Vec<TrialRecord>> {
    let mut records = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() < 5 {
            return Err(Error::Protocol {
                line: idx + 1,
                reason: format!("expected at least 5 fields, got {}", fields.len()),
            });
        }
        let (speaker, utt, attack, key) = (fields[0], fields[1], fields[3], fields[4]);
        let label = match key {
            "bonafide" => Label::Bonafide,
            "spoof" => Label::Spoof,
            other => {
                return Err(Error::Protocol {
                    line: idx + 1,
                    reason: format!("unknown key {other:?} (expected bonafide|spoof)"),
                })
            }
        };
        let subset = infer_subset(utt, speaker);
        let record =
            TrialRecord::new(utt, speaker, attack, label, subset).map_err(|e| Error::Protocol {
                line: idx + 1,
                reason: e.to_string(),
            })?;
        records.push(record);
    }
    Ok(records)
}

/// Writes records in the same five-field line format parsed by
/// [`parse_protocol`] (the unused third field is emitted as `-`).
pub fn serialize_protocol(records: &[TrialRecord]) -> String {
    let mut out = String::new();
    for r in records {
        let key = match r.label {
            Label::Bonafide => "bonafide",
            Label::Spoof => "spoof",
        };
        out.push_str(&format!(
            "{} {} - {} {}\n",
            r.speaker_id, r.utterance_id, r.attack_id, key
        ));
    }
    out
}

fn infer_subset(utt: &str, speaker: &str) -> Subset {
    if utt.starts_with("PA_") || speaker.starts_with("PA_") {
        Subset::PA
    } else {
        Subset::LA
    }
}
