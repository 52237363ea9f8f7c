//! Audio and protocol ingestion plus synthetic corpus generation.

mod protocol;
mod synth;
mod wav;

pub use protocol::{parse_protocol, serialize_protocol};
pub use synth::{render_harmonic, synth_corpus, HarmonicParams, SpoofMode, SynthSpec};
pub use wav::{load_wav, save_wav};

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::PIPELINE_SAMPLE_RATE;

/// Mono PCM audio at a fixed sample rate.
#[derive(Debug, Clone)]
pub struct Waveform {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
    pub id: String,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate: u32, id: impl Into<String>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Empty("waveform has no samples".into()));
        }
        Ok(Waveform {
            samples,
            sample_rate,
            id: id.into(),
        })
    }

    /// Rejects anything that is not at the pipeline rate (16 kHz).
    pub fn check_pipeline_rate(&self) -> Result<()> {
        if self.sample_rate != PIPELINE_SAMPLE_RATE {
            return Err(Error::SampleRate {
                got: self.sample_rate,
                expected: PIPELINE_SAMPLE_RATE,
            });
        }
        Ok(())
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

/// Bona fide vs spoof key of a trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Bonafide,
    Spoof,
}

/// Attack family of a trial: physical access (replay) or logical access
/// (synthesis / voice conversion).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Subset {
    PA,
    LA,
}

/// One line of a countermeasure protocol.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub utterance_id: String,
    pub speaker_id: String,
    /// "-" for bona fide, an attack code (e.g. "A17") otherwise.
    pub attack_id: String,
    pub label: Label,
    pub subset: Subset,
}

impl TrialRecord {
    pub fn new(
        utterance_id: impl Into<String>,
        speaker_id: impl Into<String>,
        attack_id: impl Into<String>,
        label: Label,
        subset: Subset,
    ) -> Result<Self> {
        let rec = TrialRecord {
            utterance_id: utterance_id.into(),
            speaker_id: speaker_id.into(),
            attack_id: attack_id.into(),
            label,
            subset,
        };
        rec.validate()?;
        Ok(rec)
    }

    pub fn validate(&self) -> Result<()> {
        let bonafide = self.label == Label::Bonafide;
        if bonafide != (self.attack_id == "-") {
            return Err(Error::Manifest(format!(
                "trial {}: label {:?} inconsistent with attack id {:?}",
                self.utterance_id, self.label, self.attack_id
            )));
        }
        Ok(())
    }
}

/// Training/evaluation regime: within one attack family, or across both.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    KnownKind,
    UnknownKind,
}

/// One manifest entry: a trial plus the audio path relative to the root.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    #[serde(flatten)]
    pub record: TrialRecord,
    pub path: String,
}

/// A list of trials with their audio locations.
///
/// `known_kind` manifests must stay within a single subset; `unknown_kind`
/// manifests may mix PA and LA.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "ManifestRepr", into = "ManifestRepr")]
pub struct Manifest {
    audio_root: PathBuf,
    scenario: Scenario,
    entries: Vec<ManifestEntry>,
}

#[derive(Serialize, Deserialize)]
struct ManifestRepr {
    audio_root: PathBuf,
    scenario: Scenario,
    entries: Vec<ManifestEntry>,
}

impl TryFrom<ManifestRepr> for Manifest {
    type Error = Error;
    fn try_from(r: ManifestRepr) -> Result<Self> {
        Manifest::new(r.audio_root, r.scenario, r.entries)
    }
}

impl From<Manifest> for ManifestRepr {
    fn from(m: Manifest) -> Self {
        ManifestRepr {
            audio_root: m.audio_root,
            scenario: m.scenario,
            entries: m.entries,
        }
    }
}

impl Manifest {
    pub fn new(
        audio_root: impl Into<PathBuf>,
        scenario: Scenario,
        entries: Vec<ManifestEntry>,
    ) -> Result<Self> {
        let mut seen = HashSet::new();
        for e in &entries {
            e.record.validate()?;
            if !seen.insert(e.record.utterance_id.as_str()) {
                return Err(Error::Manifest(format!(
                    "duplicate utterance id {}",
                    e.record.utterance_id
                )));
            }
        }
        if scenario == Scenario::KnownKind {
            let subsets: HashSet<Subset> = entries.iter().map(|e| e.record.subset).collect();
            if subsets.len() > 1 {
                return Err(Error::Manifest(
                    "known_kind manifest mixes PA and LA records".into(),
                ));
            }
        }
        Ok(Manifest {
            audio_root: audio_root.into(),
            scenario,
            entries,
        })
    }

    pub fn audio_root(&self) -> &Path {
        &self.audio_root
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Absolute audio path of an entry.
    pub fn audio_path(&self, entry: &ManifestEntry) -> PathBuf {
        self.audio_root.join(&entry.path)
    }

    /// Concatenates two manifests into an unknown-kind manifest without
    /// losing records.
    pub fn concat_unknown_kind(a: &Manifest, b: &Manifest) -> Result<Manifest> {
        if a.audio_root != b.audio_root {
            return Err(Error::Manifest(
                "cannot concatenate manifests with different audio roots".into(),
            ));
        }
        let entries = a.entries.iter().chain(b.entries.iter()).cloned().collect();
        Manifest::new(a.audio_root.clone(), Scenario::UnknownKind, entries)
    }

    pub fn load(path: &Path) -> Result<Manifest> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Manifest(format!("{path:?}: {e}")))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Manifest(format!("serialize: {e}")))?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}
