//! Fusion framework strategies, registered by name.
//!
//! The three interchangeable variants (`a` magnitude-only, `b` raw
//! concatenation, `c` phase-network concatenation) sit behind the
//! [`Framework`] trait; [`framework`] selects one at runtime from its CLI
//! name, and model assembly consults the chosen strategy for structure
//! decisions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::PairingConfig;

/// Which fusion framework a model uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameworkKind {
    /// Magnitude features alone.
    AMagnitudeOnly,
    /// Raw magnitude and phase concatenated across the channel dimension.
    BRawConcat,
    /// Phase processed by the phase network before concatenation.
    CPhaseNetworkConcat,
}

impl FrameworkKind {
    pub fn short_name(&self) -> &'static str {
        match self {
            FrameworkKind::AMagnitudeOnly => "a",
            FrameworkKind::BRawConcat => "b",
            FrameworkKind::CPhaseNetworkConcat => "c",
        }
    }
}

/// One fusion strategy: how many channels the backend sees, whether the
/// phase spectrum participates, and what pairings are valid.
pub trait Framework: Send + Sync {
    fn name(&self) -> &'static str;
    fn kind(&self) -> FrameworkKind;
    /// Input channel count of the backend (1 for magnitude-only, 2 for the
    /// fusion variants).
    fn input_channels(&self) -> usize;
    /// Whether the phase spectrum is consumed at all.
    fn uses_phase(&self) -> bool;
    /// Whether a trainable phase network processes the phase channel.
    fn has_phase_network(&self) -> bool;
    /// Whether the raw phase map needs a parameter-free pool to match the
    /// magnitude dimension (only the raw-concat variant with asymmetric
    /// pairings).
    fn needs_raw_phase_pool(&self, pairing: &PairingConfig) -> bool {
        let _ = pairing;
        false
    }
    fn validate_pairing(&self, pairing: &PairingConfig) -> Result<()> {
        pairing.validate()
    }
}

struct FrameworkA;
struct FrameworkB;
struct FrameworkC;

impl Framework for FrameworkA {
    fn name(&self) -> &'static str {
        "a"
    }
    fn kind(&self) -> FrameworkKind {
        FrameworkKind::AMagnitudeOnly
    }
    fn input_channels(&self) -> usize {
        1
    }
    fn uses_phase(&self) -> bool {
        false
    }
    fn has_phase_network(&self) -> bool {
        false
    }
}

impl Framework for FrameworkB {
    fn name(&self) -> &'static str {
        "b"
    }
    fn kind(&self) -> FrameworkKind {
        FrameworkKind::BRawConcat
    }
    fn input_channels(&self) -> usize {
        2
    }
    fn uses_phase(&self) -> bool {
        true
    }
    fn has_phase_network(&self) -> bool {
        false
    }
    fn needs_raw_phase_pool(&self, pairing: &PairingConfig) -> bool {
        pairing.phase_dim != pairing.mag_dim
    }
}

impl Framework for FrameworkC {
    fn name(&self) -> &'static str {
        "c"
    }
    fn kind(&self) -> FrameworkKind {
        FrameworkKind::CPhaseNetworkConcat
    }
    fn input_channels(&self) -> usize {
        2
    }
    fn uses_phase(&self) -> bool {
        true
    }
    fn has_phase_network(&self) -> bool {
        true
    }
}

static FRAMEWORKS: [&dyn Framework; 3] = [&FrameworkA, &FrameworkB, &FrameworkC];

/// Looks up a strategy by its registered name (`a`, `b` or `c`).
pub fn framework(name: &str) -> Result<&'static dyn Framework> {
    FRAMEWORKS
        .iter()
        .find(|f| f.name() == name)
        .copied()
        .ok_or_else(|| {
            Error::Config(format!(
                "unknown framework {name:?} (available: {})",
                framework_names().join(", ")
            ))
        })
}

/// Strategy object for a kind.
pub fn framework_of(kind: FrameworkKind) -> &'static dyn Framework {
    FRAMEWORKS
        .iter()
        .find(|f| f.kind() == kind)
        .copied()
        .expect("all kinds registered")
}

pub fn framework_names() -> Vec<&'static str> {
    FRAMEWORKS.iter().map(|f| f.name()).collect()
}
