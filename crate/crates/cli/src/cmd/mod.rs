pub mod entropy;
pub mod eval;
pub mod extract;
pub mod matrix;
pub mod score;
pub mod selftest;
pub mod synth;
pub mod train;

use std::path::PathBuf;

use anyhow::Context;
use phasefuse_core::dataset::{Manifest, Scenario};

/// A user-configuration error (maps to exit code 2).
pub fn config_error(msg: impl Into<String>) -> anyhow::Error {
    phasefuse_core::Error::Config(msg.into()).into()
}

/// Loads one or more manifests; several are concatenated into an
/// unknown-kind manifest (training on PA and LA together).
pub fn load_manifests(paths: &[PathBuf], scenario: Scenario) -> anyhow::Result<Manifest> {
    if paths.is_empty() {
        return Err(config_error("at least one manifest is required"));
    }
    if scenario == Scenario::KnownKind && paths.len() != 1 {
        return Err(config_error(format!(
            "known-kind runs take exactly one manifest; got {}",
            paths.len()
        )));
    }
    let mut manifest = Manifest::load(&paths[0])
        .with_context(|| format!("loading manifest {:?}", paths[0]))?;
    for path in &paths[1..] {
        let next = Manifest::load(path).with_context(|| format!("loading manifest {path:?}"))?;
        manifest = Manifest::concat_unknown_kind(&manifest, &next)?;
    }
    Ok(manifest)
}
