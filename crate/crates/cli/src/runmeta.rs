//! Run-manifest files: a JSON snapshot of every resolved setting, written
//! next to each command's outputs for provenance.

use std::path::Path;

use anyhow::Context;
use serde::Serialize;

#[derive(Serialize)]
struct RunMeta<T: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    resolved: T,
}

pub fn write_run_manifest<T: Serialize>(
    dir: &Path,
    command: &'static str,
    resolved: &T,
) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir)
        .with_context(|| format!("creating output directory {dir:?}"))?;
    let meta = RunMeta {
        tool: "phasefuse",
        version: env!("CARGO_PKG_VERSION"),
        command,
        resolved,
    };
    let path = dir.join(format!("run-{command}.json"));
    std::fs::write(&path, serde_json::to_string_pretty(&meta)?)
        .with_context(|| format!("writing run manifest {path:?}"))?;
    Ok(())
}
