//! Feature cache files.
//!
//! Byte layout (all integers little-endian):
//!
//! ```text
//! offset  size  field
//! 0       4     magic "PFFC"
//! 4       2     format version (u16, currently 1)
//! 6       2     utterance id length L (u16)
//! 8       L     utterance id (utf-8)
//! 8+L     1     source      (0 = dft, 1 = cqt, 2 = lfcc)
//! 9+L     1     channel kind(0 = magnitude, 1 = phase, 2 = cepstral,
//!                            3 = processed_phase)
//! 10+L    1     dtype (0 = f32)
//! 11+L    1     reserved (0)
//! 12+L    4     T, frame count (u32)
//! 16+L    4     D, feature dimension (u32)
//! 20+L    4*T*D row-major float32 payload
//! ```

use std::io::{Read, Write};
use std::path::Path;

use ndarray::Array2;

use crate::dsp::{ChannelKind, FeatureMap, FeatureSource};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"PFFC";
const VERSION: u16 = 1;

fn source_code(s: FeatureSource) -> u8 {
    match s {
        FeatureSource::Dft => 0,
        FeatureSource::Cqt => 1,
        FeatureSource::Lfcc => 2,
    }
}

fn kind_code(k: ChannelKind) -> u8 {
    match k {
        ChannelKind::Magnitude => 0,
        ChannelKind::Phase => 1,
        ChannelKind::Cepstral => 2,
        ChannelKind::ProcessedPhase => 3,
    }
}

/// Writes a feature map (as float32) with its utterance id.
pub fn write_feature_cache(path: &Path, utterance_id: &str, feat: &FeatureMap) -> Result<()> {
    let mut out = Vec::with_capacity(20 + utterance_id.len() + 4 * feat.values.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    let id = utterance_id.as_bytes();
    out.extend_from_slice(&(id.len() as u16).to_le_bytes());
    out.extend_from_slice(id);
    out.push(source_code(feat.source));
    out.push(kind_code(feat.channel_kind));
    out.push(0); // dtype f32
    out.push(0); // reserved
    out.extend_from_slice(&(feat.n_frames() as u32).to_le_bytes());
    out.extend_from_slice(&(feat.dim() as u32).to_le_bytes());
    for &v in feat.values.iter() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&out).map_err(|e| Error::io(path, e))
}

/// Reads a feature cache file; returns the utterance id and the map.
pub fn read_feature_cache(path: &Path) -> Result<(String, FeatureMap)> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    let bad = |reason: &str| Error::Cache {
        path: path.into(),
        reason: reason.into(),
    };

    if bytes.len() < 8 || &bytes[0..4] != MAGIC {
        return Err(bad("missing PFFC magic"));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(bad(&format!("unsupported version {version}")));
    }
    let id_len = u16::from_le_bytes([bytes[6], bytes[7]]) as usize;
    let header_end = 8 + id_len + 12;
    if bytes.len() < header_end {
        return Err(bad("truncated header"));
    }
    let id = String::from_utf8(bytes[8..8 + id_len].to_vec())
        .map_err(|_| bad("utterance id is not utf-8"))?;
    let p = 8 + id_len;
    let source = match bytes[p] {
        0 => FeatureSource::Dft,
        1 => FeatureSource::Cqt,
        2 => FeatureSource::Lfcc,
        c => return Err(bad(&format!("unknown source code {c}"))),
    };
    let channel_kind = match bytes[p + 1] {
        0 => ChannelKind::Magnitude,
        1 => ChannelKind::Phase,
        2 => ChannelKind::Cepstral,
        3 => ChannelKind::ProcessedPhase,
        c => return Err(bad(&format!("unknown channel kind code {c}"))),
    };
    if bytes[p + 2] != 0 {
        return Err(bad("unsupported dtype"));
    }
    let t = u32::from_le_bytes(bytes[p + 4..p + 8].try_into().unwrap()) as usize;
    let d = u32::from_le_bytes(bytes[p + 8..p + 12].try_into().unwrap()) as usize;
    let need = header_end + 4 * t * d;
    if bytes.len() != need {
        return Err(bad(&format!(
            "payload size mismatch: file {} bytes, expected {need}",
            bytes.len()
        )));
    }
    let mut values = Array2::zeros((t, d));
    for (i, v) in values.iter_mut().enumerate() {
        let o = header_end + 4 * i;
        *v = f32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as f64;
    }
    Ok((
        id,
        FeatureMap {
            values,
            channel_kind,
            source,
        },
    ))
}
