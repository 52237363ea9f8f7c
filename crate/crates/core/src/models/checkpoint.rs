//! Checkpoint files.
//!
//! Byte layout (all integers little-endian):
//!
//! ```text
//! 4   magic "PFCK"
//! 4   format version (u32, currently 1)
//! 4   config JSON length (u32), then that many bytes of model config JSON
//! 8   best dev EER (f64)
//! 4   epoch of best (u32)
//! 8   training seed (u64)
//! 4   parameter count (u32); per parameter:
//!       2 name length (u16), name utf-8,
//!       1 ndim (u8), ndim x 4 dims (u32),
//!       4*numel float32 payload
//! 4   state-buffer count (u32); per buffer:
//!       2 name length, name, 4 length (u32), 4*len float32 payload
//! 1   optimizer-state flag (u8); when 1:
//!       8 step (u64), 4 parameter count (u32); per parameter:
//!         4 length (u32), 4*len first moments, 4*len second moments
//! ```

use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};
use crate::models::{FusionModel, ModelConfig};
use crate::nn::{Adam, HasParams};

const MAGIC: &[u8; 4] = b"PFCK";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointMeta {
    pub best_dev_eer: f64,
    pub epoch_of_best: u32,
    pub seed: u64,
}

pub struct LoadedCheckpoint {
    pub model: FusionModel<f32>,
    pub meta: CheckpointMeta,
    pub adam_state: Option<(u64, Vec<(Vec<f32>, Vec<f32>)>)>,
}

fn push_f32s(out: &mut Vec<u8>, values: &[f32]) {
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

fn push_name(out: &mut Vec<u8>, name: &str) {
    out.extend_from_slice(&(name.len() as u16).to_le_bytes());
    out.extend_from_slice(name.as_bytes());
}

pub fn save_checkpoint(
    path: &Path,
    model: &FusionModel<f32>,
    meta: &CheckpointMeta,
    adam: Option<&Adam<f32>>,
) -> Result<()> {
    let config_json = serde_json::to_vec(model.config())
        .map_err(|e| Error::Config(format!("serialize model config: {e}")))?;

    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(config_json.len() as u32).to_le_bytes());
    out.extend_from_slice(&config_json);
    out.extend_from_slice(&meta.best_dev_eer.to_le_bytes());
    out.extend_from_slice(&meta.epoch_of_best.to_le_bytes());
    out.extend_from_slice(&meta.seed.to_le_bytes());

    let mut n_params = 0u32;
    model.visit_params(&mut |_| n_params += 1);
    out.extend_from_slice(&n_params.to_le_bytes());
    model.visit_params(&mut |p| {
        push_name(&mut out, &p.name);
        out.push(p.shape.len() as u8);
        for &d in &p.shape {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        push_f32s(&mut out, &p.value);
    });

    let mut n_buffers = 0u32;
    model.visit_buffers(&mut |_| n_buffers += 1);
    out.extend_from_slice(&n_buffers.to_le_bytes());
    model.visit_buffers(&mut |b| {
        push_name(&mut out, &b.name);
        out.extend_from_slice(&(b.value.len() as u32).to_le_bytes());
        push_f32s(&mut out, &b.value);
    });

    match adam {
        Some(adam) => {
            out.push(1);
            out.extend_from_slice(&adam.step_count().to_le_bytes());
            out.extend_from_slice(&(adam.moments().len() as u32).to_le_bytes());
            for (m, v) in adam.moments() {
                out.extend_from_slice(&(m.len() as u32).to_le_bytes());
                push_f32s(&mut out, m);
                push_f32s(&mut out, v);
            }
        }
        None => out.push(0),
    }

    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Checkpoint {
                path: self.path.into(),
                reason: "truncated file".into(),
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn name(&mut self) -> Result<String> {
        let n = self.u16()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| Error::Checkpoint {
            path: self.path.into(),
            reason: "non-utf8 tensor name".into(),
        })
    }

    fn f32s(&mut self, n: usize) -> Result<Vec<f32>> {
        let raw = self.take(4 * n)?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

pub fn load_checkpoint(path: &Path) -> Result<LoadedCheckpoint> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    let mut r = Reader {
        bytes: &bytes,
        pos: 0,
        path,
    };
    let bad = |reason: String| Error::Checkpoint {
        path: path.into(),
        reason,
    };

    if r.take(4)? != MAGIC {
        return Err(bad("missing PFCK magic".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let config_len = r.u32()? as usize;
    let config: ModelConfig = serde_json::from_slice(r.take(config_len)?)
        .map_err(|e| bad(format!("bad embedded config: {e}")))?;
    let meta = CheckpointMeta {
        best_dev_eer: r.f64()?,
        epoch_of_best: r.u32()?,
        seed: r.u64()?,
    };

    let mut model: FusionModel<f32> = FusionModel::build(&config)?;

    let n_params = r.u32()? as usize;
    let mut params = std::collections::HashMap::new();
    for _ in 0..n_params {
        let name = r.name()?;
        let ndim = r.u8()? as usize;
        let mut numel = 1usize;
        for _ in 0..ndim {
            numel *= r.u32()? as usize;
        }
        params.insert(name, r.f32s(numel)?);
    }
    let mut missing = Vec::new();
    model.visit_params_mut(&mut |p| match params.remove(&p.name) {
        Some(values) if values.len() == p.numel() => p.value = values,
        Some(_) => missing.push(format!("{} has wrong size", p.name)),
        None => missing.push(format!("{} absent", p.name)),
    });
    if !missing.is_empty() {
        return Err(bad(format!("parameter mismatch: {}", missing.join(", "))));
    }
    if !params.is_empty() {
        let extra: Vec<String> = params.into_keys().collect();
        return Err(bad(format!("unknown parameters: {}", extra.join(", "))));
    }

    let n_buffers = r.u32()? as usize;
    let mut buffers = std::collections::HashMap::new();
    for _ in 0..n_buffers {
        let name = r.name()?;
        let len = r.u32()? as usize;
        buffers.insert(name, r.f32s(len)?);
    }
    let mut missing = Vec::new();
    model.visit_buffers_mut(&mut |b| match buffers.remove(&b.name) {
        Some(values) if values.len() == b.value.len() => b.value = values,
        Some(_) => missing.push(format!("{} has wrong size", b.name)),
        None => missing.push(format!("{} absent", b.name)),
    });
    if !missing.is_empty() {
        return Err(bad(format!("buffer mismatch: {}", missing.join(", "))));
    }

    let adam_state = if r.u8()? == 1 {
        let step = r.u64()?;
        let n = r.u32()? as usize;
        let mut moments = Vec::with_capacity(n);
        for _ in 0..n {
            let len = r.u32()? as usize;
            let m = r.f32s(len)?;
            let v = r.f32s(len)?;
            moments.push((m, v));
        }
        Some((step, moments))
    } else {
        None
    };

    Ok(LoadedCheckpoint {
        model,
        meta,
        adam_state,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{BackendPreset, FrameworkKind, PairingConfig};
    use crate::nn::{AdamConfig, Mode, Tensor4};

    fn small_config() -> ModelConfig {
        ModelConfig::new(
            FrameworkKind::CPhaseNetworkConcat,
            PairingConfig::controlled(16),
            BackendPreset::Lite,
            7,
        )
    }

    #[test]
    fn roundtrip_restores_weights_buffers_and_meta() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.pfck");
        let mut model: FusionModel<f32> = FusionModel::build(&small_config()).unwrap();

        // push some training noise through so buffers differ from init
        let mag = Tensor4::from_fn([4, 1, 16, 400], || 0.3);
        let ph = Tensor4::from_fn([4, 1, 16, 400], || -0.2);
        model.forward(&mag, Some(&ph), Mode::Train).unwrap();

        let mut adam = Adam::<f32>::new(AdamConfig::default()).unwrap();
        model.zero_grad();
        adam.step(&mut model).unwrap();

        let meta = CheckpointMeta {
            best_dev_eer: 0.125,
            epoch_of_best: 3,
            seed: 7,
        };
        save_checkpoint(&path, &model, &meta, Some(&adam)).unwrap();
        let loaded = load_checkpoint(&path).unwrap();
        assert_eq!(loaded.meta, meta);
        assert_eq!(loaded.model.config(), model.config());

        let collect = |m: &FusionModel<f32>| {
            let mut v = Vec::new();
            m.visit_params(&mut |p| v.extend_from_slice(&p.value));
            m.visit_buffers(&mut |b| v.extend_from_slice(&b.value));
            v
        };
        assert_eq!(collect(&loaded.model), collect(&model));
        let (step, moments) = loaded.adam_state.unwrap();
        assert_eq!(step, 1);
        assert_eq!(moments.len(), adam.moments().len());
    }

    #[test]
    fn truncated_checkpoint_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.pfck");
        std::fs::write(&path, b"PFCK\x01\x00\x00\x00").unwrap();
        assert!(load_checkpoint(&path).is_err());
    }

    #[test]
    fn save_load_save_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("a.pfck");
        let p2 = dir.path().join("b.pfck");
        let model: FusionModel<f32> = FusionModel::build(&small_config()).unwrap();
        let meta = CheckpointMeta {
            best_dev_eer: 0.5,
            epoch_of_best: 0,
            seed: 7,
        };
        save_checkpoint(&p1, &model, &meta, None).unwrap();
        let loaded = load_checkpoint(&p1).unwrap();
        save_checkpoint(&p2, &loaded.model, &loaded.meta, None).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    }
}
