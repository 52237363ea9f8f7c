//! WAV reading and writing (RIFF, PCM16 / float32).

use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use crate::dataset::Waveform;
use crate::error::{Error, Result};
use crate::PIPELINE_SAMPLE_RATE;

/// Reads a RIFF/WAVE file into a mono waveform scaled to [-1, 1].
///
/// Multichannel input is downmixed by unweighted channel mean. Only 16-bit
/// PCM and 32-bit float payloads are accepted, and the sample rate must be
/// 16 kHz.
pub fn load_wav(path: &Path) -> Result<Waveform> {
    let reader = WavReader::open(path).map_err(|e| Error::Wav {
        path: path.into(),
        reason: e.to_string(),
    })?;
    let spec = reader.spec();
    if spec.sample_rate != PIPELINE_SAMPLE_RATE {
        return Err(Error::SampleRate {
            got: spec.sample_rate,
            expected: PIPELINE_SAMPLE_RATE,
        });
    }
    let channels = spec.channels as usize;
    if channels == 0 {
        return Err(Error::Wav {
            path: path.into(),
            reason: "zero channels".into(),
        });
    }

    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => reader
            .into_samples::<i16>()
            .map(|s| s.map(|v| f64::from(v) / 32768.0))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Wav {
                path: path.into(),
                reason: e.to_string(),
            })?,
        (SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Wav {
                path: path.into(),
                reason: e.to_string(),
            })?,
        (fmt, bits) => {
            return Err(Error::Wav {
                path: path.into(),
                reason: format!("unsupported codec: {fmt:?} {bits}-bit"),
            })
        }
    };

    let n_frames = interleaved.len() / channels;
    let mut samples = Vec::with_capacity(n_frames);
    for frame in interleaved.chunks_exact(channels) {
        samples.push(frame.iter().sum::<f64>() / channels as f64);
    }

    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "unknown".into());
    Waveform::new(samples, spec.sample_rate, id)
}

/// Writes a mono waveform as 16-bit PCM, clamping samples to [-1, 1].
pub fn save_wav(path: &Path, wave: &Waveform) -> Result<()> {
    let spec = WavSpec {
        channels: 1,
        sample_rate: wave.sample_rate,
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    let mut writer = WavWriter::create(path, spec).map_err(|e| Error::Wav {
        path: path.into(),
        reason: e.to_string(),
    })?;
    for &s in &wave.samples {
        let v = (s.clamp(-1.0, 1.0) * 32767.0).round() as i16;
        writer.write_sample(v).map_err(|e| Error::Wav {
            path: path.into(),
            reason: e.to_string(),
        })?;
    }
    writer.finalize().map_err(|e| Error::Wav {
        path: path.into(),
        reason: e.to_string(),
    })
}
