//! 16-bit PCM WAV loading/writing and linear resampling.

use std::path::Path;

use crate::error::{Error, Result};

/// Mono PCM samples in [-1, 1].
#[derive(Debug, Clone)]
pub struct AudioTrack {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl AudioTrack {
    pub fn duration_ms(&self) -> i64 {
        (self.samples.len() as i64 * 1000) / self.sample_rate as i64
    }
}

/// Loads a 16-bit PCM WAV file; stereo channels are averaged into mono.
pub fn load_wav(path: impl AsRef<Path>) -> Result<AudioTrack> {
    let path = path.as_ref();
    let mut reader =
        hound::WavReader::open(path).map_err(|e| Error::Wav(format!("{}: {e}", path.display())))?;
    let spec = reader.spec();
    if spec.bits_per_sample != 16 || spec.sample_format != hound::SampleFormat::Int {
        return Err(Error::Wav(format!(
            "{}: expected 16-bit PCM, got {}-bit {:?}",
            path.display(),
            spec.bits_per_sample,
            spec.sample_format
        )));
    }
    let channels = spec.channels as usize;
    if channels == 0 || channels > 2 {
        return Err(Error::Wav(format!(
            "{}: expected mono or stereo, got {channels} channels",
            path.display()
        )));
    }
    let raw: Vec<i16> = reader
        .samples::<i16>()
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Wav(format!("{}: {e}", path.display())))?;
    let samples = raw
        .chunks(channels)
        .map(|frame| {
            frame.iter().map(|&s| s as f64 / 32768.0).sum::<f64>() / frame.len() as f64
        })
        .collect();
    Ok(AudioTrack {
        samples,
        sample_rate: spec.sample_rate,
    })
}

/// Writes mono samples as 16-bit PCM, clamping to [-1, 1].
pub fn write_wav(path: impl AsRef<Path>, samples: &[f64], sample_rate: u32) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer = hound::WavWriter::create(path.as_ref(), spec)
        .map_err(|e| Error::Wav(e.to_string()))?;
    for &s in samples {
        let v = (s.clamp(-1.0, 1.0) * 32767.0).round() as i16;
        writer.write_sample(v).map_err(|e| Error::Wav(e.to_string()))?;
    }
    writer.finalize().map_err(|e| Error::Wav(e.to_string()))?;
    Ok(())
}

/// Linear-interpolation resampling.
pub fn resample_linear(samples: &[f64], from_rate: u32, to_rate: u32) -> Vec<f64> {
    if from_rate == to_rate || samples.is_empty() {
        return samples.to_vec();
    }
    let ratio = from_rate as f64 / to_rate as f64;
    let out_len = ((samples.len() as f64) / ratio).floor() as usize;
    (0..out_len)
        .map(|i| {
            let pos = i as f64 * ratio;
            let lo = pos.floor() as usize;
            let frac = pos - lo as f64;
            let a = samples[lo.min(samples.len() - 1)];
            let b = samples[(lo + 1).min(samples.len() - 1)];
            a + (b - a) * frac
        })
        .collect()
}
