//! Mono audio buffers and WAV file I/O.

use std::path::Path;

use crate::error::{Error, Result};
use crate::real::Real;

/// Mono audio with samples in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer<T> {
    samples: Vec<T>,
    sample_rate: u32,
}

impl<T: Real> AudioBuffer<T> {
    pub fn new(samples: Vec<T>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::InvalidInput("sample rate must be positive".into()));
        }
        if samples
            .iter()
            .any(|s| !s.is_finite() || s.abs() > T::one())
        {
            return Err(Error::InvalidInput(
                "samples must be finite and within [-1, 1]".into(),
            ));
        }
        Ok(Self { samples, sample_rate })
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate)
    }

    pub fn slice(&self, start: usize, end: usize) -> Self {
        let end = end.min(self.samples.len());
        let start = start.min(end);
        Self {
            samples: self.samples[start..end].to_vec(),
            sample_rate: self.sample_rate,
        }
    }
}

/// Scale so that the peak absolute sample equals `peak_target`.
pub fn normalize_volume<T: Real>(audio: &AudioBuffer<T>, peak_target: f64) -> Result<AudioBuffer<T>> {
    if !(peak_target > 0.0 && peak_target <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "peak target must be in (0, 1], got {peak_target}"
        )));
    }
    let peak = audio
        .samples
        .iter()
        .map(|s| s.abs())
        .fold(T::zero(), T::max);
    if peak == T::zero() {
        return Err(Error::DegenerateInput(
            "cannot normalize all-zero audio".into(),
        ));
    }
    let scale = T::scalar(peak_target) / peak;
    let samples = audio.samples.iter().map(|&s| s * scale).collect();
    Ok(AudioBuffer {
        samples,
        sample_rate: audio.sample_rate,
    })
}

/// Read a mono PCM WAV file (16-bit integer or 32-bit float samples);
/// float samples are clamped into `[-1, 1]`.
pub fn read_wav<T: Real>(path: &Path) -> Result<AudioBuffer<T>> {
    let mut reader = hound::WavReader::open(path)?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(Error::InvalidInput(format!(
            "expected mono audio, got {} channels: {}",
            spec.channels,
            path.display()
        )));
    }
    let samples: Vec<T> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, 16) => reader
            .samples::<i16>()
            .map(|s| Ok(T::scalar(f64::from(s?) / 32768.0)))
            .collect::<Result<_>>()?,
        (hound::SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| Ok(T::scalar(f64::from(s?).clamp(-1.0, 1.0))))
            .collect::<Result<_>>()?,
        (format, bits) => {
            return Err(Error::InvalidInput(format!(
                "unsupported WAV encoding {format:?}/{bits}-bit: {}",
                path.display()
            )))
        }
    };
    AudioBuffer::new(samples, spec.sample_rate)
}

/// Write a buffer as a 32-bit float mono WAV file.
pub fn write_wav<T: Real>(path: &Path, audio: &AudioBuffer<T>) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: audio.sample_rate,
        bits_per_sample: 32,
        sample_format: hound::SampleFormat::Float,
    };
    let mut writer = hound::WavWriter::create(path, spec)?;
    for s in &audio.samples {
        writer.write_sample(s.widen() as f32)?;
    }
    writer.finalize()?;
    Ok(())
}
