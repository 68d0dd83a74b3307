//! WAV input/output and the [`Signal`] type.
//!
//! Integer PCM is scaled to `[-1, 1)` by the format's full-scale magnitude
//! (`2^(bits-1)`); multichannel files are downmixed to mono by the mean.

use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};
use log::warn;

use crate::error::{Error, Result};

/// A finite, non-empty mono waveform.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl Signal {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptySignal);
        }
        if sample_rate == 0 {
            return Err(Error::param("sample_rate", "must be positive"));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::NonFiniteSample(i));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    /// Zero signal of the given length.
    pub fn zeros(len: usize, sample_rate: u32) -> Result<Self> {
        Self::new(vec![0.0; len], sample_rate)
    }

    // Callers guarantee the invariants (operator outputs of finite inputs).
    pub(crate) fn from_raw(samples: Vec<f64>, sample_rate: u32) -> Self {
        debug_assert!(!samples.is_empty() && sample_rate > 0);
        Self {
            samples,
            sample_rate,
        }
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    /// Always false; kept for API symmetry with `len`.
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s * s).sum()
    }

    pub fn norm(&self) -> f64 {
        self.energy().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, s| m.max(s.abs()))
    }

    /// Returns `alpha * self`.
    pub fn scaled(&self, alpha: f64) -> Self {
        Self::from_raw(
            self.samples.iter().map(|s| alpha * s).collect(),
            self.sample_rate,
        )
    }
}

/// Output sample encoding for [`write_wav`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BitDepth {
    Pcm16,
    Pcm24,
    Float32,
}

impl BitDepth {
    /// Full-scale magnitude of an integer depth.
    fn full_scale(self) -> Option<f64> {
        match self {
            BitDepth::Pcm16 => Some(32768.0),
            BitDepth::Pcm24 => Some(8_388_608.0),
            BitDepth::Float32 => None,
        }
    }
}

pub fn read_wav(path: impl AsRef<Path>) -> Result<Signal> {
    let path = path.as_ref();
    let wav_err = |source| Error::Wav {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = match WavReader::open(path) {
        Ok(r) => r,
        Err(hound::Error::IoError(e)) => return Err(Error::io(path, e)),
        Err(e) => return Err(wav_err(e)),
    };
    let spec = reader.spec();
    let channels = spec.channels as usize;
    if channels == 0 {
        return Err(Error::UnsupportedFormat("zero channels".into()));
    }

    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>()
            .map_err(wav_err)?,
        (SampleFormat::Int, bits @ (8 | 16 | 24 | 32)) => {
            let scale = 2f64.powi(i32::from(bits) - 1);
            reader
                .samples::<i32>()
                .map(|s| s.map(|v| f64::from(v) / scale))
                .collect::<std::result::Result<_, _>>()
                .map_err(wav_err)?
        }
        (fmt, bits) => {
            return Err(Error::UnsupportedFormat(format!(
                "{fmt:?} with {bits} bits per sample"
            )))
        }
    };
    if interleaved.is_empty() {
        return Err(Error::EmptySignal);
    }

    let samples = if channels == 1 {
        interleaved
    } else {
        let inv = 1.0 / channels as f64;
        interleaved
            .chunks_exact(channels)
            .map(|frame| frame.iter().sum::<f64>() * inv)
            .collect()
    };
    Signal::new(samples, spec.sample_rate)
}

/// Writes a mono WAV file. Integer depths hard-clip samples outside
/// `[-1, 1]` and log a warning when that happens.
pub fn write_wav(path: impl AsRef<Path>, signal: &Signal, depth: BitDepth) -> Result<()> {
    let path = path.as_ref();
    let wav_err = |source| match source {
        hound::Error::IoError(e) => Error::io(path, e),
        other => Error::Wav {
            path: path.to_path_buf(),
            source: other,
        },
    };
    let spec = WavSpec {
        channels: 1,
        sample_rate: signal.sample_rate(),
        bits_per_sample: match depth {
            BitDepth::Pcm16 => 16,
            BitDepth::Pcm24 => 24,
            BitDepth::Float32 => 32,
        },
        sample_format: match depth {
            BitDepth::Float32 => SampleFormat::Float,
            _ => SampleFormat::Int,
        },
    };
    let mut writer = WavWriter::create(path, spec).map_err(wav_err)?;

    match depth.full_scale() {
        None => {
            for &s in signal.samples() {
                writer.write_sample(s as f32).map_err(wav_err)?;
            }
        }
        Some(scale) => {
            let (lo, hi) = (-scale, scale - 1.0);
            let mut clipped = 0usize;
            for &s in signal.samples() {
                if s.abs() > 1.0 {
                    clipped += 1;
                }
                let q = (s.clamp(-1.0, 1.0) * scale).round().clamp(lo, hi) as i32;
                writer.write_sample(q).map_err(wav_err)?;
            }
            if clipped > 0 {
                warn!(
                    "{}: clipped {clipped} sample(s) outside [-1, 1]",
                    path.display()
                );
            }
        }
    }
    writer.finalize().map_err(wav_err)
}
