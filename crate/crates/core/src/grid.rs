//! Real-valued K×T matrices (magnitudes, masks, weights, IF maps).
//!
//! Storage is frame-major: entry `(bin, frame)` lives at
//! `frame * n_bins + bin`, matching [`crate::stft::Spectrogram`].

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RealGrid {
    n_bins: usize,
    n_frames: usize,
    data: Vec<f64>,
}

impl RealGrid {
    pub fn zeros(n_bins: usize, n_frames: usize) -> Self {
        Self::filled(n_bins, n_frames, 0.0)
    }

    pub fn filled(n_bins: usize, n_frames: usize, value: f64) -> Self {
        Self {
            n_bins,
            n_frames,
            data: vec![value; n_bins * n_frames],
        }
    }

    pub fn from_fn(n_bins: usize, n_frames: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n_bins * n_frames);
        for t in 0..n_frames {
            for k in 0..n_bins {
                data.push(f(k, t));
            }
        }
        Self {
            n_bins,
            n_frames,
            data,
        }
    }

    /// Builds from a frame-major buffer.
    pub fn from_frame_major(n_bins: usize, n_frames: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n_bins * n_frames {
            return Err(Error::shape(
                format!("{} entries", n_bins * n_frames),
                format!("{} entries", data.len()),
            ));
        }
        Ok(Self {
            n_bins,
            n_frames,
            data,
        })
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_bins, self.n_frames)
    }

    #[inline]
    pub fn get(&self, bin: usize, frame: usize) -> f64 {
        self.data[frame * self.n_bins + bin]
    }

    #[inline]
    pub fn set(&mut self, bin: usize, frame: usize, v: f64) {
        self.data[frame * self.n_bins + bin] = v;
    }

    pub fn frame(&self, frame: usize) -> &[f64] {
        &self.data[frame * self.n_bins..(frame + 1) * self.n_bins]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// The transposed matrix, reinterpreting frames as bins and vice versa.
    pub fn transposed(&self) -> Self {
        Self::from_fn(self.n_frames, self.n_bins, |k, t| self.get(t, k))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            n_bins: self.n_bins,
            n_frames: self.n_frames,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }
}
