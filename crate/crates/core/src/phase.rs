//! Instantaneous frequency and instantaneous phase correction.
//!
//! A stationary sinusoid advances its STFT phase by `2π v a / L` per frame,
//! where `v` is its frequency in bins. The correction matrix `E` undoes that
//! advance, so the corrected spectrogram `E ⊙ F(x)` of a sinusoid is constant
//! along time in every sub-band. `E` is built once from an IF estimate and is
//! then a fixed unit-modulus diagonal operator.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::audio_io::Signal;
use crate::error::{Error, Result};
use crate::grid::RealGrid;
use crate::par;
use crate::stft::{self, Spectrogram, StftConfig};

/// Default relative magnitude below which a bin keeps its nominal frequency.
pub const DEFAULT_IF_EPS: f64 = 1e-6;

/// Per-bin instantaneous frequencies in bins of the `L`-point transform.
#[derive(Debug, Clone, PartialEq)]
pub struct IfMap {
    v: RealGrid,
    win_len: usize,
}

impl IfMap {
    /// Validates finiteness and the `[0, L/2]` range.
    pub fn new(v: RealGrid, win_len: usize) -> Result<Self> {
        let hi = (win_len / 2) as f64;
        if let Some(x) = v.as_slice().iter().find(|x| !(0.0..=hi).contains(*x)) {
            return Err(Error::param(
                "if_map",
                format!("value {x} outside [0, {hi}]"),
            ));
        }
        Ok(Self { v, win_len })
    }

    /// The nominal map `v[ω, τ] = ω`.
    pub fn nominal(n_bins: usize, n_frames: usize, win_len: usize) -> Self {
        Self {
            v: RealGrid::from_fn(n_bins, n_frames, |k, _| k as f64),
            win_len,
        }
    }

    pub fn grid(&self) -> &RealGrid {
        &self.v
    }

    pub fn win_len(&self) -> usize {
        self.win_len
    }

    pub fn get(&self, bin: usize, frame: usize) -> f64 {
        self.v.get(bin, frame)
    }
}

/// Reassignment-style estimate `v = ω - Im[F_dg(x) / F_g(x)] · L / (2π)`.
///
/// `F_dg` uses the configuration's derivative window. Bins whose magnitude
/// is below `eps` times the global maximum keep `v = ω`. Results are clamped
/// to `[0, L/2]`.
pub fn estimate_if(x: &Signal, c: &StftConfig, eps: f64) -> IfMap {
    let spec = stft::forward(x, c);
    let mut dspec = Spectrogram::zeros(spec.layout());
    c.analyze_into(x.samples(), c.deriv_window(), &mut dspec);

    let k_n = spec.n_bins();
    let t_n = spec.n_frames();
    let l = c.win_len() as f64;
    let hi = l / 2.0;
    let peak = spec.as_slice().iter().fold(0f64, |m, z| m.max(z.norm()));
    let floor = eps * peak;

    let mut v = RealGrid::zeros(k_n, t_n);
    par::for_each_indexed_mut(v.as_mut_slice(), |i, out| {
        let bin = (i % k_n) as f64;
        let z = spec.as_slice()[i];
        let mag = z.norm();
        *out = if peak > 0.0 && mag >= floor && mag > 0.0 {
            let ratio = dspec.as_slice()[i] / z;
            let est = bin - ratio.im * l / (2.0 * PI);
            if est.is_finite() {
                est.clamp(0.0, hi)
            } else {
                bin
            }
        } else {
            bin
        };
    });
    IfMap {
        v,
        win_len: c.win_len(),
    }
}

/// Unit-modulus K×T correction matrix with `E[ω, 0] = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseCorrection {
    n_bins: usize,
    n_frames: usize,
    data: Vec<Complex64>,
}

impl PhaseCorrection {
    pub fn identity(n_bins: usize, n_frames: usize) -> Self {
        Self {
            n_bins,
            n_frames,
            data: vec![Complex64::new(1.0, 0.0); n_bins * n_frames],
        }
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    pub fn get(&self, bin: usize, frame: usize) -> Complex64 {
        self.data[frame * self.n_bins + bin]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    fn check(&self, s: &Spectrogram) -> Result<()> {
        if s.n_bins() != self.n_bins || s.n_frames() != self.n_frames {
            return Err(Error::shape(
                format!("{}x{}", self.n_bins, self.n_frames),
                format!("{}x{}", s.n_bins(), s.n_frames()),
            ));
        }
        Ok(())
    }

    /// `s ← E ⊙ s`, or `s ← conj(E) ⊙ s` when `conjugate`.
    pub(crate) fn apply_in_place(&self, s: &mut Spectrogram, conjugate: bool) {
        let e = &self.data;
        par::for_each_chunk_mut(s.as_mut_slice(), self.n_bins, |t, frame| {
            let row = &e[t * frame.len()..(t + 1) * frame.len()];
            for (z, w) in frame.iter_mut().zip(row) {
                *z *= if conjugate { w.conj() } else { *w };
            }
        });
    }
}

/// Running product of per-frame phasors `exp(-2πi v[ω, τ-1] a / L)`,
/// renormalized to unit modulus after every step.
pub fn build_correction(v: &IfMap, c: &StftConfig) -> PhaseCorrection {
    let (k_n, t_n) = v.grid().shape();
    let step = -2.0 * PI * c.hop() as f64 / c.win_len() as f64;
    let mut steps = vec![Complex64::new(0.0, 0.0); k_n * t_n];
    par::for_each_indexed_mut(&mut steps, |i, z| {
        *z = Complex64::from_polar(1.0, step * v.grid().as_slice()[i]);
    });

    let mut data = vec![Complex64::new(1.0, 0.0); k_n * t_n];
    for t in 1..t_n {
        let (prev, cur) = data.split_at_mut(t * k_n);
        let prev = &prev[(t - 1) * k_n..];
        let phasors = &steps[(t - 1) * k_n..t * k_n];
        for ((e, p), s) in cur[..k_n].iter_mut().zip(prev).zip(phasors) {
            let z = p * s;
            *e = z / z.norm();
        }
    }
    PhaseCorrection {
        n_bins: k_n,
        n_frames: t_n,
        data,
    }
}

/// `E ⊙ F(x)`.
pub fn ipc_forward(x: &Signal, e: &PhaseCorrection, c: &StftConfig) -> Result<Spectrogram> {
    let mut s = stft::forward(x, c);
    e.check(&s)?;
    e.apply_in_place(&mut s, false);
    Ok(s)
}

/// `F*(conj(E) ⊙ Y)`, the adjoint of [`ipc_forward`].
pub fn ipc_adjoint(y: &Spectrogram, e: &PhaseCorrection, c: &StftConfig) -> Result<Signal> {
    e.check(y)?;
    let mut s = y.clone();
    e.apply_in_place(&mut s, true);
    stft::adjoint(&s, c)
}

/// Forward time difference along frames, with a zero first column.
pub fn time_diff(x: &Spectrogram) -> Spectrogram {
    let mut out = Spectrogram::zeros(x.layout());
    time_diff_into(x, &mut out);
    out
}

pub(crate) fn time_diff_into(x: &Spectrogram, out: &mut Spectrogram) {
    let k = x.n_bins();
    let src = x.as_slice();
    par::for_each_chunk_mut(out.as_mut_slice(), k, |t, frame| {
        if t == 0 {
            frame.fill(Complex64::new(0.0, 0.0));
        } else {
            let (cur, prev) = (&src[t * k..(t + 1) * k], &src[(t - 1) * k..t * k]);
            for ((o, a), b) in frame.iter_mut().zip(cur).zip(prev) {
                *o = a - b;
            }
        }
    });
}

/// Adjoint of [`time_diff`]: `(D*Y)_τ = [τ ≥ 1] Y_τ - [τ + 1 < T] Y_{τ+1}`.
pub fn time_diff_adj(y: &Spectrogram) -> Spectrogram {
    let mut out = Spectrogram::zeros(y.layout());
    time_diff_adj_into(y, &mut out);
    out
}

pub(crate) fn time_diff_adj_into(y: &Spectrogram, out: &mut Spectrogram) {
    let k = y.n_bins();
    let t_n = y.n_frames();
    let src = y.as_slice();
    let zero = Complex64::new(0.0, 0.0);
    par::for_each_chunk_mut(out.as_mut_slice(), k, |t, frame| {
        for (i, o) in frame.iter_mut().enumerate() {
            let here = if t >= 1 { src[t * k + i] } else { zero };
            let next = if t + 1 < t_n {
                src[(t + 1) * k + i]
            } else {
                zero
            };
            *o = here - next;
        }
    });
}
