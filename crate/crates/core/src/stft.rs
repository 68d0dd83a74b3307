//! Short-time Fourier transform as an explicit linear operator pair.
//!
//! The forward transform of frame `τ` is
//!
//! ```text
//! X[ω, τ] = L^{-1/2} Σ_l x[aτ - (L - a) + l] g[l] exp(-2πi ω l / L),   ω = 0..=L/2
//! ```
//!
//! with samples outside the signal read as zero. Frame 0 is the first frame
//! whose support touches sample 0 and the last frame is the last one that
//! touches sample `N - 1`, so every sample sees the full set of window shifts.
//! With a tight window (`Σ_k g[l + ka]² = 1`) the operator is a Parseval
//! frame: [`adjoint`] after [`forward`] is the identity.
//!
//! Spectrogram inner products are real, `Re Σ w_ω X[ω,τ] conj(Y[ω,τ])`, where
//! `w_ω = 2` for the bins that stand for a conjugate pair (`0 < ω < L/2`) and
//! 1 for DC and Nyquist. [`adjoint`] is exact under that inner product.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};

use crate::audio_io::Signal;
use crate::error::{Error, Result};
use crate::par;

pub mod dump;

/// Periodic Hann window `0.5 - 0.5 cos(2πl/L)`.
pub fn make_hann(len: usize) -> Result<Vec<f64>> {
    if len < 2 {
        return Err(Error::param(
            "win_len",
            "Hann window needs at least 2 samples",
        ));
    }
    let n = len as f64;
    Ok((0..len)
        .map(|l| 0.5 - 0.5 * (2.0 * PI * l as f64 / n).cos())
        .collect())
}

/// Analytic derivative of the periodic Hann window, `(π/L) sin(2πl/L)`,
/// in units of 1/sample.
pub fn make_hann_derivative(len: usize) -> Result<Vec<f64>> {
    if len < 2 {
        return Err(Error::param(
            "win_len",
            "Hann window needs at least 2 samples",
        ));
    }
    let n = len as f64;
    Ok((0..len)
        .map(|l| PI / n * (2.0 * PI * l as f64 / n).sin())
        .collect())
}

/// Per-sample normalizer `sqrt(Σ_k g[l + ka]²)` of the canonical tight window.
fn tight_normalizer(g: &[f64], hop: usize) -> Result<Vec<f64>> {
    let len = g.len();
    if hop == 0 || len == 0 || !len.is_multiple_of(hop) {
        return Err(Error::param(
            "hop",
            format!("hop {hop} must divide window length {len}"),
        ));
    }
    let mut energy = vec![0.0; hop];
    for (l, v) in g.iter().enumerate() {
        energy[l % hop] += v * v;
    }
    if let Some(l) = energy.iter().position(|&e| e.is_nan() || e <= 0.0) {
        return Err(Error::param(
            "window",
            format!("window shifts by {hop} leave sample phase {l} uncovered"),
        ));
    }
    Ok((0..len).map(|l| energy[l % hop].sqrt()).collect())
}

/// Canonical tight version of `g` for hop `hop`: `g[l] / sqrt(Σ_k g[l + ka]²)`.
pub fn make_tight(g: &[f64], hop: usize) -> Result<Vec<f64>> {
    let norm = tight_normalizer(g, hop)?;
    Ok(g.iter().zip(&norm).map(|(v, n)| v / n).collect())
}

/// Window, hop and FFT plans for a one-sided STFT with `fft_len = win_len`.
#[derive(Clone)]
pub struct StftConfig {
    win_len: usize,
    hop: usize,
    window: Vec<f64>,
    deriv_window: Vec<f64>,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
}

impl fmt::Debug for StftConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StftConfig")
            .field("win_len", &self.win_len)
            .field("hop", &self.hop)
            .finish_non_exhaustive()
    }
}

impl StftConfig {
    /// Tight Hann configuration. `win_len` must be even and `hop` must divide it.
    pub fn hann(win_len: usize, hop: usize) -> Result<Self> {
        Self::from_prototype(
            make_hann(win_len)?,
            Some(make_hann_derivative(win_len)?),
            hop,
        )
    }

    /// Tightens `prototype` for `hop`. The derivative window, if given, is
    /// divided by the same per-sample normalizer; without one it is zero.
    pub fn from_prototype(
        prototype: Vec<f64>,
        deriv_prototype: Option<Vec<f64>>,
        hop: usize,
    ) -> Result<Self> {
        let win_len = prototype.len();
        if win_len < 2 || !win_len.is_multiple_of(2) {
            return Err(Error::param(
                "win_len",
                format!("must be even and at least 2, got {win_len}"),
            ));
        }
        if hop == 0 || hop > win_len {
            return Err(Error::param(
                "hop",
                format!("must be in 1..={win_len}, got {hop}"),
            ));
        }
        if prototype.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("window", "non-finite sample"));
        }
        let norm = tight_normalizer(&prototype, hop)?;
        let window = prototype.iter().zip(&norm).map(|(v, n)| v / n).collect();
        let deriv_window = match deriv_prototype {
            Some(d) if d.len() != win_len => {
                return Err(Error::shape(
                    format!("derivative window of length {win_len}"),
                    d.len(),
                ))
            }
            Some(d) => d.iter().zip(&norm).map(|(v, n)| v / n).collect(),
            None => vec![0.0; win_len],
        };
        let mut planner = RealFftPlanner::<f64>::new();
        Ok(Self {
            win_len,
            hop,
            window,
            deriv_window,
            r2c: planner.plan_fft_forward(win_len),
            c2r: planner.plan_fft_inverse(win_len),
        })
    }

    pub fn win_len(&self) -> usize {
        self.win_len
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    pub fn n_bins(&self) -> usize {
        self.win_len / 2 + 1
    }

    pub fn window(&self) -> &[f64] {
        &self.window
    }

    pub fn deriv_window(&self) -> &[f64] {
        &self.deriv_window
    }

    /// Samples of left padding before frame 0.
    pub fn lead(&self) -> usize {
        self.win_len - self.hop
    }

    /// Number of frames covering a signal of `signal_len` samples.
    pub fn n_frames(&self, signal_len: usize) -> usize {
        (signal_len.max(1) - 1) / self.hop + self.win_len / self.hop
    }

    pub fn layout(&self, signal_len: usize, sample_rate: u32) -> FrameLayout {
        FrameLayout {
            win_len: self.win_len,
            hop: self.hop,
            n_bins: self.n_bins(),
            n_frames: self.n_frames(signal_len),
            signal_len,
            sample_rate,
        }
    }

    /// Inner-product weight of bin `bin`.
    pub fn bin_weight(&self, bin: usize) -> f64 {
        bin_weight(bin, self.win_len)
    }
}

#[inline]
pub(crate) fn bin_weight(bin: usize, win_len: usize) -> f64 {
    if bin == 0 || 2 * bin == win_len {
        1.0
    } else {
        2.0
    }
}

/// Shape and provenance of a spectrogram.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameLayout {
    pub win_len: usize,
    pub hop: usize,
    pub n_bins: usize,
    pub n_frames: usize,
    pub signal_len: usize,
    pub sample_rate: u32,
}

impl fmt::Display for FrameLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}x{} (L={}, a={}, N={})",
            self.n_bins, self.n_frames, self.win_len, self.hop, self.signal_len
        )
    }
}

/// Complex K×T time-frequency coefficients, stored frame-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    layout: FrameLayout,
    data: Vec<Complex64>,
}

impl Spectrogram {
    pub fn zeros(layout: FrameLayout) -> Self {
        Self {
            layout,
            data: vec![Complex64::new(0.0, 0.0); layout.n_bins * layout.n_frames],
        }
    }

    pub fn from_fn(layout: FrameLayout, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut s = Self::zeros(layout);
        for t in 0..layout.n_frames {
            for k in 0..layout.n_bins {
                s.data[t * layout.n_bins + k] = f(k, t);
            }
        }
        s
    }

    pub fn layout(&self) -> FrameLayout {
        self.layout
    }

    pub fn n_bins(&self) -> usize {
        self.layout.n_bins
    }

    pub fn n_frames(&self) -> usize {
        self.layout.n_frames
    }

    #[inline]
    pub fn get(&self, bin: usize, frame: usize) -> Complex64 {
        self.data[frame * self.layout.n_bins + bin]
    }

    #[inline]
    pub fn set(&mut self, bin: usize, frame: usize, v: Complex64) {
        self.data[frame * self.layout.n_bins + bin] = v;
    }

    pub fn frame(&self, frame: usize) -> &[Complex64] {
        let k = self.layout.n_bins;
        &self.data[frame * k..(frame + 1) * k]
    }

    pub fn frame_mut(&mut self, frame: usize) -> &mut [Complex64] {
        let k = self.layout.n_bins;
        &mut self.data[frame * k..(frame + 1) * k]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn check_layout(&self, other: &FrameLayout) -> Result<()> {
        if self.layout.n_bins != other.n_bins || self.layout.n_frames != other.n_frames {
            return Err(Error::shape(other, self.layout));
        }
        Ok(())
    }

    pub fn magnitude(&self) -> crate::grid::RealGrid {
        crate::grid::RealGrid::from_frame_major(
            self.layout.n_bins,
            self.layout.n_frames,
            self.data.iter().map(|c| c.norm()).collect(),
        )
        .expect("shape matches by construction")
    }

    /// Plain (unweighted) squared Frobenius norm.
    pub fn norm_sq(&self) -> f64 {
        self.frame_reduce(|frame| frame.iter().map(|c| c.norm_sqr()).sum())
    }

    /// Squared norm under the one-sided weighted inner product.
    pub fn weighted_norm_sq(&self) -> f64 {
        self.weighted_inner(self)
    }

    /// `Re Σ w_ω X conj(Y)`; the inner product under which [`adjoint`] is exact.
    pub fn weighted_inner(&self, other: &Spectrogram) -> f64 {
        let l = self.layout.win_len;
        let k = self.layout.n_bins;
        let per_frame = par::map_range(self.layout.n_frames, |t| {
            let a = &self.data[t * k..(t + 1) * k];
            let b = &other.data[t * k..(t + 1) * k];
            a.iter()
                .zip(b)
                .enumerate()
                .map(|(bin, (x, y))| bin_weight(bin, l) * (x.re * y.re + x.im * y.im))
                .sum::<f64>()
        });
        per_frame.iter().sum()
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }

    // Per-frame partial results reduced in frame order.
    fn frame_reduce(&self, f: impl Fn(&[Complex64]) -> f64 + Send + Sync) -> f64 {
        let k = self.layout.n_bins;
        par::map_range(self.layout.n_frames, |t| f(&self.data[t * k..(t + 1) * k]))
            .iter()
            .sum()
    }
}

impl StftConfig {
    fn scale(&self) -> f64 {
        1.0 / (self.win_len as f64).sqrt()
    }

    /// Windowed analysis of `x` with an arbitrary window into `out`.
    pub(crate) fn analyze_into(&self, x: &[f64], window: &[f64], out: &mut Spectrogram) {
        let (l, a, lead, k) = (self.win_len, self.hop, self.lead(), self.n_bins());
        debug_assert_eq!(out.layout.n_frames, self.n_frames(x.len()));
        let scale = self.scale();
        let r2c = &self.r2c;
        par::for_each_chunk_mut_init(
            &mut out.data,
            k,
            || (vec![0.0; l], r2c.make_scratch_vec()),
            |(buf, scratch), t, spectrum| {
                // Sample index of buf[0] is t*a - lead; may be negative.
                let start = (t * a) as isize - lead as isize;
                for (i, v) in buf.iter_mut().enumerate() {
                    let n = start + i as isize;
                    *v = if n >= 0 && (n as usize) < x.len() {
                        x[n as usize] * window[i]
                    } else {
                        0.0
                    };
                }
                r2c.process_with_scratch(buf, spectrum, scratch)
                    .expect("buffer sizes match plan");
                for c in spectrum.iter_mut() {
                    *c *= scale;
                }
            },
        );
    }

    /// Forward transform into a preallocated spectrogram of matching layout.
    pub fn forward_into(&self, x: &[f64], out: &mut Spectrogram) {
        self.analyze_into(x, &self.window, out);
    }

    /// Adjoint transform into `out`, whose length is the signal length.
    pub fn adjoint_into(&self, spec: &Spectrogram, out: &mut [f64]) {
        let (l, a, lead, k) = (self.win_len, self.hop, self.lead(), self.n_bins());
        let n_frames = spec.layout.n_frames;
        let scale = self.scale();
        let c2r = &self.c2r;
        let window = &self.window;

        // Synthesis frames, already windowed.
        let mut frames = vec![0.0; n_frames * l];
        par::for_each_chunk_mut_init(
            &mut frames,
            l,
            || (vec![Complex64::new(0.0, 0.0); k], c2r.make_scratch_vec()),
            |(spectrum, scratch), t, frame| {
                spectrum.copy_from_slice(spec.frame(t));
                // Only the real part of DC and Nyquist enters the real inner product.
                spectrum[0].im = 0.0;
                spectrum[k - 1].im = 0.0;
                c2r.process_with_scratch(spectrum, frame, scratch)
                    .expect("buffer sizes match plan");
                for (v, g) in frame.iter_mut().zip(window) {
                    *v *= scale * g;
                }
            },
        );

        // Overlap-add; each output block sums its frames in ascending order.
        par::for_each_chunk_mut(out, a, |b, block| {
            for (j, o) in block.iter_mut().enumerate() {
                let p = b * a + j + lead;
                let first = (p + 1).saturating_sub(l).div_ceil(a);
                let last = (p / a).min(n_frames - 1);
                let mut acc = 0.0;
                for t in first..=last {
                    acc += frames[t * l + p - t * a];
                }
                *o = acc;
            }
        });
    }
}

/// Forward STFT of a signal.
pub fn forward(x: &Signal, c: &StftConfig) -> Spectrogram {
    let mut out = Spectrogram::zeros(c.layout(x.len(), x.sample_rate()));
    c.forward_into(x.samples(), &mut out);
    out
}

/// Adjoint STFT; the inverse of [`forward`] for tight windows.
pub fn adjoint(spec: &Spectrogram, c: &StftConfig) -> Result<Signal> {
    let layout = spec.layout();
    if layout.win_len != c.win_len || layout.hop != c.hop {
        return Err(Error::shape(
            format!("L={}, a={}", c.win_len, c.hop),
            format!("L={}, a={}", layout.win_len, layout.hop),
        ));
    }
    spec.check_layout(&c.layout(layout.signal_len, layout.sample_rate))?;
    let mut out = vec![0.0; layout.signal_len];
    c.adjoint_into(spec, &mut out);
    Ok(Signal::from_raw(out, layout.sample_rate))
}
