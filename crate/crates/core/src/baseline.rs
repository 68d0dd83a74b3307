//! Median-filtering HPSS: soft-mask baseline, solver initialization and the
//! harmonic pre-estimate behind the smoothness weight.

use serde::{Deserialize, Serialize};

use crate::audio_io::Signal;
use crate::error::{Error, Result};
use crate::grid::RealGrid;
use crate::par;
use crate::prox::SignalPair;
use crate::stft::{self, Spectrogram, StftConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MedianConfig {
    /// Length of the time-direction median, in frames.
    pub harm_kernel: usize,
    /// Length of the frequency-direction median, in bins.
    pub perc_kernel: usize,
    /// Wiener mask exponent.
    pub mask_power: f64,
}

impl Default for MedianConfig {
    fn default() -> Self {
        Self {
            harm_kernel: 17,
            perc_kernel: 17,
            mask_power: 2.0,
        }
    }
}

impl MedianConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, k) in [
            ("harm_kernel", self.harm_kernel),
            ("perc_kernel", self.perc_kernel),
        ] {
            if k < 3 || k % 2 == 0 {
                return Err(Error::param(name, format!("must be odd and >= 3, got {k}")));
            }
        }
        if !(self.mask_power >= 1.0 && self.mask_power.is_finite()) {
            return Err(Error::param(
                "mask_power",
                format!("must be >= 1, got {}", self.mask_power),
            ));
        }
        Ok(())
    }
}

/// Output of [`median_filter_hpss`].
#[derive(Debug, Clone, PartialEq)]
pub struct MedianMasks {
    pub harmonic_mag: RealGrid,
    pub percussive_mag: RealGrid,
    pub mask_h: RealGrid,
}

impl MedianMasks {
    /// `1 - mask_h`.
    pub fn mask_p(&self) -> RealGrid {
        self.mask_h.map(|m| 1.0 - m)
    }
}

fn median(buf: &mut [f64]) -> f64 {
    buf.sort_unstable_by(|a, b| a.total_cmp(b));
    let n = buf.len();
    if n % 2 == 1 {
        buf[n / 2]
    } else {
        0.5 * (buf[n / 2 - 1] + buf[n / 2])
    }
}

/// Sliding median of `line` with window `kernel`; the window shrinks at the
/// ends instead of padding.
fn sliding_median(line: &[f64], kernel: usize, out: &mut [f64], buf: &mut Vec<f64>) {
    let half = kernel / 2;
    for (i, o) in out.iter_mut().enumerate() {
        let lo = i.saturating_sub(half);
        let hi = (i + half + 1).min(line.len());
        buf.clear();
        buf.extend_from_slice(&line[lo..hi]);
        *o = median(buf);
    }
}

/// Median along frames for each bin.
pub fn median_along_time(mag: &RealGrid, kernel: usize) -> RealGrid {
    let (k_n, t_n) = mag.shape();
    let rows = par::map_range(k_n, |k| {
        let line: Vec<f64> = (0..t_n).map(|t| mag.get(k, t)).collect();
        let mut out = vec![0.0; t_n];
        sliding_median(&line, kernel, &mut out, &mut Vec::with_capacity(kernel));
        out
    });
    RealGrid::from_fn(k_n, t_n, |k, t| rows[k][t])
}

/// Median along bins for each frame.
pub fn median_along_freq(mag: &RealGrid, kernel: usize) -> RealGrid {
    let (k_n, t_n) = mag.shape();
    let mut out = RealGrid::zeros(k_n, t_n);
    par::for_each_chunk_mut(out.as_mut_slice(), k_n.max(1), |t, frame| {
        sliding_median(mag.frame(t), kernel, frame, &mut Vec::with_capacity(kernel));
    });
    out
}

/// Time- and frequency-direction medians of `|X|` and the harmonic soft mask
/// `H^p / (H^p + P^p)`, with `0/0` read as one half.
pub fn median_filter_hpss(x: &Spectrogram, mc: &MedianConfig) -> Result<MedianMasks> {
    mc.validate()?;
    let mag = x.magnitude();
    let harmonic_mag = median_along_time(&mag, mc.harm_kernel);
    let percussive_mag = median_along_freq(&mag, mc.perc_kernel);
    let pw = mc.mask_power;
    let mut mask_h = RealGrid::zeros(mag.n_bins(), mag.n_frames());
    par::for_each_indexed_mut(mask_h.as_mut_slice(), |i, m| {
        let h = harmonic_mag.as_slice()[i].powf(pw);
        let p = percussive_mag.as_slice()[i].powf(pw);
        *m = if h + p > 0.0 { h / (h + p) } else { 0.5 };
    });
    Ok(MedianMasks {
        harmonic_mag,
        percussive_mag,
        mask_h,
    })
}

/// Median-filter separation together with its masked harmonic spectrogram.
#[derive(Debug, Clone)]
pub struct MfEstimate {
    pub pair: SignalPair,
    /// `mask_h ⊙ F(x)`.
    pub harmonic_spec: Spectrogram,
}

pub fn mf_estimate(x: &Signal, c: &StftConfig, mc: &MedianConfig) -> Result<MfEstimate> {
    let spec = stft::forward(x, c);
    let masks = median_filter_hpss(&spec, mc)?;
    let mut harmonic_spec = spec;
    let k = harmonic_spec.n_bins();
    par::for_each_chunk_mut(harmonic_spec.as_mut_slice(), k, |t, frame| {
        for (z, m) in frame.iter_mut().zip(masks.mask_h.frame(t)) {
            *z *= *m;
        }
    });
    let h = stft::adjoint(&harmonic_spec, c)?;
    let p: Vec<f64> = x
        .samples()
        .iter()
        .zip(h.samples())
        .map(|(x, h)| x - h)
        .collect();
    Ok(MfEstimate {
        pair: SignalPair {
            harmonic: h,
            percussive: Signal::from_raw(p, x.sample_rate()),
        },
        harmonic_spec,
    })
}

/// `x_h = F*(mask_h ⊙ F(x))`, `x_p = x - x_h`.
pub fn mf_separate(x: &Signal, c: &StftConfig, mc: &MedianConfig) -> Result<SignalPair> {
    Ok(mf_estimate(x, c, mc)?.pair)
}

/// Smoothness weight `W = κ / max(κ, |X̃_h| / max|X̃_h|)`.
///
/// Entries lie in `(0, 1]`; an all-zero pre-estimate gives `W ≡ 1`.
pub fn compute_weight(pre_h: &Spectrogram, kappa: f64) -> Result<RealGrid> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::param(
            "kappa",
            format!("must be positive, got {kappa}"),
        ));
    }
    let mag = pre_h.magnitude();
    let peak = mag.max();
    if peak.is_nan() || peak <= 0.0 {
        return Ok(RealGrid::filled(mag.n_bins(), mag.n_frames(), 1.0));
    }
    Ok(mag.map(|m| kappa / kappa.max(m / peak)))
}
