//! Proximity operators and penalties used by the primal-dual iteration.

use num_complex::Complex64;

use crate::audio_io::Signal;
use crate::error::{Error, Result};
use crate::par;
use crate::stft::Spectrogram;

/// Harmonic/percussive signal pair of equal length and sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalPair {
    pub harmonic: Signal,
    pub percussive: Signal,
}

impl SignalPair {
    pub fn new(harmonic: Signal, percussive: Signal) -> Result<Self> {
        if harmonic.len() != percussive.len() {
            return Err(Error::shape(
                format!("{} samples", harmonic.len()),
                format!("{} samples", percussive.len()),
            ));
        }
        if harmonic.sample_rate() != percussive.sample_rate() {
            return Err(Error::shape(
                format!("{} Hz", harmonic.sample_rate()),
                format!("{} Hz", percussive.sample_rate()),
            ));
        }
        Ok(Self {
            harmonic,
            percussive,
        })
    }

    pub fn len(&self) -> usize {
        self.harmonic.len()
    }

    pub fn is_empty(&self) -> bool {
        self.harmonic.is_empty()
    }

    /// `max_n |x[n] - h[n] - p[n]|`.
    pub fn constraint_residual(&self, x: &Signal) -> f64 {
        x.samples()
            .iter()
            .zip(self.harmonic.samples())
            .zip(self.percussive.samples())
            .fold(0f64, |m, ((x, h), p)| m.max((x - h - p).abs()))
    }
}

pub(crate) fn project_sum_slices(x: &[f64], h: &mut [f64], p: &mut [f64]) {
    for ((x, h), p) in x.iter().zip(h.iter_mut()).zip(p.iter_mut()) {
        *h += (x - *h - *p) / 2.0;
        *p = x - *h;
    }
}

/// Euclidean projection onto `{(h, p) : h + p = x}`.
///
/// The percussive output is recomputed as `x - h`, so the constraint holds
/// to the last bit of the subtraction.
pub fn project_sum(x: &Signal, pair: &SignalPair) -> Result<SignalPair> {
    if pair.len() != x.len() {
        return Err(Error::shape(
            format!("{} samples", x.len()),
            format!("{} samples", pair.len()),
        ));
    }
    let mut h = pair.harmonic.samples().to_vec();
    let mut p = pair.percussive.samples().to_vec();
    project_sum_slices(x.samples(), &mut h, &mut p);
    Ok(SignalPair {
        harmonic: Signal::from_raw(h, x.sample_rate()),
        percussive: Signal::from_raw(p, x.sample_rate()),
    })
}

fn check_rho(rho: f64) -> Result<()> {
    if rho > 0.0 && rho.is_finite() {
        Ok(())
    } else {
        Err(Error::param("rho", format!("must be positive, got {rho}")))
    }
}

/// Prox of `½‖·‖²_Fro` with step `rho`: `X / (1 + rho)`.
pub fn prox_sq_fro(x: &Spectrogram, rho: f64) -> Result<Spectrogram> {
    check_rho(rho)?;
    let mut out = x.clone();
    prox_sq_fro_in_place(&mut out, rho);
    Ok(out)
}

pub(crate) fn prox_sq_fro_in_place(x: &mut Spectrogram, rho: f64) {
    let s = 1.0 / (1.0 + rho);
    par::for_each_indexed_mut(x.as_mut_slice(), |_, z| *z *= s);
}

/// Prox of the frame-wise `ℓ2,1` norm: each frame is scaled by
/// `(1 - rho / ‖X_τ‖₂)₊`, with frames of norm at most `rho` set to zero.
pub fn prox_l21(x: &Spectrogram, rho: f64) -> Result<Spectrogram> {
    check_rho(rho)?;
    let mut out = x.clone();
    prox_l21_in_place(&mut out, rho);
    Ok(out)
}

pub(crate) fn prox_l21_in_place(x: &mut Spectrogram, rho: f64) {
    let k = x.n_bins();
    par::for_each_chunk_mut(x.as_mut_slice(), k, |_, frame| {
        let norm = frame.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm <= rho {
            frame.fill(Complex64::new(0.0, 0.0));
        } else {
            let s = 1.0 - rho / norm;
            frame.iter_mut().for_each(|z| *z *= s);
        }
    });
}

/// `Σ_τ ‖X_τ‖₂` over plain (unweighted) frame norms.
pub fn l21_norm(x: &Spectrogram) -> f64 {
    let k = x.n_bins();
    par::map_range(x.n_frames(), |t| {
        x.as_slice()[t * k..(t + 1) * k]
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    })
    .iter()
    .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stft::StftConfig;

    fn spec(k_frames: &[&[Complex64]]) -> Spectrogram {
        // Layout only matters for shape here.
        let c = StftConfig::hann(2 * (k_frames[0].len() - 1), 1).unwrap();
        let mut lay = c.layout(1, 8000);
        lay.n_frames = k_frames.len();
        Spectrogram::from_fn(lay, |k, t| k_frames[t][k])
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn project_sum_cases() {
        let x = Signal::new(vec![1.0, -2.0, 0.5], 8000).unwrap();
        let fixed = SignalPair::new(
            Signal::new(vec![0.25, -1.0, 0.0], 8000).unwrap(),
            Signal::new(vec![0.75, -1.0, 0.5], 8000).unwrap(),
        )
        .unwrap();
        assert_eq!(project_sum(&x, &fixed).unwrap(), fixed);

        let zero = SignalPair::new(
            Signal::zeros(3, 8000).unwrap(),
            Signal::zeros(3, 8000).unwrap(),
        )
        .unwrap();
        let half = project_sum(&x, &zero).unwrap();
        assert_eq!(half.harmonic.samples(), &[0.5, -1.0, 0.25]);
        assert_eq!(half.percussive.samples(), &[0.5, -1.0, 0.25]);

        let short = Signal::zeros(2, 8000).unwrap();
        assert!(project_sum(&short, &zero).is_err());
        assert!(SignalPair::new(short, Signal::zeros(3, 8000).unwrap()).is_err());
    }

    #[test]
    fn sq_fro_prox() {
        let x = spec(&[&[c(2.0, -4.0), c(1.0, 0.0)]]);
        let y = prox_sq_fro(&x, 1.0).unwrap();
        assert_eq!(y.get(0, 0), c(1.0, -2.0));
        let tiny = prox_sq_fro(&x, 1e-12).unwrap();
        assert!((tiny.get(0, 0) - x.get(0, 0)).norm() < 1e-11);
        assert!(prox_sq_fro(&x, 0.0).is_err());
        assert!(prox_sq_fro(&x, -1.0).is_err());
    }

    #[test]
    fn l21_prox_thresholds() {
        let rho = 0.5;
        // Frame 0 has norm 2ρ, frame 1 has norm ρ/2, frame 2 exactly ρ.
        let x = spec(&[
            &[c(0.6, 0.0), c(0.0, 0.8)],
            &[c(0.15, 0.0), c(0.0, 0.2)],
            &[c(0.3, 0.0), c(0.0, 0.4)],
        ]);
        let y = prox_l21(&x, rho).unwrap();
        assert!((y.get(0, 0) - c(0.3, 0.0)).norm() < 1e-15);
        assert!((y.get(1, 0) - c(0.0, 0.4)).norm() < 1e-15);
        assert!(y.frame(1).iter().all(|z| *z == c(0.0, 0.0)));
        assert!(y.frame(2).iter().all(|z| *z == c(0.0, 0.0)));
        assert!(prox_l21(&x, 0.0).is_err());
    }

    #[test]
    fn l21_norm_values() {
        assert_eq!(l21_norm(&spec(&[&[c(0.0, 0.0), c(0.0, 0.0)]])), 0.0);
        assert_eq!(l21_norm(&spec(&[&[c(3.0, 4.0), c(0.0, 0.0)]])), 5.0);
        let id = spec(&[&[c(1.0, 0.0), c(0.0, 0.0)], &[c(0.0, 0.0), c(1.0, 0.0)]]);
        assert_eq!(l21_norm(&id), 2.0);
    }
}
