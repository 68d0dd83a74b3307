//! Shared fixtures and brute-force reference minimizers for the integration
//! tests. The references never call the library's closed forms; they solve
//! the defining optimization problems numerically.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use phase_hpss::stft::FrameLayout;
use phase_hpss::{Signal, Spectrogram};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub const SR: u32 = 16_000;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gauss(rng: &mut impl Rng) -> f64 {
    StandardNormal.sample(rng)
}

pub fn noise_vec(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| gauss(rng)).collect()
}

pub fn noise(rng: &mut impl Rng, n: usize) -> Signal {
    Signal::new(noise_vec(rng, n), SR).unwrap()
}

pub fn random_spec(rng: &mut impl Rng, layout: FrameLayout) -> Spectrogram {
    Spectrogram::from_fn(layout, |_, _| Complex64::new(gauss(rng), gauss(rng)))
}

pub fn layout(n_bins: usize, n_frames: usize) -> FrameLayout {
    FrameLayout {
        win_len: 2 * (n_bins - 1),
        hop: (n_bins - 1) / 2,
        n_bins,
        n_frames,
        signal_len: 0,
        sample_rate: SR,
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

pub fn rel_dist(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den.max(f64::MIN_POSITIVE)).sqrt()
}

pub fn spec_rel_dist(a: &Spectrogram, b: &Spectrogram) -> f64 {
    let num: f64 = a
        .as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y).norm_sqr())
        .sum();
    let den: f64 = b.as_slice().iter().map(|y| y.norm_sqr()).sum();
    (num / den.max(f64::MIN_POSITIVE)).sqrt()
}

/// Minimizer of `‖h - h0‖² + ‖p - p0‖²` subject to `h + p = x`, from the
/// full KKT system solved by LU.
pub fn project_sum_reference(x: &[f64], h0: &[f64], p0: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let m = 3 * n;
    let mut a = DMatrix::<f64>::zeros(m, m);
    let mut b = DVector::<f64>::zeros(m);
    for i in 0..n {
        a[(i, i)] = 2.0;
        a[(n + i, n + i)] = 2.0;
        a[(i, 2 * n + i)] = 1.0;
        a[(n + i, 2 * n + i)] = 1.0;
        a[(2 * n + i, i)] = 1.0;
        a[(2 * n + i, n + i)] = 1.0;
        b[i] = 2.0 * h0[i];
        b[n + i] = 2.0 * p0[i];
        b[2 * n + i] = x[i];
    }
    let sol = a.lu().solve(&b).expect("KKT system is nonsingular");
    (
        sol.rows(0, n).iter().copied().collect(),
        sol.rows(n, n).iter().copied().collect(),
    )
}

/// Root of a nondecreasing function on `[lo, hi]` by bisection to the last ulp.
fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `argmin_X ½‖X‖² + 1/(2ρ)‖Y − X‖²`, coordinate by coordinate: the objective
/// separates over real and imaginary parts, and each scalar problem is solved
/// by bisection on its derivative.
pub fn prox_sq_fro_reference(y: &Spectrogram, rho: f64) -> Spectrogram {
    let solve = |v: f64| {
        let r = v.abs() + 1.0;
        bisect(-r, r, |t| t + (t - v) / rho)
    };
    Spectrogram::from_fn(y.layout(), |k, t| {
        let v = y.get(k, t);
        Complex64::new(solve(v.re), solve(v.im))
    })
}

/// `argmin_X ρ Σ_τ ‖X_τ‖ + ½‖Y − X‖²` column by column.
///
/// For any candidate column `c`, `‖y − c‖ ≥ ‖y‖ − ‖c‖` with equality iff `c`
/// is a nonnegative multiple of `y`, so the minimizer is `s·y/‖y‖` with
/// `s ≥ 0` minimizing `φ(s) = ρ s + ½(‖y‖ − s)²`. `s` is found by bisection on
/// the right derivative `φ'(s) = ρ − (‖y‖ − s)`; when `φ'(0) ≥ 0` the
/// minimizer is the origin.
pub fn prox_l21_reference(y: &Spectrogram, rho: f64) -> Spectrogram {
    let mut out = y.clone();
    for t in 0..y.n_frames() {
        let norm = y.frame(t).iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        let dphi = |s: f64| rho - (norm - s);
        let s = if norm == 0.0 || dphi(0.0) >= 0.0 {
            0.0
        } else {
            bisect(0.0, norm, dphi)
        };
        for (o, v) in out.frame_mut(t).iter_mut().zip(y.frame(t)) {
            *o = if s == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                v * (s / norm)
            };
        }
    }
    out
}

/// Projection of each column onto the Euclidean ball of radius `r`.
pub fn project_columns(y: &Spectrogram, r: f64) -> Spectrogram {
    let mut out = y.clone();
    for t in 0..y.n_frames() {
        let norm = y.frame(t).iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if norm > r {
            out.frame_mut(t).iter_mut().for_each(|v| *v *= r / norm);
        }
    }
    out
}
