//! BSS-Eval source-to-distortion, interference and artifact ratios.
//!
//! Each estimate is split as `s_target + e_interf + e_artif`:
//! `s_target` is its least-squares projection onto `filter_len` delayed
//! copies of the matching reference, `s_target + e_interf` the projection
//! onto delayed copies of all references. Signals are zero-extended by
//! `filter_len - 1` samples so every delay is a full copy, which makes the
//! Gram matrices block-Toeplitz in the reference cross-correlations.

use std::sync::Arc;

use log::warn;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::audio_io::Signal;
use crate::error::{Error, Result};

pub const DEFAULT_FILTER_LEN: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceScores {
    pub sdr: f64,
    pub sir: f64,
    pub sar: f64,
    /// A ridge term was needed to solve a projection system.
    pub regularized: bool,
}

/// Scores of a harmonic/percussive separation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalResult {
    pub harmonic: SourceScores,
    pub percussive: SourceScores,
}

impl EvalResult {
    pub fn mean_sdr(&self) -> f64 {
        0.5 * (self.harmonic.sdr + self.percussive.sdr)
    }

    pub fn mean_sir(&self) -> f64 {
        0.5 * (self.harmonic.sir + self.percussive.sir)
    }

    pub fn mean_sar(&self) -> f64 {
        0.5 * (self.harmonic.sar + self.percussive.sar)
    }

    /// `[SDR_h, SIR_h, SAR_h, SDR_p, SIR_p, SAR_p, SDR_avg, SIR_avg, SAR_avg]`.
    pub fn to_row(&self) -> [f64; 9] {
        let (h, p) = (&self.harmonic, &self.percussive);
        [
            h.sdr,
            h.sir,
            h.sar,
            p.sdr,
            p.sir,
            p.sar,
            self.mean_sdr(),
            self.mean_sir(),
            self.mean_sar(),
        ]
    }
}

fn ratio_db(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (num / den).log10()
    }
}

struct Correlator {
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
    size: usize,
}

impl Correlator {
    fn new(size: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            fft: planner.plan_fft_forward(size),
            ifft: planner.plan_fft_inverse(size),
            size,
        }
    }

    fn spectrum(&self, x: &[f64]) -> Vec<Complex64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.size];
        for (b, v) in buf.iter_mut().zip(x) {
            b.re = *v;
        }
        self.fft.process(&mut buf);
        buf
    }

    fn inverse(&self, mut spec: Vec<Complex64>) -> Vec<f64> {
        self.ifft.process(&mut spec);
        let inv = 1.0 / self.size as f64;
        spec.iter().map(|c| c.re * inv).collect()
    }

    /// `R(d) = Σ_s x[s] y[s + d]`, indexed circularly (negative lags wrap).
    fn xcorr(&self, x: &[Complex64], y: &[Complex64]) -> Vec<f64> {
        self.inverse(x.iter().zip(y).map(|(a, b)| a.conj() * b).collect())
    }
}

/// Projection of one estimate onto delayed copies of a subset of references.
struct Projector {
    sources: Vec<usize>,
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
    regularized: bool,
}

impl Projector {
    fn new(sources: Vec<usize>, auto: &[Vec<Vec<f64>>], flen: usize, size: usize) -> Result<Self> {
        let n = sources.len() * flen;
        let lag = |r: &Vec<f64>, d: isize| r[d.rem_euclid(size as isize) as usize];
        let gram = DMatrix::from_fn(n, n, |row, col| {
            let (i, a) = (sources[row / flen], (row % flen) as isize);
            let (j, b) = (sources[col / flen], (col % flen) as isize);
            // Σ_t r_i(t - a) r_j(t - b) = R_ij(a - b)
            lag(&auto[i][j], a - b)
        });
        if let Some(chol) = gram.clone().cholesky() {
            return Ok(Self {
                sources,
                chol,
                regularized: false,
            });
        }
        let trace = gram.trace().max(f64::MIN_POSITIVE);
        let mut ridge = 1e-12 * trace / n as f64;
        for _ in 0..12 {
            let reg = &gram + DMatrix::identity(n, n) * ridge;
            if let Some(chol) = reg.cholesky() {
                warn!("singular BSS projection system; added ridge {ridge:e}");
                return Ok(Self {
                    sources,
                    chol,
                    regularized: true,
                });
            }
            ridge *= 10.0;
        }
        Err(Error::param(
            "refs",
            "references are degenerate (projection system singular)",
        ))
    }

    /// Returns the projection, length `size` (only the first `N + flen - 1` are nonzero).
    fn project(
        &self,
        est_spec: &[Complex64],
        ref_specs: &[Vec<Complex64>],
        corr: &Correlator,
        flen: usize,
    ) -> Vec<f64> {
        let n = self.sources.len() * flen;
        let mut rhs = DVector::zeros(n);
        for (slot, &i) in self.sources.iter().enumerate() {
            let r = corr.xcorr(&ref_specs[i], est_spec);
            for a in 0..flen {
                rhs[slot * flen + a] = r[a];
            }
        }
        let coef = self.chol.solve(&rhs);
        let mut acc = vec![Complex64::new(0.0, 0.0); corr.size];
        for (slot, &i) in self.sources.iter().enumerate() {
            let taps: Vec<f64> = (0..flen).map(|a| coef[slot * flen + a]).collect();
            let h = corr.spectrum(&taps);
            for ((o, r), h) in acc.iter_mut().zip(&ref_specs[i]).zip(&h) {
                *o += r * h;
            }
        }
        corr.inverse(acc)
    }
}

/// BSS-Eval decomposition of each `ests[j]` against `refs`, matched by index.
pub fn bss_eval(refs: &[Signal], ests: &[Signal], filter_len: usize) -> Result<Vec<SourceScores>> {
    if refs.is_empty() || refs.len() != ests.len() {
        return Err(Error::shape(
            format!("{} estimates", refs.len()),
            format!("{} estimates", ests.len()),
        ));
    }
    if filter_len == 0 {
        return Err(Error::param("filter_len", "must be at least 1"));
    }
    let n = refs[0].len();
    if let Some(s) = refs.iter().chain(ests).find(|s| s.len() != n) {
        return Err(Error::shape(
            format!("{n} samples"),
            format!("{} samples", s.len()),
        ));
    }

    let padded = n + filter_len - 1;
    let corr = Correlator::new((n + filter_len).next_power_of_two());
    let ref_specs: Vec<Vec<Complex64>> = refs.iter().map(|r| corr.spectrum(r.samples())).collect();
    let auto: Vec<Vec<Vec<f64>>> = ref_specs
        .iter()
        .map(|a| ref_specs.iter().map(|b| corr.xcorr(a, b)).collect())
        .collect();

    let all = Projector::new((0..refs.len()).collect(), &auto, filter_len, corr.size)?;
    let mut out = Vec::with_capacity(ests.len());
    for (j, est) in ests.iter().enumerate() {
        let own = Projector::new(vec![j], &auto, filter_len, corr.size)?;
        let est_spec = corr.spectrum(est.samples());
        let target = own.project(&est_spec, &ref_specs, &corr, filter_len);
        let full = all.project(&est_spec, &ref_specs, &corr, filter_len);

        let (mut e_t, mut e_i, mut e_a, mut e_ia, mut e_ti) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for t in 0..padded {
            let s = target[t];
            let interf = full[t] - s;
            let e = if t < n { est.samples()[t] } else { 0.0 };
            let artif = e - full[t];
            e_t += s * s;
            e_i += interf * interf;
            e_a += artif * artif;
            e_ia += (interf + artif).powi(2);
            e_ti += (s + interf).powi(2);
        }
        out.push(SourceScores {
            sdr: ratio_db(e_t, e_ia),
            sir: ratio_db(e_t, e_i),
            sar: ratio_db(e_ti, e_a),
            regularized: own.regularized || all.regularized,
        });
    }
    Ok(out)
}

/// Two-source evaluation in harmonic/percussive order.
pub fn evaluate_pair(
    ref_h: &Signal,
    ref_p: &Signal,
    est_h: &Signal,
    est_p: &Signal,
    filter_len: usize,
) -> Result<EvalResult> {
    let s = bss_eval(
        &[ref_h.clone(), ref_p.clone()],
        &[est_h.clone(), est_p.clone()],
        filter_len,
    )?;
    Ok(EvalResult {
        harmonic: s[0],
        percussive: s[1],
    })
}
