//! Seeded synthetic stems with known ground truth.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::audio_io::Signal;

/// Harmonic and percussive stems and their sum.
#[derive(Debug, Clone)]
pub struct SynthTrack {
    pub name: String,
    pub harmonic: Signal,
    pub percussive: Signal,
    pub mixture: Signal,
}

impl SynthTrack {
    /// Mixes at `ratio_db` harmonic-to-percussive energy and scales both
    /// stems together so the mixture peaks at `peak`.
    pub fn mix(
        name: impl Into<String>,
        h: Vec<f64>,
        p: Vec<f64>,
        sr: u32,
        ratio_db: f64,
        peak: f64,
    ) -> Self {
        let eh: f64 = h.iter().map(|v| v * v).sum();
        let ep: f64 = p.iter().map(|v| v * v).sum();
        let gp = if ep > 0.0 {
            (eh / ep / 10f64.powf(ratio_db / 10.0)).sqrt()
        } else {
            0.0
        };
        let p: Vec<f64> = p.iter().map(|v| v * gp).collect();
        let m: Vec<f64> = h.iter().zip(&p).map(|(a, b)| a + b).collect();
        let top = m.iter().fold(0f64, |a, v| a.max(v.abs()));
        let g = if top > 0.0 { peak / top } else { 1.0 };
        let scale = |v: Vec<f64>| {
            Signal::new(v.iter().map(|s| s * g).collect(), sr).expect("finite synthetic stem")
        };
        let harmonic = scale(h);
        let percussive = scale(p);
        // Recompute the mixture from the scaled stems so stems sum to it exactly.
        let mixture = Signal::new(
            harmonic
                .samples()
                .iter()
                .zip(percussive.samples())
                .map(|(a, b)| a + b)
                .collect(),
            sr,
        )
        .expect("finite mixture");
        Self {
            name: name.into(),
            harmonic,
            percussive,
            mixture,
        }
    }
}

/// Sinusoid of constant frequency `freq` Hz.
pub fn sinusoid(freq: f64, amp: f64, phase: f64, sr: u32, len: usize) -> Vec<f64> {
    let w = 2.0 * PI * freq / f64::from(sr);
    (0..len)
        .map(|n| amp * (w * n as f64 + phase).cos())
        .collect()
}

/// Single-sample impulses of height `amp` every `period` samples from `offset`.
pub fn impulse_train(period: usize, offset: usize, amp: f64, len: usize) -> Vec<f64> {
    let mut x = vec![0.0; len];
    let mut n = offset;
    while n < len {
        x[n] = amp;
        n += period.max(1);
    }
    x
}

/// Harmonic tone with `partials` overtones whose fundamental glides linearly
/// from `f_start` to `f_end` Hz.
fn harmonic_tone(
    rng: &mut impl Rng,
    f_start: f64,
    f_end: f64,
    partials: usize,
    sr: u32,
    len: usize,
) -> Vec<f64> {
    let sr = f64::from(sr);
    let dur = len as f64 / sr;
    let mut x = vec![0.0; len];
    for k in 1..=partials {
        let amp = 1.0 / k as f64;
        let phase0 = rng.gen_range(0.0..2.0 * PI);
        let kf = k as f64;
        if kf * f_start.max(f_end) >= 0.45 * sr {
            break;
        }
        for (n, v) in x.iter_mut().enumerate() {
            let t = n as f64 / sr;
            // Phase of a linear chirp: 2π (f0 t + (f1 - f0) t² / (2 dur)).
            let ph = 2.0 * PI * kf * (f_start * t + (f_end - f_start) * t * t / (2.0 * dur));
            *v += amp * (ph + phase0).cos();
        }
    }
    x
}

/// Exponentially decaying white-noise bursts at the given onsets.
fn noise_bursts(rng: &mut impl Rng, onsets: &[usize], decay: usize, len: usize) -> Vec<f64> {
    let mut x = vec![0.0; len];
    for &o in onsets {
        let amp = rng.gen_range(0.6..1.0);
        for (i, v) in x.iter_mut().skip(o).take(8 * decay).enumerate() {
            let n: f64 = StandardNormal.sample(rng);
            *v += amp * n * (-(i as f64) / decay as f64).exp();
        }
    }
    x
}

fn random_onsets(rng: &mut impl Rng, len: usize, min_gap: usize, max_gap: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut n = rng.gen_range(0..min_gap);
    while n < len {
        out.push(n);
        n += rng.gen_range(min_gap..=max_gap);
    }
    out
}

/// On-bin sinusoid (bin 100 of a 4096-point transform) plus a sparse unit
/// impulse train, mixed at 0 dB.
pub fn sinusoid_plus_impulses(sr: u32, len: usize) -> SynthTrack {
    let f = 100.0 * f64::from(sr) / 4096.0;
    let h = sinusoid(f, 1.0, 0.0, sr, len);
    let period = (f64::from(sr) * 0.5) as usize;
    let p = impulse_train(period, period / 4, 1.0, len);
    SynthTrack::mix("sine+impulses", h, p, sr, 0.0, 0.9)
}

/// Deterministic corpus of `count` harmonic/percussive mixtures at 0 dB.
///
/// Harmonic stems alternate between steady chords of harmonic tones and
/// gliding tones; percussive stems alternate between impulse trains and
/// decaying noise bursts.
pub fn corpus(seed: u64, count: usize, sr: u32, len: usize) -> Vec<SynthTrack> {
    (0..count)
        .map(|i| {
            let mut rng =
                ChaCha8Rng::seed_from_u64(seed.wrapping_mul(1_000_003).wrapping_add(i as u64));
            let n_notes = rng.gen_range(1..=3);
            let glide = i % 2 == 1;
            let mut h = vec![0.0; len];
            for _ in 0..n_notes {
                let f0 = 110.0 * 2f64.powf(rng.gen_range(0.0..3.0));
                let f1 = if glide {
                    f0 * 2f64.powf(rng.gen_range(-0.15..0.15))
                } else {
                    f0
                };
                let partials = rng.gen_range(3..=6);
                let tone = harmonic_tone(&mut rng, f0, f1, partials, sr, len);
                h.iter_mut().zip(&tone).for_each(|(a, b)| *a += b);
            }
            let (kind, p) = if i % 4 < 2 {
                let period = (f64::from(sr) * rng.gen_range(0.25..0.6)) as usize;
                let offset = rng.gen_range(0..period);
                ("impulses", impulse_train(period, offset, 1.0, len))
            } else {
                let onsets = random_onsets(&mut rng, len, sr as usize / 5, sr as usize / 2);
                let decay = (f64::from(sr) * rng.gen_range(0.002..0.01)) as usize;
                ("bursts", noise_bursts(&mut rng, &onsets, decay.max(1), len))
            };
            let name = format!(
                "synth{i:02}-{}-{kind}",
                if glide { "glide" } else { "chord" }
            );
            SynthTrack::mix(name, h, p, sr, 0.0, 0.9)
        })
        .collect()
}
