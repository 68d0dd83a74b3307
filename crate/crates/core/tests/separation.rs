mod common;

use common::*;
use phase_hpss::metrics::{self, bss_eval};
use phase_hpss::synth;
use phase_hpss::{separate, separate_mf, HpssConfig, IfSource, Signal};

const FS: u32 = 8000;

fn small_config() -> HpssConfig {
    HpssConfig {
        win_len: 256,
        hop: 64,
        ..HpssConfig::default()
    }
}

/// Removes the components of `n` along each reference (zero-lag projection).
fn orthogonalize(n: &mut [f64], refs: &[&[f64]]) {
    // Gram–Schmidt against an orthonormalized copy of the references.
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for r in refs {
        let mut v = r.to_vec();
        for b in &basis {
            let c = dot(&v, b);
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
        }
        let norm = dot(&v, &v).sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        basis.push(v);
    }
    for b in &basis {
        let c = dot(n, b);
        n.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
    }
}

#[test]
fn twenty_db_construction_scores_twenty_db() {
    let mut r = rng(11);
    let (h, p) = (noise_vec(&mut r, 4000), noise_vec(&mut r, 4000));
    let mut n = noise_vec(&mut r, 4000);
    orthogonalize(&mut n, &[&h, &p]);
    let scale = (dot(&h, &h) / dot(&n, &n) / 100.0).sqrt();
    let est: Vec<f64> = h.iter().zip(&n).map(|(a, b)| a + scale * b).collect();
    let s = |v: Vec<f64>| Signal::new(v, FS).unwrap();
    let scores = bss_eval(&[s(h.clone()), s(p.clone())], &[s(est), s(p)], 1).unwrap();
    assert!((scores[0].sdr - 20.0).abs() <= 0.2, "{:?}", scores[0]);
    assert!(scores[1].sdr > 100.0);
}

#[test]
fn swapped_stems_score_badly() {
    // Disjoint supports separated by more than the filter length keep the
    // stems orthogonal under every shift the distortion filter can apply.
    let mut r = rng(12);
    let mut h = noise_vec(&mut r, 3000);
    let mut p = noise_vec(&mut r, 3000);
    h[1400..].iter_mut().for_each(|v| *v = 0.0);
    p[..1600].iter_mut().for_each(|v| *v = 0.0);
    let (h, p) = (Signal::new(h, FS).unwrap(), Signal::new(p, FS).unwrap());
    let e = metrics::evaluate_pair(&h, &p, &p, &h, 32).unwrap();
    assert!(
        e.harmonic.sir <= -20.0 && e.percussive.sir <= -20.0,
        "{e:?}"
    );
    assert!(e.harmonic.sdr < -10.0 && e.percussive.sdr < -10.0, "{e:?}");
}

#[test]
fn single_tap_scores_match_closed_form_projection() {
    let mut r = rng(13);
    let s1 = noise_vec(&mut r, 2000);
    let mut s2 = noise_vec(&mut r, 2000);
    orthogonalize(&mut s2, &[&s1]);
    let est: Vec<f64> = s1
        .iter()
        .zip(&s2)
        .zip(noise_vec(&mut r, 2000))
        .map(|((a, b), n)| 0.8 * a + 0.2 * b + 0.1 * n)
        .collect();

    let c1 = dot(&est, &s1) / dot(&s1, &s1);
    let c2 = dot(&est, &s2) / dot(&s2, &s2);
    let target: Vec<f64> = s1.iter().map(|v| c1 * v).collect();
    let interf: Vec<f64> = s2.iter().map(|v| c2 * v).collect();
    let artif: Vec<f64> = (0..est.len())
        .map(|i| est[i] - target[i] - interf[i])
        .collect();
    let energy = |v: &[f64]| dot(v, v);
    let sum = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x + y).collect::<Vec<f64>>();
    let db = |num: f64, den: f64| 10.0 * (num / den).log10();
    let sdr = db(energy(&target), energy(&sum(&interf, &artif)));
    let sir = db(energy(&target), energy(&interf));
    let sar = db(energy(&sum(&target, &interf)), energy(&artif));

    let s = |v: &[f64]| Signal::new(v.to_vec(), FS).unwrap();
    let got = bss_eval(&[s(&s1), s(&s2)], &[s(&est), s(&s2)], 1).unwrap()[0];
    assert!((got.sdr - sdr).abs() <= 0.01, "{} vs {sdr}", got.sdr);
    assert!((got.sir - sir).abs() <= 0.01, "{} vs {sir}", got.sir);
    assert!((got.sar - sar).abs() <= 0.01, "{} vs {sar}", got.sar);
}

#[test]
fn outputs_sum_to_the_mixture_up_to_rounding() {
    let cfg = small_config();
    for tr in synth::corpus(3, 2, FS, 6000) {
        let sep = separate(&tr.mixture, &cfg, None).unwrap();
        assert_eq!(sep.trace.len(), cfg.solver.n_iters);
        for ((x, h), p) in tr
            .mixture
            .samples()
            .iter()
            .zip(sep.pair.harmonic.samples())
            .zip(sep.pair.percussive.samples())
        {
            // p is formed as x - h, so the only error is the final rounding.
            assert!((x - h - p).abs() <= 2.0 * f64::EPSILON * x.abs().max(h.abs()));
        }
        let mf = separate_mf(&tr.mixture, &cfg).unwrap();
        assert!(mf.constraint_residual(&tr.mixture) <= 1e-12);
    }
}

#[test]
fn oracle_frequencies_do_not_hurt() {
    let mut mix_cfg = small_config();
    mix_cfg.solver.n_iters = 60;
    let ora_cfg = HpssConfig {
        if_source: IfSource::Oracle("unused".into()),
        ..mix_cfg.clone()
    };
    let (mut mix, mut ora) = (0.0, 0.0);
    for tr in synth::corpus(5, 4, FS, 8000) {
        let score = |cfg: &HpssConfig, oracle: Option<&Signal>| {
            let s = separate(&tr.mixture, cfg, oracle).unwrap().pair;
            metrics::evaluate_pair(&tr.harmonic, &tr.percussive, &s.harmonic, &s.percussive, 64)
                .unwrap()
                .harmonic
                .sdr
        };
        mix += score(&mix_cfg, None);
        ora += score(&ora_cfg, Some(&tr.harmonic));
    }
    assert!(ora >= mix, "oracle {ora} vs mixture {mix}");
}

#[test]
fn scaling_the_input_and_lambda_together_scales_the_output() {
    let tr = &synth::corpus(9, 1, FS, 5000)[0];
    let cfg = small_config();
    let alpha = 3.0;
    let mut scaled_cfg = cfg.clone();
    scaled_cfg.solver.lambda *= alpha;
    let base = separate(&tr.mixture, &cfg, None).unwrap().pair;
    let big = separate(&tr.mixture.scaled(alpha), &scaled_cfg, None)
        .unwrap()
        .pair;
    let expect: Vec<f64> = base.harmonic.samples().iter().map(|v| alpha * v).collect();
    assert!(rel_dist(big.harmonic.samples(), &expect) <= 1e-9);
}

#[test]
fn median_baseline_is_scale_invariant() {
    let tr = &synth::corpus(10, 1, FS, 5000)[0];
    let cfg = small_config();
    let a = separate_mf(&tr.mixture, &cfg).unwrap();
    let b = separate_mf(&tr.mixture.scaled(0.25), &cfg).unwrap();
    let expect: Vec<f64> = a.harmonic.samples().iter().map(|v| 0.25 * v).collect();
    assert!(rel_dist(b.harmonic.samples(), &expect) <= 1e-12);
}
