//! Primal-dual splitting for the phase-aware HPSS problem
//!
//! ```text
//! minimize  ι_x(x_h, x_p) + ½‖L_h(x_h)‖²_Fro + λ‖F(x_p)‖₂,₁
//! L_h(·) = W ⊙ D_τ(E ⊙ F(·))
//! ```
//!
//! where `ι_x` is the indicator of `x_h + x_p = x`. Only the operators and
//! their adjoints are applied; nothing is inverted.

use log::warn;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::audio_io::Signal;
use crate::error::{Error, Result};
use crate::grid::RealGrid;
use crate::par;
use crate::phase::{self, PhaseCorrection};
use crate::prox::{self, SignalPair};
use crate::stft::{Spectrogram, StftConfig};

const POWER_ITER_SEED: u64 = 0x005e_ed0f_0e7a;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverParams {
    /// Weight of the percussive `ℓ2,1` term.
    pub lambda: f64,
    /// Primal step size.
    pub mu1: f64,
    /// Dual step size.
    pub mu2: f64,
    /// Relaxation, in `(0, 2)`.
    pub alpha: f64,
    /// Zero returns the initialization unchanged.
    pub n_iters: usize,
    pub record_trace: bool,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            lambda: 0.5,
            mu1: 1.0,
            mu2: 0.25,
            alpha: 0.5,
            n_iters: 100,
            record_trace: true,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        let positive = |name, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::param(name, format!("must be positive, got {v}")))
            }
        };
        positive("lambda", self.lambda)?;
        positive("mu1", self.mu1)?;
        positive("mu2", self.mu2)?;
        if !(self.alpha > 0.0 && self.alpha < 2.0) {
            return Err(Error::param(
                "alpha",
                format!("must lie in (0, 2), got {}", self.alpha),
            ));
        }
        Ok(())
    }
}

/// Per-iteration diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub total: f64,
    pub smooth_term: f64,
    pub sparse_term: f64,
    pub primal_increment: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolverTrace {
    pub rows: Vec<TraceRow>,
}

impl SolverTrace {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    /// CSV with header `iteration,total,smooth_term,sparse_term,primal_increment`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("iteration,total,smooth_term,sparse_term,primal_increment\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{:e},{:e},{:e},{:e}\n",
                r.iteration, r.total, r.smooth_term, r.sparse_term, r.primal_increment
            ));
        }
        s
    }
}

/// Mixture, fixed operators and weights of one separation problem.
#[derive(Debug, Clone)]
pub struct HpssProblem {
    x: Signal,
    stft: StftConfig,
    correction: PhaseCorrection,
    weight: RealGrid,
    params: SolverParams,
}

impl HpssProblem {
    /// `weight` must be finite and non-negative with the spectrogram's shape.
    pub fn new(
        x: Signal,
        stft: StftConfig,
        correction: PhaseCorrection,
        weight: RealGrid,
        params: SolverParams,
    ) -> Result<Self> {
        params.validate()?;
        let layout = stft.layout(x.len(), x.sample_rate());
        let shape = (layout.n_bins, layout.n_frames);
        let got_e = (correction.n_bins(), correction.n_frames());
        if got_e != shape {
            return Err(Error::shape(
                format!("E of {shape:?}"),
                format!("{got_e:?}"),
            ));
        }
        if weight.shape() != shape {
            return Err(Error::shape(
                format!("W of {shape:?}"),
                format!("{:?}", weight.shape()),
            ));
        }
        if weight
            .as_slice()
            .iter()
            .any(|w| !(w.is_finite() && *w >= 0.0))
        {
            return Err(Error::param("weight", "entries must be finite and >= 0"));
        }
        Ok(Self {
            x,
            stft,
            correction,
            weight,
            params,
        })
    }

    pub fn mixture(&self) -> &Signal {
        &self.x
    }

    pub fn stft(&self) -> &StftConfig {
        &self.stft
    }

    pub fn correction(&self) -> &PhaseCorrection {
        &self.correction
    }

    pub fn weight(&self) -> &RealGrid {
        &self.weight
    }

    pub fn params(&self) -> &SolverParams {
        &self.params
    }

    pub fn with_params(mut self, params: SolverParams) -> Result<Self> {
        params.validate()?;
        self.params = params;
        Ok(self)
    }

    fn empty_spec(&self) -> Spectrogram {
        Spectrogram::zeros(self.stft.layout(self.x.len(), self.x.sample_rate()))
    }

    fn check_len(&self, n: usize) -> Result<()> {
        if n != self.x.len() {
            return Err(Error::shape(
                format!("{} samples", self.x.len()),
                format!("{n} samples"),
            ));
        }
        Ok(())
    }

    fn check_spec(&self, y: &Spectrogram) -> Result<()> {
        y.check_layout(&self.stft.layout(self.x.len(), self.x.sample_rate()))
    }

    /// `out ← W ⊙ D_τ(E ⊙ F(x_h))`, using `tmp` as scratch.
    fn lh_into(&self, x_h: &[f64], tmp: &mut Spectrogram, out: &mut Spectrogram) {
        self.stft.forward_into(x_h, tmp);
        self.correction.apply_in_place(tmp, false);
        phase::time_diff_into(tmp, out);
        apply_weight(out, &self.weight);
    }

    /// `out ← F*(conj(E) ⊙ D_τ*(W ⊙ y))`, using `tmp`/`tmp2` as scratch.
    fn lh_adj_into(
        &self,
        y: &Spectrogram,
        tmp: &mut Spectrogram,
        tmp2: &mut Spectrogram,
        out: &mut [f64],
    ) {
        tmp.as_mut_slice().copy_from_slice(y.as_slice());
        apply_weight(tmp, &self.weight);
        phase::time_diff_adj_into(tmp, tmp2);
        self.correction.apply_in_place(tmp2, true);
        self.stft.adjoint_into(tmp2, out);
    }
}

fn apply_weight(s: &mut Spectrogram, w: &RealGrid) {
    let k = s.n_bins();
    par::for_each_chunk_mut(s.as_mut_slice(), k, |t, frame| {
        for (z, w) in frame.iter_mut().zip(w.frame(t)) {
            *z *= *w;
        }
    });
}

/// `W ⊙ D_τ(E ⊙ F(x_h))`.
pub fn apply_lh(x_h: &Signal, p: &HpssProblem) -> Result<Spectrogram> {
    p.check_len(x_h.len())?;
    let mut tmp = p.empty_spec();
    let mut out = p.empty_spec();
    p.lh_into(x_h.samples(), &mut tmp, &mut out);
    Ok(out)
}

/// Adjoint of [`apply_lh`] under the weighted spectrogram inner product.
pub fn apply_lh_adj(y: &Spectrogram, p: &HpssProblem) -> Result<Signal> {
    p.check_spec(y)?;
    let mut tmp = p.empty_spec();
    let mut tmp2 = p.empty_spec();
    let mut out = vec![0.0; p.x.len()];
    p.lh_adj_into(y, &mut tmp, &mut tmp2, &mut out);
    Ok(Signal::from_raw(out, p.x.sample_rate()))
}

/// Which blocks of the stacked operator `(x_h, x_p) ↦ (L_h x_h, F x_p)` to include.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorBranches {
    Both,
    HarmonicOnly,
    PercussiveOnly,
}

/// Power-iteration estimate of the spectral norm of the stacked operator.
pub fn estimate_opnorm(p: &HpssProblem, n_power_iters: usize) -> Result<f64> {
    estimate_opnorm_of(p, n_power_iters, OperatorBranches::Both)
}

pub fn estimate_opnorm_of(
    p: &HpssProblem,
    n_power_iters: usize,
    branches: OperatorBranches,
) -> Result<f64> {
    if n_power_iters == 0 {
        return Err(Error::param("n_power_iters", "must be at least 1"));
    }
    let n = p.x.len();
    let use_h = branches != OperatorBranches::PercussiveOnly;
    let use_p = branches != OperatorBranches::HarmonicOnly;
    let mut rng = ChaCha8Rng::seed_from_u64(POWER_ITER_SEED);
    let mut vh: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut vp: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut tmp = p.empty_spec();
    let mut tmp2 = p.empty_spec();
    let mut spec = p.empty_spec();
    let mut estimate = 0.0;

    for _ in 0..n_power_iters {
        let norm = norm2(&vh, &vp);
        if norm == 0.0 {
            return Ok(0.0);
        }
        vh.iter_mut().chain(vp.iter_mut()).for_each(|v| *v /= norm);

        if use_h {
            p.lh_into(&vh, &mut tmp, &mut spec);
            p.lh_adj_into(&spec, &mut tmp, &mut tmp2, &mut vh);
        } else {
            vh.fill(0.0);
        }
        if use_p {
            p.stft.forward_into(&vp, &mut spec);
            p.stft.adjoint_into(&spec, &mut vp);
        } else {
            vp.fill(0.0);
        }
        // ‖A*A v‖ with ‖v‖ = 1 converges to ‖A‖².
        estimate = norm2(&vh, &vp).sqrt();
    }
    Ok(estimate)
}

fn norm2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().chain(b).map(|v| v * v).sum::<f64>().sqrt()
}

/// `(total, smooth_term, sparse_term)` of the reformulated objective.
pub fn objective(pair: &SignalPair, p: &HpssProblem) -> Result<(f64, f64, f64)> {
    p.check_len(pair.len())?;
    let residual = pair.constraint_residual(&p.x);
    if residual > 1e-9 * p.x.norm().max(f64::MIN_POSITIVE) && residual > 0.0 {
        return Err(Error::ConstraintViolated { residual });
    }
    let mut tmp = p.empty_spec();
    let mut spec = p.empty_spec();
    Ok(objective_terms(
        p,
        pair.harmonic.samples(),
        pair.percussive.samples(),
        &mut tmp,
        &mut spec,
    ))
}

fn objective_terms(
    p: &HpssProblem,
    h: &[f64],
    x_p: &[f64],
    tmp: &mut Spectrogram,
    spec: &mut Spectrogram,
) -> (f64, f64, f64) {
    p.lh_into(h, tmp, spec);
    let smooth = 0.5 * spec.norm_sq();
    p.stft.forward_into(x_p, spec);
    let sparse = p.params.lambda * prox::l21_norm(spec);
    (smooth + sparse, smooth, sparse)
}

/// Primal and dual iterates.
#[derive(Debug, Clone, PartialEq)]
pub struct PdsState {
    pub harmonic: Vec<f64>,
    pub percussive: Vec<f64>,
    pub dual_h: Spectrogram,
    pub dual_p: Spectrogram,
}

/// Stateful primal-dual iteration over one problem.
pub struct Pds<'a> {
    problem: &'a HpssProblem,
    state: PdsState,
    iteration: usize,
    // Scratch, reused across iterations.
    grad_h: Vec<f64>,
    grad_p: Vec<f64>,
    cand_h: Vec<f64>,
    cand_p: Vec<f64>,
    lin: Vec<f64>,
    z_h: Spectrogram,
    z_p: Spectrogram,
    tmp: Spectrogram,
    tmp2: Spectrogram,
}

impl<'a> Pds<'a> {
    /// Starts from `init`, projected onto the reconstruction constraint,
    /// with zero dual variables.
    pub fn new(problem: &'a HpssProblem, init: &SignalPair) -> Result<Self> {
        problem.check_len(init.len())?;
        let mut h = init.harmonic.samples().to_vec();
        let mut x_p = init.percussive.samples().to_vec();
        prox::project_sum_slices(problem.x.samples(), &mut h, &mut x_p);
        let state = PdsState {
            harmonic: h,
            percussive: x_p,
            dual_h: problem.empty_spec(),
            dual_p: problem.empty_spec(),
        };
        Self::from_state(problem, state)
    }

    pub fn from_state(problem: &'a HpssProblem, state: PdsState) -> Result<Self> {
        problem.check_len(state.harmonic.len())?;
        problem.check_len(state.percussive.len())?;
        problem.check_spec(&state.dual_h)?;
        problem.check_spec(&state.dual_p)?;
        let n = problem.x.len();
        Ok(Self {
            problem,
            state,
            iteration: 0,
            grad_h: vec![0.0; n],
            grad_p: vec![0.0; n],
            cand_h: vec![0.0; n],
            cand_p: vec![0.0; n],
            lin: vec![0.0; n],
            z_h: problem.empty_spec(),
            z_p: problem.empty_spec(),
            tmp: problem.empty_spec(),
            tmp2: problem.empty_spec(),
        })
    }

    pub fn state(&self) -> &PdsState {
        &self.state
    }

    pub fn into_state(self) -> PdsState {
        self.state
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    /// One iteration. Returns the primal increment `‖(x_h, x_p)⁺ - (x_h, x_p)‖`.
    pub fn step(&mut self) -> Result<f64> {
        let p = self.problem;
        let params = p.params;
        let x = p.x.samples();
        let (mu1, mu2, alpha, lambda) = (params.mu1, params.mu2, params.alpha, params.lambda);

        // Primal: project the adjoint-corrected point onto x_h + x_p = x.
        p.lh_adj_into(
            &self.state.dual_h,
            &mut self.tmp,
            &mut self.tmp2,
            &mut self.grad_h,
        );
        p.stft.adjoint_into(&self.state.dual_p, &mut self.grad_p);
        for i in 0..x.len() {
            self.cand_h[i] = self.state.harmonic[i] - mu1 * self.grad_h[i];
            self.cand_p[i] = self.state.percussive[i] - mu1 * self.grad_p[i];
        }
        prox::project_sum_slices(x, &mut self.cand_h, &mut self.cand_p);

        // Dual, harmonic branch: z_h = Y_h + L_h(2x̃_h - x_h).
        for i in 0..x.len() {
            self.lin[i] = 2.0 * self.cand_h[i] - self.state.harmonic[i];
        }
        p.lh_into(&self.lin, &mut self.tmp, &mut self.z_h);
        add_assign(&mut self.z_h, &self.state.dual_h);
        // ỹ_h = z_h - μ2 prox_{(1/μ2)·½‖·‖²}(z_h / μ2)
        moreau_dual_step(&mut self.z_h, &mut self.tmp, mu2, |s| {
            prox::prox_sq_fro_in_place(s, 1.0 / mu2)
        });

        // Dual, percussive branch: z_p = Y_p + F(2x̃_p - x_p).
        for i in 0..x.len() {
            self.lin[i] = 2.0 * self.cand_p[i] - self.state.percussive[i];
        }
        p.stft.forward_into(&self.lin, &mut self.z_p);
        add_assign(&mut self.z_p, &self.state.dual_p);
        // ỹ_p = z_p - μ2 prox_{(λ/μ2)‖·‖₂,₁}(z_p / μ2)
        moreau_dual_step(&mut self.z_p, &mut self.tmp, mu2, |s| {
            prox::prox_l21_in_place(s, lambda / mu2)
        });

        // Relaxation of (x_h, x_p, Y_h, Y_p) jointly.
        let mut inc = 0.0;
        let cur = self
            .state
            .harmonic
            .iter_mut()
            .zip(self.state.percussive.iter_mut());
        for ((&xi, &cand), (h, p)) in x.iter().zip(&self.cand_h).zip(cur) {
            let h_new = alpha * cand + (1.0 - alpha) * *h;
            let p_new = xi - h_new;
            let dh = h_new - *h;
            let dp = p_new - *p;
            inc += dh * dh + dp * dp;
            *h = h_new;
            *p = p_new;
        }
        relax(&mut self.state.dual_h, &self.z_h, alpha);
        relax(&mut self.state.dual_p, &self.z_p, alpha);
        self.iteration += 1;

        if !self.state.harmonic.iter().all(|v| v.is_finite()) {
            return Err(Error::Diverged {
                iteration: self.iteration,
                quantity: "primal iterate",
            });
        }
        if !(self.state.dual_h.is_finite() && self.state.dual_p.is_finite()) {
            return Err(Error::Diverged {
                iteration: self.iteration,
                quantity: "dual iterate",
            });
        }
        Ok(inc.sqrt())
    }

    fn trace_row(&mut self, increment: f64) -> TraceRow {
        let (total, smooth_term, sparse_term) = objective_terms(
            self.problem,
            &self.state.harmonic,
            &self.state.percussive,
            &mut self.tmp,
            &mut self.z_h,
        );
        TraceRow {
            iteration: self.iteration,
            total,
            smooth_term,
            sparse_term,
            primal_increment: increment,
        }
    }

    pub fn pair(&self) -> SignalPair {
        let sr = self.problem.x.sample_rate();
        SignalPair {
            harmonic: Signal::from_raw(self.state.harmonic.clone(), sr),
            percussive: Signal::from_raw(self.state.percussive.clone(), sr),
        }
    }
}

/// `z ← z - μ prox(z / μ)`, with `prox` applied in place to a scratch copy.
fn moreau_dual_step(
    z: &mut Spectrogram,
    scratch: &mut Spectrogram,
    mu: f64,
    prox: impl Fn(&mut Spectrogram),
) {
    let inv = 1.0 / mu;
    let s = scratch.as_mut_slice();
    s.iter_mut()
        .zip(z.as_slice())
        .for_each(|(d, v)| *d = v * inv);
    prox(scratch);
    par::for_each_indexed_mut(z.as_mut_slice(), |i, v| *v -= mu * scratch.as_slice()[i]);
}

fn add_assign(a: &mut Spectrogram, b: &Spectrogram) {
    par::for_each_indexed_mut(a.as_mut_slice(), |i, v| *v += b.as_slice()[i]);
}

fn relax(y: &mut Spectrogram, cand: &Spectrogram, alpha: f64) {
    let beta = 1.0 - alpha;
    par::for_each_indexed_mut(y.as_mut_slice(), |i, v| {
        let c: Complex64 = cand.as_slice()[i];
        *v = c * alpha + *v * beta;
    });
}

/// Runs `params.n_iters` iterations from `init` (projected if needed).
///
/// Warns when `μ1 μ2 ‖L‖² > 1` for the estimated stacked-operator norm.
pub fn run(p: &HpssProblem, init: &SignalPair) -> Result<(SignalPair, SolverTrace)> {
    let params = p.params;
    if params.n_iters > 0 {
        let norm = estimate_opnorm(p, 10)?;
        let product = params.mu1 * params.mu2 * norm * norm;
        if product > 1.0 {
            warn!(
                "step sizes may be too large: mu1*mu2*|L|^2 = {product:.3} > 1 (|L| ~ {norm:.3})"
            );
        }
    }
    let mut pds = Pds::new(p, init)?;
    let mut trace = SolverTrace::default();
    for _ in 0..params.n_iters {
        let inc = pds.step()?;
        if params.record_trace {
            let row = pds.trace_row(inc);
            trace.rows.push(row);
        }
    }
    Ok((pds.pair(), trace))
}
