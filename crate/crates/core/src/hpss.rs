//! End-to-end separation pipeline and its configuration.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::audio_io::Signal;
use crate::baseline::{self, MedianConfig};
use crate::error::{Error, Result};
use crate::phase::{self, DEFAULT_IF_EPS};
use crate::prox::SignalPair;
use crate::solver::{self, HpssProblem, SolverParams, SolverTrace};
use crate::stft::StftConfig;

/// Where the instantaneous frequencies for the phase correction come from.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum IfSource {
    /// Estimated from the mixture itself.
    #[default]
    Mixture,
    /// Estimated from a separately supplied harmonic reference.
    Oracle(PathBuf),
}

impl std::str::FromStr for IfSource {
    type Err = Error;

    /// Accepts `mix`, `mixture`, or `oracle:PATH`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mix" | "mixture" => Ok(IfSource::Mixture),
            _ => match s.strip_prefix("oracle:") {
                Some(p) if !p.is_empty() => Ok(IfSource::Oracle(PathBuf::from(p))),
                _ => Err(Error::Config(format!(
                    "if_source must be `mixture` or `oracle:PATH`, got `{s}`"
                ))),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HpssConfig {
    pub win_len: usize,
    pub hop: usize,
    pub kappa: f64,
    pub solver: SolverParams,
    pub median: MedianConfig,
    pub if_source: IfSource,
    pub if_eps: f64,
}

impl Default for HpssConfig {
    fn default() -> Self {
        Self {
            win_len: 4096,
            hop: 1024,
            kappa: 0.001,
            solver: SolverParams::default(),
            median: MedianConfig::default(),
            if_source: IfSource::Mixture,
            if_eps: DEFAULT_IF_EPS,
        }
    }
}

impl HpssConfig {
    pub fn stft(&self) -> Result<StftConfig> {
        StftConfig::hann(self.win_len, self.hop)
    }

    pub fn validate(&self) -> Result<()> {
        self.stft()?;
        self.solver.validate()?;
        self.median.validate()?;
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::param(
                "kappa",
                format!("must be positive, got {}", self.kappa),
            ));
        }
        if !(self.if_eps >= 0.0 && self.if_eps.is_finite()) {
            return Err(Error::param(
                "if_eps",
                format!("must be >= 0, got {}", self.if_eps),
            ));
        }
        Ok(())
    }

    /// Applies every key present in a flat `key = value` config text.
    pub fn apply_config_str(&mut self, text: &str) -> Result<()> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        file.apply(self)
    }

    pub fn apply_config_file(&mut self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.apply_config_str(&text)
    }
}

/// Flat config file; every key is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    win_len: Option<usize>,
    hop: Option<usize>,
    kappa: Option<f64>,
    lambda: Option<f64>,
    mu1: Option<f64>,
    mu2: Option<f64>,
    alpha: Option<f64>,
    n_iters: Option<usize>,
    record_trace: Option<bool>,
    harm_kernel: Option<usize>,
    perc_kernel: Option<usize>,
    mask_power: Option<f64>,
    if_source: Option<String>,
    if_eps: Option<f64>,
}

impl ConfigFile {
    fn apply(self, cfg: &mut HpssConfig) -> Result<()> {
        macro_rules! set {
            ($($field:ident => $($target:ident).+),* $(,)?) => {
                $(if let Some(v) = self.$field { cfg.$($target).+ = v; })*
            };
        }
        set!(
            win_len => win_len,
            hop => hop,
            kappa => kappa,
            lambda => solver.lambda,
            mu1 => solver.mu1,
            mu2 => solver.mu2,
            alpha => solver.alpha,
            n_iters => solver.n_iters,
            record_trace => solver.record_trace,
            harm_kernel => median.harm_kernel,
            perc_kernel => median.perc_kernel,
            mask_power => median.mask_power,
            if_eps => if_eps,
        );
        if let Some(src) = self.if_source {
            cfg.if_source = src.parse()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Separation {
    pub pair: SignalPair,
    pub trace: SolverTrace,
}

/// Builds the solver problem and its median-filter initialization.
pub fn prepare(
    x: &Signal,
    cfg: &HpssConfig,
    oracle_h: Option<&Signal>,
) -> Result<(HpssProblem, SignalPair)> {
    cfg.validate()?;
    let c = cfg.stft()?;
    let if_input = match (&cfg.if_source, oracle_h) {
        (IfSource::Mixture, _) => x,
        (IfSource::Oracle(_), Some(o)) => {
            if o.len() != x.len() || o.sample_rate() != x.sample_rate() {
                return Err(Error::shape(
                    format!("oracle of {} samples at {} Hz", x.len(), x.sample_rate()),
                    format!("{} samples at {} Hz", o.len(), o.sample_rate()),
                ));
            }
            o
        }
        (IfSource::Oracle(_), None) => {
            return Err(Error::param(
                "oracle_h",
                "oracle IF source needs a harmonic reference",
            ))
        }
    };
    let v = phase::estimate_if(if_input, &c, cfg.if_eps);
    let e = phase::build_correction(&v, &c);
    let mf = baseline::mf_estimate(x, &c, &cfg.median)?;
    let w = baseline::compute_weight(&mf.harmonic_spec, cfg.kappa)?;
    let problem = HpssProblem::new(x.clone(), c, e, w, cfg.solver)?;
    Ok((problem, mf.pair))
}

/// Phase-aware separation of `x` into harmonic and percussive signals that
/// sum exactly to `x`.
pub fn separate(x: &Signal, cfg: &HpssConfig, oracle_h: Option<&Signal>) -> Result<Separation> {
    let (problem, init) = prepare(x, cfg, oracle_h)?;
    let (pair, trace) = solver::run(&problem, &init)?;
    Ok(Separation { pair, trace })
}

/// Median-filter baseline with the same STFT and median settings.
pub fn separate_mf(x: &Signal, cfg: &HpssConfig) -> Result<SignalPair> {
    cfg.median.validate()?;
    baseline::mf_separate(x, &cfg.stft()?, &cfg.median)
}
