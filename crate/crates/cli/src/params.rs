use std::path::PathBuf;

use clap::{Args, ValueEnum};
use phase_hpss::{HpssConfig, IfSource};

use crate::error::CliResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    /// Phase-aware primal-dual separation.
    Prop,
    /// Median-filter baseline.
    Mf,
}

/// Algorithm parameters shared by the processing subcommands.
#[derive(Debug, Clone, Args)]
pub struct AlgoArgs {
    /// Weight of the percussive group-sparsity term.
    #[arg(long, default_value_t = 0.5)]
    pub lambda: f64,
    /// Harmonic weight floor relative to the pre-estimate's peak.
    #[arg(long, default_value_t = 0.001)]
    pub kappa: f64,
    /// Solver iterations (0 returns the median-filter initialization).
    #[arg(long, default_value_t = 100)]
    pub iters: usize,
    /// Primal step size.
    #[arg(long, default_value_t = 1.0)]
    pub mu1: f64,
    /// Dual step size.
    #[arg(long, default_value_t = 0.25)]
    pub mu2: f64,
    /// Relaxation parameter in (0, 2).
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    /// STFT window length in samples (even).
    #[arg(long = "win", default_value_t = 4096)]
    pub win_len: usize,
    /// STFT hop in samples (must divide the window length).
    #[arg(long, default_value_t = 1024)]
    pub hop: usize,
    /// TOML file whose keys override the flags above.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
}

impl AlgoArgs {
    /// Flags first, then the config file on top.
    pub fn to_config(&self, if_source: IfSource) -> CliResult<HpssConfig> {
        let mut cfg = HpssConfig {
            win_len: self.win_len,
            hop: self.hop,
            kappa: self.kappa,
            if_source,
            ..HpssConfig::default()
        };
        cfg.solver.lambda = self.lambda;
        cfg.solver.mu1 = self.mu1;
        cfg.solver.mu2 = self.mu2;
        cfg.solver.alpha = self.alpha;
        cfg.solver.n_iters = self.iters;
        if let Some(path) = &self.config {
            cfg.apply_config_file(path)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
