//! Phase-aware harmonic/percussive source separation.
//!
//! A mixture `x` is split into `x_h + x_p = x` by minimizing
//! `½‖W ⊙ D_τ(E ⊙ F(x_h))‖² + λ‖F(x_p)‖₂,₁`, where `F` is a tight STFT, `E`
//! removes the phase advance predicted by per-bin instantaneous frequencies,
//! `D_τ` differences along time and `W` relaxes the penalty where a
//! median-filter pre-estimate finds strong harmonics. The problem is solved
//! by primal-dual splitting in the time domain, so amplitude and phase of
//! both components are estimated together.
//!
//! Modules follow the pipeline: [`stft`] → [`phase`] → [`baseline`] →
//! [`solver`] (with [`prox`]) → [`hpss`]; [`metrics`] scores results and
//! [`synth`] builds test material.

pub mod audio_io;
pub mod baseline;
pub mod error;
pub mod grid;
pub mod hpss;
pub mod metrics;
pub mod par;
pub mod phase;
pub mod prox;
pub mod solver;
pub mod stft;
pub mod synth;

pub use audio_io::{read_wav, write_wav, BitDepth, Signal};
pub use error::{Error, Result};
pub use grid::RealGrid;
pub use hpss::{separate, separate_mf, HpssConfig, IfSource, Separation};
pub use prox::SignalPair;
pub use solver::{HpssProblem, SolverParams, SolverTrace};
pub use stft::{Spectrogram, StftConfig};
