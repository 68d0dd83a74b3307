use std::path::PathBuf;

use phase_hpss::phase::{estimate_if, DEFAULT_IF_EPS};
use phase_hpss::stft::{self, dump};
use phase_hpss::{read_wav, StftConfig};

use crate::error::{CliError, CliResult};

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Input WAV file.
    pub input: PathBuf,
    /// Destination of the complex spectrogram dump.
    #[arg(long, value_name = "PATH")]
    pub spec_out: Option<PathBuf>,
    /// Destination of the instantaneous-frequency map dump (in bins).
    #[arg(long, value_name = "PATH")]
    pub if_out: Option<PathBuf>,
    /// STFT window length in samples.
    #[arg(long = "win", default_value_t = 4096)]
    pub win_len: usize,
    /// STFT hop in samples.
    #[arg(long, default_value_t = 1024)]
    pub hop: usize,
    /// Relative magnitude below which bins keep their nominal frequency.
    #[arg(long, default_value_t = DEFAULT_IF_EPS)]
    pub if_eps: f64,
}

pub fn run(args: Args) -> CliResult<()> {
    if args.spec_out.is_none() && args.if_out.is_none() {
        return Err(CliError::Usage(
            "nothing to do: pass --spec-out and/or --if-out".into(),
        ));
    }
    let c = StftConfig::hann(args.win_len, args.hop)?;
    let x = read_wav(&args.input)?;
    if let Some(path) = &args.spec_out {
        let s = stft::forward(&x, &c);
        dump::write_file(path, &dump::encode_spectrogram(&s))?;
    }
    if let Some(path) = &args.if_out {
        let v = estimate_if(&x, &c, args.if_eps);
        dump::write_file(path, &dump::encode_real(v.grid(), c.win_len(), c.hop()))?;
    }
    Ok(())
}
