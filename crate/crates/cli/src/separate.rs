use std::fs;
use std::path::PathBuf;

use clap::ValueEnum;
use log::info;
use phase_hpss::{read_wav, separate, separate_mf, write_wav, BitDepth, IfSource};

use crate::error::{io_error, CliResult};
use crate::params::{AlgoArgs, Method};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Depth {
    #[value(name = "16")]
    Pcm16,
    #[value(name = "24")]
    Pcm24,
    #[value(name = "f32")]
    Float32,
}

impl From<Depth> for BitDepth {
    fn from(d: Depth) -> Self {
        match d {
            Depth::Pcm16 => BitDepth::Pcm16,
            Depth::Pcm24 => BitDepth::Pcm24,
            Depth::Float32 => BitDepth::Float32,
        }
    }
}

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Input WAV file (multichannel input is downmixed to mono).
    pub input: PathBuf,
    /// Output path of the harmonic component.
    #[arg(long, default_value = "harmonic.wav")]
    pub out_h: PathBuf,
    /// Output path of the percussive component.
    #[arg(long, default_value = "percussive.wav")]
    pub out_p: PathBuf,
    /// Separation method.
    #[arg(long, value_enum, default_value_t = Method::Prop)]
    pub method: Method,
    /// Source of the instantaneous frequencies: `mix`, or `oracle:PATH` to use
    /// a reference harmonic WAV.
    #[arg(long, default_value = "mix")]
    pub if_source: IfSource,
    /// Sample format of the output files.
    #[arg(long, value_enum, default_value_t = Depth::Float32)]
    pub bit_depth: Depth,
    /// Write the per-iteration objective trace as CSV.
    #[arg(long, value_name = "PATH")]
    pub trace: Option<PathBuf>,
    #[command(flatten)]
    pub algo: AlgoArgs,
}

pub fn run(args: Args) -> CliResult<()> {
    let cfg = args.algo.to_config(args.if_source.clone())?;
    let x = read_wav(&args.input)?;
    info!(
        "{}: {} samples at {} Hz",
        args.input.display(),
        x.len(),
        x.sample_rate()
    );

    let (pair, trace) = match args.method {
        Method::Mf => (separate_mf(&x, &cfg)?, None),
        Method::Prop => {
            let oracle = match &cfg.if_source {
                IfSource::Oracle(path) => Some(read_wav(path)?),
                IfSource::Mixture => None,
            };
            let sep = separate(&x, &cfg, oracle.as_ref())?;
            (sep.pair, Some(sep.trace))
        }
    };

    let depth = BitDepth::from(args.bit_depth);
    write_wav(&args.out_h, &pair.harmonic, depth)?;
    write_wav(&args.out_p, &pair.percussive, depth)?;
    if let Some(path) = &args.trace {
        let csv = trace
            .map(|t| t.to_csv())
            .unwrap_or_else(|| phase_hpss::SolverTrace::default().to_csv());
        fs::write(path, csv).map_err(|e| io_error(path, e))?;
    }
    Ok(())
}
