use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use log::info;
use phase_hpss::metrics::{evaluate_pair, EvalResult, DEFAULT_FILTER_LEN};
use phase_hpss::synth::{self, SynthTrack};
use phase_hpss::{separate, separate_mf, IfSource, SolverTrace};
use rayon::prelude::*;

use crate::error::{io_error, CliResult};
use crate::eval::{mean_rows, write_table};
use crate::params::AlgoArgs;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Corpus seed; the same seed reproduces identical output files.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Number of synthetic mixtures.
    #[arg(long, default_value_t = 10)]
    pub tracks: usize,
    /// Duration of each mixture in seconds.
    #[arg(long, default_value_t = 3.0)]
    pub seconds: f64,
    /// Sample rate of the corpus in Hz.
    #[arg(long, default_value_t = 44_100)]
    pub sample_rate: u32,
    /// Distortion filter length in taps.
    #[arg(long, default_value_t = DEFAULT_FILTER_LEN)]
    pub filter_len: usize,
    /// Write the comparison table here instead of standard output.
    #[arg(long, value_name = "PATH")]
    pub table: Option<PathBuf>,
    /// Write per-iteration objective traces (both proposed variants) as CSV.
    #[arg(long, value_name = "PATH")]
    pub trace: Option<PathBuf>,
    #[command(flatten)]
    pub algo: AlgoArgs,
}

const METHODS: [&str; 3] = ["prop-mix", "prop-ora", "mf"];

struct TrackResult {
    scores: Vec<(&'static str, EvalResult)>,
    traces: Vec<(&'static str, SolverTrace)>,
}

pub fn run(args: Args) -> CliResult<()> {
    if !(args.seconds > 0.0 && args.seconds.is_finite()) || args.tracks == 0 {
        return Err(crate::error::CliError::Usage(
            "--tracks and --seconds must be positive".into(),
        ));
    }
    let mix_cfg = args.algo.to_config(IfSource::Mixture)?;
    let ora_cfg = phase_hpss::HpssConfig {
        if_source: IfSource::Oracle("reference".into()),
        ..mix_cfg.clone()
    };
    let len = (args.seconds * f64::from(args.sample_rate)).round() as usize;
    let corpus = synth::corpus(args.seed, args.tracks, args.sample_rate, len);

    let results = corpus
        .par_iter()
        .map(|tr| -> CliResult<TrackResult> {
            info!("bench: {}", tr.name);
            let score = |pair: &phase_hpss::SignalPair| score(tr, pair, args.filter_len);
            let mix = separate(&tr.mixture, &mix_cfg, None)?;
            let ora = separate(&tr.mixture, &ora_cfg, Some(&tr.harmonic))?;
            let mf = separate_mf(&tr.mixture, &mix_cfg)?;
            Ok(TrackResult {
                scores: vec![
                    (METHODS[0], score(&mix.pair)?),
                    (METHODS[1], score(&ora.pair)?),
                    (METHODS[2], score(&mf)?),
                ],
                traces: vec![(METHODS[0], mix.trace), (METHODS[1], ora.trace)],
            })
        })
        .collect::<CliResult<Vec<_>>>()?;

    let mut table = Vec::new();
    for (tr, r) in corpus.iter().zip(&results) {
        for (m, e) in &r.scores {
            table.push((tr.name.clone(), m.to_string(), *e));
        }
    }
    table.extend(mean_rows(&table));
    write_table(args.table.as_deref(), &table)?;

    if let Some(path) = &args.trace {
        let mut csv =
            String::from("track,method,iteration,total,smooth_term,sparse_term,primal_increment\n");
        for (tr, r) in corpus.iter().zip(&results) {
            for (m, trace) in &r.traces {
                for row in &trace.rows {
                    let _ = writeln!(
                        csv,
                        "{},{m},{},{:e},{:e},{:e},{:e}",
                        tr.name,
                        row.iteration,
                        row.total,
                        row.smooth_term,
                        row.sparse_term,
                        row.primal_increment
                    );
                }
            }
        }
        fs::write(path, csv).map_err(|e| io_error(path, e))?;
    }
    Ok(())
}

fn score(
    tr: &SynthTrack,
    pair: &phase_hpss::SignalPair,
    filter_len: usize,
) -> CliResult<EvalResult> {
    Ok(evaluate_pair(
        &tr.harmonic,
        &tr.percussive,
        &pair.harmonic,
        &pair.percussive,
        filter_len,
    )?)
}
