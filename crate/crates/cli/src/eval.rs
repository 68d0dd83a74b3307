use std::io::Write;
use std::path::{Path, PathBuf};

use phase_hpss::metrics::{evaluate_pair, EvalResult, DEFAULT_FILTER_LEN};
use phase_hpss::read_wav;
use rayon::prelude::*;

use crate::error::{io_error, CliError, CliResult};

/// Header of every metrics table written by the tool.
pub const HEADER: [&str; 11] = [
    "track", "method", "SDR_h", "SIR_h", "SAR_h", "SDR_p", "SIR_p", "SAR_p", "SDR_avg", "SIR_avg",
    "SAR_avg",
];

#[derive(Debug, clap::Args)]
#[command(group(clap::ArgGroup::new("mode").required(true).args(["manifest", "ref_h"])))]
pub struct Args {
    /// Harmonic reference WAV.
    #[arg(long, requires_all = ["ref_p", "est_h", "est_p"])]
    pub ref_h: Option<PathBuf>,
    /// Percussive reference WAV.
    #[arg(long)]
    pub ref_p: Option<PathBuf>,
    /// Harmonic estimate WAV.
    #[arg(long)]
    pub est_h: Option<PathBuf>,
    /// Percussive estimate WAV.
    #[arg(long)]
    pub est_p: Option<PathBuf>,
    /// Track label for the single-track row.
    #[arg(long, default_value = "track")]
    pub track: String,
    /// Method label for the single-track row.
    #[arg(long, default_value = "est")]
    pub method: String,
    /// CSV manifest with columns track,method,ref_h,ref_p,est_h,est_p; relative
    /// paths are resolved against the manifest's directory. A mean row per
    /// method is appended.
    #[arg(long, value_name = "PATH", conflicts_with = "ref_h")]
    pub manifest: Option<PathBuf>,
    /// Distortion filter length in taps.
    #[arg(long, default_value_t = DEFAULT_FILTER_LEN)]
    pub filter_len: usize,
    /// Write the table here instead of standard output.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

/// One manifest line: labels plus `[ref_h, ref_p, est_h, est_p]`.
#[derive(Debug, Clone)]
struct ManifestRow {
    track: String,
    method: String,
    paths: [PathBuf; 4],
}

pub fn run(args: Args) -> CliResult<()> {
    let rows = match &args.manifest {
        Some(path) => read_manifest(path)?,
        None => vec![ManifestRow {
            track: args.track.clone(),
            method: args.method.clone(),
            paths: [
                args.ref_h.clone().expect("required by clap"),
                args.ref_p.clone().expect("required by clap"),
                args.est_h.clone().expect("required by clap"),
                args.est_p.clone().expect("required by clap"),
            ],
        }],
    };
    let results = rows
        .par_iter()
        .map(|row| score(row, args.filter_len))
        .collect::<CliResult<Vec<_>>>()?;

    let mut table: Vec<(String, String, EvalResult)> = rows
        .iter()
        .zip(results)
        .map(|(r, e)| (r.track.clone(), r.method.clone(), e))
        .collect();
    if args.manifest.is_some() {
        table.extend(mean_rows(&table));
    }
    write_table(args.out.as_deref(), &table)
}

fn score(row: &ManifestRow, filter_len: usize) -> CliResult<EvalResult> {
    let [rh, rp, eh, ep] = &row.paths;
    let (rh, rp, eh, ep) = (read_wav(rh)?, read_wav(rp)?, read_wav(eh)?, read_wav(ep)?);
    if [&rp, &eh, &ep]
        .iter()
        .any(|s| s.sample_rate() != rh.sample_rate())
    {
        return Err(CliError::Usage(format!(
            "track {}: sample rates of references and estimates differ",
            row.track
        )));
    }
    evaluate_pair(&rh, &rp, &eh, &ep, filter_len)
        .map_err(|e| CliError::Usage(format!("track {}: {e}", row.track)))
}

fn read_manifest(path: &Path) -> CliResult<Vec<ManifestRow>> {
    let base = path.parent().unwrap_or(Path::new("."));
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Usage(format!("manifest lacks a `{name}` column")))
    };
    let idx = [
        col("track")?,
        col("ref_h")?,
        col("ref_p")?,
        col("est_h")?,
        col("est_p")?,
    ];
    let method_col = headers.iter().position(|h| h == "method");
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let resolve = |i: usize| base.join(&rec[i]);
        rows.push(ManifestRow {
            track: rec[idx[0]].to_string(),
            method: method_col.map_or_else(|| "est".to_string(), |i| rec[i].to_string()),
            paths: [
                resolve(idx[1]),
                resolve(idx[2]),
                resolve(idx[3]),
                resolve(idx[4]),
            ],
        });
    }
    if rows.is_empty() {
        return Err(CliError::Usage(format!(
            "manifest {} has no rows",
            path.display()
        )));
    }
    Ok(rows)
}

/// Arithmetic mean per method, in order of first appearance.
pub fn mean_rows(table: &[(String, String, EvalResult)]) -> Vec<(String, String, EvalResult)> {
    let mut methods: Vec<&str> = Vec::new();
    for (_, m, _) in table {
        if !methods.contains(&m.as_str()) {
            methods.push(m);
        }
    }
    methods
        .into_iter()
        .map(|m| {
            let rows: Vec<&EvalResult> = table.iter().filter(|r| r.1 == m).map(|r| &r.2).collect();
            let n = rows.len() as f64;
            let avg = |f: fn(&EvalResult) -> f64| rows.iter().map(|r| f(r)).sum::<f64>() / n;
            let mut mean = *rows[0];
            mean.harmonic.sdr = avg(|r| r.harmonic.sdr);
            mean.harmonic.sir = avg(|r| r.harmonic.sir);
            mean.harmonic.sar = avg(|r| r.harmonic.sar);
            mean.percussive.sdr = avg(|r| r.percussive.sdr);
            mean.percussive.sir = avg(|r| r.percussive.sir);
            mean.percussive.sar = avg(|r| r.percussive.sar);
            ("mean".to_string(), m.to_string(), mean)
        })
        .collect()
}

pub fn write_table(out: Option<&Path>, table: &[(String, String, EvalResult)]) -> CliResult<()> {
    let sink: Box<dyn Write> = match out {
        Some(p) => Box::new(std::fs::File::create(p).map_err(|e| io_error(p, e))?),
        None => Box::new(std::io::stdout().lock()),
    };
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(HEADER)?;
    for (track, method, e) in table {
        let mut rec = vec![track.clone(), method.clone()];
        rec.extend(e.to_row().iter().map(|v| format!("{v:.4}")));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| CliError::Io(e.to_string()))?;
    Ok(())
}
