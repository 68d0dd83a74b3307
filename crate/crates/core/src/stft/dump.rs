//! Binary dump of time-frequency matrices.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! magic    8 bytes  "HPSSDUMP"
//! kind     u32      0 = real payload, 1 = complex payload
//! K, T     u64 u64  bins, frames
//! L, a     u64 u64  window length, hop
//! payload  f64...   row-major over (bin, frame); complex entries as re, im
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;

use super::Spectrogram;
use crate::error::{Error, Result};
use crate::grid::RealGrid;

pub const MAGIC: &[u8; 8] = b"HPSSDUMP";
const HEADER_LEN: usize = 8 + 4 + 4 * 8;

#[derive(Debug, Clone, PartialEq)]
pub enum DumpPayload {
    Real(Vec<f64>),
    Complex(Vec<Complex64>),
}

/// Decoded dump; `payload` is row-major (bin outer, frame inner).
#[derive(Debug, Clone, PartialEq)]
pub struct Dump {
    pub n_bins: usize,
    pub n_frames: usize,
    pub win_len: usize,
    pub hop: usize,
    pub payload: DumpPayload,
}

fn header(kind: u32, k: usize, t: usize, l: usize, a: usize, payload_len: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + payload_len * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&kind.to_le_bytes());
    for v in [k, t, l, a] {
        out.extend_from_slice(&(v as u64).to_le_bytes());
    }
    out
}

pub fn encode_spectrogram(s: &Spectrogram) -> Vec<u8> {
    let lay = s.layout();
    let mut out = header(
        1,
        lay.n_bins,
        lay.n_frames,
        lay.win_len,
        lay.hop,
        2 * lay.n_bins * lay.n_frames,
    );
    for k in 0..lay.n_bins {
        for t in 0..lay.n_frames {
            let c = s.get(k, t);
            out.extend_from_slice(&c.re.to_le_bytes());
            out.extend_from_slice(&c.im.to_le_bytes());
        }
    }
    out
}

pub fn encode_real(g: &RealGrid, win_len: usize, hop: usize) -> Vec<u8> {
    let (k_n, t_n) = g.shape();
    let mut out = header(0, k_n, t_n, win_len, hop, k_n * t_n);
    for k in 0..k_n {
        for t in 0..t_n {
            out.extend_from_slice(&g.get(k, t).to_le_bytes());
        }
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<Dump> {
    if bytes.len() < HEADER_LEN || &bytes[..8] != MAGIC {
        return Err(Error::Format("missing HPSSDUMP header".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap()) as usize;
    let kind = u32_at(8);
    let (n_bins, n_frames, win_len, hop) = (u64_at(12), u64_at(20), u64_at(28), u64_at(36));
    let per_entry = match kind {
        0 => 1,
        1 => 2,
        other => return Err(Error::Format(format!("unknown payload kind {other}"))),
    };
    let expected = n_bins
        .checked_mul(n_frames)
        .and_then(|n| n.checked_mul(per_entry * 8))
        .ok_or_else(|| Error::Format("dimensions overflow".into()))?;
    let body = &bytes[HEADER_LEN..];
    if body.len() != expected {
        return Err(Error::Format(format!(
            "payload has {} bytes, header implies {expected}",
            body.len()
        )));
    }
    let floats: Vec<f64> = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let payload = if kind == 0 {
        DumpPayload::Real(floats)
    } else {
        DumpPayload::Complex(
            floats
                .chunks_exact(2)
                .map(|c| Complex64::new(c[0], c[1]))
                .collect(),
        )
    };
    Ok(Dump {
        n_bins,
        n_frames,
        win_len,
        hop,
        payload,
    })
}

pub fn write_file(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}

pub fn read_file(path: impl AsRef<Path>) -> Result<Dump> {
    let path = path.as_ref();
    decode(&fs::read(path).map_err(|e| Error::io(path, e))?)
}
