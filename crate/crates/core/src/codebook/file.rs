//! `SQC1` codebook files: magic, u32 K, u32 N, then K·N entries, K EMA
//! counts and K·N EMA sums as little-endian f32, row-major.

use std::io::{Read, Write};

use super::Codebook;
use crate::error::{Error, Result};
use crate::binio::{read_f32s, read_magic, read_u32, write_f32s};

const MAGIC: &[u8; 4] = b"SQC1";

pub fn write_codebook<W: Write>(mut w: W, cb: &Codebook) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&(cb.len() as u32).to_le_bytes())?;
    w.write_all(&(cb.dim() as u32).to_le_bytes())?;
    write_f32s(&mut w, cb.entries())?;
    write_f32s(&mut w, cb.ema_count())?;
    write_f32s(&mut w, cb.ema_sum())?;
    Ok(())
}

/// Reads a codebook; decay and eps are not part of the file.
pub fn read_codebook<R: Read>(mut r: R, decay: f64, eps: f64) -> Result<Codebook> {
    read_magic(&mut r, MAGIC)?;
    let k = read_u32(&mut r)? as usize;
    let n = read_u32(&mut r)? as usize;
    if k == 0 || n == 0 {
        return Err(Error::Format("codebook header declares zero size".into()));
    }
    let entries = read_f32s(&mut r, k * n)?;
    let count = read_f32s(&mut r, k)?;
    let sum = read_f32s(&mut r, k * n)?;
    Codebook::with_stats(k, n, entries, count, sum, decay, eps)
}
