//! Latent dumps: u32 count, u32 dim, then count·dim little-endian f32.

use std::io::{Read, Write};

use crate::binio::{read_f32s, read_u32, write_f32s};
use crate::error::{Error, Result};

pub fn write_latents<W: Write>(mut w: W, latents: &[Vec<f64>]) -> Result<()> {
    let dim = latents.first().map_or(0, Vec::len);
    if latents.iter().any(|z| z.len() != dim) {
        return Err(Error::DimensionMismatch("ragged latent rows".into()));
    }
    w.write_all(&(latents.len() as u32).to_le_bytes())?;
    w.write_all(&(dim as u32).to_le_bytes())?;
    for z in latents {
        write_f32s(&mut w, z)?;
    }
    Ok(())
}

pub fn read_latents<R: Read>(mut r: R) -> Result<Vec<Vec<f64>>> {
    let count = read_u32(&mut r)? as usize;
    let dim = read_u32(&mut r)? as usize;
    (0..count).map(|_| read_f32s(&mut r, dim)).collect()
}
