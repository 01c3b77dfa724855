//! `SPC1` codec files: magic, u32 fine patch, u32 fine and coarse latent
//! dims, u32 channels, then for the fine and the coarse stage: mean (P),
//! basis (N×P), explained variance (N), decoder weight (N×P) and decoder
//! bias (P), all little-endian f64, matrices row-major.

use std::io::{Read, Write};

use nalgebra::DMatrix;

use super::{CodecConfig, PatchCodec, Stage};
use crate::binio::{read_f64s, read_magic, read_u32, write_f64s};
use crate::error::Result;

const MAGIC: &[u8; 4] = b"SPC1";

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    m.transpose().iter().copied().collect()
}

fn write_stage<W: Write>(w: &mut W, s: &Stage) -> Result<()> {
    write_f64s(w, &s.mean)?;
    write_f64s(w, &row_major(&s.basis))?;
    write_f64s(w, &s.explained)?;
    write_f64s(w, &row_major(&s.dec_weight))?;
    write_f64s(w, &s.dec_bias)
}

fn read_stage<R: Read>(r: &mut R, patch: usize, channels: usize, n: usize) -> Result<Stage> {
    let p = patch * patch * channels;
    let mean = read_f64s(r, p)?;
    let basis = DMatrix::from_row_slice(n, p, &read_f64s(r, n * p)?);
    let explained = read_f64s(r, n)?;
    let dec_weight = DMatrix::from_row_slice(n, p, &read_f64s(r, n * p)?);
    let dec_bias = read_f64s(r, p)?;
    Ok(Stage {
        patch,
        channels,
        mean,
        basis,
        explained,
        dec_weight,
        dec_bias,
    })
}

pub fn write_codec<W: Write>(mut w: W, codec: &PatchCodec) -> Result<()> {
    let c = &codec.config;
    w.write_all(MAGIC)?;
    for v in [c.fine_patch, c.latent_dim_fine, c.latent_dim_coarse, codec.channels] {
        w.write_all(&(v as u32).to_le_bytes())?;
    }
    write_stage(&mut w, &codec.fine)?;
    write_stage(&mut w, &codec.coarse)
}

pub fn read_codec<R: Read>(mut r: R) -> Result<PatchCodec> {
    read_magic(&mut r, MAGIC)?;
    let config = CodecConfig {
        fine_patch: read_u32(&mut r)? as usize,
        latent_dim_fine: read_u32(&mut r)? as usize,
        latent_dim_coarse: read_u32(&mut r)? as usize,
    };
    let channels = read_u32(&mut r)? as usize;
    config.validate(channels)?;
    let fine = read_stage(&mut r, config.fine_patch, channels, config.latent_dim_fine)?;
    let coarse = read_stage(&mut r, config.coarse_patch(), channels, config.latent_dim_coarse)?;
    Ok(PatchCodec {
        config,
        channels,
        fine,
        coarse,
    })
}
