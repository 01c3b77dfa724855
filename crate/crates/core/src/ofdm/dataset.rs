//! `CHD1` channel dataset files.
//!
//! Layout: magic, u32 count, u32 N_f, then per record u16 L, L×(u16 delay,
//! f32 re, f32 im) and N_f×(f32 re, f32 im) frequency response. An optional
//! `CHR1` trailer pairs records with rough estimates: u32 count, u32 N_f,
//! u32 N_t, then per record f32 SNR in dB and N_f·N_t×(f32 re, f32 im) in
//! symbol-major order. Readers that stop after the records ignore it.

use std::io::{ErrorKind, Read, Write};

use super::{ChannelRealization, C64};
use crate::binio::{read_f32, read_f32s, read_magic, read_u16, read_u32, write_f32s};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"CHD1";
const ROUGH_MAGIC: &[u8; 4] = b"CHR1";

/// Rough full-grid estimate observed for one record.
#[derive(Debug, Clone, PartialEq)]
pub struct RoughRecord {
    pub snr_db: f64,
    /// `cells[t * n_f + k]`.
    pub cells: Vec<C64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ChannelDataset {
    pub n_subcarriers: usize,
    pub n_symbols: usize,
    pub channels: Vec<ChannelRealization>,
    /// Empty, or one entry per channel.
    pub rough: Vec<RoughRecord>,
}

impl ChannelDataset {
    pub fn new(n_subcarriers: usize, n_symbols: usize) -> Self {
        Self {
            n_subcarriers,
            n_symbols,
            channels: Vec::new(),
            rough: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    pub fn push(&mut self, ch: ChannelRealization, rough: Option<RoughRecord>) {
        self.channels.push(ch);
        if let Some(r) = rough {
            self.rough.push(r);
        }
    }

    /// True grid of record `i`, constant across symbols under block fading.
    pub fn true_grid(&self, i: usize) -> Vec<C64> {
        let h = &self.channels[i].freq_response;
        (0..self.n_symbols).flat_map(|_| h.iter().copied()).collect()
    }

    fn validate(&self) -> Result<()> {
        if !self.rough.is_empty() && self.rough.len() != self.channels.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} rough records for {} channels",
                self.rough.len(),
                self.channels.len()
            )));
        }
        let grid = self.n_subcarriers * self.n_symbols;
        for ch in &self.channels {
            if ch.freq_response.len() != self.n_subcarriers {
                return Err(Error::DimensionMismatch("frequency response length".into()));
            }
            if ch.taps.len() > u16::MAX as usize
                || ch.tap_delays_samples.iter().any(|&d| d > u16::MAX as usize)
            {
                return Err(Error::InvalidArgument("tap table exceeds u16 range".into()));
            }
        }
        if self.rough.iter().any(|r| r.cells.len() != grid) {
            return Err(Error::DimensionMismatch("rough grid size".into()));
        }
        Ok(())
    }
}

fn interleave(values: &[C64]) -> Vec<f64> {
    values.iter().flat_map(|c| [c.re, c.im]).collect()
}

fn deinterleave(values: &[f64]) -> Vec<C64> {
    values.chunks_exact(2).map(|p| C64::new(p[0], p[1])).collect()
}

pub fn write_channel_dataset<W: Write>(mut w: W, ds: &ChannelDataset) -> Result<()> {
    ds.validate()?;
    w.write_all(MAGIC)?;
    w.write_all(&(ds.channels.len() as u32).to_le_bytes())?;
    w.write_all(&(ds.n_subcarriers as u32).to_le_bytes())?;
    for ch in &ds.channels {
        w.write_all(&(ch.taps.len() as u16).to_le_bytes())?;
        for (h, &d) in ch.taps.iter().zip(&ch.tap_delays_samples) {
            w.write_all(&(d as u16).to_le_bytes())?;
            write_f32s(&mut w, &[h.re, h.im])?;
        }
        write_f32s(&mut w, &interleave(&ch.freq_response))?;
    }
    if !ds.rough.is_empty() {
        w.write_all(ROUGH_MAGIC)?;
        w.write_all(&(ds.rough.len() as u32).to_le_bytes())?;
        w.write_all(&(ds.n_subcarriers as u32).to_le_bytes())?;
        w.write_all(&(ds.n_symbols as u32).to_le_bytes())?;
        for r in &ds.rough {
            write_f32s(&mut w, &[r.snr_db])?;
            write_f32s(&mut w, &interleave(&r.cells))?;
        }
    }
    Ok(())
}

/// Reads a dataset. Without a trailer, `n_symbols` is zero and `rough` empty.
pub fn read_channel_dataset<R: Read>(mut r: R) -> Result<ChannelDataset> {
    read_magic(&mut r, MAGIC)?;
    let count = read_u32(&mut r)? as usize;
    let n_f = read_u32(&mut r)? as usize;
    let mut ds = ChannelDataset::new(n_f, 0);
    for _ in 0..count {
        let l = read_u16(&mut r)? as usize;
        let mut taps = Vec::with_capacity(l);
        let mut delays = Vec::with_capacity(l);
        for _ in 0..l {
            delays.push(read_u16(&mut r)? as usize);
            let re = read_f32(&mut r)?;
            let im = read_f32(&mut r)?;
            taps.push(C64::new(re, im));
        }
        let freq_response = deinterleave(&read_f32s(&mut r, 2 * n_f)?);
        let power_profile_db = taps.iter().map(|h| 10.0 * h.norm_sqr().log10()).collect();
        ds.channels.push(ChannelRealization {
            taps,
            tap_delays_samples: delays,
            freq_response,
            power_profile_db,
        });
    }
    let mut magic = [0u8; 4];
    match r.read_exact(&mut magic) {
        Err(e) if e.kind() == ErrorKind::UnexpectedEof => return Ok(ds),
        Err(e) => return Err(e.into()),
        Ok(()) if &magic != ROUGH_MAGIC => {
            return Err(Error::Format("unknown trailer after channel records".into()))
        }
        Ok(()) => {}
    }
    let rough_count = read_u32(&mut r)? as usize;
    let rough_nf = read_u32(&mut r)? as usize;
    let n_t = read_u32(&mut r)? as usize;
    if rough_count != count || rough_nf != n_f {
        return Err(Error::Format("rough trailer does not match channel records".into()));
    }
    ds.n_symbols = n_t;
    for _ in 0..rough_count {
        let snr_db = read_f32(&mut r)?;
        let cells = deinterleave(&read_f32s(&mut r, 2 * n_f * n_t)?);
        ds.rough.push(RoughRecord { snr_db, cells });
    }
    Ok(ds)
}
