//! Image to indices to bits and back.

use super::link::{LinkSimulator, ModeOutcome};
use crate::codebook::Codebook;
use crate::codec::{Image, PatchCodec};
use crate::error::{Error, Result};
use crate::ofdm::{bits_to_indices, indices_to_bits, BitStream};
use rand::Rng;

/// Frozen transmitter side plus the codebooks shared with the receiver.
#[derive(Debug, Clone, Copy)]
pub struct SemanticPipeline<'a> {
    pub encoder: &'a PatchCodec,
    pub fine: &'a Codebook,
    pub coarse: &'a Codebook,
}

/// Indices of one image, fine stage first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexPayload {
    pub fine: Vec<usize>,
    pub coarse: Vec<usize>,
}

impl<'a> SemanticPipeline<'a> {
    pub fn encode_indices(&self, img: &Image) -> Result<IndexPayload> {
        let (mut f, mut c) = self.encoder.encode(img)?;
        f.assign(self.fine)?;
        c.assign(self.coarse)?;
        Ok(IndexPayload {
            fine: f.assigned_index,
            coarse: c.assigned_index,
        })
    }

    /// Fine indices then coarse indices, each at its codebook's width.
    pub fn to_bits(&self, p: &IndexPayload) -> Result<Vec<u8>> {
        let mut bits = indices_to_bits(&p.fine, self.fine.len())?.bits;
        bits.extend(indices_to_bits(&p.coarse, self.coarse.len())?.bits);
        Ok(bits)
    }

    pub fn bits_per_image(&self, height: usize, width: usize) -> usize {
        let (nf, nc) = self.encoder.latent_counts(height, width);
        nf * self.fine.bits_per_index() + nc * self.coarse.bits_per_index()
    }

    pub fn from_bits(&self, bits: &[u8], n_fine: usize) -> Result<IndexPayload> {
        let split = n_fine * self.fine.bits_per_index();
        if bits.len() < split || (bits.len() - split) % self.coarse.bits_per_index() != 0 {
            return Err(Error::DimensionMismatch(format!(
                "{} bits do not frame {n_fine} fine indices",
                bits.len()
            )));
        }
        let stream = |b: &[u8], width: usize| BitStream {
            bits: b.to_vec(),
            bits_per_index: width,
            padding: 0,
        };
        Ok(IndexPayload {
            fine: bits_to_indices(&stream(&bits[..split], self.fine.bits_per_index()), self.fine.len())?,
            coarse: bits_to_indices(&stream(&bits[split..], self.coarse.bits_per_index()), self.coarse.len())?,
        })
    }

    pub fn codewords(&self, p: &IndexPayload) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        (
            p.fine.iter().map(|&k| self.fine.entry(k).to_vec()).collect(),
            p.coarse.iter().map(|&k| self.coarse.entry(k).to_vec()).collect(),
        )
    }

    /// Quantize-reconstruct with no channel in between.
    pub fn local_reconstruct(&self, img: &Image, decoder: &PatchCodec) -> Result<Image> {
        let (f, c) = self.codewords(&self.encode_indices(img)?);
        decoder.decode(&f, &c, img.height, img.width)
    }
}

/// One image through the link, as seen by each CSI mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageTransmission {
    pub sent: IndexPayload,
    pub bits_sent: usize,
    pub received: Vec<(ModeOutcome, IndexPayload)>,
}

pub fn transmit_image<R: Rng + ?Sized, S: Rng + ?Sized>(
    pipe: &SemanticPipeline<'_>,
    link: &LinkSimulator<'_>,
    img: &Image,
    snr_db: f64,
    modes: &[super::CsiMode],
    channel_rng: &mut R,
    refine_rng: &mut S,
) -> Result<ImageTransmission> {
    let sent = pipe.encode_indices(img)?;
    let bits = pipe.to_bits(&sent)?;
    let received = link
        .transmit(&bits, snr_db, modes, channel_rng, refine_rng)?
        .into_iter()
        .map(|o| {
            let idx = pipe.from_bits(&o.bits, sent.fine.len())?;
            Ok((o, idx))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ImageTransmission {
        bits_sent: bits.len(),
        sent,
        received,
    })
}
