use crate::error::{Error, Result};

/// Fixed-width big-endian bit string of codeword indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitStream {
    pub bits: Vec<u8>,
    pub bits_per_index: usize,
    /// Trailing zero bits appended for framing; stripped on decode.
    pub padding: usize,
}

impl BitStream {
    /// Payload length without padding.
    pub fn payload_len(&self) -> usize {
        self.bits.len() - self.padding
    }

    /// Pads with zeros up to a multiple of `multiple` bits.
    pub fn pad_to_multiple(&mut self, multiple: usize) {
        let rem = self.bits.len() % multiple;
        if rem != 0 {
            let extra = multiple - rem;
            self.bits.extend(std::iter::repeat_n(0, extra));
            self.padding += extra;
        }
    }
}

/// `ceil(log2 K)`, at least one bit.
pub fn bits_per_index(codebook_len: usize) -> usize {
    if codebook_len <= 2 {
        1
    } else {
        (usize::BITS - (codebook_len - 1).leading_zeros()) as usize
    }
}

pub fn indices_to_bits(indices: &[usize], codebook_len: usize) -> Result<BitStream> {
    let width = bits_per_index(codebook_len);
    let mut bits = Vec::with_capacity(indices.len() * width);
    for &idx in indices {
        if idx >= codebook_len {
            return Err(Error::InvalidArgument(format!(
                "index {idx} outside codebook of {codebook_len}"
            )));
        }
        for b in (0..width).rev() {
            bits.push(((idx >> b) & 1) as u8);
        }
    }
    Ok(BitStream {
        bits,
        bits_per_index: width,
        padding: 0,
    })
}

/// Inverse of [`indices_to_bits`]. Received words that decode past the end
/// of a non-power-of-two codebook are clamped to the last entry.
pub fn bits_to_indices(stream: &BitStream, codebook_len: usize) -> Result<Vec<usize>> {
    let width = bits_per_index(codebook_len);
    if stream.bits_per_index != width {
        return Err(Error::InvalidArgument(format!(
            "stream width {} does not match codebook width {width}",
            stream.bits_per_index
        )));
    }
    let payload = &stream.bits[..stream.payload_len()];
    if payload.len() % width != 0 {
        return Err(Error::InvalidArgument(format!(
            "{} payload bits is not a multiple of {width}",
            payload.len()
        )));
    }
    Ok(payload
        .chunks_exact(width)
        .map(|w| {
            let v = w.iter().fold(0usize, |acc, &b| (acc << 1) | (b & 1) as usize);
            v.min(codebook_len - 1)
        })
        .collect())
}
