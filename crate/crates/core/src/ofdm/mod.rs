//! OFDM transmit/receive chain.
//!
//! Indices become fixed-width bit strings, bits become Gray-mapped 4-QAM
//! symbols, symbols fill the data cells of a pilot-bearing resource grid, and
//! each OFDM symbol is sent through a unitary IDFT with a cyclic prefix. The
//! receiver mirrors the chain after a tapped-delay multipath channel with
//! additive white Gaussian noise.

mod bits;
mod channel;
mod dataset;
mod equalize;
mod grid;
mod modem;
mod qam;

pub use bits::{bits_per_index, bits_to_indices, indices_to_bits, BitStream};
pub use channel::{
    apply_channel, apply_channel_detailed, sample_epa_channel, sample_tdl_channel,
    ChannelOutput, ChannelRealization, EPA_DELAYS_NS, EPA_POWERS_DB,
};
pub use dataset::{read_channel_dataset, write_channel_dataset, ChannelDataset, RoughRecord};
pub use equalize::{zf_equalize, DEFAULT_EQ_FLOOR};
pub use grid::{build_grid, pilot_symbols, PrbGrid};
pub use modem::OfdmModem;
pub use qam::{qam4_demodulate, qam4_modulate};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = num_complex::Complex64;

/// Subcarrier spacing used to turn path delays into sample offsets.
pub const SUBCARRIER_SPACING_HZ: f64 = 15e3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OfdmConfig {
    pub n_subcarriers: usize,
    pub n_symbols: usize,
    pub cp_len: usize,
    pub pilot_freq_interval: usize,
    pub pilot_time_interval: usize,
    pub qam_order: usize,
    pub pilot_seed: u64,
}

impl Default for OfdmConfig {
    fn default() -> Self {
        Self {
            n_subcarriers: 1024,
            n_symbols: 14,
            cp_len: 256,
            pilot_freq_interval: 9,
            pilot_time_interval: 5,
            qam_order: 4,
            pilot_seed: 0x5eed,
        }
    }
}

impl OfdmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_subcarriers == 0 || self.n_symbols == 0 {
            return Err(Error::InvalidArgument("empty OFDM grid".into()));
        }
        if self.cp_len >= self.n_subcarriers {
            return Err(Error::InvalidArgument(format!(
                "cp_len {} must be below n_subcarriers {}",
                self.cp_len, self.n_subcarriers
            )));
        }
        if self.pilot_freq_interval == 0 || self.pilot_time_interval == 0 {
            return Err(Error::InvalidArgument("pilot intervals must be >= 1".into()));
        }
        if self.qam_order != 4 {
            return Err(Error::InvalidArgument(format!(
                "only 4-QAM is supported, got {}",
                self.qam_order
            )));
        }
        Ok(())
    }

    /// Pilot-bearing subcarrier indices `{0, Δf, 2Δf, …}`.
    pub fn pilot_subcarriers(&self) -> Vec<usize> {
        (0..self.n_subcarriers)
            .step_by(self.pilot_freq_interval)
            .collect()
    }

    /// Pilot-bearing symbol indices `{0, Δt, 2Δt, …}`.
    pub fn pilot_symbols(&self) -> Vec<usize> {
        (0..self.n_symbols).step_by(self.pilot_time_interval).collect()
    }

    pub fn n_pilots(&self) -> usize {
        self.pilot_subcarriers().len() * self.pilot_symbols().len()
    }

    pub fn n_cells(&self) -> usize {
        self.n_subcarriers * self.n_symbols
    }

    pub fn data_capacity(&self) -> usize {
        self.n_cells() - self.n_pilots()
    }

    /// Time-domain samples per PRB including cyclic prefixes.
    pub fn samples_per_prb(&self) -> usize {
        self.n_symbols * (self.n_subcarriers + self.cp_len)
    }

    pub fn sample_rate_hz(&self) -> f64 {
        SUBCARRIER_SPACING_HZ * self.n_subcarriers as f64
    }

    /// Bits carried by one fully loaded PRB.
    pub fn bits_per_prb(&self) -> usize {
        2 * self.data_capacity()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_counts_for_default_grid() {
        let cfg = OfdmConfig::default();
        assert_eq!(cfg.pilot_subcarriers().len(), 114);
        assert_eq!(cfg.pilot_symbols(), vec![0, 5, 10]);
        assert_eq!(cfg.n_pilots(), 342);
        assert_eq!(cfg.data_capacity(), 13994);
        assert_eq!(cfg.samples_per_prb(), 17920);
        assert_eq!(cfg.sample_rate_hz(), 15.36e6);
    }

    #[test]
    fn validation() {
        let mut cfg = OfdmConfig::default();
        cfg.cp_len = 1024;
        assert!(cfg.validate().is_err());
        let mut cfg = OfdmConfig::default();
        cfg.qam_order = 16;
        assert!(cfg.validate().is_err());
        let mut cfg = OfdmConfig::default();
        cfg.pilot_time_interval = 0;
        assert!(cfg.validate().is_err());
    }
}
