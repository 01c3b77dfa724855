//! Bit transport over the OFDM link with a selectable channel estimate.

use rand::Rng;

use super::CsiMode;
use crate::cdm::{reverse_sample, Denoiser, NoiseSchedule};
use crate::chanest::{nmse, rough_estimate, CsiGrid};
use crate::error::{Error, Result};
use crate::ofdm::{
    apply_channel, build_grid, qam4_demodulate, qam4_modulate, sample_epa_channel, zf_equalize,
    ChannelRealization, OfdmConfig, OfdmModem, PrbGrid, DEFAULT_EQ_FLOOR,
};

/// Diffusion refinement of the rough estimate.
#[derive(Debug, Clone, Copy)]
pub struct Refiner<'a> {
    pub schedule: &'a NoiseSchedule,
    pub denoiser: &'a Denoiser,
    pub steps: usize,
}

/// What one CSI mode made of a transmission.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeOutcome {
    pub mode: CsiMode,
    /// Detected payload bits, same length as the input.
    pub bits: Vec<u8>,
    pub bit_errors: usize,
    /// Mean NMSE of the estimate over the PRBs used.
    pub nmse: f64,
}

/// One received PRB with its channel and the estimates available to the
/// receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedPrb {
    pub grid: PrbGrid,
    pub channel: ChannelRealization,
    pub truth: CsiGrid,
    pub rough: CsiGrid,
}

pub struct LinkSimulator<'a> {
    cfg: OfdmConfig,
    modem: OfdmModem,
    refiner: Option<Refiner<'a>>,
}

impl<'a> LinkSimulator<'a> {
    pub fn new(cfg: &OfdmConfig, refiner: Option<Refiner<'a>>) -> Result<Self> {
        Ok(Self {
            cfg: cfg.clone(),
            modem: OfdmModem::new(cfg)?,
            refiner,
        })
    }

    pub fn config(&self) -> &OfdmConfig {
        &self.cfg
    }

    /// Sends `bits` over as many PRBs as needed, each through its own EPA
    /// draw. Unused data cells carry random filler symbols so every PRB is
    /// fully loaded. All modes see the same channel and noise; only the
    /// refinement draws from `refine_rng`.
    pub fn transmit<R: Rng + ?Sized, S: Rng + ?Sized>(
        &self,
        bits: &[u8],
        snr_db: f64,
        modes: &[CsiMode],
        channel_rng: &mut R,
        refine_rng: &mut S,
    ) -> Result<Vec<ModeOutcome>> {
        if bits.is_empty() || modes.is_empty() {
            return Err(Error::InvalidArgument("nothing to transmit".into()));
        }
        let refiner = match (modes.contains(&CsiMode::Refined), self.refiner) {
            (true, None) => {
                return Err(Error::MissingArtifact {
                    stage: "train-denoiser",
                    path: "denoiser".into(),
                })
            }
            (_, r) => r,
        };
        let mut out: Vec<ModeOutcome> = modes
            .iter()
            .map(|&mode| ModeOutcome {
                mode,
                bits: Vec::with_capacity(bits.len()),
                bit_errors: 0,
                nmse: 0.0,
            })
            .collect();
        let chunks: Vec<&[u8]> = bits.chunks(self.cfg.bits_per_prb()).collect();
        for chunk in &chunks {
            let est = self.send_prb(chunk, snr_db, channel_rng)?;
            for o in out.iter_mut() {
                let h_hat = match o.mode {
                    CsiMode::Perfect => est.truth.clone(),
                    CsiMode::Ls => est.rough.clone(),
                    CsiMode::Refined => {
                        let r = refiner.expect("checked above");
                        let h = reverse_sample(&est.rough.to_real(), snr_db, r.schedule, r.denoiser, r.steps, refine_rng)?;
                        CsiGrid::from_real(self.cfg.n_subcarriers, self.cfg.n_symbols, &h)?
                    }
                };
                o.nmse += nmse(&h_hat.cells, &est.truth.cells)? / chunks.len() as f64;
                let eq = zf_equalize(&est.grid, &h_hat.cells, DEFAULT_EQ_FLOOR)?;
                let mut detected = qam4_demodulate(&eq);
                detected.truncate(chunk.len());
                o.bit_errors += count_bit_errors(&detected, chunk);
                o.bits.extend(detected);
            }
        }
        Ok(out)
    }

    /// One fully loaded PRB through a fresh EPA draw.
    pub fn send_prb<R: Rng + ?Sized>(
        &self,
        bits: &[u8],
        snr_db: f64,
        rng: &mut R,
    ) -> Result<ReceivedPrb> {
        let capacity = self.cfg.bits_per_prb();
        if bits.len() > capacity {
            return Err(Error::GridOverflow {
                requested: bits.len(),
                capacity,
            });
        }
        let mut loaded = bits.to_vec();
        loaded.extend((bits.len()..capacity).map(|_| rng.random_range(0..2u8)));
        let grid = build_grid(&qam4_modulate(&loaded), &self.cfg)?;
        let tx = self.modem.modulate(&grid)?;
        let ch = sample_epa_channel(&self.cfg, self.cfg.sample_rate_hz(), rng)?;
        let y = apply_channel(&tx, &ch, snr_db, rng);
        let rx = self.modem.demodulate(&y, grid.data_len)?;
        let truth = CsiGrid::from_freq_response(&ch.freq_response, self.cfg.n_symbols);
        let rough = rough_estimate(&rx, &self.cfg)?;
        Ok(ReceivedPrb {
            grid: rx,
            channel: ch,
            truth,
            rough,
        })
    }
}

/// Bit errors between two equal-length bit strings.
pub fn count_bit_errors(a: &[u8], b: &[u8]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    fn small_cfg() -> OfdmConfig {
        OfdmConfig {
            n_subcarriers: 64,
            cp_len: 16,
            pilot_freq_interval: 4,
            ..OfdmConfig::default()
        }
    }

    #[test]
    fn noiseless_perfect_csi_is_error_free() {
        let cfg = small_cfg();
        let link = LinkSimulator::new(&cfg, None).unwrap();
        let mut rng = rng_from_seed(3);
        let bits: Vec<u8> = (0..3 * cfg.bits_per_prb() + 5).map(|_| rng.random_range(0..2)).collect();
        let out = link
            .transmit(&bits, f64::INFINITY, &[CsiMode::Perfect], &mut rng, &mut rng_from_seed(0))
            .unwrap();
        assert_eq!(out[0].bits, bits);
        assert_eq!(out[0].bit_errors, 0);
        assert_eq!(out[0].nmse, 0.0);
    }

    #[test]
    fn modes_share_channel_and_noise() {
        let cfg = small_cfg();
        let link = LinkSimulator::new(&cfg, None).unwrap();
        let bits = vec![1u8; 100];
        let both = link
            .transmit(&bits, 5.0, &[CsiMode::Perfect, CsiMode::Ls], &mut rng_from_seed(8), &mut rng_from_seed(0))
            .unwrap();
        let ls = link
            .transmit(&bits, 5.0, &[CsiMode::Ls], &mut rng_from_seed(8), &mut rng_from_seed(0))
            .unwrap();
        assert_eq!(both[1], ls[0]);
        assert!(both[1].nmse > 0.0);
    }

    #[test]
    fn refined_mode_needs_a_denoiser() {
        let link = LinkSimulator::new(&small_cfg(), None).unwrap();
        let err = link
            .transmit(&[0, 1], 5.0, &[CsiMode::Refined], &mut rng_from_seed(1), &mut rng_from_seed(2))
            .unwrap_err();
        assert!(err.to_string().contains("train-denoiser"));
    }

    #[test]
    fn identity_refiner_matches_ls() {
        let cfg = small_cfg();
        let sched = crate::cdm::CdmConfig::default().schedule().unwrap();
        let den = Denoiser::Identity;
        let link = LinkSimulator::new(&cfg, Some(Refiner { schedule: &sched, denoiser: &den, steps: 5 })).unwrap();
        let bits = vec![0u8; 300];
        let out = link
            .transmit(&bits, 10.0, &[CsiMode::Ls, CsiMode::Refined], &mut rng_from_seed(5), &mut rng_from_seed(6))
            .unwrap();
        assert_eq!(out[0].bits, out[1].bits);
        assert!((out[0].nmse - out[1].nmse).abs() < 1e-12);
    }
}
