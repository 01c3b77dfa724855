use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use super::{OfdmConfig, PrbGrid, C64};
use crate::error::{Error, Result};

/// Unitary IDFT/DFT with cyclic prefix, planned once per configuration.
#[derive(Clone)]
pub struct OfdmModem {
    cfg: OfdmConfig,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for OfdmModem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OfdmModem").field("cfg", &self.cfg).finish()
    }
}

impl OfdmModem {
    pub fn new(cfg: &OfdmConfig) -> Result<Self> {
        cfg.validate()?;
        let mut planner = FftPlanner::new();
        Ok(Self {
            cfg: cfg.clone(),
            forward: planner.plan_fft_forward(cfg.n_subcarriers),
            inverse: planner.plan_fft_inverse(cfg.n_subcarriers),
        })
    }

    pub fn config(&self) -> &OfdmConfig {
        &self.cfg
    }

    /// Per-symbol IDFT with the last `cp_len` samples prepended.
    pub fn modulate(&self, grid: &PrbGrid) -> Result<Vec<C64>> {
        let (nf, nt, cp) = (self.cfg.n_subcarriers, self.cfg.n_symbols, self.cfg.cp_len);
        if grid.n_subcarriers != nf || grid.n_symbols != nt {
            return Err(Error::DimensionMismatch(format!(
                "grid is {}x{}, modem expects {nf}x{nt}",
                grid.n_subcarriers, grid.n_symbols
            )));
        }
        let scale = 1.0 / (nf as f64).sqrt();
        let mut out = Vec::with_capacity(self.cfg.samples_per_prb());
        let mut buf = vec![C64::new(0.0, 0.0); nf];
        for sym in grid.cells.chunks_exact(nf) {
            buf.copy_from_slice(sym);
            self.inverse.process(&mut buf);
            buf.iter_mut().for_each(|x| *x *= scale);
            out.extend_from_slice(&buf[nf - cp..]);
            out.extend_from_slice(&buf);
        }
        Ok(out)
    }

    /// Strips each cyclic prefix and applies the unitary DFT. The returned
    /// grid carries the configured pilot mask and `data_len`.
    pub fn demodulate(&self, samples: &[C64], data_len: usize) -> Result<PrbGrid> {
        let (nf, cp) = (self.cfg.n_subcarriers, self.cfg.cp_len);
        if samples.len() != self.cfg.samples_per_prb() {
            return Err(Error::DimensionMismatch(format!(
                "expected {} samples, got {}",
                self.cfg.samples_per_prb(),
                samples.len()
            )));
        }
        let scale = 1.0 / (nf as f64).sqrt();
        let mut cells = Vec::with_capacity(self.cfg.n_cells());
        for block in samples.chunks_exact(nf + cp) {
            let mut buf = block[cp..].to_vec();
            self.forward.process(&mut buf);
            cells.extend(buf.into_iter().map(|x| x * scale));
        }
        PrbGrid::with_cells(&self.cfg, cells, data_len)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ofdm::{build_grid, qam4_modulate};
    use crate::rng::rng_from_seed;
    use rand::Rng;

    fn random_grid(cfg: &OfdmConfig, seed: u64) -> PrbGrid {
        let mut rng = rng_from_seed(seed);
        let bits: Vec<u8> = (0..cfg.bits_per_prb()).map(|_| rng.random_range(0..2)).collect();
        build_grid(&qam4_modulate(&bits), cfg).unwrap()
    }

    #[test]
    fn round_trip_and_length() {
        let cfg = OfdmConfig::default();
        let modem = OfdmModem::new(&cfg).unwrap();
        let g = random_grid(&cfg, 1);
        let tx = modem.modulate(&g).unwrap();
        assert_eq!(tx.len(), 17920);
        let rx = modem.demodulate(&tx, g.data_len).unwrap();
        let err = g
            .cells
            .iter()
            .zip(&rx.cells)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-12, "max error {err}");
    }

    #[test]
    fn parseval_without_prefix() {
        let mut cfg = OfdmConfig::default();
        let g = random_grid(&cfg, 2);
        cfg.cp_len = 0;
        let modem = OfdmModem::new(&cfg).unwrap();
        let tx = modem.modulate(&g).unwrap();
        let e_time: f64 = tx.iter().map(|x| x.norm_sqr()).sum();
        assert!((e_time - g.energy()).abs() < 1e-10 * g.energy());
    }

    #[test]
    fn truncated_input_is_rejected() {
        let cfg = OfdmConfig::default();
        let modem = OfdmModem::new(&cfg).unwrap();
        assert!(modem.demodulate(&vec![C64::new(0.0, 0.0); 17919], 0).is_err());
    }
}
