//! Time-frequency resource grid with a rectangular pilot lattice.

use rand::Rng;

use super::{qam4_modulate, OfdmConfig, C64};
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// One PRB. Cells are stored symbol-major: `cells[t * n_subcarriers + k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrbGrid {
    pub n_subcarriers: usize,
    pub n_symbols: usize,
    pub cells: Vec<C64>,
    pub pilot_mask: Vec<bool>,
    /// Number of data cells carrying payload; the rest are zero padding.
    pub data_len: usize,
}

/// Seeded unit-modulus 4-QAM pilot sequence, in lattice order (symbol-major).
pub fn pilot_symbols(cfg: &OfdmConfig) -> Vec<C64> {
    let mut rng = rng_from_seed(cfg.pilot_seed);
    let bits: Vec<u8> = (0..2 * cfg.n_pilots()).map(|_| rng.random_range(0..2u8)).collect();
    qam4_modulate(&bits)
}

fn pilot_mask(cfg: &OfdmConfig) -> Vec<bool> {
    let mut mask = vec![false; cfg.n_cells()];
    for t in cfg.pilot_symbols() {
        for k in cfg.pilot_subcarriers() {
            mask[t * cfg.n_subcarriers + k] = true;
        }
    }
    mask
}

/// Places pilots on the lattice and fills the remaining cells with data,
/// frequency first. Unused data cells are zero.
pub fn build_grid(data: &[C64], cfg: &OfdmConfig) -> Result<PrbGrid> {
    cfg.validate()?;
    let capacity = cfg.data_capacity();
    if data.len() > capacity {
        return Err(Error::GridOverflow {
            requested: data.len(),
            capacity,
        });
    }
    let mask = pilot_mask(cfg);
    let mut cells = vec![C64::new(0.0, 0.0); cfg.n_cells()];
    let mut pilots = pilot_symbols(cfg).into_iter();
    let mut payload = data.iter();
    for (cell, &is_pilot) in cells.iter_mut().zip(&mask) {
        if is_pilot {
            *cell = pilots.next().expect("pilot count matches lattice");
        } else if let Some(&x) = payload.next() {
            *cell = x;
        }
    }
    Ok(PrbGrid {
        n_subcarriers: cfg.n_subcarriers,
        n_symbols: cfg.n_symbols,
        cells,
        pilot_mask: mask,
        data_len: data.len(),
    })
}

impl PrbGrid {
    /// An empty grid of the given shape carrying the configured pilot mask.
    pub fn with_cells(cfg: &OfdmConfig, cells: Vec<C64>, data_len: usize) -> Result<Self> {
        if cells.len() != cfg.n_cells() {
            return Err(Error::DimensionMismatch(format!(
                "{} cells for a {}x{} grid",
                cells.len(),
                cfg.n_subcarriers,
                cfg.n_symbols
            )));
        }
        Ok(Self {
            n_subcarriers: cfg.n_subcarriers,
            n_symbols: cfg.n_symbols,
            cells,
            pilot_mask: pilot_mask(cfg),
            data_len,
        })
    }

    pub fn index(&self, subcarrier: usize, symbol: usize) -> usize {
        symbol * self.n_subcarriers + subcarrier
    }

    pub fn cell(&self, subcarrier: usize, symbol: usize) -> C64 {
        self.cells[self.index(subcarrier, symbol)]
    }

    pub fn n_pilots(&self) -> usize {
        self.pilot_mask.iter().filter(|&&p| p).count()
    }

    pub fn data_cell_count(&self) -> usize {
        self.cells.len() - self.n_pilots()
    }

    /// Values of every data cell in fill order, padding included.
    pub fn data_cells(&self) -> Vec<C64> {
        self.cells
            .iter()
            .zip(&self.pilot_mask)
            .filter(|(_, &p)| !p)
            .map(|(&c, _)| c)
            .collect()
    }

    /// Payload symbols only.
    pub fn payload(&self) -> Vec<C64> {
        let mut d = self.data_cells();
        d.truncate(self.data_len);
        d
    }

    /// Pilot cell values in lattice order.
    pub fn pilot_cells(&self) -> Vec<C64> {
        self.cells
            .iter()
            .zip(&self.pilot_mask)
            .filter(|(_, &p)| p)
            .map(|(&c, _)| c)
            .collect()
    }

    /// `(subcarrier, symbol)` of each pilot in lattice order.
    pub fn pilot_positions(&self) -> Vec<(usize, usize)> {
        self.pilot_mask
            .iter()
            .enumerate()
            .filter(|(_, &p)| p)
            .map(|(i, _)| (i % self.n_subcarriers, i / self.n_subcarriers))
            .collect()
    }

    pub fn energy(&self) -> f64 {
        self.cells.iter().map(|c| c.norm_sqr()).sum()
    }
}
