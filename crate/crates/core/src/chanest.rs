//! Pilot-aided channel estimation: least squares at the pilots, bilinear
//! interpolation to the full grid, and the NMSE metric.

use crate::error::{Error, Result};
use crate::ofdm::{pilot_symbols, OfdmConfig, PrbGrid, C64};

/// Received and transmitted values at the pilot lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotObservation {
    pub pilot_rx: Vec<C64>,
    pub pilot_tx: Vec<C64>,
    /// `(subcarrier, symbol)` per pilot.
    pub positions: Vec<(usize, usize)>,
}

impl PilotObservation {
    /// Pairs the pilots of a received grid with the configured sequence.
    pub fn from_grid(rx: &PrbGrid, cfg: &OfdmConfig) -> Self {
        Self {
            pilot_rx: rx.pilot_cells(),
            pilot_tx: pilot_symbols(cfg),
            positions: rx.pilot_positions(),
        }
    }
}

/// Full-grid CSI, symbol-major: `cells[t * n_subcarriers + k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CsiGrid {
    pub n_subcarriers: usize,
    pub n_symbols: usize,
    pub cells: Vec<C64>,
}

impl CsiGrid {
    pub fn new(n_subcarriers: usize, n_symbols: usize, cells: Vec<C64>) -> Result<Self> {
        if cells.len() != n_subcarriers * n_symbols {
            return Err(Error::DimensionMismatch(format!(
                "{} cells for a {n_subcarriers}x{n_symbols} grid",
                cells.len()
            )));
        }
        Ok(Self {
            n_subcarriers,
            n_symbols,
            cells,
        })
    }

    /// Repeats a frequency response over every symbol.
    pub fn from_freq_response(h: &[C64], n_symbols: usize) -> Self {
        Self {
            n_subcarriers: h.len(),
            n_symbols,
            cells: (0..n_symbols).flat_map(|_| h.iter().copied()).collect(),
        }
    }

    pub fn at(&self, subcarrier: usize, symbol: usize) -> C64 {
        self.cells[symbol * self.n_subcarriers + subcarrier]
    }

    /// Interleaved `(re, im)` per cell.
    pub fn to_real(&self) -> Vec<f64> {
        self.cells.iter().flat_map(|c| [c.re, c.im]).collect()
    }

    pub fn from_real(n_subcarriers: usize, n_symbols: usize, v: &[f64]) -> Result<Self> {
        if v.len() != 2 * n_subcarriers * n_symbols {
            return Err(Error::DimensionMismatch("real vector length".into()));
        }
        let cells = v.chunks_exact(2).map(|p| C64::new(p[0], p[1])).collect();
        Self::new(n_subcarriers, n_symbols, cells)
    }

    pub fn is_finite(&self) -> bool {
        self.cells.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

/// Per-pilot least-squares estimate `rx / tx`.
pub fn ls_estimate(obs: &PilotObservation) -> Result<Vec<C64>> {
    if obs.pilot_rx.len() != obs.pilot_tx.len() || obs.positions.len() != obs.pilot_tx.len() {
        return Err(Error::DimensionMismatch("pilot observation lengths differ".into()));
    }
    obs.pilot_rx
        .iter()
        .zip(&obs.pilot_tx)
        .zip(&obs.positions)
        .map(|((&y, &x), &(k, t))| {
            if x.norm_sqr() == 0.0 {
                Err(Error::ZeroPilot {
                    subcarrier: k,
                    symbol: t,
                })
            } else {
                Ok(y / x)
            }
        })
        .collect()
}

/// Linear interpolation of `values` known at sorted `knots` onto `0..n`,
/// holding the nearest knot value outside `[knots[0], knots.last()]`.
fn interp_line(knots: &[usize], values: &[C64], n: usize) -> Vec<C64> {
    let mut out = Vec::with_capacity(n);
    let mut seg = 0;
    for x in 0..n {
        if x <= knots[0] {
            out.push(values[0]);
            continue;
        }
        if x >= knots[knots.len() - 1] {
            out.push(values[knots.len() - 1]);
            continue;
        }
        while knots[seg + 1] < x {
            seg += 1;
        }
        let (x0, x1) = (knots[seg], knots[seg + 1]);
        let w = (x - x0) as f64 / (x1 - x0) as f64;
        out.push(values[seg] * (1.0 - w) + values[seg + 1] * w);
    }
    out
}

/// Bilinear interpolation over a complete rectangular pilot lattice,
/// frequency first, then time.
pub fn interpolate_grid(
    estimates: &[C64],
    positions: &[(usize, usize)],
    cfg: &OfdmConfig,
) -> Result<CsiGrid> {
    if estimates.len() != positions.len() {
        return Err(Error::DimensionMismatch("estimates and positions differ".into()));
    }
    let mut freqs: Vec<usize> = positions.iter().map(|p| p.0).collect();
    let mut syms: Vec<usize> = positions.iter().map(|p| p.1).collect();
    freqs.sort_unstable();
    freqs.dedup();
    syms.sort_unstable();
    syms.dedup();
    if freqs.len() < 2 || syms.is_empty() {
        return Err(Error::InvalidArgument(
            "pilot lattice needs at least two subcarriers and one symbol".into(),
        ));
    }
    if freqs.len() * syms.len() != positions.len()
        || freqs.last().is_some_and(|&k| k >= cfg.n_subcarriers)
        || syms.last().is_some_and(|&t| t >= cfg.n_symbols)
    {
        return Err(Error::InvalidArgument("pilots do not form a rectangular lattice".into()));
    }
    let mut lattice = vec![None; positions.len()];
    for (&(k, t), &h) in positions.iter().zip(estimates) {
        let i = freqs.binary_search(&k).unwrap();
        let j = syms.binary_search(&t).unwrap();
        lattice[j * freqs.len() + i] = Some(h);
    }
    let lattice: Vec<C64> = lattice
        .into_iter()
        .collect::<Option<_>>()
        .ok_or_else(|| Error::InvalidArgument("duplicate pilot position".into()))?;

    let n_f = cfg.n_subcarriers;
    let rows: Vec<Vec<C64>> = lattice
        .chunks_exact(freqs.len())
        .map(|row| interp_line(&freqs, row, n_f))
        .collect();
    let mut cells = vec![C64::new(0.0, 0.0); n_f * cfg.n_symbols];
    let mut column = vec![C64::new(0.0, 0.0); syms.len()];
    for k in 0..n_f {
        for (c, row) in column.iter_mut().zip(&rows) {
            *c = row[k];
        }
        for (t, h) in interp_line(&syms, &column, cfg.n_symbols).into_iter().enumerate() {
            cells[t * n_f + k] = h;
        }
    }
    CsiGrid::new(n_f, cfg.n_symbols, cells)
}

/// LS at the pilots of a received grid followed by interpolation.
pub fn rough_estimate(rx: &PrbGrid, cfg: &OfdmConfig) -> Result<CsiGrid> {
    let obs = PilotObservation::from_grid(rx, cfg);
    interpolate_grid(&ls_estimate(&obs)?, &obs.positions, cfg)
}

/// `‖Ĥ − H‖² / ‖H‖²` over every cell.
pub fn nmse(h_hat: &[C64], h_true: &[C64]) -> Result<f64> {
    if h_hat.len() != h_true.len() {
        return Err(Error::DimensionMismatch("nmse operands differ in length".into()));
    }
    let den: f64 = h_true.iter().map(|h| h.norm_sqr()).sum();
    if den == 0.0 {
        return Err(Error::ZeroNormReference);
    }
    let num: f64 = h_hat.iter().zip(h_true).map(|(a, b)| (a - b).norm_sqr()).sum();
    Ok(num / den)
}
