use super::{PrbGrid, C64};
use crate::error::{Error, Result};

/// Default floor on `|Ĥ|` below which the estimate is clamped.
pub const DEFAULT_EQ_FLOOR: f64 = 1e-3;

/// Zero-forcing equalization of the data cells.
///
/// `h_hat` holds one estimate per cell in grid layout. Estimates weaker
/// than `floor` keep their phase but are raised to magnitude `floor`.
/// Returns the equalized data cells in fill order, padding included.
pub fn zf_equalize(received: &PrbGrid, h_hat: &[C64], floor: f64) -> Result<Vec<C64>> {
    if h_hat.len() != received.cells.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} channel estimates for {} cells",
            h_hat.len(),
            received.cells.len()
        )));
    }
    Ok(received
        .cells
        .iter()
        .zip(h_hat)
        .zip(&received.pilot_mask)
        .filter(|(_, &p)| !p)
        .map(|((&y, &h), _)| {
            let h = if h.norm() < floor {
                if h.norm() == 0.0 {
                    C64::new(floor, 0.0)
                } else {
                    C64::from_polar(floor, h.arg())
                }
            } else {
                h
            };
            y / h
        })
        .collect())
}
