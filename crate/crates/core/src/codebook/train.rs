//! Epoch loop: parallel assignment against a codebook snapshot, then one
//! serial EMA update.

use rayon::prelude::*;

use super::{cur, quantize, Codebook, QuantizerConfig};
use crate::error::Result;
use crate::rng::{derive_seed, rng_from_seed};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    /// Per-component hard quantization MSE against the pre-update codebook.
    pub mse: f64,
    /// Utilization of the pre-update codebook.
    pub cur: f64,
}

/// Per-component mean squared error of hard nearest-neighbour quantization.
pub fn hard_mse(cb: &Codebook, data: &[Vec<f64>]) -> Result<f64> {
    if data.is_empty() {
        return Ok(0.0);
    }
    let total = data
        .par_iter()
        .map(|z| {
            let (_, c) = cb.nearest(z)?;
            Ok(z.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .sum::<f64>();
    Ok(total / (data.len() * cb.dim()) as f64)
}

/// Runs the surrogate over every row. Row `i` draws from its own stream so
/// the result does not depend on thread scheduling.
pub fn assign_epoch(
    cb: &Codebook,
    data: &[Vec<f64>],
    cfg: &QuantizerConfig,
    epoch: usize,
) -> Result<(Vec<usize>, Vec<Vec<f64>>, f64)> {
    cfg.validate(cb.len())?;
    let epoch_seed = derive_seed(cfg.rng_seed, &[epoch as u64]);
    let results = data
        .par_iter()
        .enumerate()
        .map(|(i, z)| {
            let mut rng = rng_from_seed(derive_seed(epoch_seed, &[i as u64]));
            let r = quantize(z, cb, cfg, &mut rng)?;
            let err: f64 = z
                .iter()
                .zip(cb.entry(r.index))
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            Ok((r.index, r.z_q, err))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut assignments = Vec::with_capacity(data.len());
    let mut surrogates = Vec::with_capacity(data.len());
    let mut sq_err = 0.0;
    for (k, zq, e) in results {
        assignments.push(k);
        surrogates.push(zq);
        sq_err += e;
    }
    let mse = if data.is_empty() {
        0.0
    } else {
        sq_err / (data.len() * cb.dim()) as f64
    };
    Ok((assignments, surrogates, mse))
}

/// One training epoch: assignment, statistics, EMA update.
pub fn train_epoch(
    cb: &mut Codebook,
    data: &[Vec<f64>],
    cfg: &QuantizerConfig,
    epoch: usize,
) -> Result<EpochStats> {
    let (assignments, surrogates, mse) = assign_epoch(cb, data, cfg, epoch)?;
    let stats = EpochStats {
        epoch,
        mse,
        cur: cur(cb.len(), &assignments),
    };
    cb.ema_update(&assignments, &surrogates)?;
    Ok(stats)
}
