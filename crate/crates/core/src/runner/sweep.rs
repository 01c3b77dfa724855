//! Evaluation sweeps and their CSV form.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::link::{LinkSimulator, Refiner};
use super::pipeline::transmit_image;
use super::stages::{Stage1Output, Stage3Output};
use super::{CsiMode, ExperimentConfig};
use crate::codebook::cur;
use crate::codec::{bcr, ms_ssim, psnr, Image};
use crate::error::{Error, Result};
use crate::ofdm::OfdmConfig;
use crate::rng::trial_rng;

/// Stream index of the channel, payload and noise draws of a trial. The
/// refinement stream is `1 + mode`.
const CHANNEL_STREAM: u64 = 0;

fn refine_stream() -> u64 {
    1 + CsiMode::Refined.stream()
}

/// One `(snr, csi_mode, surrogate)` point of an image sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub snr_db: f64,
    pub csi_mode: CsiMode,
    pub surrogate: String,
    pub bcr: f64,
    pub nmse: f64,
    pub ber: f64,
    pub cur: f64,
    pub psnr_db: f64,
    pub ms_ssim: f64,
    pub trials: usize,
    pub psnr_std_err: f64,
    pub bits_per_trial: usize,
    /// Per-trial bit error counts joined by `;`.
    pub trial_bit_errors: String,
}

impl SweepRow {
    pub fn bit_errors(&self) -> Result<Vec<usize>> {
        if self.trial_bit_errors.is_empty() {
            return Ok(Vec::new());
        }
        self.trial_bit_errors
            .split(';')
            .map(|s| s.parse().map_err(|_| Error::Format(format!("bad error count '{s}'"))))
            .collect()
    }

    /// BER recomputed from the stored per-trial counts.
    pub fn recomputed_ber(&self) -> Result<f64> {
        let e: usize = self.bit_errors()?.iter().sum();
        Ok(e as f64 / (self.trials * self.bits_per_trial) as f64)
    }
}

/// One `(snr, csi_mode)` point of a channel-estimation sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsiRow {
    pub snr_db: f64,
    pub csi_mode: CsiMode,
    pub nmse: f64,
    pub ber: f64,
    pub bit_errors: usize,
    pub bits: usize,
    pub draws: usize,
}

/// Receiver-side models for a sweep.
#[derive(Debug, Clone, Copy)]
pub struct SweepInputs<'a> {
    pub stage1: &'a Stage1Output,
    pub refiner: Option<Refiner<'a>>,
    /// Decoder refits per mode. A mode without refits is an error.
    pub refits: &'a [Stage3Output],
}

struct TrialResult {
    bits_sent: usize,
    fine_idx: Vec<usize>,
    coarse_idx: Vec<usize>,
    per_mode: Vec<(usize, f64, f64, f64)>,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn std_err(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
    (var / xs.len() as f64).sqrt()
}

/// Image sweep: trial `i` sends test image `i mod n` over its own EPA draws.
/// Every mode sees the same channel realizations and decodes with its
/// refit nearest in SNR.
pub fn run_sweep(
    cfg: &ExperimentConfig,
    inputs: &SweepInputs<'_>,
    test_images: &[Image],
    modes: &[CsiMode],
) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    if test_images.is_empty() {
        return Err(Error::InsufficientData("no test images".into()));
    }
    let decoders: Vec<&Stage3Output> = modes
        .iter()
        .map(|m| {
            inputs.refits.iter().find(|r| r.mode == *m && !r.refits.is_empty()).ok_or(Error::MissingArtifact {
                stage: "refit-decoder",
                path: format!("{m} refits"),
            })
        })
        .collect::<Result<_>>()?;
    let link = LinkSimulator::new(&cfg.ofdm, inputs.refiner)?;
    let pipe = inputs.stage1.pipeline();
    let mut rows = Vec::new();
    for (si, &snr) in cfg.snr_grid_db.iter().enumerate() {
        let trials = (0..cfg.trials_per_point)
            .into_par_iter()
            .map(|trial| {
                let img = &test_images[trial % test_images.len()];
                let mut ch_rng = trial_rng(cfg.master_seed, trial as u64, si as u64, CHANNEL_STREAM);
                let mut rf_rng = trial_rng(cfg.master_seed, trial as u64, si as u64, refine_stream());
                let tx = transmit_image(&pipe, &link, img, snr, modes, &mut ch_rng, &mut rf_rng)?;
                let per_mode = tx
                    .received
                    .iter()
                    .zip(&decoders)
                    .map(|((o, idx), dec)| {
                        let decoder = dec.select(snr).expect("nonempty refits");
                        let (f, c) = pipe.codewords(idx);
                        let rec = decoder.decode(&f, &c, img.height, img.width)?;
                        Ok((o.bit_errors, o.nmse, psnr(&rec, img)?, ms_ssim(&rec, img)?))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(TrialResult {
                    bits_sent: tx.bits_sent,
                    fine_idx: tx.sent.fine,
                    coarse_idx: tx.sent.coarse,
                    per_mode,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let bits_per_trial = trials[0].bits_sent;
        if trials.iter().any(|t| t.bits_sent != bits_per_trial) {
            return Err(Error::DimensionMismatch("test images differ in size".into()));
        }
        let fine_all: Vec<usize> = trials.iter().flat_map(|t| t.fine_idx.iter().copied()).collect();
        let coarse_all: Vec<usize> = trials.iter().flat_map(|t| t.coarse_idx.iter().copied()).collect();
        let utilization = 0.5
            * (cur(inputs.stage1.fine.codebook.len(), &fine_all) + cur(inputs.stage1.coarse.codebook.len(), &coarse_all));
        let img = &test_images[0];
        for (m, &mode) in modes.iter().enumerate() {
            let errors: Vec<usize> = trials.iter().map(|t| t.per_mode[m].0).collect();
            let nmse: Vec<f64> = trials.iter().map(|t| t.per_mode[m].1).collect();
            let ps: Vec<f64> = trials.iter().map(|t| t.per_mode[m].2).collect();
            let ss: Vec<f64> = trials.iter().map(|t| t.per_mode[m].3).collect();
            rows.push(SweepRow {
                snr_db: snr,
                csi_mode: mode,
                surrogate: inputs.stage1.surrogate.to_string(),
                bcr: bcr(bits_per_trial, img.height, img.width, img.channels),
                nmse: mean(&nmse),
                ber: errors.iter().sum::<usize>() as f64 / (trials.len() * bits_per_trial) as f64,
                cur: utilization,
                psnr_db: mean(&ps),
                ms_ssim: mean(&ss),
                trials: trials.len(),
                psnr_std_err: std_err(&ps),
                bits_per_trial,
                trial_bit_errors: errors.iter().map(usize::to_string).collect::<Vec<_>>().join(";"),
            });
        }
    }
    Ok(rows)
}

/// Channel-estimation sweep over fully loaded PRBs of random bits: `draws`
/// EPA draws per SNR, each evaluated by every mode.
pub fn run_csi_sweep(
    ofdm: &OfdmConfig,
    refiner: Option<Refiner<'_>>,
    snrs: &[f64],
    draws: usize,
    master_seed: u64,
    modes: &[CsiMode],
) -> Result<Vec<CsiRow>> {
    use rand::Rng;
    let link = LinkSimulator::new(ofdm, refiner)?;
    let bits = ofdm.bits_per_prb();
    let mut rows = Vec::new();
    for (si, &snr) in snrs.iter().enumerate() {
        let per_draw = (0..draws)
            .into_par_iter()
            .map(|d| {
                let mut ch_rng = trial_rng(master_seed, d as u64, si as u64, CHANNEL_STREAM);
                let mut rf_rng = trial_rng(master_seed, d as u64, si as u64, refine_stream());
                let payload: Vec<u8> = (0..bits).map(|_| ch_rng.random_range(0..2u8)).collect();
                link.transmit(&payload, snr, modes, &mut ch_rng, &mut rf_rng)
            })
            .collect::<Result<Vec<_>>>()?;
        for (m, &mode) in modes.iter().enumerate() {
            let errors: usize = per_draw.iter().map(|o| o[m].bit_errors).sum();
            rows.push(CsiRow {
                snr_db: snr,
                csi_mode: mode,
                nmse: per_draw.iter().map(|o| o[m].nmse).sum::<f64>() / draws as f64,
                ber: errors as f64 / (draws * bits) as f64,
                bit_errors: errors,
                bits: draws * bits,
                draws,
            });
        }
    }
    Ok(rows)
}

pub fn write_csv<W: Write, T: Serialize>(w: W, rows: &[T]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r).map_err(|e| Error::Format(e.to_string()))?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_sweep_csv<R: std::io::Read>(r: R) -> Result<Vec<SweepRow>> {
    csv::Reader::from_reader(r)
        .deserialize()
        .map(|row| row.map_err(|e| Error::Format(e.to_string())))
        .collect()
}
