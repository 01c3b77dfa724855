//! The three training stages.
//!
//! Stage one fits the codec and trains both codebooks on clean latents.
//! Stage two fits the channel denoiser on simulated rough estimates. Stage
//! three refits the decoder on latents received over the fading link, one
//! refit per training SNR, with encoder and codebooks frozen.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use log::info;
use rayon::prelude::*;

use super::link::{LinkSimulator, Refiner};
use super::pipeline::{transmit_image, SemanticPipeline};
use super::{CodebookConfig, CsiMode, ExperimentConfig};
use crate::cdm::{
    train_linear_denoiser, weighted_loss, ChannelPair, Denoiser, LinearDenoiser, PatchGeometry,
};
use crate::chanest::CsiGrid;
use crate::codebook::{train_epoch, Codebook, EpochStats, QuantizerConfig, Surrogate};
use crate::codec::{refit_decoder, Image, PatchCodec, RefitSample};
use crate::error::{Error, Result};
use crate::ofdm::{ChannelDataset, OfdmConfig, RoughRecord};
use crate::rng::{derive_seed, rng_from_seed};

const STAGE1: u64 = 1;
const STAGE2: u64 = 2;
const STAGE3: u64 = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct CodebookTraining {
    pub codebook: Codebook,
    /// One entry per epoch, measured before that epoch's update.
    pub history: Vec<EpochStats>,
}

/// Seeds a codebook from `data` with `init_seed` and runs the configured
/// number of assignment + EMA epochs.
pub fn train_codebook(
    data: &[Vec<f64>],
    cb: &CodebookConfig,
    quantizer: &QuantizerConfig,
    init_seed: u64,
) -> Result<CodebookTraining> {
    let mut codebook = Codebook::init_from_batch(data, cb.size, cb.decay, cb.eps, &mut rng_from_seed(init_seed))?;
    let history = (0..cb.epochs)
        .map(|e| train_epoch(&mut codebook, data, quantizer, e))
        .collect::<Result<Vec<_>>>()?;
    Ok(CodebookTraining { codebook, history })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stage1Output {
    pub surrogate: Surrogate,
    pub codec: PatchCodec,
    pub fine: CodebookTraining,
    pub coarse: CodebookTraining,
}

impl Stage1Output {
    pub fn pipeline(&self) -> SemanticPipeline<'_> {
        SemanticPipeline {
            encoder: &self.codec,
            fine: &self.fine.codebook,
            coarse: &self.coarse.codebook,
        }
    }

    /// Digest of everything stage three must leave untouched.
    pub fn frozen_digest(&self) -> u64 {
        frozen_digest(&self.codec, &self.fine.codebook, &self.coarse.codebook)
    }
}

pub fn frozen_digest(codec: &PatchCodec, fine: &Codebook, coarse: &Codebook) -> u64 {
    let mut h = DefaultHasher::new();
    codec.encoder_digest().hash(&mut h);
    for cb in [fine, coarse] {
        cb.len().hash(&mut h);
        for x in cb.entries() {
            x.to_bits().hash(&mut h);
        }
    }
    h.finish()
}

/// Clean latents of every image, fine and coarse.
pub fn collect_latents(codec: &PatchCodec, images: &[Image]) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let mut fine = Vec::new();
    let mut coarse = Vec::new();
    for img in images {
        let (f, c) = codec.encode(img)?;
        fine.extend(f.vectors);
        coarse.extend(c.vectors);
    }
    Ok((fine, coarse))
}

/// Initial codewords depend only on the master seed, so surrogates start
/// from the same codebook.
pub fn stage1_train(cfg: &ExperimentConfig, images: &[Image], surrogate: Surrogate) -> Result<Stage1Output> {
    let codec = PatchCodec::fit(images, &cfg.codec)?;
    let (fine_z, coarse_z) = collect_latents(&codec, images)?;
    let train = |data: &[Vec<f64>], level: u64| {
        let q = QuantizerConfig {
            surrogate,
            rng_seed: derive_seed(cfg.master_seed, &[STAGE1, level, 1, cfg.quantizer.rng_seed]),
            ..cfg.quantizer
        };
        train_codebook(data, &cfg.codebook, &q, derive_seed(cfg.master_seed, &[STAGE1, level, 0]))
    };
    let fine = train(&fine_z, 0)?;
    let coarse = train(&coarse_z, 1)?;
    for (name, t) in [("fine", &fine), ("coarse", &coarse)] {
        if let Some(last) = t.history.last() {
            info!("{surrogate} {name} codebook: final mse {:.4}, cur {:.3}", last.mse, last.cur);
        }
    }
    Ok(Stage1Output {
        surrogate,
        codec,
        fine,
        coarse,
    })
}

/// EPA draws with their rough estimates, `draws_per_snr` per SNR. Every
/// draw carries random payload and has its own stream.
pub fn generate_channel_dataset(
    ofdm: &OfdmConfig,
    snrs: &[f64],
    draws_per_snr: usize,
    seed: u64,
) -> Result<ChannelDataset> {
    let link = LinkSimulator::new(ofdm, None)?;
    let jobs: Vec<(usize, usize)> = (0..snrs.len())
        .flat_map(|s| (0..draws_per_snr).map(move |i| (s, i)))
        .collect();
    let records = jobs
        .par_iter()
        .map(|&(s, i)| {
            let mut rng = rng_from_seed(derive_seed(seed, &[s as u64, i as u64]));
            let rx = link.send_prb(&[], snrs[s], &mut rng)?;
            Ok((rx.channel, RoughRecord { snr_db: snrs[s], cells: rx.rough.cells }))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut ds = ChannelDataset::new(ofdm.n_subcarriers, ofdm.n_symbols);
    for (ch, rough) in records {
        ds.push(ch, Some(rough));
    }
    Ok(ds)
}

/// Training pairs of a dataset that carries rough estimates.
pub fn dataset_pairs(ds: &ChannelDataset) -> Result<Vec<ChannelPair>> {
    if ds.rough.len() != ds.len() || ds.is_empty() {
        return Err(Error::InsufficientData("channel dataset has no rough estimates".into()));
    }
    (0..ds.len())
        .map(|i| {
            let truth = CsiGrid::new(ds.n_subcarriers, ds.n_symbols, ds.true_grid(i))?;
            let rough = CsiGrid::new(ds.n_subcarriers, ds.n_symbols, ds.rough[i].cells.clone())?;
            Ok(ChannelPair {
                h0: truth.to_real(),
                h_rough: rough.to_real(),
                snr_db: ds.rough[i].snr_db,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stage2Output {
    pub denoiser: LinearDenoiser,
    /// Held-out weighted loss at `t = 1..=T`.
    pub heldout_loss: Vec<f64>,
}

pub fn denoiser_geometry(cfg: &ExperimentConfig) -> Result<PatchGeometry> {
    PatchGeometry::new(cfg.ofdm.n_subcarriers, cfg.ofdm.n_symbols, &cfg.cdm.denoiser)
}

/// Fits the denoiser on `train` and scores it on a fresh held-out set drawn
/// over the same SNRs.
pub fn stage2_train(cfg: &ExperimentConfig, train: &ChannelDataset) -> Result<Stage2Output> {
    let sched = cfg.cdm.schedule()?;
    let geometry = denoiser_geometry(cfg)?;
    let pairs = dataset_pairs(train)?;
    let denoiser = train_linear_denoiser(
        &pairs,
        &sched,
        &geometry,
        &cfg.cdm.denoiser,
        derive_seed(cfg.master_seed, &[STAGE2, 0]),
    )?;
    let holdout = generate_channel_dataset(
        &cfg.ofdm,
        &cfg.train_snr_db,
        cfg.channel_data.holdout_per_snr.max(1),
        derive_seed(cfg.master_seed, &[STAGE2, 1]),
    )?;
    let held = dataset_pairs(&holdout)?;
    let wrapped = Denoiser::PerStepLinear(denoiser);
    let heldout_loss = (1..=sched.steps())
        .map(|t| weighted_loss(&wrapped, &held, &sched, t, derive_seed(cfg.master_seed, &[STAGE2, 2])))
        .collect::<Result<Vec<_>>>()?;
    let Denoiser::PerStepLinear(denoiser) = wrapped else {
        unreachable!()
    };
    Ok(Stage2Output { denoiser, heldout_loss })
}

/// Decoder refits of one CSI mode, one per training SNR.
#[derive(Debug, Clone, PartialEq)]
pub struct Stage3Output {
    pub mode: CsiMode,
    pub refits: Vec<(f64, PatchCodec)>,
}

impl Stage3Output {
    /// Refit trained at the SNR closest to `snr_db`; ties go to the lower.
    pub fn select(&self, snr_db: f64) -> Option<&PatchCodec> {
        self.refits
            .iter()
            .min_by(|a, b| (a.0 - snr_db).abs().total_cmp(&(b.0 - snr_db).abs()).then(a.0.total_cmp(&b.0)))
            .map(|(_, c)| c)
    }
}

/// Simulates the link for every training image, SNR and pass, and refits
/// the decoder per mode and SNR on what was received. All modes observe the
/// same channel draws.
pub fn stage3_refit(
    cfg: &ExperimentConfig,
    stage1: &Stage1Output,
    refiner: Option<Refiner<'_>>,
    images: &[Image],
    modes: &[CsiMode],
) -> Result<Vec<Stage3Output>> {
    let link = LinkSimulator::new(&cfg.ofdm, refiner)?;
    let pipe = stage1.pipeline();
    let mut out: Vec<Stage3Output> = modes.iter().map(|&mode| Stage3Output { mode, refits: Vec::new() }).collect();
    for (si, &snr) in cfg.train_snr_db.iter().enumerate() {
        let jobs: Vec<(usize, usize)> = (0..cfg.refit.passes.max(1))
            .flat_map(|p| (0..images.len()).map(move |i| (p, i)))
            .collect();
        let received = jobs
            .par_iter()
            .map(|&(pass, i)| {
                let key = [STAGE3, si as u64, pass as u64, i as u64];
                let mut ch_rng = rng_from_seed(derive_seed(cfg.master_seed, &[&key[..], &[0]].concat()));
                let mut rf_rng = rng_from_seed(derive_seed(cfg.master_seed, &[&key[..], &[1]].concat()));
                transmit_image(&pipe, &link, &images[i], snr, modes, &mut ch_rng, &mut rf_rng).map(|t| (i, t))
            })
            .collect::<Result<Vec<_>>>()?;
        for (m, slot) in out.iter_mut().enumerate() {
            let samples: Vec<RefitSample> = received
                .iter()
                .map(|(i, t)| {
                    let (fine, coarse) = pipe.codewords(&t.received[m].1);
                    RefitSample {
                        fine,
                        coarse,
                        target: images[*i].clone(),
                    }
                })
                .collect();
            slot.refits.push((snr, refit_decoder(&stage1.codec, &samples, cfg.refit.ridge)?));
            info!("refit {} decoder at {snr} dB on {} images", slot.mode, samples.len());
        }
    }
    Ok(out)
}
