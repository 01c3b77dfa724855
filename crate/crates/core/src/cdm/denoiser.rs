//! Denoisers that predict `h_0` from `(h_t, h_rough, t, SNR)`.
//!
//! The trainable one is a per-step affine map applied at every subcarrier:
//! its input is a window of neighbouring subcarriers of `h_t` and `h_rough`
//! across all symbols plus the fused embedding, and its output is `h_0` at
//! the centre subcarrier for all symbols.

use std::io::{Read, Write};

use log::info;
use nalgebra::DMatrix;
use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{embed, forward_marginal, EmbeddingConfig, NoiseSchedule};
use crate::binio::{read_f32s, read_magic, read_u32, write_f32s};
use crate::error::{Error, Result};
use crate::linalg::NormalEquations;
use crate::rng::{derive_seed, rng_from_seed};

const MAGIC: &[u8; 4] = b"CDMD";

/// One training record: true and rough channel as interleaved real vectors
/// (`2·(t·N_f + k) + {0: re, 1: im}`) and the SNR it was observed at.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelPair {
    pub h0: Vec<f64>,
    pub h_rough: Vec<f64>,
    pub snr_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DenoiserConfig {
    /// Window half-width in subcarriers.
    pub window_radius: usize,
    pub window_stride: usize,
    /// Subcarrier locations sampled per draw and step during fitting.
    pub locations_per_draw: usize,
    pub ridge: f64,
    pub embedding: EmbeddingConfig,
}

impl Default for DenoiserConfig {
    fn default() -> Self {
        Self {
            window_radius: 36,
            window_stride: 12,
            locations_per_draw: 32,
            ridge: 1e-6,
            embedding: EmbeddingConfig::default(),
        }
    }
}

/// Window layout of the per-subcarrier affine map.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchGeometry {
    pub n_subcarriers: usize,
    pub n_symbols: usize,
    pub offsets: Vec<isize>,
    pub embed_dim: usize,
}

impl PatchGeometry {
    pub fn new(n_subcarriers: usize, n_symbols: usize, cfg: &DenoiserConfig) -> Result<Self> {
        if cfg.window_stride == 0 || n_subcarriers == 0 || n_symbols == 0 {
            return Err(Error::InvalidArgument("degenerate denoiser geometry".into()));
        }
        cfg.embedding.validate()?;
        let r = cfg.window_radius as isize;
        let offsets = (-r..=r).step_by(cfg.window_stride).collect();
        Ok(Self {
            n_subcarriers,
            n_symbols,
            offsets,
            embed_dim: cfg.embedding.fused_dim(),
        })
    }

    pub fn grid_len(&self) -> usize {
        2 * self.n_subcarriers * self.n_symbols
    }

    /// Inputs per location, excluding the bias.
    pub fn feature_dim(&self) -> usize {
        4 * self.offsets.len() * self.n_symbols + self.embed_dim
    }

    pub fn out_dim(&self) -> usize {
        2 * self.n_symbols
    }

    fn fill_row(&self, row: &mut [f64], h_t: &[f64], h_rough: &[f64], k: usize, emb: &[f64]) {
        let n_f = self.n_subcarriers as isize;
        let mut j = 0;
        for src in [h_t, h_rough] {
            for &o in &self.offsets {
                let kk = (k as isize + o).clamp(0, n_f - 1) as usize;
                for t in 0..self.n_symbols {
                    let idx = 2 * (t * self.n_subcarriers + kk);
                    row[j] = src[idx];
                    row[j + 1] = src[idx + 1];
                    j += 2;
                }
            }
        }
        row[j..j + emb.len()].copy_from_slice(emb);
        row[j + emb.len()] = 1.0;
    }

    fn design(&self, h_t: &[f64], h_rough: &[f64], locations: &[usize], emb: &[f64], scale: f64) -> DMatrix<f64> {
        let d = self.feature_dim() + 1;
        let mut buf = vec![0.0; locations.len() * d];
        for (row, &k) in buf.chunks_exact_mut(d).zip(locations) {
            self.fill_row(row, h_t, h_rough, k, emb);
            if scale != 1.0 {
                row.iter_mut().for_each(|x| *x *= scale);
            }
        }
        DMatrix::from_row_slice(locations.len(), d, &buf)
    }

    fn targets(&self, h0: &[f64], locations: &[usize], scale: f64) -> DMatrix<f64> {
        let m = self.out_dim();
        let mut buf = vec![0.0; locations.len() * m];
        for (row, &k) in buf.chunks_exact_mut(m).zip(locations) {
            for t in 0..self.n_symbols {
                let idx = 2 * (t * self.n_subcarriers + k);
                row[2 * t] = scale * h0[idx];
                row[2 * t + 1] = scale * h0[idx + 1];
            }
        }
        DMatrix::from_row_slice(locations.len(), m, &buf)
    }
}

/// Per-step affine maps; `weights[t−1]` is `(feature_dim + 1) × out_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearDenoiser {
    pub geometry: PatchGeometry,
    pub embedding: EmbeddingConfig,
    pub weights: Vec<DMatrix<f64>>,
}

impl LinearDenoiser {
    pub fn steps(&self) -> usize {
        self.weights.len()
    }

    pub fn predict(&self, h_t: &[f64], h_rough: &[f64], t: usize, snr_db: f64) -> Result<Vec<f64>> {
        let g = &self.geometry;
        if h_t.len() != g.grid_len() || h_rough.len() != g.grid_len() {
            return Err(Error::DimensionMismatch(format!(
                "denoiser expects {} reals, got {} and {}",
                g.grid_len(),
                h_t.len(),
                h_rough.len()
            )));
        }
        if t == 0 || t > self.weights.len() {
            return Err(Error::InvalidArgument(format!("step {t} outside [1, {}]", self.weights.len())));
        }
        let emb = embed(t, snr_db, &self.embedding).fused;
        let locations: Vec<usize> = (0..g.n_subcarriers).collect();
        let y = g.design(h_t, h_rough, &locations, &emb, 1.0) * &self.weights[t - 1];
        let mut out = vec![0.0; g.grid_len()];
        for k in 0..g.n_subcarriers {
            for s in 0..g.n_symbols {
                let idx = 2 * (s * g.n_subcarriers + k);
                out[idx] = y[(k, 2 * s)];
                out[idx + 1] = y[(k, 2 * s + 1)];
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Denoiser {
    /// Returns the stored ground truth.
    Oracle(Vec<f64>),
    /// Returns the rough estimate.
    Identity,
    PerStepLinear(LinearDenoiser),
}

impl Denoiser {
    pub fn predict(&self, h_t: &[f64], h_rough: &[f64], t: usize, snr_db: f64) -> Result<Vec<f64>> {
        match self {
            Denoiser::Oracle(h0) => Ok(h0.clone()),
            Denoiser::Identity => Ok(h_rough.to_vec()),
            Denoiser::PerStepLinear(lin) => lin.predict(h_t, h_rough, t, snr_db),
        }
    }
}

fn check_pairs(pairs: &[ChannelPair], geometry: &PatchGeometry) -> Result<()> {
    if pairs.is_empty() {
        return Err(Error::InsufficientData("denoiser training set is empty".into()));
    }
    let n = geometry.grid_len();
    if pairs.iter().any(|p| p.h0.len() != n || p.h_rough.len() != n) {
        return Err(Error::DimensionMismatch(format!("training pairs must hold {n} reals")));
    }
    Ok(())
}

/// Per-sample weight; a zero κ (noiseless diffusion) is given unit weight.
fn sample_weight(sched: &NoiseSchedule, t: usize, snr_db: f64) -> f64 {
    let kappa = sched.kappa(snr_db);
    sched.loss_weight(t, if kappa > 0.0 { kappa } else { 1.0 })
}

/// Fits one affine map per step by weighted ridge least squares on forward
/// samples `h_t` drawn from each pair.
pub fn train_linear_denoiser(
    pairs: &[ChannelPair],
    sched: &NoiseSchedule,
    geometry: &PatchGeometry,
    cfg: &DenoiserConfig,
    seed: u64,
) -> Result<LinearDenoiser> {
    check_pairs(pairs, geometry)?;
    let d = geometry.feature_dim() + 1;
    let per_draw = cfg.locations_per_draw.clamp(1, geometry.n_subcarriers);
    let weights: Vec<DMatrix<f64>> = (1..=sched.steps())
        .into_par_iter()
        .map(|t| {
            let mut rng = rng_from_seed(derive_seed(seed, &[t as u64]));
            let mut ne = NormalEquations::new(d, geometry.out_dim());
            for pair in pairs {
                let kappa = sched.kappa(pair.snr_db);
                let h_t = forward_marginal(&pair.h0, &pair.h_rough, t, sched, kappa, &mut rng);
                let mut locations = if per_draw == geometry.n_subcarriers {
                    (0..per_draw).collect()
                } else {
                    sample(&mut rng, geometry.n_subcarriers, per_draw).into_vec()
                };
                locations.sort_unstable();
                let emb = embed(t, pair.snr_db, &cfg.embedding).fused;
                let scale = sample_weight(sched, t, pair.snr_db).sqrt();
                let x = geometry.design(&h_t, &pair.h_rough, &locations, &emb, scale);
                let y = geometry.targets(&pair.h0, &locations, scale);
                ne.accumulate(&x, &y, 1.0);
            }
            ne.solve_ridge(cfg.ridge, None)
        })
        .collect();
    info!(
        "fitted {} per-step maps of {}x{} from {} draws",
        weights.len(),
        d,
        geometry.out_dim(),
        pairs.len()
    );
    Ok(LinearDenoiser {
        geometry: geometry.clone(),
        embedding: cfg.embedding.clone(),
        weights,
    })
}

/// Mean per-component weighted loss `w_t·‖ĥ_0 − h_0‖²/n` at step `t` over
/// fresh forward samples.
pub fn weighted_loss(
    denoiser: &Denoiser,
    pairs: &[ChannelPair],
    sched: &NoiseSchedule,
    t: usize,
    seed: u64,
) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::InsufficientData("no evaluation pairs".into()));
    }
    let mut rng = rng_from_seed(derive_seed(seed, &[t as u64]));
    let mut total = 0.0;
    for pair in pairs {
        let kappa = sched.kappa(pair.snr_db);
        let h_t = forward_marginal(&pair.h0, &pair.h_rough, t, sched, kappa, &mut rng);
        let pred = denoiser.predict(&h_t, &pair.h_rough, t, pair.snr_db)?;
        let sq: f64 = pred.iter().zip(&pair.h0).map(|(a, b)| (a - b).powi(2)).sum();
        total += sample_weight(sched, t, pair.snr_db) * sq / pair.h0.len() as f64;
    }
    Ok(total / pairs.len() as f64)
}

pub fn write_denoiser<W: Write>(mut w: W, den: &LinearDenoiser) -> Result<()> {
    let g = &den.geometry;
    w.write_all(MAGIC)?;
    w.write_all(&(den.weights.len() as u32).to_le_bytes())?;
    w.write_all(&(g.feature_dim() as u32).to_le_bytes())?;
    w.write_all(&(g.out_dim() as u32).to_le_bytes())?;
    for m in &den.weights {
        let row_major: Vec<f64> = m.transpose().iter().copied().collect();
        write_f32s(&mut w, &row_major)?;
    }
    Ok(())
}

/// Reads a denoiser; the window geometry must match the stored widths.
pub fn read_denoiser<R: Read>(
    mut r: R,
    geometry: &PatchGeometry,
    embedding: &EmbeddingConfig,
) -> Result<LinearDenoiser> {
    read_magic(&mut r, MAGIC)?;
    let t_steps = read_u32(&mut r)? as usize;
    let fd = read_u32(&mut r)? as usize;
    let od = read_u32(&mut r)? as usize;
    if fd != geometry.feature_dim() || od != geometry.out_dim() {
        return Err(Error::Format(format!(
            "denoiser file is {fd}->{od}, configuration expects {}->{}",
            geometry.feature_dim(),
            geometry.out_dim()
        )));
    }
    let weights = (0..t_steps)
        .map(|_| Ok(DMatrix::from_row_slice(fd + 1, od, &read_f32s(&mut r, (fd + 1) * od)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(LinearDenoiser {
        geometry: geometry.clone(),
        embedding: embedding.clone(),
        weights,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use rand::Rng;

    fn small_cfg() -> DenoiserConfig {
        DenoiserConfig {
            window_radius: 2,
            window_stride: 1,
            locations_per_draw: 16,
            ridge: 1e-6,
            embedding: EmbeddingConfig {
                d_time: 4,
                d_snr: 4,
                ..EmbeddingConfig::default()
            },
        }
    }

    fn smooth_pairs(n: usize, geometry: &PatchGeometry, with_offset: bool, seed: u64) -> Vec<ChannelPair> {
        let mut rng = rng_from_seed(seed);
        (0..n)
            .map(|_| {
                let a: f64 = rng.random_range(-1.0..1.0);
                let b: f64 = rng.random_range(-1.0..1.0);
                let h0: Vec<f64> = (0..geometry.grid_len())
                    .map(|i| a + b * ((i / 2) % geometry.n_subcarriers) as f64 / 16.0)
                    .collect();
                let h_rough = h0
                    .iter()
                    .map(|&x| if with_offset { x + rng.random_range(-0.3..0.3) } else { x })
                    .collect();
                ChannelPair {
                    h0,
                    h_rough,
                    snr_db: 10.0,
                }
            })
            .collect()
    }

    #[test]
    fn geometry_widths() {
        let g = PatchGeometry::new(1024, 14, &DenoiserConfig::default()).unwrap();
        assert_eq!(g.offsets, vec![-36, -24, -12, 0, 12, 24, 36]);
        assert_eq!(g.feature_dim(), 4 * 7 * 14 + 64);
        assert_eq!(g.out_dim(), 28);
    }

    #[test]
    fn noiseless_identical_inputs_are_reproduced() {
        let cfg = small_cfg();
        let g = PatchGeometry::new(16, 2, &cfg).unwrap();
        let sched = NoiseSchedule::build(4, 1e-4, 0.999, 0.5).unwrap().with_kappa0(0.0);
        let pairs = smooth_pairs(40, &g, false, 1);
        let den = train_linear_denoiser(&pairs, &sched, &g, &cfg, 7).unwrap();
        for t in 1..=4 {
            for p in &pairs {
                let pred = den.predict(&p.h0, &p.h_rough, t, p.snr_db).unwrap();
                let mse: f64 = pred.iter().zip(&p.h0).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
                    / pred.len() as f64;
                assert!(mse < 1e-8, "t={t} mse={mse}");
            }
        }
    }

    #[test]
    fn fitted_map_beats_rough_estimate() {
        let cfg = small_cfg();
        let g = PatchGeometry::new(16, 2, &cfg).unwrap();
        let sched = NoiseSchedule::build(4, 1e-4, 0.999, 0.5).unwrap();
        let train = smooth_pairs(300, &g, true, 2);
        let test = smooth_pairs(100, &g, true, 3);
        let den = Denoiser::PerStepLinear(train_linear_denoiser(&train, &sched, &g, &cfg, 9).unwrap());
        let fitted = weighted_loss(&den, &test, &sched, 4, 5).unwrap();
        let rough = weighted_loss(&Denoiser::Identity, &test, &sched, 4, 5).unwrap();
        assert!(fitted < rough, "{fitted} vs {rough}");
        let oracle = weighted_loss(&Denoiser::Oracle(test[0].h0.clone()), &test[..1], &sched, 4, 5).unwrap();
        assert_eq!(oracle, 0.0);
    }

    #[test]
    fn training_is_deterministic() {
        let cfg = small_cfg();
        let g = PatchGeometry::new(16, 2, &cfg).unwrap();
        let sched = NoiseSchedule::build(4, 1e-4, 0.999, 0.5).unwrap();
        let pairs = smooth_pairs(30, &g, true, 4);
        let a = train_linear_denoiser(&pairs, &sched, &g, &cfg, 11).unwrap();
        let b = train_linear_denoiser(&pairs, &sched, &g, &cfg, 11).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn file_round_trip() {
        let cfg = small_cfg();
        let g = PatchGeometry::new(16, 2, &cfg).unwrap();
        let sched = NoiseSchedule::build(3, 1e-4, 0.999, 0.5).unwrap();
        let den = train_linear_denoiser(&smooth_pairs(10, &g, true, 5), &sched, &g, &cfg, 1).unwrap();
        let mut buf = Vec::new();
        write_denoiser(&mut buf, &den).unwrap();
        assert_eq!(&buf[..4], b"CDMD");
        assert_eq!(&buf[4..8], &3u32.to_le_bytes());
        assert_eq!(buf.len(), 16 + 3 * 4 * (g.feature_dim() + 1) * g.out_dim());
        let back = read_denoiser(&buf[..], &g, &cfg.embedding).unwrap();
        for (a, b) in back.weights.iter().zip(&den.weights) {
            assert!((a - b).abs().max() < 1e-3 * b.abs().max().max(1.0));
        }
        let other = PatchGeometry::new(16, 3, &cfg).unwrap();
        assert!(read_denoiser(&buf[..], &other, &cfg.embedding).is_err());
    }
}
