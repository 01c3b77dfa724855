//! Closed-form two-level patch codec and image quality metrics.
//!
//! The fine stage codes `p×p` patches and the coarse stage codes `2p×2p`
//! patches of the same image, each by projection onto its leading principal
//! components. Decoding back-projects both stages, places every coarse patch
//! over the fine grid it covers and averages the two reconstructions.

mod file;
mod image;
mod latent;
mod metrics;
mod refit;

pub use file::{read_codec, write_codec};
pub use image::{read_pnm, synthetic_image, write_pnm, Image};
pub use latent::{read_latents, write_latents};
pub use metrics::{
    bcr, ms_ssim, ms_ssim_scales, mse, psnr, psnr_from_mse, QualityReport, MS_SSIM_WEIGHTS,
    PSNR_CAP_DB,
};
pub use refit::{refit_decoder, RefitSample};

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::codebook::LatentBatch;
use crate::error::{Error, Result};
use crate::linalg::sorted_symmetric_eigen;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CodecConfig {
    /// Fine patch side `p`; the coarse side is `2p`.
    pub fine_patch: usize,
    pub latent_dim_fine: usize,
    pub latent_dim_coarse: usize,
}

impl Default for CodecConfig {
    fn default() -> Self {
        Self {
            fine_patch: 8,
            latent_dim_fine: 16,
            latent_dim_coarse: 32,
        }
    }
}

impl CodecConfig {
    pub fn coarse_patch(&self) -> usize {
        2 * self.fine_patch
    }

    pub fn validate(&self, channels: usize) -> Result<()> {
        if self.fine_patch == 0 {
            return Err(Error::InvalidArgument("patch size must be positive".into()));
        }
        let pf = self.fine_patch * self.fine_patch * channels;
        let pc = 4 * pf;
        if self.latent_dim_fine == 0 || self.latent_dim_fine > pf {
            return Err(Error::InvalidArgument(format!("fine latent dim must lie in [1, {pf}]")));
        }
        if self.latent_dim_coarse == 0 || self.latent_dim_coarse > pc {
            return Err(Error::InvalidArgument(format!("coarse latent dim must lie in [1, {pc}]")));
        }
        Ok(())
    }
}

/// One stage: encoder projection and (refittable) affine decoder.
#[derive(Debug, Clone, PartialEq)]
pub struct Stage {
    pub patch: usize,
    pub channels: usize,
    pub mean: Vec<f64>,
    /// `N × P` with orthonormal rows.
    pub basis: DMatrix<f64>,
    /// Variance captured by each basis row, non-increasing.
    pub explained: Vec<f64>,
    /// Back-projection `N × P`; starts equal to `basis`.
    pub dec_weight: DMatrix<f64>,
    /// Starts equal to `mean`.
    pub dec_bias: Vec<f64>,
}

impl Stage {
    pub fn patch_len(&self) -> usize {
        self.patch * self.patch * self.channels
    }

    pub fn latent_dim(&self) -> usize {
        self.basis.nrows()
    }

    fn fit(patches: &[Vec<f64>], patch: usize, channels: usize, latent_dim: usize) -> Result<Self> {
        if patches.len() < latent_dim {
            return Err(Error::InsufficientData(format!(
                "{} training patches for a {latent_dim}-dimensional basis",
                patches.len()
            )));
        }
        let p = patch * patch * channels;
        let n = patches.len() as f64;
        let mut mean = vec![0.0; p];
        for v in patches {
            mean.iter_mut().zip(v).for_each(|(m, x)| *m += x / n);
        }
        let centered = DMatrix::from_fn(patches.len(), p, |i, j| patches[i][j] - mean[j]);
        let mut cov = DMatrix::zeros(p, p);
        cov.gemm_tr(1.0 / n, &centered, &centered, 0.0);
        let (values, vectors) = sorted_symmetric_eigen(cov);
        let basis = vectors.columns(0, latent_dim).transpose();
        Ok(Self {
            patch,
            channels,
            explained: values[..latent_dim].iter().map(|v| v.max(0.0)).collect(),
            dec_weight: basis.clone(),
            dec_bias: mean.clone(),
            mean,
            basis,
        })
    }

    fn project(&self, patch: &[f64]) -> Vec<f64> {
        let centered: Vec<f64> = patch.iter().zip(&self.mean).map(|(x, m)| x - m).collect();
        (0..self.latent_dim())
            .map(|r| self.basis.row(r).iter().zip(&centered).map(|(b, c)| b * c).sum())
            .collect()
    }

    fn back_project(&self, z: &[f64]) -> Vec<f64> {
        let mut out = self.dec_bias.clone();
        for (r, &zr) in z.iter().enumerate() {
            if zr != 0.0 {
                for (o, w) in out.iter_mut().zip(self.dec_weight.row(r).iter()) {
                    *o += zr * w;
                }
            }
        }
        out
    }

    fn hash_encoder<H: Hasher>(&self, h: &mut H) {
        self.patch.hash(h);
        self.channels.hash(h);
        for v in self.mean.iter().chain(self.basis.iter()) {
            v.to_bits().hash(h);
        }
    }
}

/// Patches in raster order (left to right, top to bottom), each laid out as
/// `(dy, dx, channel)`.
pub fn extract_patches(img: &Image, patch: usize) -> Result<Vec<Vec<f64>>> {
    if patch == 0 || img.height % patch != 0 || img.width % patch != 0 {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} image is not divisible into {patch}x{patch} patches",
            img.height, img.width
        )));
    }
    let mut out = Vec::with_capacity((img.height / patch) * (img.width / patch));
    for py in 0..img.height / patch {
        for px in 0..img.width / patch {
            let mut v = Vec::with_capacity(patch * patch * img.channels);
            for dy in 0..patch {
                let start = img.index(py * patch + dy, px * patch, 0);
                v.extend(img.pixels[start..start + patch * img.channels].iter().map(|&b| b as f64));
            }
            out.push(v);
        }
    }
    Ok(out)
}

/// Writes patch vectors back into a `height × width × channels` buffer.
fn place_patches(
    out: &mut [f64],
    patches: &[Vec<f64>],
    patch: usize,
    width: usize,
    channels: usize,
    scale: f64,
) {
    let per_row = width / patch;
    for (i, v) in patches.iter().enumerate() {
        let (py, px) = (i / per_row, i % per_row);
        for dy in 0..patch {
            let start = ((py * patch + dy) * width + px * patch) * channels;
            let src = &v[dy * patch * channels..(dy + 1) * patch * channels];
            for (o, s) in out[start..start + src.len()].iter_mut().zip(src) {
                *o += scale * s;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatchCodec {
    pub config: CodecConfig,
    pub channels: usize,
    pub fine: Stage,
    pub coarse: Stage,
}

impl PatchCodec {
    /// Fits both stages' principal-component bases on every patch of the
    /// training images.
    pub fn fit(images: &[Image], cfg: &CodecConfig) -> Result<Self> {
        let first = images
            .first()
            .ok_or_else(|| Error::InsufficientData("no training images".into()))?;
        let channels = first.channels;
        cfg.validate(channels)?;
        if images.iter().any(|im| im.channels != channels) {
            return Err(Error::DimensionMismatch("training images differ in channel count".into()));
        }
        let mut fine = Vec::new();
        let mut coarse = Vec::new();
        for im in images {
            fine.extend(extract_patches(im, cfg.fine_patch)?);
            coarse.extend(extract_patches(im, cfg.coarse_patch())?);
        }
        Ok(Self {
            config: cfg.clone(),
            channels,
            fine: Stage::fit(&fine, cfg.fine_patch, channels, cfg.latent_dim_fine)?,
            coarse: Stage::fit(&coarse, cfg.coarse_patch(), channels, cfg.latent_dim_coarse)?,
        })
    }

    pub fn latent_counts(&self, height: usize, width: usize) -> (usize, usize) {
        let (p, q) = (self.fine.patch, self.coarse.patch);
        ((height / p) * (width / p), (height / q) * (width / q))
    }

    fn check_image(&self, img: &Image) -> Result<()> {
        let q = self.coarse.patch;
        if img.channels != self.channels || img.height % q != 0 || img.width % q != 0 {
            return Err(Error::DimensionMismatch(format!(
                "{}x{}x{} image does not fit {q}-pixel patches over {} channels",
                img.height, img.width, img.channels, self.channels
            )));
        }
        Ok(())
    }

    pub fn encode(&self, img: &Image) -> Result<(LatentBatch, LatentBatch)> {
        self.check_image(img)?;
        let enc = |stage: &Stage| -> Result<LatentBatch> {
            let patches = extract_patches(img, stage.patch)?;
            Ok(LatentBatch::new(patches.iter().map(|p| stage.project(p)).collect()))
        };
        Ok((enc(&self.fine)?, enc(&self.coarse)?))
    }

    /// Fused reconstruction before clamping and rounding.
    pub fn decode_f64(
        &self,
        fine: &[Vec<f64>],
        coarse: &[Vec<f64>],
        height: usize,
        width: usize,
    ) -> Result<Vec<f64>> {
        let (nf, nc) = self.latent_counts(height, width);
        let q = self.coarse.patch;
        if height % q != 0 || width % q != 0 || fine.len() != nf || coarse.len() != nc {
            return Err(Error::DimensionMismatch(format!(
                "{}+{} latents for a {height}x{width} image, expected {nf}+{nc}",
                fine.len(),
                coarse.len()
            )));
        }
        if fine.iter().any(|z| z.len() != self.fine.latent_dim())
            || coarse.iter().any(|z| z.len() != self.coarse.latent_dim())
        {
            return Err(Error::DimensionMismatch("latent width".into()));
        }
        let mut out = vec![0.0; height * width * self.channels];
        let rf: Vec<Vec<f64>> = fine.iter().map(|z| self.fine.back_project(z)).collect();
        let rc: Vec<Vec<f64>> = coarse.iter().map(|z| self.coarse.back_project(z)).collect();
        place_patches(&mut out, &rf, self.fine.patch, width, self.channels, 0.5);
        place_patches(&mut out, &rc, self.coarse.patch, width, self.channels, 0.5);
        Ok(out)
    }

    pub fn decode(&self, fine: &[Vec<f64>], coarse: &[Vec<f64>], height: usize, width: usize) -> Result<Image> {
        let v = self.decode_f64(fine, coarse, height, width)?;
        Image::from_f64(height, width, self.channels, &v)
    }

    /// Digest of the encoder (means and bases); the decoder is excluded.
    pub fn encoder_digest(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.fine.hash_encoder(&mut h);
        self.coarse.hash_encoder(&mut h);
        h.finish()
    }
}
