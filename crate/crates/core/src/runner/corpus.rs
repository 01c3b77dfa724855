//! Training and test corpora.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::CorpusConfig;
use crate::codec::{read_pnm, synthetic_image, Image};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};

/// Shape of the canonical synthetic-mixture latent corpus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureSpec {
    pub points: usize,
    pub dim: usize,
    pub components: usize,
    /// Centres are uniform in `[-spread, spread]` per coordinate.
    pub spread: f64,
}

impl Default for MixtureSpec {
    fn default() -> Self {
        Self {
            points: 4096,
            dim: 16,
            components: 8,
            spread: 6.0,
        }
    }
}

/// Isotropic unit-variance Gaussian mixture with equiprobable components.
pub fn gaussian_mixture<R: Rng + ?Sized>(spec: &MixtureSpec, rng: &mut R) -> Vec<Vec<f64>> {
    let centres: Vec<Vec<f64>> = (0..spec.components.max(1))
        .map(|_| (0..spec.dim).map(|_| rng.random_range(-spec.spread..=spec.spread)).collect())
        .collect();
    (0..spec.points)
        .map(|_| {
            let c = &centres[rng.random_range(0..centres.len())];
            c.iter()
                .map(|&m| {
                    let x: f64 = StandardNormal.sample(rng);
                    m + x
                })
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageCorpus {
    pub train: Vec<Image>,
    pub test: Vec<Image>,
}

/// Loads every PPM/PGM file of `dir` in name order.
pub fn load_image_dir(dir: &Path) -> Result<Vec<Image>> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            matches!(
                p.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref(),
                Some("ppm" | "pgm" | "pnm")
            )
        })
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| read_pnm(BufReader::new(File::open(p)?)))
        .collect()
}

/// Builds the train/test split. Directory images are split in name order;
/// otherwise procedural scenes are drawn from disjoint streams.
pub fn image_corpus(cfg: &CorpusConfig, seed: u64) -> Result<ImageCorpus> {
    if let Some(dir) = &cfg.image_dir {
        let mut all = load_image_dir(Path::new(dir))?;
        let need = cfg.train_images + cfg.test_images;
        if all.len() < need {
            return Err(Error::InsufficientData(format!(
                "{dir} holds {} images, {need} required",
                all.len()
            )));
        }
        all.truncate(need);
        let test = all.split_off(cfg.train_images);
        return Ok(ImageCorpus { train: all, test });
    }
    let draw = |split: u64, n: usize| -> Vec<Image> {
        (0..n)
            .map(|i| {
                let mut rng = rng_from_seed(derive_seed(seed, &[split, i as u64]));
                synthetic_image(cfg.height, cfg.width, &mut rng)
            })
            .collect()
    };
    Ok(ImageCorpus {
        train: draw(0, cfg.train_images),
        test: draw(1, cfg.test_images),
    })
}
