//! Ridge refit of both stages' affine back-projections on received latents.
//!
//! Every output pixel sits at one fine-patch location `l` and in one
//! quadrant `q` of its coarse patch, and is predicted as
//! `½(z_f·W_f[:, l] + b_f[l]) + ½(z_c·W_c[:, l_q] + b_c[l_q])`. Grouping the
//! parameters by `l` gives one design row per fine patch, shared by every
//! location, so a single Gram matrix serves all fine locations at once.

use log::warn;
use nalgebra::DMatrix;

use super::{extract_patches, Image, PatchCodec};
use crate::error::{Error, Result};
use crate::linalg::NormalEquations;

/// Latents as received after the channel, paired with the source image.
#[derive(Debug, Clone, PartialEq)]
pub struct RefitSample {
    pub fine: Vec<Vec<f64>>,
    pub coarse: Vec<Vec<f64>>,
    pub target: Image,
}

struct Layout {
    p: usize,
    channels: usize,
    nf: usize,
    nc: usize,
}

impl Layout {
    fn dim(&self) -> usize {
        self.nf + 1 + 4 * (self.nc + 1)
    }

    fn fine_len(&self) -> usize {
        self.p * self.p * self.channels
    }

    fn block(&self, q: usize) -> usize {
        self.nf + 1 + q * (self.nc + 1)
    }

    /// Coarse-patch location of fine location `l` in quadrant `q`.
    fn coarse_location(&self, l: usize, q: usize) -> usize {
        let c = l % self.channels;
        let pix = l / self.channels;
        let (dy, dx) = (pix / self.p, pix % self.p);
        let (qy, qx) = (q / 2, q % 2);
        ((dy + self.p * qy) * 2 * self.p + dx + self.p * qx) * self.channels + c
    }
}

/// Refits the decoder by ridge regression toward the current parameters,
/// minimizing pixel MSE before clamping. Encoder parameters are untouched.
pub fn refit_decoder(codec: &PatchCodec, samples: &[RefitSample], ridge: f64) -> Result<PatchCodec> {
    if samples.is_empty() {
        return Err(Error::InsufficientData("no refit samples".into()));
    }
    let lay = Layout {
        p: codec.fine.patch,
        channels: codec.channels,
        nf: codec.fine.latent_dim(),
        nc: codec.coarse.latent_dim(),
    };
    let d = lay.dim();
    let pf = lay.fine_len();
    let mut ne = NormalEquations::new(d, pf);
    for s in samples {
        let (h, w) = (s.target.height, s.target.width);
        let (nf, nc) = codec.latent_counts(h, w);
        if s.fine.len() != nf || s.coarse.len() != nc || s.target.channels != codec.channels {
            return Err(Error::DimensionMismatch("refit sample does not match its image".into()));
        }
        let targets = extract_patches(&s.target, lay.p)?;
        let per_row = w / lay.p;
        let mut x = DMatrix::zeros(nf, d);
        let mut y = DMatrix::zeros(nf, pf);
        for (i, (zf, t)) in s.fine.iter().zip(&targets).enumerate() {
            let (py, px) = (i / per_row, i % per_row);
            let j = (py / 2) * (per_row / 2) + px / 2;
            let q = (py % 2) * 2 + px % 2;
            for (k, &v) in zf.iter().enumerate() {
                x[(i, k)] = 0.5 * v;
            }
            x[(i, lay.nf)] = 0.5;
            let b = lay.block(q);
            for (k, &v) in s.coarse[j].iter().enumerate() {
                x[(i, b + k)] = 0.5 * v;
            }
            x[(i, b + lay.nc)] = 0.5;
            for (k, &v) in t.iter().enumerate() {
                y[(i, k)] = v;
            }
        }
        ne.accumulate(&x, &y, 1.0);
    }
    if ne.rows < d {
        warn!("decoder refit has {} rows for {d} parameters; relying on ridge", ne.rows);
    }

    let mut prior = DMatrix::zeros(d, pf);
    for l in 0..pf {
        for k in 0..lay.nf {
            prior[(k, l)] = codec.fine.dec_weight[(k, l)];
        }
        prior[(lay.nf, l)] = codec.fine.dec_bias[l];
        for q in 0..4 {
            let (b, lc) = (lay.block(q), lay.coarse_location(l, q));
            for k in 0..lay.nc {
                prior[(b + k, l)] = codec.coarse.dec_weight[(k, lc)];
            }
            prior[(b + lay.nc, l)] = codec.coarse.dec_bias[lc];
        }
    }
    let sol = ne.solve_ridge(ridge, Some(&prior));

    let mut out = codec.clone();
    for l in 0..pf {
        for k in 0..lay.nf {
            out.fine.dec_weight[(k, l)] = sol[(k, l)];
        }
        out.fine.dec_bias[l] = sol[(lay.nf, l)];
        for q in 0..4 {
            let (b, lc) = (lay.block(q), lay.coarse_location(l, q));
            for k in 0..lay.nc {
                out.coarse.dec_weight[(k, lc)] = sol[(b + k, l)];
            }
            out.coarse.dec_bias[lc] = sol[(b + lay.nc, l)];
        }
    }
    Ok(out)
}
