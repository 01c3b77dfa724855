//! Differentiable stand-ins for the hard quantizer.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{norm, Codebook};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Surrogate {
    Andvq,
    Nsvq,
    Ste,
}

impl Surrogate {
    pub const ALL: [Surrogate; 3] = [Surrogate::Andvq, Surrogate::Nsvq, Surrogate::Ste];

    pub fn as_str(self) -> &'static str {
        match self {
            Surrogate::Andvq => "andvq",
            Surrogate::Nsvq => "nsvq",
            Surrogate::Ste => "ste",
        }
    }
}

impl fmt::Display for Surrogate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Surrogate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "andvq" => Ok(Surrogate::Andvq),
            "nsvq" => Ok(Surrogate::Nsvq),
            "ste" => Ok(Surrogate::Ste),
            other => Err(Error::InvalidArgument(format!("unknown surrogate '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuantizerConfig {
    pub k_neighbors: usize,
    pub surrogate: Surrogate,
    pub rng_seed: u64,
}

impl Default for QuantizerConfig {
    fn default() -> Self {
        Self {
            k_neighbors: 5,
            surrogate: Surrogate::Andvq,
            rng_seed: 0,
        }
    }
}

impl QuantizerConfig {
    pub fn validate(&self, codebook_len: usize) -> Result<()> {
        if self.k_neighbors == 0 || self.k_neighbors > codebook_len {
            return Err(Error::InvalidArgument(format!(
                "k_neighbors = {} must lie in [1, {codebook_len}]",
                self.k_neighbors
            )));
        }
        Ok(())
    }
}

/// Output of one surrogate quantization.
///
/// `index` is always the hard nearest-neighbour index, which is what gets
/// transmitted. The gradient fields are the diagonal Jacobian factors of
/// `z_q` with respect to `z` and to the neighbour centroid.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizeResult {
    pub z_q: Vec<f64>,
    pub index: usize,
    pub d_avg: Vec<f64>,
    pub sigma_q: f64,
    pub grad_z_diag: Vec<f64>,
    pub grad_c_diag: Vec<f64>,
}

fn gaussian<R: Rng + ?Sized>(dim: usize, scale: f64, rng: &mut R) -> Vec<f64> {
    (0..dim)
        .map(|_| {
            let x: f64 = StandardNormal.sample(rng);
            scale * x
        })
        .collect()
}

/// Diagonal factors `(1 − u⊙u, u⊙u)` with `u = d_avg / ‖d_avg‖`.
///
/// A zero offset yields two zero vectors.
pub fn andvq_gradients(d_avg: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = norm(d_avg);
    if n == 0.0 {
        return (vec![0.0; d_avg.len()], vec![0.0; d_avg.len()]);
    }
    let uu: Vec<f64> = d_avg.iter().map(|d| (d / n) * (d / n)).collect();
    (uu.iter().map(|x| 1.0 - x).collect(), uu)
}

/// `z − ‖z − c̄‖·dir` with the stop-gradient direction `dir` held fixed:
/// the surrogate as a function of the input and the neighbour centroid.
pub fn andvq_surrogate(z: &[f64], centroid: &[f64], direction: &[f64]) -> Vec<f64> {
    let offset: Vec<f64> = z.iter().zip(centroid).map(|(a, b)| a - b).collect();
    let m = norm(&offset);
    z.iter().zip(direction).map(|(zi, ui)| zi - m * ui).collect()
}

/// Moves `z` by `‖d_avg‖` against the noisy direction `d_avg + v_n`.
///
/// Returns `None` when the direction vector vanishes twice in a row.
pub(crate) fn andvq_step<R: Rng + ?Sized>(
    z: &[f64],
    d_avg: &[f64],
    sigma_q: f64,
    rng: &mut R,
) -> Option<Vec<f64>> {
    let magnitude = norm(d_avg);
    for _ in 0..2 {
        let noise = gaussian(z.len(), sigma_q, rng);
        let v_d: Vec<f64> = d_avg.iter().zip(&noise).map(|(d, v)| d + v).collect();
        let v_norm = norm(&v_d);
        if v_norm > 0.0 {
            return Some(
                z.iter()
                    .zip(&v_d)
                    .map(|(zi, vi)| zi - magnitude * vi / v_norm)
                    .collect(),
            );
        }
    }
    None
}

/// ANDVQ forward pass with K-NN adaptive noise.
pub fn andvq_forward<R: Rng + ?Sized>(
    z: &[f64],
    cb: &Codebook,
    k_neighbors: usize,
    rng: &mut R,
) -> Result<QuantizeResult> {
    let (index, _) = cb.nearest(z)?;
    let knn = cb.knn(z, k_neighbors)?;
    let d_avg = cb.avg_offset(z, &knn);
    let sigma_q = cb.adaptive_sigma(z, &knn);
    if norm(&d_avg) == 0.0 {
        let zeros = vec![0.0; z.len()];
        return Ok(QuantizeResult {
            z_q: z.to_vec(),
            index,
            d_avg,
            sigma_q,
            grad_z_diag: zeros.clone(),
            grad_c_diag: zeros,
        });
    }
    let z_q = andvq_step(z, &d_avg, sigma_q, rng).unwrap_or_else(|| z.to_vec());
    let (grad_z_diag, grad_c_diag) = andvq_gradients(&d_avg);
    Ok(QuantizeResult {
        z_q,
        index,
        d_avg,
        sigma_q,
        grad_z_diag,
        grad_c_diag,
    })
}

/// STE and NSVQ baselines.
pub fn baseline_forward<R: Rng + ?Sized>(
    z: &[f64],
    cb: &Codebook,
    surrogate: Surrogate,
    rng: &mut R,
) -> Result<QuantizeResult> {
    let (index, c) = cb.nearest(z)?;
    let offset: Vec<f64> = z.iter().zip(c).map(|(a, b)| a - b).collect();
    let dist = norm(&offset);
    match surrogate {
        Surrogate::Ste => Ok(QuantizeResult {
            z_q: c.to_vec(),
            index,
            d_avg: offset,
            sigma_q: dist,
            grad_z_diag: vec![1.0; z.len()],
            grad_c_diag: vec![0.0; z.len()],
        }),
        Surrogate::Nsvq => {
            let w = gaussian(z.len(), 1.0, rng);
            let w_norm = norm(&w);
            let w_hat: Vec<f64> = w.iter().map(|x| x / w_norm).collect();
            let z_q = z.iter().zip(&w_hat).map(|(zi, wi)| zi + dist * wi).collect();
            // ∂z_q/∂z = I + ŵ ûᵀ and ∂z_q/∂c = −ŵ ûᵀ, diagonals only.
            let grad_c_diag: Vec<f64> = if dist > 0.0 {
                w_hat
                    .iter()
                    .zip(&offset)
                    .map(|(wi, oi)| -wi * oi / dist)
                    .collect()
            } else {
                vec![0.0; z.len()]
            };
            let grad_z_diag = grad_c_diag.iter().map(|g| 1.0 - g).collect();
            Ok(QuantizeResult {
                z_q,
                index,
                d_avg: offset,
                sigma_q: dist,
                grad_z_diag,
                grad_c_diag,
            })
        }
        Surrogate::Andvq => Err(Error::InvalidArgument(
            "baseline_forward handles STE and NSVQ only".into(),
        )),
    }
}

/// Dispatches to the configured surrogate.
pub fn quantize<R: Rng + ?Sized>(
    z: &[f64],
    cb: &Codebook,
    cfg: &QuantizerConfig,
    rng: &mut R,
) -> Result<QuantizeResult> {
    match cfg.surrogate {
        Surrogate::Andvq => andvq_forward(z, cb, cfg.k_neighbors, rng),
        s => baseline_forward(z, cb, s, rng),
    }
}
