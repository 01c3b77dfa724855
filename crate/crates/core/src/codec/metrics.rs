//! PSNR, MS-SSIM and bit compression ratio.

use super::Image;
use crate::error::{Error, Result};

/// Reported PSNR for identical images.
pub const PSNR_CAP_DB: f64 = 99.0;
pub const MS_SSIM_WEIGHTS: [f64; 5] = [0.0448, 0.2856, 0.3001, 0.2363, 0.1333];
const WINDOW: usize = 11;
const SIGMA: f64 = 1.5;
const C1: f64 = (0.01 * 255.0) * (0.01 * 255.0);
const C2: f64 = (0.03 * 255.0) * (0.03 * 255.0);

#[derive(Debug, Clone, PartialEq)]
pub struct QualityReport {
    pub psnr_db: f64,
    pub ms_ssim: f64,
    pub bcr: f64,
    pub bits_sent: usize,
}

fn check_shapes(a: &Image, b: &Image) -> Result<()> {
    if !a.same_shape(b) {
        return Err(Error::DimensionMismatch("images differ in shape".into()));
    }
    Ok(())
}

pub fn mse(a: &Image, b: &Image) -> Result<f64> {
    check_shapes(a, b)?;
    let sum: f64 = a
        .pixels
        .iter()
        .zip(&b.pixels)
        .map(|(&x, &y)| (x as f64 - y as f64).powi(2))
        .sum();
    Ok(sum / a.len() as f64)
}

pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse <= 0.0 {
        PSNR_CAP_DB
    } else {
        (10.0 * (255.0f64 * 255.0 / mse).log10()).min(PSNR_CAP_DB)
    }
}

/// `10·log10(255²/MSE)`, capped at 99 dB.
pub fn psnr(a: &Image, b: &Image) -> Result<f64> {
    Ok(psnr_from_mse(mse(a, b)?))
}

/// Transmitted bits over raw image bits `H·W·O·8`.
pub fn bcr(bits_sent: usize, height: usize, width: usize, channels: usize) -> f64 {
    bits_sent as f64 / (height * width * channels * 8) as f64
}

struct Plane {
    h: usize,
    w: usize,
    v: Vec<f64>,
}

impl Plane {
    fn downsample(&self) -> Plane {
        let (h, w) = (self.h / 2, self.w / 2);
        let mut v = Vec::with_capacity(h * w);
        for y in 0..h {
            for x in 0..w {
                let s = self.v[2 * y * self.w + 2 * x]
                    + self.v[2 * y * self.w + 2 * x + 1]
                    + self.v[(2 * y + 1) * self.w + 2 * x]
                    + self.v[(2 * y + 1) * self.w + 2 * x + 1];
                v.push(s / 4.0);
            }
        }
        Plane { h, w, v }
    }

    /// Separable Gaussian filter over valid positions.
    fn filter(&self, kernel: &[f64]) -> Plane {
        let n = kernel.len();
        let w1 = self.w + 1 - n;
        let h1 = self.h + 1 - n;
        let mut rows = vec![0.0; self.h * w1];
        for y in 0..self.h {
            for x in 0..w1 {
                rows[y * w1 + x] = (0..n).map(|i| kernel[i] * self.v[y * self.w + x + i]).sum();
            }
        }
        let mut v = vec![0.0; h1 * w1];
        for y in 0..h1 {
            for x in 0..w1 {
                v[y * w1 + x] = (0..n).map(|i| kernel[i] * rows[(y + i) * w1 + x]).sum();
            }
        }
        Plane { h: h1, w: w1, v }
    }

    fn mul(&self, other: &Plane) -> Plane {
        Plane {
            h: self.h,
            w: self.w,
            v: self.v.iter().zip(&other.v).map(|(a, b)| a * b).collect(),
        }
    }
}

fn gaussian_kernel() -> Vec<f64> {
    let c = (WINDOW / 2) as f64;
    let k: Vec<f64> = (0..WINDOW)
        .map(|i| (-((i as f64 - c).powi(2)) / (2.0 * SIGMA * SIGMA)).exp())
        .collect();
    let s: f64 = k.iter().sum();
    k.into_iter().map(|x| x / s).collect()
}

/// Mean SSIM and mean contrast-structure term at one scale.
fn ssim_terms(a: &Plane, b: &Plane, kernel: &[f64]) -> (f64, f64) {
    let mu_a = a.filter(kernel);
    let mu_b = b.filter(kernel);
    let aa = a.mul(a).filter(kernel);
    let bb = b.mul(b).filter(kernel);
    let ab = a.mul(b).filter(kernel);
    let n = mu_a.v.len() as f64;
    let (mut ssim, mut cs) = (0.0, 0.0);
    for i in 0..mu_a.v.len() {
        let (ma, mb) = (mu_a.v[i], mu_b.v[i]);
        let va = aa.v[i] - ma * ma;
        let vb = bb.v[i] - mb * mb;
        let cov = ab.v[i] - ma * mb;
        let c = (2.0 * cov + C2) / (va + vb + C2);
        let l = (2.0 * ma * mb + C1) / (ma * ma + mb * mb + C1);
        cs += c;
        ssim += l * c;
    }
    (ssim / n, cs / n)
}

/// Number of scales usable for the given size (at most five).
pub fn ms_ssim_scales(height: usize, width: usize) -> usize {
    let mut side = height.min(width);
    let mut scales = 0;
    while scales < MS_SSIM_WEIGHTS.len() && side >= WINDOW {
        scales += 1;
        side /= 2;
    }
    scales
}

/// Multi-scale SSIM averaged over channels.
///
/// Images too small for five scales use the leading weights renormalized to
/// sum to one. Negative per-scale terms are clipped to zero so the result
/// stays in `[0, 1]`.
pub fn ms_ssim(a: &Image, b: &Image) -> Result<f64> {
    check_shapes(a, b)?;
    let scales = ms_ssim_scales(a.height, a.width);
    if scales == 0 {
        return Err(Error::InvalidArgument(format!(
            "image of {}x{} is smaller than the {WINDOW}x{WINDOW} window",
            a.height, a.width
        )));
    }
    let weights = &MS_SSIM_WEIGHTS[..scales];
    let total: f64 = weights.iter().sum();
    let kernel = gaussian_kernel();
    let mut acc = 0.0;
    for c in 0..a.channels {
        let plane = |img: &Image| Plane {
            h: img.height,
            w: img.width,
            v: (0..img.height * img.width)
                .map(|i| img.pixels[i * img.channels + c] as f64)
                .collect(),
        };
        let (mut pa, mut pb) = (plane(a), plane(b));
        let mut value = 1.0;
        for (j, &w) in weights.iter().enumerate() {
            let (ssim, cs) = ssim_terms(&pa, &pb, &kernel);
            let term = if j + 1 == scales { ssim } else { cs };
            value *= term.max(0.0).powf(w / total);
            if j + 1 < scales {
                pa = pa.downsample();
                pb = pb.downsample();
            }
        }
        acc += value;
    }
    Ok((acc / a.channels as f64).clamp(0.0, 1.0))
}
