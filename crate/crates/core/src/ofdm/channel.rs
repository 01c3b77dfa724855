//! Tapped-delay-line Rayleigh fading with additive white Gaussian noise.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{OfdmConfig, C64};
use crate::error::{Error, Result};

/// Extended Pedestrian A path delays in nanoseconds.
pub const EPA_DELAYS_NS: [f64; 7] = [0.0, 30.0, 70.0, 90.0, 110.0, 190.0, 410.0];
/// Extended Pedestrian A relative path powers in dB.
pub const EPA_POWERS_DB: [f64; 7] = [0.0, -1.0, -2.0, -3.0, -8.0, -17.2, -20.8];

/// One block-fading channel draw.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// Complex gains of the sample-spaced taps.
    pub taps: Vec<C64>,
    pub tap_delays_samples: Vec<usize>,
    /// `H[k] = Σ_l taps_l · exp(−j2πk·d_l/N_f)`.
    pub freq_response: Vec<C64>,
    /// Mean power of each merged tap, in dB (normalized profile).
    pub power_profile_db: Vec<f64>,
}

fn frequency_response(taps: &[C64], delays: &[usize], n_subcarriers: usize) -> Vec<C64> {
    (0..n_subcarriers)
        .map(|k| {
            taps.iter()
                .zip(delays)
                .map(|(&h, &d)| {
                    let phase = -2.0 * PI * (k * d % n_subcarriers) as f64 / n_subcarriers as f64;
                    h * C64::from_polar(1.0, phase)
                })
                .sum()
        })
        .collect()
}

impl ChannelRealization {
    pub fn from_taps(taps: Vec<C64>, delays: Vec<usize>, n_subcarriers: usize) -> Self {
        let freq_response = frequency_response(&taps, &delays, n_subcarriers);
        let power_profile_db = taps.iter().map(|h| 10.0 * h.norm_sqr().log10()).collect();
        Self {
            taps,
            tap_delays_samples: delays,
            freq_response,
            power_profile_db,
        }
    }

    /// Single unit tap at delay zero.
    pub fn identity(n_subcarriers: usize) -> Self {
        Self::from_taps(vec![C64::new(1.0, 0.0)], vec![0], n_subcarriers)
    }

    pub fn max_delay(&self) -> usize {
        self.tap_delays_samples.iter().copied().max().unwrap_or(0)
    }

    pub fn energy(&self) -> f64 {
        self.taps.iter().map(|h| h.norm_sqr()).sum()
    }
}

fn complex_normal<R: Rng + ?Sized>(variance: f64, rng: &mut R) -> C64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(s * re, s * im)
}

/// Draws a tapped-delay-line channel from a power-delay profile.
///
/// Linear powers are normalized to sum to one, delays are rounded to the
/// nearest sample and paths landing on the same sample are summed.
pub fn sample_tdl_channel<R: Rng + ?Sized>(
    delays_ns: &[f64],
    powers_db: &[f64],
    cfg: &OfdmConfig,
    sample_rate_hz: f64,
    rng: &mut R,
) -> Result<ChannelRealization> {
    if delays_ns.len() != powers_db.len() || delays_ns.is_empty() {
        return Err(Error::InvalidArgument("malformed power-delay profile".into()));
    }
    let linear: Vec<f64> = powers_db.iter().map(|p| 10f64.powf(p / 10.0)).collect();
    let total: f64 = linear.iter().sum();
    let mut delays: Vec<usize> = Vec::new();
    let mut taps: Vec<C64> = Vec::new();
    let mut mean_power: Vec<f64> = Vec::new();
    for (&ns, &p) in delays_ns.iter().zip(&linear) {
        let d = (ns * 1e-9 * sample_rate_hz).round() as usize;
        if d >= cfg.cp_len {
            return Err(Error::DelayExceedsCp {
                delay: d,
                cp_len: cfg.cp_len,
            });
        }
        let gain = complex_normal(p / total, rng);
        match delays.iter().position(|&x| x == d) {
            Some(i) => {
                taps[i] += gain;
                mean_power[i] += p / total;
            }
            None => {
                delays.push(d);
                taps.push(gain);
                mean_power.push(p / total);
            }
        }
    }
    let freq_response = frequency_response(&taps, &delays, cfg.n_subcarriers);
    Ok(ChannelRealization {
        taps,
        tap_delays_samples: delays,
        freq_response,
        power_profile_db: mean_power.iter().map(|p| 10.0 * p.log10()).collect(),
    })
}

pub fn sample_epa_channel<R: Rng + ?Sized>(
    cfg: &OfdmConfig,
    sample_rate_hz: f64,
    rng: &mut R,
) -> Result<ChannelRealization> {
    sample_tdl_channel(&EPA_DELAYS_NS, &EPA_POWERS_DB, cfg, sample_rate_hz, rng)
}

#[derive(Debug, Clone)]
pub struct ChannelOutput {
    pub samples: Vec<C64>,
    /// Complex noise variance per time-domain sample.
    pub noise_var: f64,
    pub signal_power: f64,
}

/// Convolves with the taps (truncated to the input length) and adds complex
/// Gaussian noise at `snr_db` relative to the mean received signal power.
/// An infinite SNR adds no noise.
pub fn apply_channel_detailed<R: Rng + ?Sized>(
    samples: &[C64],
    ch: &ChannelRealization,
    snr_db: f64,
    rng: &mut R,
) -> ChannelOutput {
    let n = samples.len();
    let mut out = vec![C64::new(0.0, 0.0); n];
    for (&h, &d) in ch.taps.iter().zip(&ch.tap_delays_samples) {
        for i in d..n {
            out[i] += h * samples[i - d];
        }
    }
    let signal_power = if n == 0 {
        0.0
    } else {
        out.iter().map(|x| x.norm_sqr()).sum::<f64>() / n as f64
    };
    let noise_var = if snr_db.is_finite() {
        signal_power / 10f64.powf(snr_db / 10.0)
    } else {
        0.0
    };
    if noise_var > 0.0 {
        for y in out.iter_mut() {
            *y += complex_normal(noise_var, rng);
        }
    }
    ChannelOutput {
        samples: out,
        noise_var,
        signal_power,
    }
}

pub fn apply_channel<R: Rng + ?Sized>(
    samples: &[C64],
    ch: &ChannelRealization,
    snr_db: f64,
    rng: &mut R,
) -> Vec<C64> {
    apply_channel_detailed(samples, ch, snr_db, rng).samples
}
