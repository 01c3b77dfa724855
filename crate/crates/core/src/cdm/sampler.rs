//! Forward diffusion toward the rough estimate and posterior reverse sampling.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{Denoiser, NoiseSchedule};
use crate::error::{Error, Result};

fn add_noise<R: Rng + ?Sized>(x: &mut [f64], std: f64, rng: &mut R) {
    if std > 0.0 {
        for v in x.iter_mut() {
            let n: f64 = StandardNormal.sample(rng);
            *v += std * n;
        }
    }
}

/// `h_t = h_0 + η_t·(h_rough − h_0) + κ·√η_t·ξ`.
pub fn forward_marginal<R: Rng + ?Sized>(
    h0: &[f64],
    h_rough: &[f64],
    t: usize,
    sched: &NoiseSchedule,
    kappa: f64,
    rng: &mut R,
) -> Vec<f64> {
    let eta = sched.eta(t);
    let mut h: Vec<f64> = h0.iter().zip(h_rough).map(|(&a, &r)| a + eta * (r - a)).collect();
    add_noise(&mut h, kappa * eta.sqrt(), rng);
    h
}

/// One transition `h_t = h_{t−1} + α_t·Δ + κ·√α_t·ξ` with `Δ = h_rough − h_0`.
pub fn forward_step<R: Rng + ?Sized>(
    h_prev: &[f64],
    delta: &[f64],
    t: usize,
    sched: &NoiseSchedule,
    kappa: f64,
    rng: &mut R,
) -> Vec<f64> {
    let a = sched.alpha(t);
    let mut h: Vec<f64> = h_prev.iter().zip(delta).map(|(&x, &d)| x + a * d).collect();
    add_noise(&mut h, kappa * a.sqrt(), rng);
    h
}

/// Coefficients of `q(h_s | h_t, h_0)` for `s < t`: mean `c_t·h_t + c_0·h_0`
/// and variance `κ²·v`, returned as `(c_t, c_0, v)`.
pub fn posterior_coefficients(sched: &NoiseSchedule, t: usize, s: usize) -> (f64, f64, f64) {
    let (et, es) = (sched.eta(t), sched.eta(s));
    let ct = es / et;
    (ct, 1.0 - ct, es * (et - es) / et)
}

/// Samples `h_s` given `h_t` and a prediction of `h_0`. Landing on `s = 0`
/// returns the prediction itself.
pub fn posterior_step_to<R: Rng + ?Sized>(
    h_t: &[f64],
    h0_pred: &[f64],
    t: usize,
    s: usize,
    sched: &NoiseSchedule,
    kappa: f64,
    rng: &mut R,
) -> Vec<f64> {
    debug_assert!(s < t);
    if s == 0 {
        return h0_pred.to_vec();
    }
    let (ct, c0, v) = posterior_coefficients(sched, t, s);
    let mut h: Vec<f64> = h_t.iter().zip(h0_pred).map(|(&x, &p)| ct * x + c0 * p).collect();
    add_noise(&mut h, kappa * v.sqrt(), rng);
    h
}

/// Single reverse transition `t → t − 1`.
pub fn posterior_step<R: Rng + ?Sized>(
    h_t: &[f64],
    h0_pred: &[f64],
    t: usize,
    sched: &NoiseSchedule,
    kappa: f64,
    rng: &mut R,
) -> Vec<f64> {
    posterior_step_to(h_t, h0_pred, t, t - 1, sched, kappa, rng)
}

/// Refines `h_rough` by reverse sampling from `h_T ~ N(h_rough, κ²η_T I)`
/// over `steps` step indices ending at `t = 1`.
pub fn reverse_sample<R: Rng + ?Sized>(
    h_rough: &[f64],
    snr_db: f64,
    sched: &NoiseSchedule,
    denoiser: &Denoiser,
    steps: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let seq = sched.inference_steps(steps)?;
    let kappa = sched.kappa(snr_db);
    let mut h = h_rough.to_vec();
    add_noise(&mut h, kappa * sched.eta(sched.steps()).sqrt(), rng);
    for (i, &t) in seq.iter().enumerate() {
        let pred = denoiser.predict(&h, h_rough, t, snr_db)?;
        if pred.len() != h.len() {
            return Err(Error::DimensionMismatch("denoiser output length".into()));
        }
        let s = seq.get(i + 1).copied().unwrap_or(0);
        h = posterior_step_to(&h, &pred, t, s, sched, kappa, rng);
    }
    Ok(h)
}
