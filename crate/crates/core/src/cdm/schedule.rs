use crate::error::{Error, Result};

/// Diffusion sequence `η_1 < … < η_T` with `η_0 = 0` and `α_t = η_t − η_{t−1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSchedule {
    t_steps: usize,
    eta: Vec<f64>,
    alpha: Vec<f64>,
    pub kappa0: f64,
    pub rho0: f64,
}

impl NoiseSchedule {
    /// `√η_t = √η_1 · r^{β_t}` with `β_t = ((t−1)/(T−1))^{ρ0}·(T−1)` and `r`
    /// fixed so that `t = T` lands on `√η_T`.
    pub fn build(t_steps: usize, eta1: f64, eta_t: f64, rho0: f64) -> Result<Self> {
        if t_steps < 2 {
            return Err(Error::InvalidArgument("schedule needs T ≥ 2".into()));
        }
        if !(eta1 > 0.0 && eta1 < eta_t && eta_t <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "schedule endpoints must satisfy 0 < η_1 < η_T ≤ 1, got {eta1}, {eta_t}"
            )));
        }
        if !(rho0 > 0.0) {
            return Err(Error::InvalidArgument("ρ0 must be positive".into()));
        }
        let span = (t_steps - 1) as f64;
        let (s1, st) = (eta1.sqrt(), eta_t.sqrt());
        let log_r = (st / s1).ln() / span;
        let mut eta: Vec<f64> = (1..=t_steps)
            .map(|t| {
                let beta = ((t - 1) as f64 / span).powf(rho0) * span;
                (s1 * (log_r * beta).exp()).powi(2)
            })
            .collect();
        eta[0] = eta1;
        eta[t_steps - 1] = eta_t;
        let mut alpha = Vec::with_capacity(t_steps);
        let mut prev = 0.0;
        for &e in &eta {
            if e <= prev {
                return Err(Error::InvalidArgument("schedule is not strictly increasing".into()));
            }
            alpha.push(e - prev);
            prev = e;
        }
        Ok(Self {
            t_steps,
            eta,
            alpha,
            kappa0: 1.0,
            rho0,
        })
    }

    pub fn with_kappa0(mut self, kappa0: f64) -> Self {
        self.kappa0 = kappa0;
        self
    }

    pub fn steps(&self) -> usize {
        self.t_steps
    }

    /// `η_t` for `t ∈ [0, T]`.
    pub fn eta(&self, t: usize) -> f64 {
        if t == 0 {
            0.0
        } else {
            self.eta[t - 1]
        }
    }

    /// `α_t` for `t ∈ [1, T]`.
    pub fn alpha(&self, t: usize) -> f64 {
        self.alpha[t - 1]
    }

    pub fn etas(&self) -> &[f64] {
        &self.eta
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alpha
    }

    pub fn kappa(&self, snr_db: f64) -> f64 {
        kappa_for_snr(self.kappa0, snr_db)
    }

    /// Per-step training weight `α_t / (2κ²η_tη_{t−1})`, using `η_1` for
    /// `η_0` at `t = 1`.
    pub fn loss_weight(&self, t: usize, kappa: f64) -> f64 {
        let prev = if t == 1 { self.eta(1) } else { self.eta(t - 1) };
        self.alpha(t) / (2.0 * kappa * kappa * self.eta(t) * prev)
    }

    /// `steps` decreasing step indices spread uniformly over `[1, T]`,
    /// starting at `T` and always ending at 1.
    pub fn inference_steps(&self, steps: usize) -> Result<Vec<usize>> {
        if steps == 0 || steps > self.t_steps {
            return Err(Error::InvalidArgument(format!(
                "inference steps must lie in [1, {}], got {steps}",
                self.t_steps
            )));
        }
        if steps == 1 {
            return Ok(vec![1]);
        }
        let span = (self.t_steps - 1) as f64;
        let mut seq: Vec<usize> = (0..steps)
            .map(|i| 1 + (span * (steps - 1 - i) as f64 / (steps - 1) as f64).round() as usize)
            .collect();
        seq.dedup();
        Ok(seq)
    }
}

/// `κ_s = κ0 · exp(−v_s / 10)`.
pub fn kappa_for_snr(kappa0: f64, snr_db: f64) -> f64 {
    kappa0 * (-snr_db / 10.0).exp()
}
