//! Conditional-diffusion refinement of rough channel estimates.
//!
//! The forward process drifts the true channel `h_0` toward the rough
//! estimate while adding SNR-scaled Gaussian noise; reverse sampling starts
//! at the rough estimate and walks back with a denoiser's `h_0` predictions.
//! Channels are handled as interleaved real vectors of the full grid.

mod denoiser;
mod embed;
mod sampler;
mod schedule;

pub use denoiser::{
    read_denoiser, train_linear_denoiser, weighted_loss, write_denoiser, ChannelPair, Denoiser,
    DenoiserConfig, LinearDenoiser, PatchGeometry,
};
pub use embed::{embed, normalize_snr, sinusoidal, Embedding, EmbeddingConfig};
pub use sampler::{
    forward_marginal, forward_step, posterior_coefficients, posterior_step, posterior_step_to,
    reverse_sample,
};
pub use schedule::{kappa_for_snr, NoiseSchedule};

use serde::{Deserialize, Serialize};

/// Schedule and sampler settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CdmConfig {
    pub steps: usize,
    pub eta1: f64,
    pub eta_t: f64,
    pub rho0: f64,
    pub kappa0: f64,
    pub inference_steps: usize,
    pub denoiser: DenoiserConfig,
}

impl Default for CdmConfig {
    fn default() -> Self {
        Self {
            steps: 20,
            eta1: 1e-4,
            eta_t: 0.999,
            rho0: 0.5,
            kappa0: 1.0,
            inference_steps: 5,
            denoiser: DenoiserConfig::default(),
        }
    }
}

impl CdmConfig {
    pub fn schedule(&self) -> crate::Result<NoiseSchedule> {
        Ok(NoiseSchedule::build(self.steps, self.eta1, self.eta_t, self.rho0)?.with_kappa0(self.kappa0))
    }
}
