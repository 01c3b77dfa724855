use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sinusoidal time/SNR embedding geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbeddingConfig {
    pub d_time: usize,
    pub d_snr: usize,
    /// Offset inside the logarithmic SNR normalization.
    pub eps_norm: f64,
    pub snr_max_db: f64,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        Self {
            d_time: 64,
            d_snr: 64,
            eps_norm: 1e-3,
            snr_max_db: 20.0,
        }
    }
}

impl EmbeddingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d_time == 0 || self.d_snr == 0 || self.d_time % 2 != 0 || self.d_snr % 2 != 0 {
            return Err(Error::InvalidArgument("embedding dimensions must be even and positive".into()));
        }
        if !(self.eps_norm > 0.0 && self.snr_max_db > self.eps_norm) {
            return Err(Error::InvalidArgument("SNR normalization range is empty".into()));
        }
        Ok(())
    }

    pub fn fused_dim(&self) -> usize {
        self.d_time.max(self.d_snr)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub time_emb: Vec<f64>,
    pub snr_emb: Vec<f64>,
    pub fused: Vec<f64>,
    pub gate_weights: (Vec<f64>, Vec<f64>),
}

/// `[cos(x·f_0), sin(x·f_0), cos(x·f_1), …]` with `f_k = 10000^{−2k/d}`.
pub fn sinusoidal(x: f64, d: usize) -> Vec<f64> {
    (0..d / 2)
        .flat_map(|k| {
            let f = 10000f64.powf(-2.0 * k as f64 / d as f64);
            [(x * f).cos(), (x * f).sin()]
        })
        .collect()
}

/// Logarithmic SNR normalization onto `[0, 1]`; the maximum maps to 1.
pub fn normalize_snr(snr_db: f64, cfg: &EmbeddingConfig) -> f64 {
    let v = if snr_db > cfg.snr_max_db {
        warn!("SNR {snr_db} dB above embedding maximum {} dB; clamped", cfg.snr_max_db);
        cfg.snr_max_db
    } else if snr_db < 0.0 {
        warn!("negative SNR {snr_db} dB clamped to 0 for embedding");
        0.0
    } else {
        snr_db
    };
    let e = cfg.eps_norm;
    (((v + e).log10() - e.log10()) / (cfg.snr_max_db.log10() - e.log10())).min(1.0)
}

/// Time and SNR embeddings fused by fixed equal gates. The shorter of the
/// two is zero-extended to the fused width.
pub fn embed(t: usize, snr_db: f64, cfg: &EmbeddingConfig) -> Embedding {
    let time_emb = sinusoidal(t as f64, cfg.d_time);
    let snr_emb = sinusoidal(normalize_snr(snr_db, cfg), cfg.d_snr);
    let d = cfg.fused_dim();
    let w_t = vec![0.5; cfg.d_time];
    let w_s = vec![0.5; cfg.d_snr];
    let mut fused = vec![0.0; d];
    for (i, (x, w)) in time_emb.iter().zip(&w_t).enumerate() {
        fused[i] += w * x;
    }
    for (i, (x, w)) in snr_emb.iter().zip(&w_s).enumerate() {
        fused[i] += w * x;
    }
    Embedding {
        time_emb,
        snr_emb,
        fused,
        gate_weights: (w_t, w_s),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn components_are_bounded() {
        let cfg = EmbeddingConfig::default();
        for t in 1..=20 {
            for snr in [0.0, 3.3, 20.0] {
                let e = embed(t, snr, &cfg);
                assert!(e.time_emb.iter().chain(&e.snr_emb).all(|x| x.abs() <= 1.0));
                assert_eq!(e.fused.len(), 64);
            }
        }
    }

    #[test]
    fn snr_normalization_endpoints() {
        let cfg = EmbeddingConfig::default();
        assert_eq!(normalize_snr(20.0, &cfg), 1.0);
        let mid = normalize_snr(1.0, &cfg);
        assert!((mid - (1.001f64.log10() + 3.0) / (20f64.log10() + 3.0)).abs() < 1e-15);
        assert_eq!(normalize_snr(0.0, &cfg), 0.0);
        assert_eq!(normalize_snr(35.0, &cfg), normalize_snr(20.0, &cfg));
    }

    #[test]
    fn first_pair_uses_unit_frequency() {
        let e = sinusoidal(3.0, 8);
        assert_eq!(e[0], 3f64.cos());
        assert_eq!(e[1], 3f64.sin());
    }

    #[test]
    fn unequal_widths_are_padded() {
        let cfg = EmbeddingConfig {
            d_time: 4,
            d_snr: 8,
            ..EmbeddingConfig::default()
        };
        let e = embed(2, 10.0, &cfg);
        assert_eq!(e.fused.len(), 8);
        assert_eq!(e.fused[6], 0.5 * e.snr_emb[6]);
    }
}
