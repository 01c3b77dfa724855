//! Experiment configuration, stored as TOML.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cdm::CdmConfig;
use crate::codebook::{QuantizerConfig, DEFAULT_DECAY, DEFAULT_EPS};
use crate::codec::CodecConfig;
use crate::error::{Error, Result};
use crate::ofdm::OfdmConfig;

/// Source of the channel estimate used by the equalizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CsiMode {
    Perfect,
    Ls,
    Refined,
}

impl CsiMode {
    pub const ALL: [CsiMode; 3] = [CsiMode::Perfect, CsiMode::Ls, CsiMode::Refined];

    pub fn as_str(self) -> &'static str {
        match self {
            CsiMode::Perfect => "perfect",
            CsiMode::Ls => "ls",
            CsiMode::Refined => "refined",
        }
    }

    /// Stream index of this mode in per-trial seeding.
    pub fn stream(self) -> u64 {
        match self {
            CsiMode::Perfect => 0,
            CsiMode::Ls => 1,
            CsiMode::Refined => 2,
        }
    }
}

impl fmt::Display for CsiMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CsiMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "perfect" => Ok(CsiMode::Perfect),
            "ls" => Ok(CsiMode::Ls),
            "refined" => Ok(CsiMode::Refined),
            other => Err(Error::InvalidArgument(format!("unknown CSI mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CodebookConfig {
    pub size: usize,
    pub decay: f64,
    pub eps: f64,
    pub epochs: usize,
}

impl Default for CodebookConfig {
    fn default() -> Self {
        Self {
            size: 128,
            decay: DEFAULT_DECAY,
            eps: DEFAULT_EPS,
            epochs: 20,
        }
    }
}

/// Image corpus. Without `image_dir` a procedural corpus is generated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusConfig {
    pub image_dir: Option<String>,
    pub train_images: usize,
    pub test_images: usize,
    pub height: usize,
    pub width: usize,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            image_dir: None,
            train_images: 32,
            test_images: 8,
            height: 64,
            width: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChannelDataConfig {
    pub draws_per_snr: usize,
    pub holdout_per_snr: usize,
}

impl Default for ChannelDataConfig {
    fn default() -> Self {
        Self {
            draws_per_snr: 100,
            holdout_per_snr: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RefitConfig {
    pub ridge: f64,
    /// Channel realizations per training image and SNR.
    pub passes: usize,
}

impl Default for RefitConfig {
    fn default() -> Self {
        Self {
            ridge: 1.0,
            passes: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub master_seed: u64,
    pub snr_grid_db: Vec<f64>,
    /// SNRs for the channel dataset and the decoder refits.
    pub train_snr_db: Vec<f64>,
    pub trials_per_point: usize,
    pub csi_mode: CsiMode,
    pub ofdm: OfdmConfig,
    pub codec: CodecConfig,
    pub quantizer: QuantizerConfig,
    pub codebook: CodebookConfig,
    pub cdm: CdmConfig,
    pub corpus: CorpusConfig,
    pub channel_data: ChannelDataConfig,
    pub refit: RefitConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            master_seed: 2024,
            snr_grid_db: vec![0.0, 5.0, 10.0, 15.0, 20.0],
            train_snr_db: vec![0.0, 3.0, 6.0, 9.0, 12.0, 15.0],
            trials_per_point: 40,
            csi_mode: CsiMode::Refined,
            ofdm: OfdmConfig::default(),
            codec: CodecConfig::default(),
            quantizer: QuantizerConfig::default(),
            codebook: CodebookConfig::default(),
            cdm: CdmConfig::default(),
            corpus: CorpusConfig::default(),
            channel_data: ChannelDataConfig::default(),
            refit: RefitConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.snr_grid_db.is_empty() || self.train_snr_db.is_empty() {
            return Err(Error::Config("SNR grids must be nonempty".into()));
        }
        if self.snr_grid_db.iter().chain(&self.train_snr_db).any(|s| !s.is_finite()) {
            return Err(Error::Config("SNR values must be finite".into()));
        }
        if self.trials_per_point == 0 {
            return Err(Error::Config("trials_per_point must be >= 1".into()));
        }
        if self.codebook.epochs == 0 || self.codebook.size == 0 {
            return Err(Error::Config("codebook size and epochs must be >= 1".into()));
        }
        if self.corpus.train_images == 0 || self.corpus.test_images == 0 {
            return Err(Error::Config("corpus splits must be nonempty".into()));
        }
        self.ofdm.validate()?;
        self.quantizer.validate(self.codebook.size)?;
        self.codec.validate(3)?;
        self.cdm.schedule()?;
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml()?)?;
        Ok(())
    }
}
