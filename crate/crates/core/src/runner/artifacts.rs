//! On-disk layout of stage outputs.
//!
//! ```text
//! <root>/channels.chd             stage two training set
//! <root>/denoiser.cdmd            stage two denoiser
//! <root>/denoiser_loss.csv        held-out loss per step
//! <root>/<surrogate>/codec.spc    stage one codec
//! <root>/<surrogate>/codebook_{fine,coarse}.sqc
//! <root>/<surrogate>/history.csv  per-epoch mse and cur
//! <root>/<surrogate>/refit-<mode>-<snr>.spc
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::stages::{denoiser_geometry, CodebookTraining, Stage1Output, Stage2Output, Stage3Output};
use super::sweep::write_csv;
use super::{CsiMode, ExperimentConfig};
use crate::cdm::{read_denoiser, write_denoiser, LinearDenoiser};
use crate::codebook::{read_codebook, write_codebook, Surrogate};
use crate::codec::{read_codec, write_codec, PatchCodec};
use crate::error::{Error, Result};
use crate::ofdm::{read_channel_dataset, write_channel_dataset, ChannelDataset};

#[derive(Debug, Clone)]
pub struct ArtifactStore {
    root: PathBuf,
}

#[derive(Serialize)]
struct HistoryRow {
    level: &'static str,
    epoch: usize,
    mse: f64,
    cur: f64,
}

#[derive(Serialize)]
struct LossRow {
    t: usize,
    weighted_loss: f64,
}

fn open(path: &Path, stage: &'static str) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingArtifact {
            stage,
            path: path.display().to_string(),
        },
        _ => e.into(),
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

impl ArtifactStore {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn surrogate_dir(&self, s: Surrogate) -> PathBuf {
        self.root.join(s.as_str())
    }

    pub fn codec_path(&self, s: Surrogate) -> PathBuf {
        self.surrogate_dir(s).join("codec.spc")
    }

    pub fn codebook_path(&self, s: Surrogate, level: &str) -> PathBuf {
        self.surrogate_dir(s).join(format!("codebook_{level}.sqc"))
    }

    pub fn history_path(&self, s: Surrogate) -> PathBuf {
        self.surrogate_dir(s).join("history.csv")
    }

    pub fn refit_path(&self, s: Surrogate, mode: CsiMode, snr_db: f64) -> PathBuf {
        self.surrogate_dir(s).join(format!("refit-{mode}-{snr_db}.spc"))
    }

    pub fn channels_path(&self) -> PathBuf {
        self.root.join("channels.chd")
    }

    pub fn denoiser_path(&self) -> PathBuf {
        self.root.join("denoiser.cdmd")
    }

    pub fn denoiser_loss_path(&self) -> PathBuf {
        self.root.join("denoiser_loss.csv")
    }

    pub fn save_stage1(&self, out: &Stage1Output) -> Result<()> {
        let s = out.surrogate;
        write_codec(create(&self.codec_path(s))?, &out.codec)?;
        write_codebook(create(&self.codebook_path(s, "fine"))?, &out.fine.codebook)?;
        write_codebook(create(&self.codebook_path(s, "coarse"))?, &out.coarse.codebook)?;
        let rows: Vec<HistoryRow> = [("fine", &out.fine), ("coarse", &out.coarse)]
            .into_iter()
            .flat_map(|(level, t)| {
                t.history.iter().map(move |e| HistoryRow {
                    level,
                    epoch: e.epoch,
                    mse: e.mse,
                    cur: e.cur,
                })
            })
            .collect();
        write_csv(create(&self.history_path(s))?, &rows)
    }

    /// Codec and codebooks; the training history is not restored.
    pub fn load_stage1(&self, cfg: &ExperimentConfig, s: Surrogate) -> Result<Stage1Output> {
        const STAGE: &str = "train-codebook";
        let codebook = |level: &str| -> Result<CodebookTraining> {
            Ok(CodebookTraining {
                codebook: read_codebook(open(&self.codebook_path(s, level), STAGE)?, cfg.codebook.decay, cfg.codebook.eps)?,
                history: Vec::new(),
            })
        };
        Ok(Stage1Output {
            surrogate: s,
            codec: read_codec(open(&self.codec_path(s), STAGE)?)?,
            fine: codebook("fine")?,
            coarse: codebook("coarse")?,
        })
    }

    pub fn save_channels(&self, ds: &ChannelDataset) -> Result<()> {
        write_channel_dataset(create(&self.channels_path())?, ds)
    }

    pub fn load_channels(&self) -> Result<ChannelDataset> {
        read_channel_dataset(open(&self.channels_path(), "gen-channel-data")?)
    }

    pub fn save_stage2(&self, out: &Stage2Output) -> Result<()> {
        write_denoiser(create(&self.denoiser_path())?, &out.denoiser)?;
        let rows: Vec<LossRow> = out
            .heldout_loss
            .iter()
            .enumerate()
            .map(|(i, &l)| LossRow { t: i + 1, weighted_loss: l })
            .collect();
        write_csv(create(&self.denoiser_loss_path())?, &rows)
    }

    pub fn load_denoiser(&self, cfg: &ExperimentConfig) -> Result<LinearDenoiser> {
        read_denoiser(
            open(&self.denoiser_path(), "train-denoiser")?,
            &denoiser_geometry(cfg)?,
            &cfg.cdm.denoiser.embedding,
        )
    }

    pub fn save_stage3(&self, s: Surrogate, out: &Stage3Output) -> Result<()> {
        for (snr, codec) in &out.refits {
            write_codec(create(&self.refit_path(s, out.mode, *snr))?, codec)?;
        }
        Ok(())
    }

    /// Refits for every training SNR of the configuration.
    pub fn load_stage3(&self, cfg: &ExperimentConfig, s: Surrogate, mode: CsiMode) -> Result<Stage3Output> {
        let refits = cfg
            .train_snr_db
            .iter()
            .map(|&snr| {
                let codec: PatchCodec = read_codec(open(&self.refit_path(s, mode, snr), "refit-decoder")?)?;
                Ok((snr, codec))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Stage3Output { mode, refits })
    }
}
