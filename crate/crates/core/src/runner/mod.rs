//! Experiment orchestration: configuration, the three training stages,
//! evaluation sweeps and artifact persistence.

mod artifacts;
mod config;
mod corpus;
mod link;
mod pipeline;
mod stages;
mod sweep;

pub use artifacts::ArtifactStore;
pub use config::{
    ChannelDataConfig, CodebookConfig, CorpusConfig, CsiMode, ExperimentConfig, RefitConfig,
};
pub use corpus::{gaussian_mixture, image_corpus, load_image_dir, ImageCorpus, MixtureSpec};
pub use link::{count_bit_errors, LinkSimulator, ModeOutcome, ReceivedPrb, Refiner};
pub use pipeline::{transmit_image, ImageTransmission, IndexPayload, SemanticPipeline};
pub use stages::{
    collect_latents, dataset_pairs, denoiser_geometry, frozen_digest, generate_channel_dataset,
    stage1_train, stage2_train, stage3_refit, train_codebook, CodebookTraining, Stage1Output,
    Stage2Output, Stage3Output,
};
pub use sweep::{read_sweep_csv, run_csi_sweep, run_sweep, write_csv, CsiRow, SweepInputs, SweepRow};
