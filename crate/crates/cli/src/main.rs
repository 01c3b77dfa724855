use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;

use semlink::cdm::Denoiser;
use semlink::codebook::Surrogate;
use semlink::codec::{ms_ssim, psnr, read_pnm, write_pnm};
use semlink::rng::{derive_seed, trial_rng};
use semlink::runner::{
    generate_channel_dataset, image_corpus, run_sweep, stage1_train, stage2_train, stage3_refit,
    transmit_image, write_csv, ArtifactStore, CsiMode, ExperimentConfig, LinkSimulator, Refiner,
    SweepInputs,
};

/// Vector-quantized semantic link over OFDM: training stages and sweeps.
#[derive(Parser)]
#[command(name = "semlink", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML experiment configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Artifact directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// CSI mode; sweeps default to all modes.
    #[arg(long, global = true)]
    csi: Option<CsiMode>,
    #[arg(long, global = true)]
    surrogate: Option<Surrogate>,
    /// Comma-separated SNR list in dB, replacing the configured grid.
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    snr: Option<Vec<f64>>,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the codec and train both codebooks.
    TrainCodebook,
    /// Simulate EPA draws with rough estimates over the training SNRs.
    GenChannelData,
    /// Fit the per-step denoiser on the channel dataset.
    TrainDenoiser,
    /// Refit the decoder on latents received over the link.
    RefitDecoder,
    /// Evaluate the full pipeline over the SNR grid and write sweep.csv.
    Sweep,
    /// Send one PPM/PGM image over the link and write the reconstruction.
    EvalImage {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
}

fn load_config(c: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &c.config {
        Some(p) => ExperimentConfig::load(p).with_context(|| format!("reading {}", p.display()))?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = c.seed {
        cfg.master_seed = seed;
    }
    if let Some(snr) = &c.snr {
        cfg.snr_grid_db = snr.clone();
    }
    if let Some(mode) = c.csi {
        cfg.csi_mode = mode;
    }
    if let Some(s) = c.surrogate {
        cfg.quantizer.surrogate = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Modes a stage needs: the chosen one, or all of them.
fn modes(c: &Common) -> Vec<CsiMode> {
    c.csi.map_or_else(|| CsiMode::ALL.to_vec(), |m| vec![m])
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let cfg = load_config(&cli.common)?;
    let store = ArtifactStore::new(&cli.common.out);
    std::fs::create_dir_all(store.root())?;
    cfg.save(&store.root().join("config.toml"))?;
    let surrogate = cfg.quantizer.surrogate;
    let sched = cfg.cdm.schedule()?;

    match &cli.command {
        Command::TrainCodebook => {
            let corpus = image_corpus(&cfg.corpus, cfg.master_seed)?;
            let out = stage1_train(&cfg, &corpus.train, surrogate)?;
            store.save_stage1(&out)?;
            info!("wrote {}", store.codec_path(surrogate).display());
        }
        Command::GenChannelData => {
            let ds = generate_channel_dataset(
                &cfg.ofdm,
                &cfg.train_snr_db,
                cfg.channel_data.draws_per_snr,
                derive_seed(cfg.master_seed, &[2, 9]),
            )?;
            store.save_channels(&ds)?;
            info!("wrote {} draws to {}", ds.len(), store.channels_path().display());
        }
        Command::TrainDenoiser => {
            let ds = store.load_channels()?;
            let out = stage2_train(&cfg, &ds)?;
            for (t, l) in out.heldout_loss.iter().enumerate() {
                info!("held-out weighted loss t={}: {l:.6}", t + 1);
            }
            store.save_stage2(&out)?;
        }
        Command::RefitDecoder => {
            let s1 = store.load_stage1(&cfg, surrogate)?;
            let modes = modes(&cli.common);
            let den = if modes.contains(&CsiMode::Refined) {
                Some(Denoiser::PerStepLinear(store.load_denoiser(&cfg)?))
            } else {
                None
            };
            let refiner = den.as_ref().map(|d| Refiner { schedule: &sched, denoiser: d, steps: cfg.cdm.inference_steps });
            let corpus = image_corpus(&cfg.corpus, cfg.master_seed)?;
            let before = s1.frozen_digest();
            for out in stage3_refit(&cfg, &s1, refiner, &corpus.train, &modes)? {
                store.save_stage3(surrogate, &out)?;
            }
            if s1.frozen_digest() != before {
                bail!("frozen encoder or codebooks changed during refit");
            }
        }
        Command::Sweep => {
            let s1 = store.load_stage1(&cfg, surrogate)?;
            let modes = modes(&cli.common);
            let refits = modes
                .iter()
                .map(|&m| store.load_stage3(&cfg, surrogate, m))
                .collect::<semlink::Result<Vec<_>>>()?;
            let den = if modes.contains(&CsiMode::Refined) {
                Some(Denoiser::PerStepLinear(store.load_denoiser(&cfg)?))
            } else {
                None
            };
            let refiner = den.as_ref().map(|d| Refiner { schedule: &sched, denoiser: d, steps: cfg.cdm.inference_steps });
            let corpus = image_corpus(&cfg.corpus, cfg.master_seed)?;
            let inputs = SweepInputs { stage1: &s1, refiner, refits: &refits };
            let rows = run_sweep(&cfg, &inputs, &corpus.test, &modes)?;
            let path = store.root().join(format!("sweep-{surrogate}.csv"));
            write_csv(create(&path)?, &rows)?;
            for r in &rows {
                println!(
                    "{:>6.1} dB {:<8} ber {:.4e} nmse {:.4e} psnr {:.2} dB ms-ssim {:.4}",
                    r.snr_db, r.csi_mode, r.ber, r.nmse, r.psnr_db, r.ms_ssim
                );
            }
            info!("wrote {}", path.display());
        }
        Command::EvalImage { input, output } => {
            let img = read_pnm(BufReader::new(File::open(input).with_context(|| format!("opening {}", input.display()))?))?;
            let s1 = store.load_stage1(&cfg, surrogate)?;
            let mode = cfg.csi_mode;
            let den = if mode == CsiMode::Refined {
                Some(Denoiser::PerStepLinear(store.load_denoiser(&cfg)?))
            } else {
                None
            };
            let refiner = den.as_ref().map(|d| Refiner { schedule: &sched, denoiser: d, steps: cfg.cdm.inference_steps });
            let refits = store.load_stage3(&cfg, surrogate, mode)?;
            let snr = cfg.snr_grid_db[0];
            let link = LinkSimulator::new(&cfg.ofdm, refiner)?;
            let pipe = s1.pipeline();
            let tx = transmit_image(
                &pipe,
                &link,
                &img,
                snr,
                &[mode],
                &mut trial_rng(cfg.master_seed, 0, 0, 0),
                &mut trial_rng(cfg.master_seed, 0, 0, 1 + mode.stream()),
            )?;
            let (outcome, idx) = &tx.received[0];
            let (f, c) = pipe.codewords(idx);
            let decoder = refits.select(snr).context("no refit decoder")?;
            let rec = decoder.decode(&f, &c, img.height, img.width)?;
            write_pnm(create(output)?, &rec)?;
            println!(
                "{snr} dB {mode}: {} bits, {} bit errors, nmse {:.4e}, psnr {:.2} dB, ms-ssim {:.4}",
                tx.bits_sent,
                outcome.bit_errors,
                outcome.nmse,
                psnr(&rec, &img)?,
                ms_ssim(&rec, &img)?
            );
        }
    }
    Ok(())
}
