use std::path::Path;
use std::process::Command;

use semlink::codec::{read_pnm, synthetic_image, write_pnm};
use semlink::rng::rng_from_seed;

const SMALL: &str = r#"
trials_per_point = 4
snr_grid_db = [0.0, 10.0]
train_snr_db = [0.0, 10.0]

[ofdm]
n_subcarriers = 128
cp_len = 32

[codebook]
size = 32
epochs = 5

[corpus]
train_images = 8
test_images = 2
height = 32
width = 32

[channel_data]
draws_per_snr = 20
holdout_per_snr = 4
"#;

fn semlink(dir: &Path, args: &[&str]) -> String {
    let out = Command::new(env!("CARGO_BIN_EXE_semlink"))
        .current_dir(dir)
        .args(["--config", "small.toml", "--out", "run"])
        .args(args)
        .output()
        .unwrap();
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn full_run(dir: &Path) -> Vec<u8> {
    std::fs::write(dir.join("small.toml"), SMALL).unwrap();
    for stage in ["train-codebook", "gen-channel-data", "train-denoiser", "refit-decoder"] {
        semlink(dir, &[stage]);
    }
    semlink(dir, &["sweep"]);
    std::fs::read(dir.join("run/sweep-andvq.csv")).unwrap()
}

#[test]
fn stages_run_in_order_and_rerun_identically() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let csv = full_run(a.path());
    assert_eq!(csv, full_run(b.path()));
    let text = String::from_utf8(csv).unwrap();
    assert!(text.starts_with("snr_db,csi_mode,surrogate,bcr,nmse,ber,cur,psnr_db,ms_ssim,trials"));
    assert_eq!(text.lines().count(), 1 + 2 * 3);

    let img = synthetic_image(32, 32, &mut rng_from_seed(5));
    write_pnm(std::fs::File::create(a.path().join("in.ppm")).unwrap(), &img).unwrap();
    let report = semlink(a.path(), &["eval-image", "--input", "in.ppm", "--output", "out.ppm"]);
    assert!(report.contains("psnr"), "{report}");
    let rec = read_pnm(std::io::BufReader::new(std::fs::File::open(a.path().join("out.ppm")).unwrap())).unwrap();
    assert_eq!((rec.height, rec.width), (32, 32));
}

#[test]
fn sweep_without_artifacts_names_the_missing_stage() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("small.toml"), SMALL).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_semlink"))
        .current_dir(dir.path())
        .args(["--config", "small.toml", "--out", "run", "sweep"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("train-codebook"));
}
