//! Simulator for a vector-quantized digital semantic link carried over OFDM.
//!
//! The pipeline is split into the following modules:
//!
//! - [`codebook`]: semantic codebook, nearest-neighbour quantization, the
//!   adaptive-noise differentiable surrogate (ANDVQ), EMA updates and the
//!   STE/NSVQ baselines.
//! - [`ofdm`]: bit framing, 4-QAM, pilot-bearing resource grids, IDFT/CP,
//!   EPA multipath fading with AWGN, DFT and zero-forcing equalization.
//! - [`chanest`]: least-squares pilot estimates, bilinear grid interpolation
//!   and NMSE.
//! - [`cdm`]: conditional-diffusion refinement of rough channel estimates.
//! - [`codec`]: closed-form two-level patch codec and image quality metrics.
//! - [`runner`]: three-stage training, evaluation sweeps and persistence.

pub mod binio;
pub mod cdm;
pub mod chanest;
pub mod codebook;
pub mod codec;
pub mod error;
pub mod linalg;
pub mod ofdm;
pub mod rng;
pub mod runner;

pub use error::{Error, Result};
