//! Non-learned core of a single-image PBR material extraction pipeline.
//!
//! The crate is split by pipeline stage:
//!
//! * [`imaging`]: image, mask, depth and material-set types, PNG/PFM codecs,
//!   resampling and rotation alignment of material maps.
//! * [`rectify`]: depth-guided unprojection into canonical coordinates,
//!   splatting, hole filling and `d_shift` sweeps.
//! * [`tps`]: thin-plate spline fitting, evaluation and image warping.
//! * [`synth`]: deformed planar scenes, camera sampling, a software
//!   rasterizer and seeded dataset generation.
//! * [`diffusion`]: stub latent codec, noise schedule, forward process, loss,
//!   KV-injection attention and DDIM sampling with noise rolling.
//! * [`metrics`]: SSIM, pixel diagnostics, seam ratio and material reports.

pub mod diffusion;
pub mod error;
pub mod imaging;
pub mod metrics;
pub mod procedural;
pub mod rectify;
pub mod rng;
pub mod synth;
pub mod tps;

pub use error::{Error, Result};
