//! Densely queried bilateral correlation (DQBC) frame interpolation.
//!
//! The crate is organised bottom-up:
//!
//! * [`numerics`]: convolution, pooling, bilinear sampling and warping with
//!   adjoints, plus the finite-difference checker.
//! * [`correlation`]: feature extraction, key pyramid, dense-query gathering,
//!   enhancement and spatial alignment.
//! * [`motion`]: motion generation and the three up-sampling refinement blocks.
//! * [`synthesis`]: residual/occlusion prediction, frame composition and the
//!   end-to-end pipeline.
//! * [`losses`]: reconstruction, teacher and distillation losses.
//! * [`archive`] and [`weights`]: the on-disk weight format, parameter layout
//!   and deterministic initialisation.
//! * [`verify`]: brute-force oracles and the property suites behind `check`.

pub mod archive;
pub mod config;
pub mod correlation;
pub mod error;
pub mod losses;
pub mod motion;
pub mod numerics;
pub mod rng;
pub mod synthesis;
pub mod tensor;
pub mod verify;
pub mod weights;

pub use archive::WeightArchive;
pub use config::{LossConfig, Precision, PyramidConfig, RunConfig, Widths};
pub use error::{Error, Result};
pub use synthesis::{interpolate_midframe, Diagnostics};
pub use tensor::{MotionField, OcclusionMap, Real, Tensor3};
pub use weights::{init_weights, ModelWeights};
