//! Motion generation from the correlation volume and coarse-to-fine
//! refinement up to full resolution.

mod context;
mod generate;
mod refine;
mod upsample;

pub use context::{extract_context_pyramid, ContextPyramid, ContextWeights};
pub use generate::{mgm_generate, MgmWeights};
pub use refine::{run_mrm, upblock_step, FieldPair, MrmOutput, MrmWeights, UpBlockOutput, UpBlockWeights, HEAD_CHANNELS};
pub use upsample::{centre_tap_logits, convex_upsample, convex_upsample_adjoint, UPSAMPLE_LOGITS};
