//! Residual and occlusion prediction, frame composition and the end-to-end
//! interpolation pipeline.

mod compose;
mod pipeline;
mod synthnet;

pub use compose::{compose_frame, final_occlusion};
pub use pipeline::{interpolate_midframe, pad_reflect, padded_size, Diagnostics};
pub use synthnet::{synthnet_forward, SynthUpWeights, SynthWeights, SynthesisInputs};
