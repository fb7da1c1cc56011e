//! Deterministic rank-3 tensor primitives.

pub mod conv;
pub mod gradcheck;
pub mod pool;
pub mod sample;
pub mod softmax;

pub use conv::{conv2d, conv2d_act, leaky_relu, sigmoid, ConvSpec, LEAKY_SLOPE};
pub use gradcheck::{check_adjoint, finite_diff_check, GradCheckReport};
pub use pool::{avgpool2x, avgpool2x_adjoint, upsample_nearest2x};
pub use sample::{
    backward_warp, backward_warp_adjoint, bilinear_sample, translate_fractional, translate_fractional_adjoint,
    Footprint, WarpGrads, OUT_OF_BOUNDS_VALUE,
};
pub use softmax::softmax_groups;
