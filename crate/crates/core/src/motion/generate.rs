use crate::correlation::CorrelationVolume;
use crate::error::{config_err, Result};
use crate::numerics::{conv2d, conv2d_act, ConvSpec};
use crate::tensor::{MotionField, Real, Tensor3};

/// Preliminary motion generation: `g([c([I0, I1]), m(DQBC)])`.
#[derive(Clone, Debug, PartialEq)]
pub struct MgmWeights<T = f32> {
    /// `c`: three stride-2 convs over the concatenated frames.
    pub context: [ConvSpec<T>; 3],
    /// `m`: per-pixel MLP with one hidden layer (two 1x1 convs).
    pub mlp: [ConvSpec<T>; 2],
    /// `g`: two 3x3 convs ending in 4 channels.
    pub generator: [ConvSpec<T>; 2],
}

impl<T: Real> MgmWeights<T> {
    pub fn cast<U: Real>(&self) -> MgmWeights<U> {
        MgmWeights {
            context: self.context.each_ref().map(|c| c.cast()),
            mlp: self.mlp.each_ref().map(|c| c.cast()),
            generator: self.generator.each_ref().map(|c| c.cast()),
        }
    }
}

/// Returns `(M_t->0, M_t->1)` at the correlation volume's resolution, in
/// pixels of that resolution.
pub fn mgm_generate<T: Real>(
    dqbc: &CorrelationVolume<T>,
    frame0: &Tensor3<T>,
    frame1: &Tensor3<T>,
    weights: &MgmWeights<T>,
) -> Result<(MotionField<T>, MotionField<T>)> {
    if !frame0.same_shape(frame1) {
        return Err(config_err!("frames differ: {:?} vs {:?}", frame0.shape(), frame1.shape()));
    }
    let corr = dqbc.scores();
    if corr.height() * 8 != frame0.height() || corr.width() * 8 != frame0.width() {
        return Err(config_err!(
            "correlation volume {}x{} is not 1/8 of the {}x{} frames",
            corr.height(),
            corr.width(),
            frame0.height(),
            frame0.width()
        ));
    }
    let mut ctx = Tensor3::concat_channels(&[frame0, frame1])?;
    for conv in &weights.context {
        ctx = conv2d_act(&ctx, conv)?;
    }
    let reduced = conv2d(&conv2d_act(corr, &weights.mlp[0])?, &weights.mlp[1])?;
    let joint = Tensor3::concat_channels(&[&ctx, &reduced])?;
    let out = conv2d(&conv2d_act(&joint, &weights.generator[0])?, &weights.generator[1])?;
    if out.channels() != 4 {
        return Err(config_err!("motion generator must emit 4 channels, got {}", out.channels()));
    }
    Ok((MotionField::new(out.channel_range(0, 2)?)?, MotionField::new(out.channel_range(2, 2)?)?))
}
