use crate::error::{config_err, contract_err, Result};
use crate::numerics::{conv2d, conv2d_act, upsample_nearest2x, ConvSpec};
use crate::tensor::{OcclusionMap, Real, Tensor3};

/// Decoder block: fuse the skip/hidden input with a warped-context pair,
/// apply a residual block, then up-sample by 2 and convolve.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthUpWeights<T = f32> {
    pub fuse: ConvSpec<T>,
    /// `x + conv1(act(conv0(x)))`.
    pub residual: [ConvSpec<T>; 2],
    pub upconv: ConvSpec<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthWeights<T = f32> {
    /// Encoder blocks; the first conv of each has stride 2.
    pub down: [[ConvSpec<T>; 2]; 3],
    /// Decoder blocks at 1/8, 1/4 and 1/2 resolution.
    pub up: [SynthUpWeights<T>; 3],
    /// Two convs over `[decoder output, inputs]`, the last emitting R (3) and ΔO (1).
    pub head: [ConvSpec<T>; 2],
}

impl<T: Real> SynthUpWeights<T> {
    pub fn cast<U: Real>(&self) -> SynthUpWeights<U> {
        SynthUpWeights {
            fuse: self.fuse.cast(),
            residual: self.residual.each_ref().map(|c| c.cast()),
            upconv: self.upconv.cast(),
        }
    }
}

impl<T: Real> SynthWeights<T> {
    pub fn cast<U: Real>(&self) -> SynthWeights<U> {
        SynthWeights {
            down: self.down.each_ref().map(|b| b.each_ref().map(|c| c.cast())),
            up: self.up.each_ref().map(|u| u.cast()),
            head: self.head.each_ref().map(|c| c.cast()),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SynthesisInputs<'a, T> {
    pub warped0: &'a Tensor3<T>,
    pub warped1: &'a Tensor3<T>,
    pub occlusion: &'a OcclusionMap<T>,
    /// Warped context pairs at 1/8, 1/4 and 1/2 resolution.
    pub warped_contexts: &'a [(Tensor3<T>, Tensor3<T>)],
}

fn up_block<T: Real>(x: &Tensor3<T>, ctx: &(Tensor3<T>, Tensor3<T>), w: &SynthUpWeights<T>) -> Result<Tensor3<T>> {
    let fused = conv2d_act(&Tensor3::concat_channels(&[x, &ctx.0, &ctx.1])?, &w.fuse)?;
    let res = conv2d(&conv2d_act(&fused, &w.residual[0])?, &w.residual[1])?;
    let block = fused.add(&res)?;
    conv2d_act(&upsample_nearest2x(&block), &w.upconv)
}

/// Returns `(R, ΔO)` at the input resolution.
pub fn synthnet_forward<T: Real>(
    inputs: &SynthesisInputs<'_, T>,
    weights: &SynthWeights<T>,
) -> Result<(Tensor3<T>, Tensor3<T>)> {
    let (w0, w1) = (inputs.warped0, inputs.warped1);
    let (h, w) = (w0.height(), w0.width());
    if h % 8 != 0 || w % 8 != 0 {
        return Err(contract_err!("synthesis needs dimensions divisible by 8, got {h}x{w}"));
    }
    if !w0.same_resolution(w1) || !w0.same_resolution(inputs.occlusion.as_tensor()) {
        return Err(config_err!("warped frames and occlusion map are not all at {h}x{w}"));
    }
    if inputs.warped_contexts.len() != 3 {
        return Err(config_err!("expected 3 warped context pairs, got {}", inputs.warped_contexts.len()));
    }
    for (i, (c0, c1)) in inputs.warped_contexts.iter().enumerate() {
        let s = 8 >> i;
        let ok = |c: &Tensor3<T>| c.height() * s == h && c.width() * s == w;
        if !ok(c0) || !ok(c1) {
            return Err(config_err!("warped context pair {i} is not at 1/{s} of {h}x{w}"));
        }
    }

    let x0 = Tensor3::concat_channels(&[w0, w1, inputs.occlusion.as_tensor()])?;
    let mut skips = Vec::with_capacity(3);
    let mut x = x0.clone();
    for [down, same] in &weights.down {
        x = conv2d_act(&conv2d_act(&x, down)?, same)?;
        skips.push(x.clone());
    }
    // skips: 1/2, 1/4, 1/8; x is the 1/8 bottleneck.
    let mut d = up_block(&x, &inputs.warped_contexts[0], &weights.up[0])?;
    for (i, skip) in [&skips[1], &skips[0]].into_iter().enumerate() {
        let joined = Tensor3::concat_channels(&[&d, skip])?;
        d = up_block(&joined, &inputs.warped_contexts[i + 1], &weights.up[i + 1])?;
    }
    let head = conv2d(&conv2d_act(&Tensor3::concat_channels(&[&d, &x0])?, &weights.head[0])?, &weights.head[1])?;
    if head.channels() != 4 {
        return Err(config_err!("synthesis head must emit 4 channels, got {}", head.channels()));
    }
    Ok((head.channel_range(0, 3)?, head.channel_range(3, 1)?))
}
