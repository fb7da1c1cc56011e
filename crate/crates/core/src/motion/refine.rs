//! Motion refinement: three blocks, each warping context features with the
//! current fields, predicting a residual plus convex up-sampling logits, and
//! doubling resolution.

use crate::error::{config_err, contract_err, Result};
use crate::numerics::{backward_warp, conv2d, conv2d_act, sigmoid, upsample_nearest2x, ConvSpec};
use crate::tensor::{MotionField, OcclusionMap, Real, Tensor3};

use super::context::ContextPyramid;
use super::upsample::{convex_upsample, UPSAMPLE_LOGITS};

/// Head channels: two 2-channel residuals plus the up-sampling logits.
pub const HEAD_CHANNELS: usize = 4 + UPSAMPLE_LOGITS;

#[derive(Clone, Debug, PartialEq)]
pub struct UpBlockWeights<T = f32> {
    pub trunk: [ConvSpec<T>; 2],
    /// Emits [`HEAD_CHANNELS`] channels: residual for M_t->0, residual for
    /// M_t->1, then the 36 logits shared by both fields.
    pub head: ConvSpec<T>,
    /// Maps the nearest-up-sampled trunk output to the next hidden state.
    pub hidden: ConvSpec<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MrmWeights<T = f32> {
    pub blocks: [UpBlockWeights<T>; 3],
    /// Applied to the last hidden state, then squashed to `[0, 1]`.
    pub occlusion: ConvSpec<T>,
}

impl<T: Real> UpBlockWeights<T> {
    pub fn cast<U: Real>(&self) -> UpBlockWeights<U> {
        UpBlockWeights {
            trunk: self.trunk.each_ref().map(|c| c.cast()),
            head: self.head.cast(),
            hidden: self.hidden.cast(),
        }
    }
}

impl<T: Real> MrmWeights<T> {
    pub fn cast<U: Real>(&self) -> MrmWeights<U> {
        MrmWeights { blocks: self.blocks.each_ref().map(|b| b.cast()), occlusion: self.occlusion.cast() }
    }
}

pub type FieldPair<T> = (MotionField<T>, MotionField<T>);

#[derive(Clone, Debug)]
pub struct UpBlockOutput<T> {
    /// Refined fields at twice the input resolution.
    pub fields: FieldPair<T>,
    pub hidden: Tensor3<T>,
    /// The context features warped by the incoming fields, for frame synthesis.
    pub warped_context: (Tensor3<T>, Tensor3<T>),
}

/// Runs up-sampling block `index` (1, 2 or 3). Block 1 takes no hidden
/// state; blocks 2 and 3 require the previous block's.
pub fn upblock_step<T: Real>(
    index: usize,
    fields: (&MotionField<T>, &MotionField<T>),
    ctx0: &Tensor3<T>,
    ctx1: &Tensor3<T>,
    hidden: Option<&Tensor3<T>>,
    weights: &UpBlockWeights<T>,
) -> Result<UpBlockOutput<T>> {
    match (index, hidden.is_some()) {
        (1, false) | (2, true) | (3, true) => {}
        (1, true) => return Err(contract_err!("up-sampling block 1 takes no hidden state")),
        (2 | 3, false) => return Err(contract_err!("up-sampling block {index} requires a hidden state")),
        _ => return Err(contract_err!("up-sampling block index {index} not in 1..=3")),
    }
    let (m0, m1) = fields;
    let (h, w) = (m0.height(), m0.width());
    let at_res = |t: &Tensor3<T>| t.height() == h && t.width() == w;
    if !(at_res(m1.as_tensor()) && at_res(ctx0) && at_res(ctx1) && hidden.map_or(true, at_res)) {
        return Err(config_err!("up-sampling block {index}: inputs are not all at {h}x{w}"));
    }

    let warped0 = backward_warp(ctx0, m0)?;
    let warped1 = backward_warp(ctx1, m1)?;
    let mut parts = vec![m0.as_tensor(), m1.as_tensor(), &warped0, &warped1];
    if let Some(hd) = hidden {
        parts.push(hd);
    }
    let input = Tensor3::concat_channels(&parts)?;
    let trunk = conv2d_act(&conv2d_act(&input, &weights.trunk[0])?, &weights.trunk[1])?;
    let head = conv2d(&trunk, &weights.head)?;
    if head.channels() != HEAD_CHANNELS {
        return Err(config_err!("up-sampling head must emit {HEAD_CHANNELS} channels, got {}", head.channels()));
    }
    let logits = head.channel_range(4, UPSAMPLE_LOGITS)?;
    let refined0 = MotionField::new(m0.as_tensor().add(&head.channel_range(0, 2)?)?)?;
    let refined1 = MotionField::new(m1.as_tensor().add(&head.channel_range(2, 2)?)?)?;
    let up0 = convex_upsample(&refined0, &logits)?;
    let up1 = convex_upsample(&refined1, &logits)?;
    let next_hidden = conv2d_act(&upsample_nearest2x(&trunk), &weights.hidden)?;
    Ok(UpBlockOutput { fields: (up0, up1), hidden: next_hidden, warped_context: (warped0, warped1) })
}

#[derive(Clone, Debug)]
pub struct MrmOutput<T> {
    /// Full-resolution fields.
    pub fields: FieldPair<T>,
    pub occlusion: OcclusionMap<T>,
    /// Input fields followed by each block's output: resolutions 1/8 .. 1.
    pub trace: Vec<FieldPair<T>>,
    /// Warped context pairs at 1/8, 1/4, 1/2 resolution.
    pub warped_contexts: Vec<(Tensor3<T>, Tensor3<T>)>,
}

/// Chains the three up-sampling blocks and predicts the occlusion map from
/// the final hidden state.
pub fn run_mrm<T: Real>(
    fields: FieldPair<T>,
    ctx0: &ContextPyramid<T>,
    ctx1: &ContextPyramid<T>,
    weights: &MrmWeights<T>,
) -> Result<MrmOutput<T>> {
    let mut trace = vec![fields.clone()];
    let mut warped_contexts = Vec::with_capacity(3);
    let mut current = fields;
    let mut hidden: Option<Tensor3<T>> = None;
    for (i, block) in weights.blocks.iter().enumerate() {
        let out = upblock_step(i + 1, (&current.0, &current.1), ctx0.level(i), ctx1.level(i), hidden.as_ref(), block)?;
        trace.push(out.fields.clone());
        warped_contexts.push(out.warped_context);
        current = out.fields;
        hidden = Some(out.hidden);
    }
    let last = hidden.expect("three blocks ran");
    let mut occ = conv2d(&last, &weights.occlusion)?;
    if occ.channels() != 1 {
        return Err(config_err!("occlusion head must emit 1 channel, got {}", occ.channels()));
    }
    occ.map_inplace(sigmoid);
    Ok(MrmOutput { fields: current, occlusion: OcclusionMap::new(occ)?, trace, warped_contexts })
}
