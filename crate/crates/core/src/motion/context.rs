use crate::error::{contract_err, Result};
use crate::numerics::{conv2d_act, ConvSpec};
use crate::tensor::{Real, Tensor3};

/// Three down-sampling blocks; each is a stride-2 conv followed by a
/// stride-1 conv, both activated.
#[derive(Clone, Debug, PartialEq)]
pub struct ContextWeights<T = f32> {
    pub blocks: [[ConvSpec<T>; 2]; 3],
}

impl<T: Real> ContextWeights<T> {
    pub fn cast<U: Real>(&self) -> ContextWeights<U> {
        ContextWeights { blocks: self.blocks.each_ref().map(|b| b.each_ref().map(|c| c.cast())) }
    }
}

/// Context features of one frame, coarsest first: 1/8, 1/4, 1/2.
#[derive(Clone, Debug, PartialEq)]
pub struct ContextPyramid<T = f32> {
    levels: [Tensor3<T>; 3],
}

impl<T: Real> ContextPyramid<T> {
    /// Level `i` has resolution `1 / 2^(3 - i)` of the frame and feeds
    /// up-sampling block `i + 1`.
    pub fn level(&self, i: usize) -> &Tensor3<T> {
        &self.levels[i]
    }

    pub fn levels(&self) -> &[Tensor3<T>; 3] {
        &self.levels
    }
}

pub fn extract_context_pyramid<T: Real>(frame: &Tensor3<T>, weights: &ContextWeights<T>) -> Result<ContextPyramid<T>> {
    if frame.height() % 8 != 0 || frame.width() % 8 != 0 {
        return Err(contract_err!(
            "context extraction needs dimensions divisible by 8, got {}x{}",
            frame.height(),
            frame.width()
        ));
    }
    let mut x = frame.clone();
    let mut outs = Vec::with_capacity(3);
    for [down, same] in &weights.blocks {
        x = conv2d_act(&conv2d_act(&x, down)?, same)?;
        outs.push(x.clone());
    }
    let [half, quarter, eighth]: [Tensor3<T>; 3] = outs.try_into().expect("three blocks");
    Ok(ContextPyramid { levels: [eighth, quarter, half] })
}
