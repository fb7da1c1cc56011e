use crate::error::{config_err, contract_err, Result};
use crate::numerics::{conv2d, conv2d_act, ConvSpec};
use crate::tensor::{Real, Tensor3};

/// Three stride-2 convolutions taking a frame to 1/8 resolution.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureExtractorWeights<T = f32> {
    convs: [ConvSpec<T>; 3],
}

impl<T: Real> FeatureExtractorWeights<T> {
    pub fn new(convs: [ConvSpec<T>; 3]) -> Result<Self> {
        if convs.iter().any(|c| c.stride() != 2) {
            return Err(config_err!("feature extractor layers must all have stride 2"));
        }
        for pair in convs.windows(2) {
            if pair[0].out_channels() != pair[1].in_channels() {
                return Err(config_err!("feature extractor layer widths do not chain"));
            }
        }
        Ok(Self { convs })
    }

    pub fn in_channels(&self) -> usize {
        self.convs[0].in_channels()
    }

    pub fn out_channels(&self) -> usize {
        self.convs[2].out_channels()
    }

    pub fn cast<U: Real>(&self) -> FeatureExtractorWeights<U> {
        FeatureExtractorWeights { convs: self.convs.each_ref().map(|c| c.cast()) }
    }
}

/// Frame to 1/8-resolution features. The last layer is linear.
pub fn extract_features<T: Real>(frame: &Tensor3<T>, weights: &FeatureExtractorWeights<T>) -> Result<Tensor3<T>> {
    if frame.height() % 8 != 0 || frame.width() % 8 != 0 {
        return Err(contract_err!(
            "feature extraction needs dimensions divisible by 8, got {}x{}",
            frame.height(),
            frame.width()
        ));
    }
    let [c0, c1, c2] = &weights.convs;
    let x = conv2d_act(frame, c0)?;
    let x = conv2d_act(&x, c1)?;
    conv2d(&x, c2)
}
