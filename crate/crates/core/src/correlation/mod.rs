//! Densely queried bilateral correlation.
//!
//! Both frames are embedded at 1/8 resolution. Each embedding in turn serves
//! as dense queries against a key pyramid built from the other, the two
//! unilateral volumes are enhanced with shared weights, and each is shifted
//! toward the intermediate frame before concatenation:
//!
//! ```text
//! BiCorr(t->0) = Dist(t)   (Enh(UniCorr(0->1)))
//! BiCorr(t->1) = Dist(1-t) (Enh(UniCorr(1->0)))
//! DQBC         = [BiCorr(t->0), BiCorr(t->1)]
//! ```

mod align;
mod extractor;
mod gather;
mod pyramid;
mod volume;

pub use align::{distribute_correlation, distribute_correlation_adjoint, enhance_correlation, EnhanceWeights};
pub use extractor::{extract_features, FeatureExtractorWeights};
pub use gather::{gather_from_features, gather_unilateral_correlation, gather_unilateral_correlation_adjoint, GatherGrads};
pub use pyramid::{build_key_pyramid, KeyPyramid};
pub use volume::{channel_meta, ChannelMeta, CorrelationVolume, Direction};

use crate::config::PyramidConfig;
use crate::error::{config_err, Result};
use crate::tensor::{Real, Tensor3};

#[derive(Clone, Debug, PartialEq)]
pub struct DqbcWeights<T = f32> {
    pub extractor: FeatureExtractorWeights<T>,
    /// Shared by both directions.
    pub enhance: EnhanceWeights<T>,
}

impl<T: Real> DqbcWeights<T> {
    pub fn cast<U: Real>(&self) -> DqbcWeights<U> {
        DqbcWeights { extractor: self.extractor.cast(), enhance: self.enhance.cast() }
    }
}

/// Bilateral correlation from already-extracted features. `enhance = None`
/// skips the enhancement block.
pub fn dqbc_from_features<T: Real>(
    features0: &Tensor3<T>,
    features1: &Tensor3<T>,
    enhance: Option<&EnhanceWeights<T>>,
    config: &PyramidConfig,
    t: T,
) -> Result<CorrelationVolume<T>> {
    if !features0.same_shape(features1) {
        return Err(config_err!(
            "feature maps differ: {:?} vs {:?}",
            features0.shape(),
            features1.shape()
        ));
    }
    let (h, w) = (features0.height(), features0.width());
    let factor = 1usize << (config.levels.saturating_sub(1));
    let (ph, pw) = (h.div_ceil(factor) * factor, w.div_ceil(factor) * factor);
    let padded0 = zero_extend(features0, ph, pw);
    let padded1 = zero_extend(features1, ph, pw);
    let keys1 = build_key_pyramid(&padded1, config)?;
    let keys0 = build_key_pyramid(&padded0, config)?;
    let mut uni01 = gather_unilateral_correlation(&padded0, &keys1, config, Direction::ZeroToOne)?;
    let mut uni10 = gather_unilateral_correlation(&padded1, &keys0, config, Direction::OneToZero)?;
    if (ph, pw) != (h, w) {
        uni01 = crop_volume(uni01, h, w)?;
        uni10 = crop_volume(uni10, h, w)?;
    }
    if let Some(w) = enhance {
        uni01 = enhance_correlation(&uni01, w)?;
        uni10 = enhance_correlation(&uni10, w)?;
    }
    let bi_t0 = distribute_correlation(&uni01, t)?;
    let bi_t1 = distribute_correlation(&uni10, T::one() - t)?;
    bi_t0.concat(&bi_t1)
}

fn crop_volume<T: Real>(volume: CorrelationVolume<T>, height: usize, width: usize) -> Result<CorrelationVolume<T>> {
    let (scores, meta) = volume.into_parts();
    CorrelationVolume::new(scores.crop(0, 0, height, width)?, meta)
}

/// Zero rows and columns appended at the bottom and right.
fn zero_extend<T: Real>(features: &Tensor3<T>, height: usize, width: usize) -> Tensor3<T> {
    if (features.height(), features.width()) == (height, width) {
        return features.clone();
    }
    let (h, w) = (features.height(), features.width());
    Tensor3::from_fn(height, width, features.channels(), |y, x, c| {
        if y < h && x < w {
            features.at(y, x, c)
        } else {
            T::zero()
        }
    })
}

/// Full correlation stage from two frames whose sides are multiples of 8.
pub fn assemble_dqbc<T: Real>(
    frame0: &Tensor3<T>,
    frame1: &Tensor3<T>,
    weights: &DqbcWeights<T>,
    config: &PyramidConfig,
    t: T,
) -> Result<CorrelationVolume<T>> {
    if !frame0.same_shape(frame1) {
        return Err(config_err!("frames differ: {:?} vs {:?}", frame0.shape(), frame1.shape()));
    }
    let f0 = extract_features(frame0, &weights.extractor)?;
    let f1 = extract_features(frame1, &weights.extractor)?;
    dqbc_from_features(&f0, &f1, Some(&weights.enhance), config, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::ConvSpec;

    #[test]
    fn odd_feature_sizes_keep_dense_queries() {
        let cfg = PyramidConfig::default();
        let f0 = Tensor3::<f64>::from_fn(5, 7, 2, |y, x, c| (y * 7 + x + c) as f64 * 0.01);
        let f1 = Tensor3::<f64>::from_fn(5, 7, 2, |y, x, c| ((y + x) % 3 + c) as f64 * 0.1);
        let vol = dqbc_from_features(&f0, &f1, None, &cfg, 0.0).unwrap();
        assert_eq!(vol.scores().shape(), (5, 7, 742));
        let keys = build_key_pyramid(&f1, &PyramidConfig::new(vec![6]).unwrap()).unwrap();
        let level0 = gather_unilateral_correlation(&f0, &keys, &PyramidConfig::new(vec![6]).unwrap(), Direction::ZeroToOne)
            .unwrap();
        assert!(vol.scores().channel_range(0, 169).unwrap().bitwise_eq(level0.scores()));
    }

    #[test]
    fn default_config_gives_742_channels_at_one_eighth() {
        let cfg = PyramidConfig::default();
        let weights = DqbcWeights::<f32> {
            extractor: FeatureExtractorWeights::new([
                ConvSpec::zeros(4, 3, 3, 2),
                ConvSpec::zeros(4, 4, 3, 2),
                ConvSpec::zeros(4, 4, 3, 2),
            ])
            .unwrap(),
            enhance: EnhanceWeights::zeros(371),
        };
        let frame = Tensor3::full(64, 64, 3, 0.5);
        let vol = assemble_dqbc(&frame, &frame, &weights, &cfg, 0.5).unwrap();
        assert_eq!(vol.scores().shape(), (8, 8, 742));
        assert_eq!(vol.meta()[..371].iter().filter(|m| m.direction == Direction::ZeroToOne).count(), 371);
        assert!(vol.meta()[371..].iter().all(|m| m.direction == Direction::OneToZero));
    }

    #[test]
    fn self_correlation_peaks_at_zero_offset() {
        let (h, w) = (4, 4);
        let f = Tensor3::<f64>::from_fn(h, w, h * w, |y, x, c| if c == y * w + x { 1.0 } else { 0.0 });
        let cfg = PyramidConfig::new(vec![1, 1]).unwrap();
        let vol = dqbc_from_features(&f, &f, None, &cfg, 0.5).unwrap();
        let n = cfg.channels_per_direction();
        let centre = vol.meta().iter().position(|m| m.level == 0 && m.dx == 0 && m.dy == 0).unwrap();
        for y in 0..h {
            for x in 0..w {
                for half in [0, n] {
                    let level0 = &vol.scores().pixel(y, x)[half..half + 9];
                    let best = level0.iter().copied().fold(f64::MIN, f64::max);
                    assert_eq!(level0[centre], 1.0);
                    assert_eq!(best, 1.0);
                }
            }
        }
    }
}
