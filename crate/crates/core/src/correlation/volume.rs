use crate::config::PyramidConfig;
use crate::error::{config_err, Result};
use crate::tensor::{Real, Tensor3};

/// Which frame supplied the queries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    /// Queries from frame 0, keys from frame 1.
    ZeroToOne,
    /// Queries from frame 1, keys from frame 0.
    OneToZero,
}

/// Provenance of one correlation channel.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChannelMeta {
    pub level: usize,
    /// Query-to-key displacement in query-resolution pixels; a multiple of `2^level`.
    pub dx: i64,
    pub dy: i64,
    pub direction: Direction,
}

/// Channel layout shared by gathering, alignment and the weight layout:
/// level-major, then window rows `j = -r..=r`, then columns `i = -r..=r`.
pub fn channel_meta(config: &PyramidConfig, direction: Direction) -> Vec<ChannelMeta> {
    let mut meta = Vec::with_capacity(config.channels_per_direction());
    for (level, &r) in config.radii.iter().enumerate() {
        let (r, scale) = (r as i64, 1i64 << level);
        for j in -r..=r {
            for i in -r..=r {
                meta.push(ChannelMeta { level, dx: scale * i, dy: scale * j, direction });
            }
        }
    }
    meta
}

/// Similarity scores at query resolution plus per-channel displacement records.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationVolume<T = f32> {
    scores: Tensor3<T>,
    meta: Vec<ChannelMeta>,
}

impl<T: Real> CorrelationVolume<T> {
    pub fn new(scores: Tensor3<T>, meta: Vec<ChannelMeta>) -> Result<Self> {
        if scores.channels() != meta.len() {
            return Err(config_err!(
                "{} score channels but {} channel records",
                scores.channels(),
                meta.len()
            ));
        }
        Ok(Self { scores, meta })
    }

    pub fn scores(&self) -> &Tensor3<T> {
        &self.scores
    }

    pub fn meta(&self) -> &[ChannelMeta] {
        &self.meta
    }

    pub fn channels(&self) -> usize {
        self.meta.len()
    }

    pub fn into_parts(self) -> (Tensor3<T>, Vec<ChannelMeta>) {
        (self.scores, self.meta)
    }

    /// Replaces the scores, keeping the channel records.
    pub fn with_scores(&self, scores: Tensor3<T>) -> Result<Self> {
        if !scores.same_shape(&self.scores) {
            return Err(config_err!("replacement scores {:?} differ from {:?}", scores.shape(), self.scores.shape()));
        }
        Ok(Self { scores, meta: self.meta.clone() })
    }

    /// Channel-wise concatenation `[self, other]`.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        let scores = Tensor3::concat_channels(&[&self.scores, &other.scores])?;
        let meta = self.meta.iter().chain(&other.meta).copied().collect();
        Self::new(scores, meta)
    }

    pub fn cast<U: Real>(&self) -> CorrelationVolume<U> {
        CorrelationVolume { scores: self.scores.cast(), meta: self.meta.clone() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn meta_layout() {
        let cfg = PyramidConfig::new(vec![1, 1]).unwrap();
        let meta = channel_meta(&cfg, Direction::ZeroToOne);
        assert_eq!(meta.len(), 18);
        assert_eq!((meta[0].dx, meta[0].dy), (-1, -1));
        assert_eq!((meta[1].dx, meta[1].dy), (0, -1));
        assert_eq!((meta[4].dx, meta[4].dy), (0, 0));
        assert_eq!((meta[9].level, meta[9].dx, meta[9].dy), (1, -2, -2));
        assert!(meta.iter().all(|m| m.dx % (1 << m.level) == 0 && m.dy % (1 << m.level) == 0));
    }
}
