use crate::config::PyramidConfig;
use crate::error::{contract_err, Result};
use crate::numerics::{avgpool2x, avgpool2x_adjoint};
use crate::tensor::{Real, Tensor3};

/// Key feature maps at resolutions `1, 1/2, ..., 1/2^(L-1)` of the source.
#[derive(Clone, Debug, PartialEq)]
pub struct KeyPyramid<T = f32> {
    levels: Vec<Tensor3<T>>,
}

impl<T: Real> KeyPyramid<T> {
    pub fn levels(&self) -> &[Tensor3<T>] {
        &self.levels
    }

    pub fn level(&self, l: usize) -> &Tensor3<T> {
        &self.levels[l]
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// Folds per-level cotangents back onto the level-0 feature map.
    pub fn backprop(level_grads: &[Tensor3<T>]) -> Result<Tensor3<T>> {
        let (last, rest) = level_grads.split_last().ok_or_else(|| contract_err!("no pyramid levels"))?;
        let mut acc = last.clone();
        for g in rest.iter().rev() {
            acc = g.add(&avgpool2x_adjoint(&acc))?;
        }
        Ok(acc)
    }
}

/// Level 0 is `features`; every further level is the 2x2 mean of the previous.
pub fn build_key_pyramid<T: Real>(features: &Tensor3<T>, config: &PyramidConfig) -> Result<KeyPyramid<T>> {
    config.validate()?;
    let factor = 1usize << (config.levels - 1);
    if features.height() % factor != 0 || features.width() % factor != 0 {
        return Err(contract_err!(
            "{}x{} features are not divisible by 2^{} for a {}-level pyramid",
            features.height(),
            features.width(),
            config.levels - 1,
            config.levels
        ));
    }
    let mut levels = vec![features.clone()];
    for _ in 1..config.levels {
        let next = avgpool2x(levels.last().expect("non-empty"))?;
        levels.push(next);
    }
    Ok(KeyPyramid { levels })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_level_is_the_input() {
        let f = Tensor3::<f32>::from_fn(4, 4, 2, |y, x, c| (y + x + c) as f32);
        let p = build_key_pyramid(&f, &PyramidConfig::new(vec![3]).unwrap()).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p.level(0), &f);
    }

    #[test]
    fn halving_sizes_and_constants() {
        let f = Tensor3::<f32>::full(8, 8, 3, 0.3);
        let p = build_key_pyramid(&f, &PyramidConfig::new(vec![1, 1, 1]).unwrap()).unwrap();
        let sizes: Vec<_> = p.levels().iter().map(|t| (t.height(), t.width())).collect();
        assert_eq!(sizes, vec![(8, 8), (4, 4), (2, 2)]);
        assert!(p.levels().iter().all(|t| t.data().iter().all(|&v| v == 0.3)));
    }

    #[test]
    fn divisibility_is_checked() {
        let f = Tensor3::<f32>::zeros(6, 8, 1);
        assert!(matches!(
            build_key_pyramid(&f, &PyramidConfig::new(vec![1, 1, 1]).unwrap()),
            Err(crate::Error::Contract(_))
        ));
    }
}
