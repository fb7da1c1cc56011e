//! Dense-query correlation gathering.
//!
//! Every query pixel is kept; only the keys are pyramided. For query
//! `(xq, yq)`, level `l` and window offset `(dx, dy) = 2^l (i, j)` the score
//! is the inner product of the query feature with the level-`l` key map
//! sampled at `((xq + dx) / 2^l, (yq + dy) / 2^l)`. Those coordinates are
//! fractional whenever `xq` is not a multiple of `2^l`; they are read with
//! bilinear interpolation and zero padding.

use crate::config::PyramidConfig;
use crate::error::{config_err, Result};
use crate::numerics::Footprint;
use crate::tensor::{Real, Tensor3};

use super::pyramid::{build_key_pyramid, KeyPyramid};
use super::volume::{channel_meta, ChannelMeta, CorrelationVolume, Direction};

fn check_shapes<T: Real>(queries: &Tensor3<T>, keys: &KeyPyramid<T>, config: &PyramidConfig) -> Result<()> {
    config.validate()?;
    if keys.len() != config.levels {
        return Err(config_err!("key pyramid has {} levels, config expects {}", keys.len(), config.levels));
    }
    if !queries.same_shape(keys.level(0)) {
        return Err(config_err!(
            "queries {:?} and level-0 keys {:?} differ",
            queries.shape(),
            keys.level(0).shape()
        ));
    }
    for (l, k) in keys.levels().iter().enumerate() {
        if k.height() != queries.height() >> l || k.width() != queries.width() >> l {
            return Err(config_err!("key level {l} has resolution {}x{}", k.height(), k.width()));
        }
    }
    Ok(())
}

fn score_scale<T: Real>(config: &PyramidConfig, channels: usize) -> T {
    if config.normalize_by_sqrt_c {
        T::one() / T::cst(channels as f64).sqrt()
    } else {
        T::one()
    }
}

#[inline]
fn key_footprint<T: Real>(xq: usize, yq: usize, m: &ChannelMeta) -> Footprint<T> {
    let scale = (1u64 << m.level) as f64;
    Footprint::new(T::cst((xq as f64 + m.dx as f64) / scale), T::cst((yq as f64 + m.dy as f64) / scale))
}

#[inline]
fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// Gathers the unilateral correlation of `queries` against `keys`.
pub fn gather_unilateral_correlation<T: Real>(
    queries: &Tensor3<T>,
    keys: &KeyPyramid<T>,
    config: &PyramidConfig,
    direction: Direction,
) -> Result<CorrelationVolume<T>> {
    check_shapes(queries, keys, config)?;
    queries.ensure_finite("correlation queries")?;
    let meta = channel_meta(config, direction);
    let (h, w, c) = queries.shape();
    let n = meta.len();
    let scale = score_scale::<T>(config, c);
    let scores = Tensor3::from_rows_par(h, w, n, |yq, row| {
        for xq in 0..w {
            let q = queries.pixel(yq, xq);
            for (ch, m) in meta.iter().enumerate() {
                let key = keys.level(m.level);
                let fp = key_footprint::<T>(xq, yq, m);
                let mut s = T::zero();
                for (tap, wgt) in fp.taps(key.height(), key.width()) {
                    if let Some(p) = tap {
                        if wgt != T::zero() {
                            s = s + wgt * dot(q, &key.data()[p * c..(p + 1) * c]);
                        }
                    }
                }
                row[xq * n + ch] = s * scale;
            }
        }
    });
    CorrelationVolume::new(scores, meta)
}

/// Builds the key pyramid from `key_features` and gathers against it.
pub fn gather_from_features<T: Real>(
    queries: &Tensor3<T>,
    key_features: &Tensor3<T>,
    config: &PyramidConfig,
    direction: Direction,
) -> Result<CorrelationVolume<T>> {
    let keys = build_key_pyramid(key_features, config)?;
    gather_unilateral_correlation(queries, &keys, config, direction)
}

/// Cotangents of [`gather_unilateral_correlation`].
#[derive(Clone, Debug)]
pub struct GatherGrads<T> {
    pub queries: Tensor3<T>,
    /// One cotangent per pyramid level; fold with [`KeyPyramid::backprop`].
    pub key_levels: Vec<Tensor3<T>>,
}

pub fn gather_unilateral_correlation_adjoint<T: Real>(
    queries: &Tensor3<T>,
    keys: &KeyPyramid<T>,
    config: &PyramidConfig,
    grad_scores: &Tensor3<T>,
) -> Result<GatherGrads<T>> {
    check_shapes(queries, keys, config)?;
    let meta = channel_meta(config, Direction::ZeroToOne);
    let (h, w, c) = queries.shape();
    let n = meta.len();
    if grad_scores.shape() != (h, w, n) {
        return Err(config_err!("score cotangent {:?} expected {:?}", grad_scores.shape(), (h, w, n)));
    }
    let scale = score_scale::<T>(config, c);

    let grad_queries = Tensor3::from_rows_par(h, w, c, |yq, row| {
        for xq in 0..w {
            let out = &mut row[xq * c..(xq + 1) * c];
            let g = grad_scores.pixel(yq, xq);
            for (m, &gs) in meta.iter().zip(g) {
                let key = keys.level(m.level);
                let fp = key_footprint::<T>(xq, yq, m);
                for (tap, wgt) in fp.taps(key.height(), key.width()) {
                    if let Some(p) = tap {
                        let coef = gs * scale * wgt;
                        for (o, &k) in out.iter_mut().zip(&key.data()[p * c..(p + 1) * c]) {
                            *o = *o + coef * k;
                        }
                    }
                }
            }
        }
    });

    let mut key_levels: Vec<Tensor3<T>> =
        keys.levels().iter().map(|k| Tensor3::zeros(k.height(), k.width(), c)).collect();
    for yq in 0..h {
        for xq in 0..w {
            let q = queries.pixel(yq, xq);
            let g = grad_scores.pixel(yq, xq);
            for (m, &gs) in meta.iter().zip(g) {
                let acc = &mut key_levels[m.level];
                let fp = key_footprint::<T>(xq, yq, m);
                let taps = fp.taps(acc.height(), acc.width());
                let data = acc.data_mut();
                for (tap, wgt) in taps {
                    if let Some(p) = tap {
                        let coef = gs * scale * wgt;
                        for (o, &qv) in data[p * c..(p + 1) * c].iter_mut().zip(q) {
                            *o = *o + coef * qv;
                        }
                    }
                }
            }
        }
    }
    Ok(GatherGrads { queries: grad_queries, key_levels })
}
