//! Correlation enhancement and spatial alignment.

use crate::error::{config_err, Result};
use crate::numerics::{conv2d, conv2d_act, ConvSpec, Footprint};
use crate::tensor::{Real, Tensor3};

use super::volume::CorrelationVolume;

/// Residual denoiser: `corr + conv1(act(conv0(corr)))`, channel count preserved.
#[derive(Clone, Debug, PartialEq)]
pub struct EnhanceWeights<T = f32> {
    pub conv0: ConvSpec<T>,
    pub conv1: ConvSpec<T>,
}

impl<T: Real> EnhanceWeights<T> {
    pub fn new(conv0: ConvSpec<T>, conv1: ConvSpec<T>) -> Result<Self> {
        let c = conv0.in_channels();
        if conv0.out_channels() != conv1.in_channels() || conv1.out_channels() != c {
            return Err(config_err!("enhancement convs must map {c} channels back to {c}"));
        }
        if conv0.stride() != 1 || conv1.stride() != 1 {
            return Err(config_err!("enhancement convs must have stride 1"));
        }
        Ok(Self { conv0, conv1 })
    }

    pub fn zeros(channels: usize) -> Self {
        Self { conv0: ConvSpec::zeros(channels, channels, 3, 1), conv1: ConvSpec::zeros(channels, channels, 3, 1) }
    }

    pub fn channels(&self) -> usize {
        self.conv0.in_channels()
    }

    pub fn cast<U: Real>(&self) -> EnhanceWeights<U> {
        EnhanceWeights { conv0: self.conv0.cast(), conv1: self.conv1.cast() }
    }
}

pub fn enhance_correlation<T: Real>(corr: &CorrelationVolume<T>, weights: &EnhanceWeights<T>) -> Result<CorrelationVolume<T>> {
    if weights.channels() != corr.channels() {
        return Err(config_err!(
            "enhancement weights expect {} channels, volume has {}",
            weights.channels(),
            corr.channels()
        ));
    }
    let hidden = conv2d_act(corr.scores(), &weights.conv0)?;
    let residual = conv2d(&hidden, &weights.conv1)?;
    corr.with_scores(corr.scores().add(&residual)?)
}

/// Per-channel shift `fraction * v_c` in query-resolution pixels.
fn channel_shifts<T: Real>(corr: &CorrelationVolume<T>, fraction: T) -> Vec<(T, T)> {
    corr.meta()
        .iter()
        .map(|m| (fraction * T::cst(m.dx as f64), fraction * T::cst(m.dy as f64)))
        .collect()
}

/// Moves every channel along `fraction` of its displacement vector so that
/// high responses land at the intermediate-frame position.
///
/// Channel `c` becomes `translate_fractional(channel_c, fraction * v_c)`.
pub fn distribute_correlation<T: Real>(corr: &CorrelationVolume<T>, fraction: T) -> Result<CorrelationVolume<T>> {
    let shifts = channel_shifts(corr, fraction);
    let src = corr.scores();
    let (h, w, n) = src.shape();
    let scores = Tensor3::from_rows_par(h, w, n, |y, row| {
        for x in 0..w {
            for (c, &(sx, sy)) in shifts.iter().enumerate() {
                let fp = Footprint::new(T::cst(x as f64) - sx, T::cst(y as f64) - sy);
                row[x * n + c] = fp.value(src, c);
            }
        }
    });
    corr.with_scores(scores)
}

/// Cotangents of [`distribute_correlation`]: `(scores, fraction)`.
pub fn distribute_correlation_adjoint<T: Real>(
    corr: &CorrelationVolume<T>,
    fraction: T,
    grad_out: &Tensor3<T>,
) -> Result<(Tensor3<T>, T)> {
    let src = corr.scores();
    if !grad_out.same_shape(src) {
        return Err(config_err!("cotangent {:?} does not match volume {:?}", grad_out.shape(), src.shape()));
    }
    let shifts = channel_shifts(corr, fraction);
    let (h, w, n) = src.shape();
    let mut grad_scores = Tensor3::zeros(h, w, n);
    let mut grad_fraction = T::zero();
    for y in 0..h {
        for x in 0..w {
            for (c, &(sx, sy)) in shifts.iter().enumerate() {
                let fp = Footprint::new(T::cst(x as f64) - sx, T::cst(y as f64) - sy);
                let g = grad_out.at(y, x, c);
                fp.scatter(&mut grad_scores, c, g);
                let (ddx, ddy) = fp.gradient(src, c);
                let m = corr.meta()[c];
                grad_fraction = grad_fraction - g * (ddx * T::cst(m.dx as f64) + ddy * T::cst(m.dy as f64));
            }
        }
    }
    Ok((grad_scores, grad_fraction))
}
