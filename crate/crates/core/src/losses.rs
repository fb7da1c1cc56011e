//! Training losses. All reductions are means and are accumulated in `f64`.

use crate::config::LossConfig;
use crate::error::{config_err, Result};
use crate::motion::FieldPair;
use crate::numerics::backward_warp;
use crate::synthesis::compose_frame;
use crate::tensor::{MotionField, OcclusionMap, Real, Tensor3};

/// Mean absolute difference over all elements.
pub fn reconstruction_loss<T: Real>(predicted: &Tensor3<T>, truth: &Tensor3<T>) -> Result<f64> {
    if !predicted.same_shape(truth) {
        return Err(config_err!("loss operands differ: {:?} vs {:?}", predicted.shape(), truth.shape()));
    }
    if predicted.is_empty() {
        return Err(config_err!("loss operands are empty"));
    }
    let sum: f64 = predicted.data().iter().zip(truth.data()).map(|(a, b)| (a.as_f64() - b.as_f64()).abs()).sum();
    Ok(sum / predicted.len() as f64)
}

/// L1 loss of the frame blended from the teacher-warped inputs with the
/// student's occlusion map.
pub fn teacher_reconstruction_loss<T: Real>(
    frame0: &Tensor3<T>,
    frame1: &Tensor3<T>,
    teacher: (&MotionField<T>, &MotionField<T>),
    occlusion: &OcclusionMap<T>,
    truth: &Tensor3<T>,
) -> Result<f64> {
    let w0 = backward_warp(frame0, teacher.0)?;
    let w1 = backward_warp(frame1, teacher.1)?;
    let (h, w, c) = w0.shape();
    let blended = compose_frame(&w0, &w1, occlusion, &Tensor3::zeros(h, w, 1), &Tensor3::zeros(h, w, c))?;
    reconstruction_loss(&blended, truth)
}

/// Bilinear resize with half-pixel centres and clamped edges; displacement
/// components are rescaled by the resolution ratio of their axis.
pub fn resize_field<T: Real>(field: &MotionField<T>, height: usize, width: usize) -> Result<MotionField<T>> {
    let (hs, ws) = (field.height(), field.width());
    if height == 0 || width == 0 {
        return Err(config_err!("cannot resize a field to {height}x{width}"));
    }
    if (hs, ws) == (height, width) {
        return Ok(field.clone());
    }
    let src = field.as_tensor();
    let coord = |i: usize, n_out: usize, n_in: usize| -> (usize, usize, f64) {
        let s = ((i as f64 + 0.5) * n_in as f64 / n_out as f64 - 0.5).clamp(0.0, (n_in - 1) as f64);
        let i0 = s.floor() as usize;
        (i0, (i0 + 1).min(n_in - 1), s - i0 as f64)
    };
    let scale = [width as f64 / ws as f64, height as f64 / hs as f64];
    let out = Tensor3::from_fn(height, width, 2, |y, x, c| {
        let (y0, y1, fy) = coord(y, height, hs);
        let (x0, x1, fx) = coord(x, width, ws);
        let v = |yy, xx| src.at(yy, xx, c).as_f64();
        let top = v(y0, x0) * (1.0 - fx) + v(y0, x1) * fx;
        let bottom = v(y1, x0) * (1.0 - fx) + v(y1, x1) * fx;
        T::cst((top * (1.0 - fy) + bottom * fy) * scale[c])
    });
    MotionField::new(out)
}

fn field_mse<T: Real>(a: &MotionField<T>, b: &MotionField<T>) -> f64 {
    let (a, b) = (a.as_tensor().data(), b.as_tensor().data());
    a.iter().zip(b).map(|(x, y)| (x.as_f64() - y.as_f64()).powi(2)).sum::<f64>() / a.len() as f64
}

/// `Σ_l w_l · (MSE(M^l_t0, down(M^tea_t0)) + MSE(M^l_t1, down(M^tea_t1)))`,
/// each MSE averaged over pixels and both components.
pub fn distillation_loss<T: Real>(
    trace: &[FieldPair<T>],
    teacher: (&MotionField<T>, &MotionField<T>),
    config: &LossConfig,
) -> Result<f64> {
    if trace.is_empty() {
        return Err(config_err!("distillation needs at least one traced level"));
    }
    if trace.len() > config.distill_level_weights.len() {
        return Err(config_err!(
            "{} traced levels but only {} level weights",
            trace.len(),
            config.distill_level_weights.len()
        ));
    }
    if teacher.0.height() != teacher.1.height() || teacher.0.width() != teacher.1.width() {
        return Err(config_err!("teacher fields differ in resolution"));
    }
    let mut total = 0.0;
    for ((m0, m1), &weight) in trace.iter().zip(&config.distill_level_weights) {
        let (h, w) = (m0.height(), m0.width());
        if m1.height() != h || m1.width() != w {
            return Err(config_err!("traced field pair differs in resolution"));
        }
        let t0 = resize_field(teacher.0, h, w)?;
        let t1 = resize_field(teacher.1, h, w)?;
        total += weight * (field_mse(m0, &t0) + field_mse(m1, &t1));
    }
    Ok(total)
}

/// `l_rec + λ1 · l_tea + λ2 · l_distill`.
pub fn total_loss(l_rec: f64, l_tea: f64, l_distill: f64, config: &LossConfig) -> f64 {
    l_rec + config.lambda1 * l_tea + config.lambda2 * l_distill
}
