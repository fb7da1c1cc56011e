//! Direct motion fitting: gradient descent on the squared warp error
//! `mean((warp(I0, M) - I1)^2)` over a full-resolution field.
//!
//! The warped value at a pixel depends only on that pixel's vector, so the
//! objective splits into independent per-pixel terms. Each pixel keeps its
//! own step size: a step that does not increase its term is accepted and the
//! step doubles, otherwise it is rejected and the step halves. The total
//! loss is therefore non-increasing.

use dqbc_core::numerics::{backward_warp, backward_warp_adjoint};
use dqbc_core::{Error, MotionField, Result, Tensor3};

#[derive(Clone, Debug)]
pub struct FitOptions {
    pub iterations: usize,
    pub step: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { iterations: 500, step: 0.5 }
    }
}

#[derive(Clone, Debug)]
pub struct FitReport {
    pub field: MotionField<f64>,
    /// Loss before the first step and after every iteration.
    pub losses: Vec<f64>,
}

impl FitReport {
    pub fn final_loss(&self) -> f64 {
        *self.losses.last().expect("initial loss recorded")
    }
}

/// Per-pixel squared error summed over channels.
fn pixel_errors(warped: &Tensor3<f64>, target: &Tensor3<f64>) -> Vec<f64> {
    warped
        .data()
        .chunks_exact(warped.channels())
        .zip(target.data().chunks_exact(target.channels()))
        .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
        .collect()
}

pub fn fit_motion(frame0: &Tensor3<f64>, frame1: &Tensor3<f64>, options: &FitOptions) -> Result<FitReport> {
    if !frame0.same_shape(frame1) {
        return Err(Error::Config(format!("frames differ: {:?} vs {:?}", frame0.shape(), frame1.shape())));
    }
    if !(options.step > 0.0 && options.step.is_finite()) {
        return Err(Error::Config(format!("step must be positive, got {}", options.step)));
    }
    let (h, w, _) = frame0.shape();
    let norm = frame0.len() as f64;
    let mut field = MotionField::<f64>::zeros(h, w);
    let mut steps = vec![options.step; h * w];
    let mut errors = pixel_errors(&backward_warp(frame0, &field)?, frame1);
    let mut losses = vec![errors.iter().sum::<f64>() / norm];

    for it in 0..options.iterations {
        let warped = backward_warp(frame0, &field)?;
        let residual = warped.zip_map(frame1, |a, b| 2.0 * (a - b))?;
        let grad = backward_warp_adjoint(frame0, &field, &residual)?.flow;
        let current = field.as_tensor();
        let proposal = Tensor3::from_fn(h, w, 2, |y, x, c| current.at(y, x, c) - steps[y * w + x] * grad.at(y, x, c));
        let proposal = MotionField::new(proposal)
            .map_err(|_| Error::Verification(format!("motion field diverged at iteration {it}")))?;
        let trial = pixel_errors(&backward_warp(frame0, &proposal)?, frame1);
        let mut next = current.clone();
        for p in 0..h * w {
            if trial[p] <= errors[p] {
                errors[p] = trial[p];
                next.pixel_mut(p / w, p % w).copy_from_slice(proposal.as_tensor().pixel(p / w, p % w));
                steps[p] *= 2.0;
            } else {
                steps[p] *= 0.5;
            }
        }
        field = MotionField::new(next)?;
        let loss = errors.iter().sum::<f64>() / norm;
        if !loss.is_finite() {
            return Err(Error::Verification(format!("loss became {loss} at iteration {it}")));
        }
        losses.push(loss);
    }
    Ok(FitReport { field, losses })
}

/// Mean endpoint error against a constant flow over the central crop that
/// drops `margin_fraction` of each side.
pub fn mean_endpoint_error(field: &MotionField<f64>, truth: (f64, f64), margin_fraction: f64) -> f64 {
    let (h, w) = (field.height(), field.width());
    let (my, mx) = ((h as f64 * margin_fraction) as usize, (w as f64 * margin_fraction) as usize);
    let mut sum = 0.0;
    let mut count = 0usize;
    for y in my..h - my {
        for x in mx..w - mx {
            let (dx, dy) = field.vector(y, x);
            sum += (dx - truth.0).hypot(dy - truth.1);
            count += 1;
        }
    }
    sum / count as f64
}


/// Three-channel texture in `[0, 1]` on the continuous plane: red rises
/// with `x`, green with `y` and blue with `x + y`, each modulated by a fine
/// ripple small enough to keep the channel strictly monotone. Every pixel's
/// warp error then has a single stationary point, at the true displacement.
pub fn texture(x: f64, y: f64, c: usize) -> f64 {
    use std::f64::consts::TAU;
    match c {
        0 => 0.02 + 0.9 * x / 70.0 + 0.005 * (TAU * x / 7.0).sin(),
        1 => 0.02 + 0.9 * y / 70.0 + 0.005 * (TAU * y / 6.0 + 1.0).sin(),
        _ => 0.02 + 0.9 * (x + y) / 140.0 + 0.002 * (TAU * (x + y) / 9.0 + 2.0).sin(),
    }
}

/// `(I0, I1)` with `I1(x, y) = I0(x + dx, y + dy)`, so that warping `I0` by
/// the constant field `(dx, dy)` reproduces `I1`.
pub fn translated_pair(height: usize, width: usize, dx: f64, dy: f64) -> (Tensor3<f64>, Tensor3<f64>) {
    let i0 = Tensor3::from_fn(height, width, 3, |y, x, c| texture(x as f64, y as f64, c));
    let i1 = Tensor3::from_fn(height, width, 3, |y, x, c| texture(x as f64 + dx, y as f64 + dy, c));
    (i0, i1)
}
