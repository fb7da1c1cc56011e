//! Learned convex 2x up-sampling of motion fields.
//!
//! Each coarse pixel carries 36 logits: for each of its four fine sub-pixels
//! `(a, b)` (channel block `(2a + b) * 9`) nine logits over the 3x3 coarse
//! neighbourhood, taps in row-major order. The fine vector is twice the
//! softmax-weighted average of the neighbourhood, the factor 2 converting
//! coarse-pixel displacements into fine-pixel units.

use crate::error::{config_err, Result};
use crate::numerics::softmax::softmax_into;
use crate::tensor::{MotionField, Real, Tensor3};

/// Logit channels per coarse pixel: 2 x 2 sub-pixels x 9 taps.
pub const UPSAMPLE_LOGITS: usize = 36;

const TAPS: [(isize, isize); 9] = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 0), (0, 1), (1, -1), (1, 0), (1, 1)];

fn check<T: Real>(field: &MotionField<T>, logits: &Tensor3<T>) -> Result<()> {
    if logits.channels() != UPSAMPLE_LOGITS {
        return Err(config_err!("convex up-sampling needs {UPSAMPLE_LOGITS} logit channels, got {}", logits.channels()));
    }
    if logits.height() != field.height() || logits.width() != field.width() {
        return Err(config_err!(
            "logits {}x{} do not match field {}x{}",
            logits.height(),
            logits.width(),
            field.height(),
            field.width()
        ));
    }
    Ok(())
}

#[inline]
fn neighbour(y: usize, x: usize, (dy, dx): (isize, isize), h: usize, w: usize) -> Option<(usize, usize)> {
    let (ny, nx) = (y as isize + dy, x as isize + dx);
    (ny >= 0 && nx >= 0 && (ny as usize) < h && (nx as usize) < w).then_some((ny as usize, nx as usize))
}

pub fn convex_upsample<T: Real>(field: &MotionField<T>, logits: &Tensor3<T>) -> Result<MotionField<T>> {
    check(field, logits)?;
    let f = field.as_tensor();
    let (h, w) = (field.height(), field.width());
    let two = T::cst(2.0);
    let out = Tensor3::from_rows_par(2 * h, 2 * w, 2, |fy, row| {
        let (y, a) = (fy / 2, fy % 2);
        let mut weights = [T::zero(); 9];
        for fx in 0..2 * w {
            let (x, b) = (fx / 2, fx % 2);
            let s = 2 * a + b;
            softmax_into(&logits.pixel(y, x)[s * 9..s * 9 + 9], &mut weights);
            for k in 0..2 {
                let mut acc = T::zero();
                for (&tap, &wt) in TAPS.iter().zip(&weights) {
                    if let Some((ny, nx)) = neighbour(y, x, tap, h, w) {
                        acc = acc + wt * f.at(ny, nx, k);
                    }
                }
                row[2 * fx + k] = two * acc;
            }
        }
    });
    MotionField::new(out)
}

/// Cotangents of [`convex_upsample`]: `(field, logits)`.
pub fn convex_upsample_adjoint<T: Real>(
    field: &MotionField<T>,
    logits: &Tensor3<T>,
    grad_out: &Tensor3<T>,
) -> Result<(Tensor3<T>, Tensor3<T>)> {
    check(field, logits)?;
    let f = field.as_tensor();
    let (h, w) = (field.height(), field.width());
    if grad_out.shape() != (2 * h, 2 * w, 2) {
        return Err(config_err!("cotangent {:?} expected {:?}", grad_out.shape(), (2 * h, 2 * w, 2)));
    }
    let two = T::cst(2.0);

    let grad_logits = Tensor3::from_rows_par(h, w, UPSAMPLE_LOGITS, |y, row| {
        let mut p = [T::zero(); 9];
        for x in 0..w {
            for s in 0..4 {
                let (a, b) = (s / 2, s % 2);
                let g = grad_out.pixel(2 * y + a, 2 * x + b);
                softmax_into(&logits.pixel(y, x)[s * 9..s * 9 + 9], &mut p);
                let mut dp = [T::zero(); 9];
                for (d, &tap) in dp.iter_mut().zip(&TAPS) {
                    if let Some((ny, nx)) = neighbour(y, x, tap, h, w) {
                        *d = two * (g[0] * f.at(ny, nx, 0) + g[1] * f.at(ny, nx, 1));
                    }
                }
                let mean = p.iter().zip(&dp).fold(T::zero(), |acc, (&pi, &di)| acc + pi * di);
                let out = &mut row[x * UPSAMPLE_LOGITS + s * 9..][..9];
                for i in 0..9 {
                    out[i] = p[i] * (dp[i] - mean);
                }
            }
        }
    });

    let mut grad_field = Tensor3::zeros(h, w, 2);
    let mut p = [T::zero(); 9];
    for fy in 0..2 * h {
        for fx in 0..2 * w {
            let (y, x, s) = (fy / 2, fx / 2, 2 * (fy % 2) + fx % 2);
            softmax_into(&logits.pixel(y, x)[s * 9..s * 9 + 9], &mut p);
            let g = grad_out.pixel(fy, fx);
            let (g0, g1) = (g[0], g[1]);
            for (&tap, &pi) in TAPS.iter().zip(&p) {
                if let Some((ny, nx)) = neighbour(y, x, tap, h, w) {
                    let dst = grad_field.pixel_mut(ny, nx);
                    dst[0] = dst[0] + two * pi * g0;
                    dst[1] = dst[1] + two * pi * g1;
                }
            }
        }
    }
    Ok((grad_field, grad_logits))
}

/// Logits that put all weight on the centre tap for every sub-pixel.
pub fn centre_tap_logits<T: Real>(height: usize, width: usize) -> Tensor3<T> {
    Tensor3::from_fn(height, width, UPSAMPLE_LOGITS, |_, _, c| if c % 9 == 4 { T::zero() } else { T::cst(-1e4) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::check_adjoint;
    use crate::rng::SplitMix64;

    fn random_field(h: usize, w: usize, rng: &mut SplitMix64) -> MotionField<f64> {
        MotionField::new(Tensor3::from_fn(h, w, 2, |_, _, _| rng.uniform(-3.0, 3.0))).unwrap()
    }

    #[test]
    fn centre_tap_replicates_and_doubles() {
        let mut rng = SplitMix64::new(1);
        let field = random_field(3, 4, &mut rng);
        let up = convex_upsample(&field, &centre_tap_logits(3, 4)).unwrap();
        for fy in 0..6 {
            for fx in 0..8 {
                let (dx, dy) = field.vector(fy / 2, fx / 2);
                assert_eq!(up.vector(fy, fx), (2.0 * dx, 2.0 * dy));
            }
        }
        let up32 = convex_upsample(&field.cast::<f32>(), &centre_tap_logits(3, 4)).unwrap();
        for fy in 0..6 {
            for fx in 0..8 {
                let (dx, dy) = field.cast::<f32>().vector(fy / 2, fx / 2);
                assert_eq!(up32.vector(fy, fx), (2.0 * dx, 2.0 * dy));
            }
        }
    }

    #[test]
    fn uniform_logits_on_constant_field_interior() {
        let field = MotionField::<f64>::constant(4, 4, 1.5, -0.25);
        let up = convex_upsample(&field, &Tensor3::zeros(4, 4, 36)).unwrap();
        for fy in 2..6 {
            for fx in 2..6 {
                let (dx, dy) = up.vector(fy, fx);
                assert!((dx - 3.0).abs() < 1e-12 && (dy + 0.5).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn matches_weighted_sum_oracle_and_convex_bounds() {
        let mut rng = SplitMix64::new(2);
        let (h, w) = (4, 5);
        let field = random_field(h, w, &mut rng);
        let logits = Tensor3::from_fn(h, w, 36, |_, _, _| rng.uniform(-2.0, 2.0));
        let up = convex_upsample(&field, &logits).unwrap();
        for fy in 0..2 * h {
            for fx in 0..2 * w {
                let (y, x) = (fy / 2, fx / 2);
                let s = 2 * (fy % 2) + fx % 2;
                let l = &logits.pixel(y, x)[s * 9..s * 9 + 9];
                let z: f64 = l.iter().map(|v| v.exp()).sum();
                for k in 0..2 {
                    let (mut expect, mut lo, mut hi) = (0.0, f64::MAX, f64::MIN);
                    for (t, &(dy, dx)) in TAPS.iter().enumerate() {
                        let (ny, nx) = (y as isize + dy, x as isize + dx);
                        let v = if ny < 0 || nx < 0 || ny >= h as isize || nx >= w as isize {
                            0.0
                        } else {
                            field.as_tensor().at(ny as usize, nx as usize, k)
                        };
                        expect += l[t].exp() / z * v;
                        lo = lo.min(v);
                        hi = hi.max(v);
                    }
                    let got = up.as_tensor().at(fy, fx, k);
                    assert!((got - 2.0 * expect).abs() < 1e-6);
                    assert!(got >= 2.0 * lo - 1e-12 && got <= 2.0 * hi + 1e-12);
                }
            }
        }
    }

    #[test]
    fn wrong_logit_channels() {
        let field = MotionField::<f32>::zeros(2, 2);
        assert!(convex_upsample(&field, &Tensor3::zeros(2, 2, 9)).is_err());
    }

    #[test]
    fn adjoint_matches_finite_differences() {
        let mut rng = SplitMix64::new(3);
        let (h, w) = (3, 4);
        let field = random_field(h, w, &mut rng);
        let logits = Tensor3::from_fn(h, w, 36, |_, _, _| rng.uniform(-1.0, 1.0));
        let cot = Tensor3::from_fn(2 * h, 2 * w, 2, |_, _, _| rng.uniform(-1.0, 1.0));
        let point: Vec<f64> = field.as_tensor().data().iter().chain(logits.data()).copied().collect();
        let n = h * w * 2;
        let split = |p: &[f64]| {
            (
                MotionField::new(Tensor3::new(h, w, 2, p[..n].to_vec()).unwrap()).unwrap(),
                Tensor3::new(h, w, 36, p[n..].to_vec()).unwrap(),
            )
        };
        let report = check_adjoint(
            |p| {
                let (f, l) = split(p);
                convex_upsample(&f, &l).unwrap().into_tensor().into_data()
            },
            |p, g| {
                let (f, l) = split(p);
                let g = Tensor3::new(2 * h, 2 * w, 2, g.to_vec()).unwrap();
                let (gf, gl) = convex_upsample_adjoint(&f, &l, &g).unwrap();
                gf.data().iter().chain(gl.data()).copied().collect()
            },
            &point,
            cot.data(),
            1e-6,
        )
        .unwrap();
        assert!(report.max_rel_error < 1e-5, "{report:?}");
    }
}
