//! Literal reference evaluations, written without any of the crate's
//! sampling or convolution code. All in `f64`.

use crate::numerics::ConvSpec;
use crate::tensor::{MotionField, Tensor3};

/// Bilinear read with zero outside the grid.
pub fn bilinear(t: &Tensor3<f64>, x: f64, y: f64, c: usize) -> f64 {
    let read = |yy: f64, xx: f64| {
        if yy < 0.0 || xx < 0.0 || yy >= t.height() as f64 || xx >= t.width() as f64 {
            0.0
        } else {
            t.at(yy as usize, xx as usize, c)
        }
    };
    let (x0, y0) = (x.floor(), y.floor());
    let (ax, ay) = (x - x0, y - y0);
    (1.0 - ax) * (1.0 - ay) * read(y0, x0)
        + ax * (1.0 - ay) * read(y0, x0 + 1.0)
        + (1.0 - ax) * ay * read(y0 + 1.0, x0)
        + ax * ay * read(y0 + 1.0, x0 + 1.0)
}

/// Unilateral correlation by direct summation over levels, window rows,
/// window columns and channels.
pub fn correlation(queries: &Tensor3<f64>, keys: &Tensor3<f64>, radii: &[usize]) -> Tensor3<f64> {
    let (h, w, c) = queries.shape();
    let mut levels = vec![keys.clone()];
    for l in 1..radii.len() {
        let prev = &levels[l - 1];
        let next = Tensor3::from_fn(prev.height() / 2, prev.width() / 2, c, |y, x, ch| {
            let mut s = 0.0;
            for dy in 0..2 {
                for dx in 0..2 {
                    s += prev.at(2 * y + dy, 2 * x + dx, ch);
                }
            }
            s / 4.0
        });
        levels.push(next);
    }
    let n: usize = radii.iter().map(|r| (2 * r + 1) * (2 * r + 1)).sum();
    let mut out = Tensor3::zeros(h, w, n);
    for yq in 0..h {
        for xq in 0..w {
            let mut ch = 0;
            for (l, &r) in radii.iter().enumerate() {
                let s = (1usize << l) as f64;
                let r = r as i64;
                for j in -r..=r {
                    for i in -r..=r {
                        let kx = (xq as f64 + s * i as f64) / s;
                        let ky = (yq as f64 + s * j as f64) / s;
                        let mut total = 0.0;
                        for cc in 0..c {
                            total += queries.at(yq, xq, cc) * bilinear(&levels[l], kx, ky, cc);
                        }
                        out.set(yq, xq, ch, total);
                        ch += 1;
                    }
                }
            }
        }
    }
    out
}

pub fn conv(input: &Tensor3<f64>, spec: &ConvSpec<f64>) -> Tensor3<f64> {
    let (h, w, cin) = input.shape();
    let (kh, kw) = spec.kernel_size();
    let (s, p) = (spec.stride(), spec.padding() as i64);
    let oh = (h + 2 * spec.padding() - kh) / s + 1;
    let ow = (w + 2 * spec.padding() - kw) / s + 1;
    Tensor3::from_fn(oh, ow, spec.out_channels(), |y, x, o| {
        let mut acc = 0.0;
        for c in 0..cin {
            for ky in 0..kh {
                for kx in 0..kw {
                    let iy = (y * s) as i64 + ky as i64 - p;
                    let ix = (x * s) as i64 + kx as i64 - p;
                    if iy >= 0 && ix >= 0 && (iy as usize) < h && (ix as usize) < w {
                        acc += spec.weight(o, c, ky, kx) * input.at(iy as usize, ix as usize, c);
                    }
                }
            }
        }
        acc + spec.bias()[o]
    })
}

pub fn convex_upsample(field: &MotionField<f64>, logits: &Tensor3<f64>) -> Tensor3<f64> {
    let (h, w) = (field.height(), field.width());
    let f = field.as_tensor();
    Tensor3::from_fn(2 * h, 2 * w, 2, |fy, fx, comp| {
        let (y, x) = (fy / 2, fx / 2);
        let block = (2 * (fy % 2) + fx % 2) * 9;
        let l = &logits.pixel(y, x)[block..block + 9];
        let max = l.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = l.iter().map(|v| (v - max).exp()).sum();
        let mut acc = 0.0;
        for k in 0..9 {
            let ny = y as i64 + k as i64 / 3 - 1;
            let nx = x as i64 + k as i64 % 3 - 1;
            if ny >= 0 && nx >= 0 && (ny as usize) < h && (nx as usize) < w {
                acc += (l[k] - max).exp() / z * f.at(ny as usize, nx as usize, comp);
            }
        }
        2.0 * acc
    })
}

pub fn warp(source: &Tensor3<f64>, flow: &MotionField<f64>) -> Tensor3<f64> {
    let (h, w, c) = source.shape();
    Tensor3::from_fn(h, w, c, |y, x, ch| {
        let (dx, dy) = flow.vector(y, x);
        bilinear(source, x as f64 + dx, y as f64 + dy, ch)
    })
}
