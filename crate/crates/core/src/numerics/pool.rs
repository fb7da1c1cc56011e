use crate::error::{contract_err, Result};
use crate::tensor::{Real, Tensor3};

/// 2x2 mean pooling. Both spatial dimensions must be even.
pub fn avgpool2x<T: Real>(input: &Tensor3<T>) -> Result<Tensor3<T>> {
    let (h, w, c) = input.shape();
    if h % 2 != 0 || w % 2 != 0 {
        return Err(contract_err!("avgpool2x needs even dimensions, got {h}x{w}"));
    }
    let quarter = T::cst(0.25);
    Ok(Tensor3::from_rows_par(h / 2, w / 2, c, |y, row| {
        for x in 0..w / 2 {
            let (a, b) = (input.pixel(2 * y, 2 * x), input.pixel(2 * y, 2 * x + 1));
            let (d, e) = (input.pixel(2 * y + 1, 2 * x), input.pixel(2 * y + 1, 2 * x + 1));
            for ch in 0..c {
                row[x * c + ch] = (a[ch] + b[ch] + d[ch] + e[ch]) * quarter;
            }
        }
    }))
}

/// Adjoint of [`avgpool2x`]: spreads each coarse cotangent evenly over its
/// 2x2 source block.
pub fn avgpool2x_adjoint<T: Real>(grad_out: &Tensor3<T>) -> Tensor3<T> {
    let (h, w, c) = grad_out.shape();
    let quarter = T::cst(0.25);
    Tensor3::from_rows_par(2 * h, 2 * w, c, |y, row| {
        for x in 0..2 * w {
            let g = grad_out.pixel(y / 2, x / 2);
            for ch in 0..c {
                row[x * c + ch] = g[ch] * quarter;
            }
        }
    })
}

/// Nearest-neighbour 2x up-sampling (each pixel replicated into a 2x2 block).
pub fn upsample_nearest2x<T: Real>(input: &Tensor3<T>) -> Tensor3<T> {
    let (h, w, c) = input.shape();
    Tensor3::from_rows_par(2 * h, 2 * w, c, |y, row| {
        for x in 0..2 * w {
            row[x * c..(x + 1) * c].copy_from_slice(input.pixel(y / 2, x / 2));
        }
    })
}
