use crate::error::{config_err, Result};
use crate::tensor::{Real, Tensor3};

/// Per pixel, replaces each consecutive run of `group_size` channels by its
/// softmax (max-subtracted).
pub fn softmax_groups<T: Real>(input: &Tensor3<T>, group_size: usize) -> Result<Tensor3<T>> {
    let (h, w, c) = input.shape();
    if group_size == 0 || c % group_size != 0 {
        return Err(config_err!("{c} channels are not divisible into groups of {group_size}"));
    }
    Ok(Tensor3::from_rows_par(h, w, c, |y, row| {
        for x in 0..w {
            let src = input.pixel(y, x);
            let dst = &mut row[x * c..(x + 1) * c];
            for (s, d) in src.chunks_exact(group_size).zip(dst.chunks_exact_mut(group_size)) {
                softmax_into(s, d);
            }
        }
    }))
}

/// Softmax of `logits` written into `out`.
#[inline]
pub(crate) fn softmax_into<T: Real>(logits: &[T], out: &mut [T]) {
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let mut sum = T::zero();
    for (o, &l) in out.iter_mut().zip(logits) {
        *o = (l - max).exp();
        sum = sum + *o;
    }
    for o in out.iter_mut() {
        *o = *o / sum;
    }
}
