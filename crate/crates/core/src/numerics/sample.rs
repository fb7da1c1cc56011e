//! Bilinear sampling, backward warping and whole-map translation, with
//! adjoints.
//!
//! All sampling in the crate goes through [`Footprint`], so the border
//! policy lives in one place: neighbours outside the grid read as
//! [`OUT_OF_BOUNDS_VALUE`]. Derivatives with respect to sample coordinates
//! are taken on the cell `[floor(x), floor(x) + 1]`, i.e. the right-continuous
//! branch at integer coordinates.

use crate::error::{config_err, Result};
use crate::tensor::{MotionField, Real, Tensor3};

/// Value read for any neighbour outside `[0, W-1] x [0, H-1]`.
pub const OUT_OF_BOUNDS_VALUE: f64 = 0.0;

/// The four bilinear taps of one sample location.
#[derive(Clone, Copy, Debug)]
pub struct Footprint<T> {
    x0: isize,
    y0: isize,
    fx: T,
    fy: T,
}

impl<T: Real> Footprint<T> {
    #[inline]
    pub fn new(x: T, y: T) -> Self {
        let (xf, yf) = (x.floor(), y.floor());
        Self { x0: to_isize(xf), y0: to_isize(yf), fx: x - xf, fy: y - yf }
    }

    #[inline]
    pub fn is_integral(&self) -> bool {
        self.fx == T::zero() && self.fy == T::zero()
    }

    /// Flat pixel index of `(y0 + dy, x0 + dx)` if it lies on the grid.
    #[inline]
    fn tap(&self, dy: isize, dx: isize, h: usize, w: usize) -> Option<usize> {
        let (y, x) = (self.y0 + dy, self.x0 + dx);
        (y >= 0 && x >= 0 && (y as usize) < h && (x as usize) < w).then(|| y as usize * w + x as usize)
    }

    /// Taps in order (y0,x0), (y0,x0+1), (y0+1,x0), (y0+1,x0+1) with weights.
    #[inline]
    pub fn taps(&self, h: usize, w: usize) -> [(Option<usize>, T); 4] {
        let one = T::one();
        [
            (self.tap(0, 0, h, w), (one - self.fx) * (one - self.fy)),
            (self.tap(0, 1, h, w), self.fx * (one - self.fy)),
            (self.tap(1, 0, h, w), (one - self.fx) * self.fy),
            (self.tap(1, 1, h, w), self.fx * self.fy),
        ]
    }

    /// Interpolated value of channel `c`.
    #[inline]
    pub fn value(&self, input: &Tensor3<T>, c: usize) -> T {
        let (h, w, ch) = input.shape();
        let data = input.data();
        if self.is_integral() {
            return match self.tap(0, 0, h, w) {
                Some(p) => data[p * ch + c],
                None => T::cst(OUT_OF_BOUNDS_VALUE),
            };
        }
        let mut acc = T::zero();
        for (tap, wgt) in self.taps(h, w) {
            if let Some(p) = tap {
                acc = acc + wgt * data[p * ch + c];
            }
        }
        acc
    }

    /// Partial derivatives of [`Footprint::value`] with respect to `x` and `y`.
    #[inline]
    pub fn gradient(&self, input: &Tensor3<T>, c: usize) -> (T, T) {
        let (h, w, ch) = input.shape();
        let data = input.data();
        let read = |tap: Option<usize>| tap.map_or(T::cst(OUT_OF_BOUNDS_VALUE), |p| data[p * ch + c]);
        let v00 = read(self.tap(0, 0, h, w));
        let v01 = read(self.tap(0, 1, h, w));
        let v10 = read(self.tap(1, 0, h, w));
        let v11 = read(self.tap(1, 1, h, w));
        let one = T::one();
        let ddx = (one - self.fy) * (v01 - v00) + self.fy * (v11 - v10);
        let ddy = (one - self.fx) * (v10 - v00) + self.fx * (v11 - v01);
        (ddx, ddy)
    }

    /// Adds `grad * weight` into every on-grid tap of `acc` for channel `c`.
    #[inline]
    pub fn scatter(&self, acc: &mut Tensor3<T>, c: usize, grad: T) {
        let (h, w, ch) = acc.shape();
        let data = acc.data_mut();
        for (tap, wgt) in self.taps(h, w) {
            if let Some(p) = tap {
                data[p * ch + c] = data[p * ch + c] + wgt * grad;
            }
        }
    }
}

#[inline]
fn to_isize<T: Real>(v: T) -> isize {
    // Saturating; anything this far away is off-grid anyway.
    v.as_f64().clamp(-1e15, 1e15) as isize
}

/// Bilinear interpolation of channel `c` at `(x, y)` with zero padding.
pub fn bilinear_sample<T: Real>(input: &Tensor3<T>, x: T, y: T, c: usize) -> T {
    Footprint::new(x, y).value(input, c)
}

/// Samples `source` at `coord(y, x)` for every output pixel.
fn warp_with<T: Real>(source: &Tensor3<T>, coord: impl Fn(usize, usize) -> (T, T) + Sync + Send) -> Tensor3<T> {
    let (h, w, c) = source.shape();
    Tensor3::from_rows_par(h, w, c, |y, row| {
        for x in 0..w {
            let (sx, sy) = coord(y, x);
            let fp = Footprint::new(sx, sy);
            for ch in 0..c {
                row[x * c + ch] = fp.value(source, ch);
            }
        }
    })
}

/// Cotangents of [`warp_with`]: source cotangent plus per-pixel `(d/dx, d/dy)`
/// of the sample coordinates.
fn warp_with_adjoint<T: Real>(
    source: &Tensor3<T>,
    coord: impl Fn(usize, usize) -> (T, T) + Sync + Send,
    grad_out: &Tensor3<T>,
) -> (Tensor3<T>, Tensor3<T>) {
    let (h, w, c) = source.shape();
    let grad_coord = Tensor3::from_rows_par(h, w, 2, |y, row| {
        for x in 0..w {
            let (sx, sy) = coord(y, x);
            let fp = Footprint::new(sx, sy);
            let g = grad_out.pixel(y, x);
            let (mut gx, mut gy) = (T::zero(), T::zero());
            for (ch, &gc) in g.iter().enumerate() {
                let (dx, dy) = fp.gradient(source, ch);
                gx = gx + gc * dx;
                gy = gy + gc * dy;
            }
            row[2 * x] = gx;
            row[2 * x + 1] = gy;
        }
    });
    // Scatter in a fixed raster order so the result is independent of threading.
    let mut grad_source = Tensor3::zeros(h, w, c);
    for y in 0..h {
        for x in 0..w {
            let (sx, sy) = coord(y, x);
            let fp = Footprint::new(sx, sy);
            for ch in 0..c {
                fp.scatter(&mut grad_source, ch, grad_out.at(y, x, ch));
            }
        }
    }
    (grad_source, grad_coord)
}

/// `output(y, x, c) = source(x + flow_h(y, x), y + flow_v(y, x), c)`.
pub fn backward_warp<T: Real>(source: &Tensor3<T>, flow: &MotionField<T>) -> Result<Tensor3<T>> {
    check_warp_shapes(source, flow)?;
    let f = flow.as_tensor();
    Ok(warp_with(source, |y, x| {
        let p = f.pixel(y, x);
        (T::cst(x as f64) + p[0], T::cst(y as f64) + p[1])
    }))
}

/// Cotangents of [`backward_warp`].
#[derive(Clone, Debug)]
pub struct WarpGrads<T> {
    pub source: Tensor3<T>,
    /// Two channels, matching the flow layout.
    pub flow: Tensor3<T>,
}

pub fn backward_warp_adjoint<T: Real>(
    source: &Tensor3<T>,
    flow: &MotionField<T>,
    grad_out: &Tensor3<T>,
) -> Result<WarpGrads<T>> {
    check_warp_shapes(source, flow)?;
    if !grad_out.same_shape(source) {
        return Err(config_err!("warp cotangent {:?} does not match source {:?}", grad_out.shape(), source.shape()));
    }
    let f = flow.as_tensor();
    let (source, flow) = warp_with_adjoint(
        source,
        |y, x| {
            let p = f.pixel(y, x);
            (T::cst(x as f64) + p[0], T::cst(y as f64) + p[1])
        },
        grad_out,
    );
    Ok(WarpGrads { source, flow })
}

fn check_warp_shapes<T: Real>(source: &Tensor3<T>, flow: &MotionField<T>) -> Result<()> {
    if source.height() != flow.height() || source.width() != flow.width() {
        return Err(config_err!(
            "flow {}x{} does not match source {}x{}",
            flow.height(),
            flow.width(),
            source.height(),
            source.width()
        ));
    }
    Ok(())
}

/// Shifts the whole map by `(dx, dy)`: `output(p) = input(p - (dx, dy))`.
pub fn translate_fractional<T: Real>(input: &Tensor3<T>, dx: T, dy: T) -> Tensor3<T> {
    warp_with(input, |y, x| (T::cst(x as f64) - dx, T::cst(y as f64) - dy))
}

/// Cotangents of [`translate_fractional`]: `(input, dx, dy)`.
pub fn translate_fractional_adjoint<T: Real>(input: &Tensor3<T>, dx: T, dy: T, grad_out: &Tensor3<T>) -> (Tensor3<T>, T, T) {
    let (gi, gc) = warp_with_adjoint(input, |y, x| (T::cst(x as f64) - dx, T::cst(y as f64) - dy), grad_out);
    let (mut gdx, mut gdy) = (T::zero(), T::zero());
    for p in gc.data().chunks_exact(2) {
        gdx = gdx - p[0];
        gdy = gdy - p[1];
    }
    (gi, gdx, gdy)
}
