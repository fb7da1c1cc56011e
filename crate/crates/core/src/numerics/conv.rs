use crate::error::{config_err, Result};
use crate::tensor::{Real, Tensor3};

/// Slope of the leaky rectifier used after every hidden convolution.
pub const LEAKY_SLOPE: f64 = 0.1;

/// Weights and geometry of one 2-D convolution.
///
/// `kernel` is laid out `(out_channels, in_channels, kh, kw)` row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvSpec<T = f32> {
    out_channels: usize,
    in_channels: usize,
    kh: usize,
    kw: usize,
    kernel: Vec<T>,
    bias: Vec<T>,
    stride: usize,
    padding: usize,
}

impl<T: Real> ConvSpec<T> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        out_channels: usize,
        in_channels: usize,
        kh: usize,
        kw: usize,
        kernel: Vec<T>,
        bias: Vec<T>,
        stride: usize,
        padding: usize,
    ) -> Result<Self> {
        if out_channels == 0 || in_channels == 0 {
            return Err(config_err!("conv channel counts must be positive"));
        }
        if kh % 2 == 0 || kw % 2 == 0 {
            return Err(config_err!("conv kernel {kh}x{kw} must have odd extents"));
        }
        if stride == 0 {
            return Err(config_err!("conv stride must be positive"));
        }
        if kernel.len() != out_channels * in_channels * kh * kw {
            return Err(config_err!(
                "kernel holds {} values, expected {out_channels}x{in_channels}x{kh}x{kw}",
                kernel.len()
            ));
        }
        if bias.len() != out_channels {
            return Err(config_err!("bias holds {} values, expected {out_channels}", bias.len()));
        }
        Ok(Self { out_channels, in_channels, kh, kw, kernel, bias, stride, padding })
    }

    /// Square kernel, stride 1, padding that preserves spatial size.
    pub fn same(out_channels: usize, in_channels: usize, k: usize, kernel: Vec<T>, bias: Vec<T>) -> Result<Self> {
        Self::new(out_channels, in_channels, k, k, kernel, bias, 1, k / 2)
    }

    /// All-zero weights with the given geometry.
    pub fn zeros(out_channels: usize, in_channels: usize, k: usize, stride: usize) -> Self {
        Self::new(
            out_channels,
            in_channels,
            k,
            k,
            vec![T::zero(); out_channels * in_channels * k * k],
            vec![T::zero(); out_channels],
            stride,
            k / 2,
        )
        .expect("valid zero conv")
    }

    pub fn out_channels(&self) -> usize {
        self.out_channels
    }
    pub fn in_channels(&self) -> usize {
        self.in_channels
    }
    pub fn kernel_size(&self) -> (usize, usize) {
        (self.kh, self.kw)
    }
    pub fn stride(&self) -> usize {
        self.stride
    }
    pub fn padding(&self) -> usize {
        self.padding
    }
    pub fn kernel(&self) -> &[T] {
        &self.kernel
    }
    pub fn bias(&self) -> &[T] {
        &self.bias
    }

    #[inline]
    pub fn weight(&self, o: usize, c: usize, ky: usize, kx: usize) -> T {
        self.kernel[((o * self.in_channels + c) * self.kh + ky) * self.kw + kx]
    }

    pub fn output_size(&self, height: usize, width: usize) -> Result<(usize, usize)> {
        let (ph, pw) = (height + 2 * self.padding, width + 2 * self.padding);
        if ph < self.kh || pw < self.kw {
            return Err(config_err!("{height}x{width} input too small for a {}x{} kernel", self.kh, self.kw));
        }
        Ok(((ph - self.kh) / self.stride + 1, (pw - self.kw) / self.stride + 1))
    }

    pub fn cast<U: Real>(&self) -> ConvSpec<U> {
        ConvSpec {
            out_channels: self.out_channels,
            in_channels: self.in_channels,
            kh: self.kh,
            kw: self.kw,
            kernel: self.kernel.iter().map(|v| U::cst(v.as_f64())).collect(),
            bias: self.bias.iter().map(|v| U::cst(v.as_f64())).collect(),
            stride: self.stride,
            padding: self.padding,
        }
    }
}

/// Zero-padded 2-D convolution (cross-correlation, as in every deep-learning
/// framework).
///
/// Each output element accumulates `kernel * input` in `(c, ky, kx)` order
/// starting from zero and then adds the bias, independent of threading.
pub fn conv2d<T: Real>(input: &Tensor3<T>, spec: &ConvSpec<T>) -> Result<Tensor3<T>> {
    if input.channels() != spec.in_channels {
        return Err(config_err!(
            "conv expects {} input channels, got {}",
            spec.in_channels,
            input.channels()
        ));
    }
    input.ensure_finite("conv2d input")?;
    let (h, w, cin) = input.shape();
    let (oh, ow) = spec.output_size(h, w)?;
    let cout = spec.out_channels;
    let (kh, kw, stride, pad) = (spec.kh, spec.kw, spec.stride, spec.padding);

    // (c, ky, kx, o) so the innermost loop runs over contiguous output channels.
    let mut transposed = vec![T::zero(); spec.kernel.len()];
    for o in 0..cout {
        for c in 0..cin {
            for ky in 0..kh {
                for kx in 0..kw {
                    transposed[((c * kh + ky) * kw + kx) * cout + o] = spec.weight(o, c, ky, kx);
                }
            }
        }
    }

    let src = input.data();
    Ok(Tensor3::from_rows_par(oh, ow, cout, |oy, row| {
        for ox in 0..ow {
            let acc = &mut row[ox * cout..(ox + 1) * cout];
            for c in 0..cin {
                for ky in 0..kh {
                    let iy = (oy * stride + ky) as isize - pad as isize;
                    if iy < 0 || iy >= h as isize {
                        continue;
                    }
                    for kx in 0..kw {
                        let ix = (ox * stride + kx) as isize - pad as isize;
                        if ix < 0 || ix >= w as isize {
                            continue;
                        }
                        let v = src[(iy as usize * w + ix as usize) * cin + c];
                        let taps = &transposed[((c * kh + ky) * kw + kx) * cout..][..cout];
                        for (a, &k) in acc.iter_mut().zip(taps) {
                            *a = *a + k * v;
                        }
                    }
                }
            }
            for (a, &b) in acc.iter_mut().zip(&spec.bias) {
                *a = *a + b;
            }
        }
    }))
}

#[inline]
pub fn leaky_relu<T: Real>(v: T) -> T {
    if v >= T::zero() {
        v
    } else {
        v * T::cst(LEAKY_SLOPE)
    }
}

#[inline]
pub fn sigmoid<T: Real>(v: T) -> T {
    T::one() / (T::one() + (-v).exp())
}

/// `leaky_relu(conv2d(input))`.
pub fn conv2d_act<T: Real>(input: &Tensor3<T>, spec: &ConvSpec<T>) -> Result<Tensor3<T>> {
    let mut out = conv2d(input, spec)?;
    out.map_inplace(leaky_relu);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::rng::SplitMix64;

    fn naive_conv(input: &Tensor3<f64>, spec: &ConvSpec<f64>) -> Tensor3<f64> {
        let (h, w, cin) = input.shape();
        let (oh, ow) = spec.output_size(h, w).unwrap();
        let (kh, kw) = spec.kernel_size();
        let mut out = Tensor3::zeros(oh, ow, spec.out_channels());
        for o in 0..spec.out_channels() {
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut s = spec.bias()[o];
                    for c in 0..cin {
                        for ky in 0..kh {
                            for kx in 0..kw {
                                let iy = (oy * spec.stride() + ky) as i64 - spec.padding() as i64;
                                let ix = (ox * spec.stride() + kx) as i64 - spec.padding() as i64;
                                if iy >= 0 && ix >= 0 && (iy as usize) < h && (ix as usize) < w {
                                    s += spec.weight(o, c, ky, kx) * input.at(iy as usize, ix as usize, c);
                                }
                            }
                        }
                    }
                    out.set(oy, ox, o, s);
                }
            }
        }
        out
    }

    #[test]
    fn identity_1x1() {
        let mut rng = SplitMix64::new(1);
        let input = Tensor3::<f32>::from_fn(4, 5, 3, |_, _, _| rng.uniform(-1.0, 1.0) as f32);
        let mut kernel = vec![0.0f32; 9];
        for i in 0..3 {
            kernel[i * 3 + i] = 1.0;
        }
        let spec = ConvSpec::same(3, 3, 1, kernel, vec![0.0; 3]).unwrap();
        assert_eq!(conv2d(&input, &spec).unwrap(), input);
    }

    #[test]
    fn all_ones_3x3_on_constant_map() {
        let input = Tensor3::<f32>::full(4, 4, 1, 1.0);
        let spec = ConvSpec::same(1, 1, 3, vec![1.0; 9], vec![0.0]).unwrap();
        let out = conv2d(&input, &spec).unwrap();
        assert_eq!(out.at(0, 0, 0), 4.0);
        assert_eq!(out.at(3, 3, 0), 4.0);
        assert_eq!(out.at(0, 1, 0), 6.0);
        assert_eq!(out.at(1, 1, 0), 9.0);
        assert_eq!(out.at(2, 2, 0), 9.0);
    }

    #[test]
    fn strided_matches_naive_loops() {
        let mut rng = SplitMix64::new(7);
        let input = Tensor3::<f64>::from_fn(5, 5, 3, |_, _, _| rng.uniform(-1.0, 1.0));
        let kernel: Vec<f64> = (0..4 * 3 * 9).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let bias: Vec<f64> = (0..4).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let spec = ConvSpec::new(4, 3, 3, 3, kernel, bias, 2, 1).unwrap();
        let fast = conv2d(&input, &spec).unwrap();
        let slow = naive_conv(&input, &spec);
        assert_eq!(fast.shape(), (3, 3, 4));
        assert!(fast.max_abs_diff(&slow) < 1e-12);

        let fast32 = conv2d(&input.cast::<f32>(), &spec.cast::<f32>()).unwrap();
        assert!(fast32.cast::<f64>().max_abs_diff(&slow) < 1e-6);
    }

    #[test]
    fn errors() {
        let input = Tensor3::<f32>::zeros(4, 4, 2);
        let spec = ConvSpec::<f32>::zeros(1, 3, 3, 1);
        assert!(matches!(conv2d(&input, &spec), Err(Error::Config(_))));
        let mut bad = Tensor3::<f32>::zeros(4, 4, 3);
        bad.set(1, 1, 1, f32::INFINITY);
        assert!(matches!(conv2d(&bad, &spec), Err(Error::Data(_))));
        assert!(ConvSpec::<f32>::new(1, 1, 2, 2, vec![0.0; 4], vec![0.0], 1, 0).is_err());
    }

    #[test]
    fn leaky_and_sigmoid() {
        assert_eq!(leaky_relu(-2.0f64), -0.2);
        assert_eq!(leaky_relu(3.0f32), 3.0);
        assert_eq!(sigmoid(0.0f64), 0.5);
    }
}
