//! Rank-3 real-valued grids and the typed views built on them.
//!
//! Every image, feature map, correlation volume and weight map in the crate
//! is a [`Tensor3`] stored row-major in `(y, x, c)` order. Operations are
//! generic over [`Real`] so that the pipeline runs in `f32` while adjoint
//! verification runs in `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::Float;
use rayon::prelude::*;

use crate::error::{config_err, Error, Result};

/// Scalar type accepted by every operation: `f32` or `f64`.
pub trait Real: Float + Default + Debug + Display + Sum + Send + Sync + 'static {
    /// Converts an `f64` literal or intermediate into this precision.
    fn cst(v: f64) -> Self;
    fn as_f64(self) -> f64;
    /// Converts a stored `f32` parameter into this precision.
    fn from_f32(v: f32) -> Self;
}

impl Real for f32 {
    #[inline]
    fn cst(v: f64) -> Self {
        v as f32
    }
    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }
    #[inline]
    fn from_f32(v: f32) -> Self {
        v
    }
}

impl Real for f64 {
    #[inline]
    fn cst(v: f64) -> Self {
        v
    }
    #[inline]
    fn as_f64(self) -> f64 {
        self
    }
    #[inline]
    fn from_f32(v: f32) -> Self {
        v as f64
    }
}

#[derive(Clone, PartialEq)]
pub struct Tensor3<T = f32> {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<T>,
}

impl<T: Debug> Debug for Tensor3<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Tensor3({}x{}x{})", self.height, self.width, self.channels)
    }
}

impl<T: Real> Tensor3<T> {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<T>) -> Result<Self> {
        if height == 0 || width == 0 || channels == 0 {
            return Err(config_err!("tensor dimensions must be positive, got {height}x{width}x{channels}"));
        }
        if data.len() != height * width * channels {
            return Err(config_err!(
                "tensor data length {} does not match {height}x{width}x{channels}",
                data.len()
            ));
        }
        Ok(Self { height, width, channels, data })
    }

    pub fn zeros(height: usize, width: usize, channels: usize) -> Self {
        Self::full(height, width, channels, T::zero())
    }

    pub fn full(height: usize, width: usize, channels: usize, value: T) -> Self {
        assert!(height > 0 && width > 0 && channels > 0, "tensor dimensions must be positive");
        Self { height, width, channels, data: vec![value; height * width * channels] }
    }

    pub fn from_fn(height: usize, width: usize, channels: usize, mut f: impl FnMut(usize, usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(height * width * channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    data.push(f(y, x, c));
                }
            }
        }
        Self::new(height, width, channels, data).expect("positive dimensions")
    }

    /// Builds a tensor by filling each output row independently, in parallel.
    ///
    /// The closure receives the row index and the `width * channels` slice of
    /// that row; results do not depend on how rows are scheduled.
    pub fn from_rows_par(
        height: usize,
        width: usize,
        channels: usize,
        fill: impl Fn(usize, &mut [T]) + Sync + Send,
    ) -> Self {
        let mut out = Self::zeros(height, width, channels);
        out.data
            .par_chunks_mut(width * channels)
            .enumerate()
            .for_each(|(y, row)| fill(y, row));
        out
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }
    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }
    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }
    /// `(height, width, channels)`
    #[inline]
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.height, self.width, self.channels)
    }
    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }
    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }
    #[inline]
    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }
    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn index(&self, y: usize, x: usize, c: usize) -> usize {
        debug_assert!(y < self.height && x < self.width && c < self.channels);
        (y * self.width + x) * self.channels + c
    }

    #[inline]
    pub fn at(&self, y: usize, x: usize, c: usize) -> T {
        self.data[self.index(y, x, c)]
    }

    #[inline]
    pub fn set(&mut self, y: usize, x: usize, c: usize, v: T) {
        let i = self.index(y, x, c);
        self.data[i] = v;
    }

    #[inline]
    pub fn pixel(&self, y: usize, x: usize) -> &[T] {
        let start = (y * self.width + x) * self.channels;
        &self.data[start..start + self.channels]
    }

    #[inline]
    pub fn pixel_mut(&mut self, y: usize, x: usize) -> &mut [T] {
        let start = (y * self.width + x) * self.channels;
        &mut self.data[start..start + self.channels]
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.shape() == other.shape()
    }

    pub fn same_resolution(&self, other: &Self) -> bool {
        self.height == other.height && self.width == other.width
    }

    pub fn cast<U: Real>(&self) -> Tensor3<U> {
        Tensor3 {
            height: self.height,
            width: self.width,
            channels: self.channels,
            data: self.data.iter().map(|v| U::cst(v.as_f64())).collect(),
        }
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        self.with_data(self.data.iter().map(|&v| f(v)).collect())
    }

    pub fn map_inplace(&mut self, f: impl Fn(T) -> T) {
        for v in &mut self.data {
            *v = f(*v);
        }
    }

    /// Element-wise combination of two tensors of identical shape.
    pub fn zip_map(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        if !self.same_shape(other) {
            return Err(config_err!("shape mismatch: {:?} vs {:?}", self.shape(), other.shape()));
        }
        Ok(self.with_data(self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect()))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn scale(&self, s: T) -> Self {
        self.map(|v| v * s)
    }

    fn with_data(&self, data: Vec<T>) -> Self {
        debug_assert_eq!(data.len(), self.data.len());
        Self { height: self.height, width: self.width, channels: self.channels, data }
    }

    /// Concatenates tensors of equal resolution along the channel axis.
    pub fn concat_channels(parts: &[&Self]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| config_err!("nothing to concatenate"))?;
        let (h, w) = (first.height, first.width);
        if let Some(bad) = parts.iter().find(|p| p.height != h || p.width != w) {
            return Err(config_err!(
                "cannot concatenate {}x{} with {}x{}",
                h,
                w,
                bad.height,
                bad.width
            ));
        }
        let channels: usize = parts.iter().map(|p| p.channels).sum();
        let mut data = Vec::with_capacity(h * w * channels);
        for y in 0..h {
            for x in 0..w {
                for p in parts {
                    data.extend_from_slice(p.pixel(y, x));
                }
            }
        }
        Self::new(h, w, channels, data)
    }

    /// Copies channels `start..start + count`.
    pub fn channel_range(&self, start: usize, count: usize) -> Result<Self> {
        if count == 0 || start + count > self.channels {
            return Err(config_err!(
                "channel range {start}..{} out of bounds for {} channels",
                start + count,
                self.channels
            ));
        }
        let mut data = Vec::with_capacity(self.height * self.width * count);
        for y in 0..self.height {
            for x in 0..self.width {
                data.extend_from_slice(&self.pixel(y, x)[start..start + count]);
            }
        }
        Self::new(self.height, self.width, count, data)
    }

    /// Copies the sub-window `[y0, y0+h) x [x0, x0+w)`.
    pub fn crop(&self, y0: usize, x0: usize, h: usize, w: usize) -> Result<Self> {
        if y0 + h > self.height || x0 + w > self.width {
            return Err(config_err!(
                "crop {h}x{w} at ({y0},{x0}) exceeds {}x{}",
                self.height,
                self.width
            ));
        }
        let mut data = Vec::with_capacity(h * w * self.channels);
        for y in y0..y0 + h {
            let start = self.index(y, x0, 0);
            data.extend_from_slice(&self.data[start..start + w * self.channels]);
        }
        Self::new(h, w, self.channels, data)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn ensure_finite(&self, what: &str) -> Result<()> {
        match self.data.iter().position(|v| !v.is_finite()) {
            None => Ok(()),
            Some(i) => Err(Error::Data(format!("{what} holds a non-finite value at flat index {i}"))),
        }
    }

    /// Largest absolute element-wise difference, computed in `f64`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert!(self.same_shape(other), "max_abs_diff on mismatched shapes");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a.as_f64() - b.as_f64()).abs())
            .fold(0.0, f64::max)
    }

    pub fn bitwise_eq(&self, other: &Self) -> bool
    where
        T: BitPattern,
    {
        self.same_shape(other) && self.data.iter().zip(&other.data).all(|(a, b)| a.bits() == b.bits())
    }
}

/// Raw bit access used by exactness checks.
pub trait BitPattern {
    fn bits(self) -> u64;
}

impl BitPattern for f32 {
    fn bits(self) -> u64 {
        self.to_bits() as u64
    }
}

impl BitPattern for f64 {
    fn bits(self) -> u64 {
        self.to_bits()
    }
}

/// Per-pixel displacement field: channel 0 horizontal (rightward positive),
/// channel 1 vertical (downward positive), in pixels of the field's own grid.
#[derive(Clone, Debug, PartialEq)]
pub struct MotionField<T = f32>(Tensor3<T>);

impl<T: Real> MotionField<T> {
    pub fn new(tensor: Tensor3<T>) -> Result<Self> {
        if tensor.channels() != 2 {
            return Err(config_err!("motion field needs 2 channels, got {}", tensor.channels()));
        }
        tensor.ensure_finite("motion field")?;
        Ok(Self(tensor))
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self(Tensor3::zeros(height, width, 2))
    }

    pub fn constant(height: usize, width: usize, dx: T, dy: T) -> Self {
        Self(Tensor3::from_fn(height, width, 2, |_, _, c| if c == 0 { dx } else { dy }))
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.0.height()
    }
    #[inline]
    pub fn width(&self) -> usize {
        self.0.width()
    }

    /// `(dx, dy)` at a pixel.
    #[inline]
    pub fn vector(&self, y: usize, x: usize) -> (T, T) {
        let p = self.0.pixel(y, x);
        (p[0], p[1])
    }

    #[inline]
    pub fn as_tensor(&self) -> &Tensor3<T> {
        &self.0
    }

    pub fn into_tensor(self) -> Tensor3<T> {
        self.0
    }

    pub fn cast<U: Real>(&self) -> MotionField<U> {
        MotionField(self.0.cast())
    }
}

/// Single-channel blend weights in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct OcclusionMap<T = f32>(Tensor3<T>);

impl<T: Real> OcclusionMap<T> {
    pub fn new(tensor: Tensor3<T>) -> Result<Self> {
        if tensor.channels() != 1 {
            return Err(config_err!("occlusion map needs 1 channel, got {}", tensor.channels()));
        }
        if let Some(v) = tensor.data().iter().find(|v| !(**v >= T::zero() && **v <= T::one())) {
            return Err(Error::Data(format!("occlusion value {v} outside [0, 1]")));
        }
        Ok(Self(tensor))
    }

    pub fn constant(height: usize, width: usize, value: T) -> Result<Self> {
        Self::new(Tensor3::full(height, width, 1, value))
    }

    #[inline]
    pub fn as_tensor(&self) -> &Tensor3<T> {
        &self.0
    }

    pub fn into_tensor(self) -> Tensor3<T> {
        self.0
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.0.height()
    }
    #[inline]
    pub fn width(&self) -> usize {
        self.0.width()
    }
}
