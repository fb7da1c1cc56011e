//! 8-bit image files to and from `[0, 1]` tensors.

use std::path::Path;

use dqbc_core::{Real, Tensor3};
use image::{DynamicImage, GrayImage, RgbImage};

use crate::error::{CliError, CliResult};

/// Reads an 8-bit image as RGB with each byte `v` mapped to `v / 255`.
/// Grey and alpha variants are accepted; deeper formats are rejected.
pub fn load_rgb<T: Real>(path: &Path) -> CliResult<Tensor3<T>> {
    let img = image::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let rgb = match img {
        DynamicImage::ImageRgb8(rgb) => rgb,
        DynamicImage::ImageLuma8(_) | DynamicImage::ImageLumaA8(_) | DynamicImage::ImageRgba8(_) => img.to_rgb8(),
        other => {
            return Err(CliError::Io(format!(
                "{}: unsupported pixel format {:?}, expected 8 bits per channel",
                path.display(),
                other.color()
            )))
        }
    };
    Ok(from_rgb8(&rgb))
}

pub fn from_rgb8<T: Real>(rgb: &RgbImage) -> Tensor3<T> {
    let (w, h) = rgb.dimensions();
    Tensor3::from_fn(h as usize, w as usize, 3, |y, x, c| {
        T::cst(rgb.get_pixel(x as u32, y as u32)[c] as f64 / 255.0)
    })
}

/// `round(clamp(v, 0, 1) * 255)` with halves rounded up.
pub fn to_byte<T: Real>(v: T) -> u8 {
    let v = v.as_f64();
    let v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
    (v * 255.0 + 0.5).floor() as u8
}

pub fn to_rgb8<T: Real>(t: &Tensor3<T>) -> CliResult<RgbImage> {
    if t.channels() != 3 {
        return Err(CliError::Validation(format!("expected a 3-channel image, got {}", t.channels())));
    }
    Ok(RgbImage::from_fn(t.width() as u32, t.height() as u32, |x, y| {
        let p = t.pixel(y as usize, x as usize);
        image::Rgb([to_byte(p[0]), to_byte(p[1]), to_byte(p[2])])
    }))
}

pub fn save_rgb<T: Real>(path: &Path, t: &Tensor3<T>) -> CliResult<()> {
    to_rgb8(t)?.save(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Writes channel 0 as an 8-bit greyscale image.
pub fn save_gray<T: Real>(path: &Path, t: &Tensor3<T>) -> CliResult<()> {
    let img = GrayImage::from_fn(t.width() as u32, t.height() as u32, |x, y| {
        image::Luma([to_byte(t.at(y as usize, x as usize, 0))])
    });
    img.save(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}
