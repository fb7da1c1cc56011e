//! Optical-flow colour wheel: hue encodes direction, saturation encodes
//! magnitude relative to the largest vector in the image.

use dqbc_core::{MotionField, Real};
use image::RgbImage;

/// Segment lengths red-yellow, yellow-green, green-cyan, cyan-blue,
/// blue-magenta, magenta-red.
const SEGMENTS: [usize; 6] = [15, 6, 4, 11, 13, 6];

pub fn color_wheel() -> Vec<[f64; 3]> {
    let mut wheel = Vec::with_capacity(SEGMENTS.iter().sum());
    let ramps: [(usize, usize, bool); 6] = [(0, 1, true), (1, 0, false), (1, 2, true), (2, 1, false), (2, 0, true), (0, 2, false)];
    for (&n, &(fixed, moving, rising)) in SEGMENTS.iter().zip(&ramps) {
        for i in 0..n {
            let mut c = [0.0; 3];
            c[fixed] = 1.0;
            let f = i as f64 / n as f64;
            c[moving] = if rising { f } else { 1.0 - f };
            wheel.push(c);
        }
    }
    wheel
}

/// Colour of `(u, v)` where `(u, v)` is already normalised so that the
/// largest vector has length 1.
pub fn flow_color(u: f64, v: f64, wheel: &[[f64; 3]]) -> [u8; 3] {
    let n = wheel.len();
    let rad = (u * u + v * v).sqrt();
    let angle = (-v).atan2(-u) / std::f64::consts::PI;
    let fk = (angle + 1.0) / 2.0 * (n - 1) as f64;
    let k0 = (fk.floor() as usize).min(n - 1);
    let k1 = if k0 + 1 == n { 0 } else { k0 + 1 };
    let f = fk - k0 as f64;
    let mut out = [0u8; 3];
    for (c, o) in out.iter_mut().enumerate() {
        let col = (1.0 - f) * wheel[k0][c] + f * wheel[k1][c];
        let col = if rad <= 1.0 { 1.0 - rad * (1.0 - col) } else { col * 0.75 };
        *o = (255.0 * col).round().clamp(0.0, 255.0) as u8;
    }
    out
}

pub fn render_flow<T: Real>(field: &MotionField<T>) -> RgbImage {
    let wheel = color_wheel();
    let t = field.as_tensor();
    let max = t.data().chunks_exact(2).map(|p| p[0].as_f64().hypot(p[1].as_f64())).fold(0.0, f64::max);
    let scale = if max > 0.0 { 1.0 / max } else { 1.0 };
    RgbImage::from_fn(field.width() as u32, field.height() as u32, |x, y| {
        let (u, v) = field.vector(y as usize, x as usize);
        image::Rgb(flow_color(u.as_f64() * scale, v.as_f64() * scale, &wheel))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wheel_has_55_entries_starting_red() {
        let w = color_wheel();
        assert_eq!(w.len(), 55);
        assert_eq!(w[0], [1.0, 0.0, 0.0]);
        assert_eq!(w[15], [1.0, 1.0, 0.0]);
        assert_eq!(w[21], [0.0, 1.0, 0.0]);
    }

    #[test]
    fn zero_flow_is_white() {
        assert_eq!(flow_color(0.0, 0.0, &color_wheel()), [255, 255, 255]);
        let f = MotionField::<f32>::zeros(2, 3);
        assert!(render_flow(&f).pixels().all(|p| p.0 == [255, 255, 255]));
    }

    #[test]
    fn opposite_directions_differ() {
        let w = color_wheel();
        assert_ne!(flow_color(1.0, 0.0, &w), flow_color(-1.0, 0.0, &w));
        assert_ne!(flow_color(0.0, 1.0, &w), flow_color(0.0, -1.0, &w));
    }
}
