use crate::error::{config_err, Result};
use crate::tensor::{OcclusionMap, Real, Tensor3};

/// `clamp(O + ΔO, 0, 1)`.
pub fn final_occlusion<T: Real>(occlusion: &OcclusionMap<T>, delta: &Tensor3<T>) -> Result<OcclusionMap<T>> {
    let sum = occlusion.as_tensor().add(delta)?;
    OcclusionMap::new(sum.map(|v| v.max(T::zero()).min(T::one())))
}

/// `O_f * warped0 + (1 - O_f) * warped1 + R` with `O_f = clamp(O + ΔO, 0, 1)`.
/// The result is not clamped.
pub fn compose_frame<T: Real>(
    warped0: &Tensor3<T>,
    warped1: &Tensor3<T>,
    occlusion: &OcclusionMap<T>,
    delta: &Tensor3<T>,
    residual: &Tensor3<T>,
) -> Result<Tensor3<T>> {
    if !warped0.same_shape(warped1) || !warped0.same_shape(residual) {
        return Err(config_err!(
            "compose operands differ: {:?}, {:?}, residual {:?}",
            warped0.shape(),
            warped1.shape(),
            residual.shape()
        ));
    }
    let o = final_occlusion(occlusion, delta)?;
    if !o.as_tensor().same_resolution(warped0) {
        return Err(config_err!("occlusion map is not at the frame resolution"));
    }
    let (h, w, c) = warped0.shape();
    Ok(Tensor3::from_fn(h, w, c, |y, x, k| {
        let a = o.as_tensor().at(y, x, 0);
        a * warped0.at(y, x, k) + (T::one() - a) * warped1.at(y, x, k) + residual.at(y, x, k)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn random(h: usize, w: usize, c: usize, seed: u64) -> Tensor3<f64> {
        let mut rng = SplitMix64::new(seed);
        Tensor3::from_fn(h, w, c, |_, _, _| rng.next_f64())
    }

    #[test]
    fn degenerate_blends() {
        let (a, b) = (random(5, 6, 3, 1), random(5, 6, 3, 2));
        let zero1 = Tensor3::zeros(5, 6, 1);
        let zero3 = Tensor3::zeros(5, 6, 3);
        let one = OcclusionMap::constant(5, 6, 1.0).unwrap();
        let none = OcclusionMap::constant(5, 6, 0.0).unwrap();
        let half = OcclusionMap::constant(5, 6, 0.5).unwrap();
        assert_eq!(compose_frame(&a, &b, &one, &zero1, &zero3).unwrap(), a);
        assert_eq!(compose_frame(&a, &b, &none, &zero1, &zero3).unwrap(), b);
        let avg = compose_frame(&a, &b, &half, &zero1, &zero3).unwrap();
        assert!(avg.bitwise_eq(&a.zip_map(&b, |x, y| (x + y) / 2.0).unwrap()));
    }

    #[test]
    fn delta_is_clamped() {
        let (a, b) = (random(2, 2, 3, 3), random(2, 2, 3, 4));
        let half = OcclusionMap::constant(2, 2, 0.5).unwrap();
        let up = Tensor3::full(2, 2, 1, 3.0);
        let down = Tensor3::full(2, 2, 1, -3.0);
        let zero3 = Tensor3::zeros(2, 2, 3);
        assert_eq!(compose_frame(&a, &b, &half, &up, &zero3).unwrap(), a);
        assert_eq!(compose_frame(&a, &b, &half, &down, &zero3).unwrap(), b);
    }

    #[test]
    fn residual_is_added_unclamped() {
        let a = Tensor3::full(2, 2, 3, 0.9);
        let one = OcclusionMap::constant(2, 2, 1.0).unwrap();
        let r = Tensor3::full(2, 2, 3, 0.5);
        let out = compose_frame(&a, &a, &one, &Tensor3::zeros(2, 2, 1), &r).unwrap();
        assert!(out.data().iter().all(|&v| (v - 1.4f64).abs() < 1e-15));
    }

    #[test]
    fn shape_mismatch() {
        let a = random(2, 2, 3, 5);
        let b = random(2, 3, 3, 6);
        let o = OcclusionMap::constant(2, 2, 0.5).unwrap();
        assert!(compose_frame(&a, &b, &o, &Tensor3::zeros(2, 2, 1), &Tensor3::zeros(2, 2, 3)).is_err());
    }
}
