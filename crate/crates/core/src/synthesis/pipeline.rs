use crate::config::PyramidConfig;
use crate::correlation::assemble_dqbc;
use crate::error::{config_err, Error, Result};
use crate::motion::{extract_context_pyramid, mgm_generate, run_mrm, FieldPair};
use crate::numerics::backward_warp;
use crate::tensor::{MotionField, OcclusionMap, Real, Tensor3};
use crate::weights::ModelWeights;

use super::compose::{compose_frame, final_occlusion};
use super::synthnet::{synthnet_forward, SynthesisInputs};

/// Intermediate results of one interpolation.
///
/// Full-resolution maps are cropped to the input size; the trace stays at the
/// padded working resolution.
#[derive(Clone, Debug)]
pub struct Diagnostics<T> {
    pub fields: FieldPair<T>,
    pub occlusion: OcclusionMap<T>,
    pub final_occlusion: OcclusionMap<T>,
    pub residual: Tensor3<T>,
    /// Field pairs at 1/8, 1/4, 1/2 and full padded resolution.
    pub trace: Vec<FieldPair<T>>,
    pub padded_size: (usize, usize),
}

fn reflect(i: usize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n - 1);
    let m = i % period;
    if m < n {
        m
    } else {
        period - m
    }
}

/// Extends the bottom and right edges by mirror reflection (edge pixel not
/// repeated) to `height x width`.
pub fn pad_reflect<T: Real>(t: &Tensor3<T>, height: usize, width: usize) -> Tensor3<T> {
    let (h, w, c) = t.shape();
    if (h, w) == (height, width) {
        return t.clone();
    }
    Tensor3::from_fn(height, width, c, |y, x, k| t.at(reflect(y, h), reflect(x, w), k))
}

pub fn padded_size(height: usize, width: usize) -> (usize, usize) {
    (height.div_ceil(8) * 8, width.div_ceil(8) * 8)
}

fn validate_frames<T: Real>(frame0: &Tensor3<T>, frame1: &Tensor3<T>) -> Result<()> {
    if !frame0.same_shape(frame1) {
        return Err(config_err!("frames differ in size: {:?} vs {:?}", frame0.shape(), frame1.shape()));
    }
    if frame0.channels() != 3 {
        return Err(config_err!("frames must have 3 channels, got {}", frame0.channels()));
    }
    if frame0.is_empty() {
        return Err(config_err!("frames are empty"));
    }
    for (i, f) in [frame0, frame1].into_iter().enumerate() {
        if let Some(v) = f.data().iter().find(|v| !(**v >= T::zero() && **v <= T::one())) {
            return Err(Error::Data(format!("frame{i} holds {v}, outside [0, 1]")));
        }
    }
    Ok(())
}

fn crop_field<T: Real>(m: &MotionField<T>, h: usize, w: usize) -> Result<MotionField<T>> {
    MotionField::new(m.as_tensor().crop(0, 0, h, w)?)
}

/// Synthesises the frame at time `t` between `frame0` and `frame1`. The
/// output is clamped to `[0, 1]`.
pub fn interpolate_midframe<T: Real>(
    frame0: &Tensor3<T>,
    frame1: &Tensor3<T>,
    weights: &ModelWeights<T>,
    config: &PyramidConfig,
    t: T,
) -> Result<(Tensor3<T>, Diagnostics<T>)> {
    validate_frames(frame0, frame1)?;
    config.validate()?;
    let (h, w) = (frame0.height(), frame0.width());
    let (ph, pw) = padded_size(h, w);
    let i0 = pad_reflect(frame0, ph, pw);
    let i1 = pad_reflect(frame1, ph, pw);

    let dqbc = assemble_dqbc(&i0, &i1, &weights.dqbc, config, t)?;
    let fields = mgm_generate(&dqbc, &i0, &i1, &weights.mgm)?;
    let ctx0 = extract_context_pyramid(&i0, &weights.context)?;
    let ctx1 = extract_context_pyramid(&i1, &weights.context)?;
    let mrm = run_mrm(fields, &ctx0, &ctx1, &weights.mrm)?;
    let warped0 = backward_warp(&i0, &mrm.fields.0)?;
    let warped1 = backward_warp(&i1, &mrm.fields.1)?;
    let inputs = SynthesisInputs {
        warped0: &warped0,
        warped1: &warped1,
        occlusion: &mrm.occlusion,
        warped_contexts: &mrm.warped_contexts,
    };
    let (residual, delta) = synthnet_forward(&inputs, &weights.synth)?;
    let frame = compose_frame(&warped0, &warped1, &mrm.occlusion, &delta, &residual)?;
    let o_final = final_occlusion(&mrm.occlusion, &delta)?;

    let mut out = frame.crop(0, 0, h, w)?;
    out.map_inplace(|v| v.max(T::zero()).min(T::one()));
    out.ensure_finite("interpolated frame")?;
    let diagnostics = Diagnostics {
        fields: (crop_field(&mrm.fields.0, h, w)?, crop_field(&mrm.fields.1, h, w)?),
        occlusion: OcclusionMap::new(mrm.occlusion.as_tensor().crop(0, 0, h, w)?)?,
        final_occlusion: OcclusionMap::new(o_final.as_tensor().crop(0, 0, h, w)?)?,
        residual: residual.crop(0, 0, h, w)?,
        trace: mrm.trace,
        padded_size: (ph, pw),
    };
    Ok((out, diagnostics))
}
