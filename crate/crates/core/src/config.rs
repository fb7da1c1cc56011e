//! Run configuration: pyramid geometry, channel widths, loss weights.
//!
//! Serialized as JSON; unknown keys are rejected and missing keys take the
//! defaults below.

use serde::{Deserialize, Serialize};

use crate::error::{config_err, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PyramidConfig {
    pub levels: usize,
    pub radii: Vec<usize>,
    /// Divide correlation scores by `sqrt(channels)`.
    pub normalize_by_sqrt_c: bool,
}

impl Default for PyramidConfig {
    fn default() -> Self {
        Self { levels: 3, radii: vec![6, 5, 4], normalize_by_sqrt_c: false }
    }
}

impl PyramidConfig {
    pub fn new(radii: Vec<usize>) -> Result<Self> {
        let cfg = Self { levels: radii.len(), radii, normalize_by_sqrt_c: false };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels == 0 {
            return Err(config_err!("pyramid needs at least one level"));
        }
        if self.radii.len() != self.levels {
            return Err(config_err!("{} radii given for {} levels", self.radii.len(), self.levels));
        }
        if self.radii.contains(&0) {
            return Err(config_err!("pyramid radii must be at least 1"));
        }
        Ok(())
    }

    /// Window side length `2r + 1` at `level`.
    pub fn window_side(&self, level: usize) -> usize {
        2 * self.radii[level] + 1
    }

    /// Correlation channels gathered per direction: sum of `(2r + 1)^2`.
    pub fn channels_per_direction(&self) -> usize {
        (0..self.levels).map(|l| self.window_side(l).pow(2)).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LossConfig {
    /// Weight of the teacher reconstruction term.
    pub lambda1: f64,
    /// Weight of the distillation term.
    pub lambda2: f64,
    /// One weight per in-process motion-field level, coarse to fine.
    pub distill_level_weights: Vec<f64>,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self { lambda1: 1.0, lambda2: 0.01, distill_level_weights: vec![1.0; 4] }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if !ok(self.lambda1) || !ok(self.lambda2) || !self.distill_level_weights.iter().all(|&w| ok(w)) {
            return Err(config_err!("loss weights must be finite and non-negative"));
        }
        Ok(())
    }
}

/// Channel widths of every learned stage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Widths {
    /// Feature extractor outputs, one per stride-2 layer.
    pub extractor: [usize; 3],
    /// Context pyramid widths at 1/2, 1/4, 1/8 resolution.
    pub context: [usize; 3],
    /// Frame-context CNN inside motion generation.
    pub mgm_context: usize,
    pub mgm_mlp_hidden: usize,
    pub mgm_mlp_out: usize,
    pub mgm_generator_hidden: usize,
    pub upblock_trunk: usize,
    pub upblock_hidden: usize,
    /// SynthNet encoder widths at 1/2, 1/4, 1/8 resolution.
    pub synth_encoder: [usize; 3],
    /// SynthNet decoder output widths at 1/4, 1/2, 1 resolution.
    pub synth_decoder: [usize; 3],
}

impl Default for Widths {
    fn default() -> Self {
        Self {
            extractor: [32, 64, 96],
            context: [16, 32, 64],
            mgm_context: 64,
            mgm_mlp_hidden: 256,
            mgm_mlp_out: 128,
            mgm_generator_hidden: 128,
            upblock_trunk: 64,
            upblock_hidden: 64,
            synth_encoder: [32, 64, 96],
            synth_decoder: [64, 32, 32],
        }
    }
}

impl Widths {
    pub fn validate(&self) -> Result<()> {
        let all = self
            .extractor
            .iter()
            .chain(&self.context)
            .chain(&self.synth_encoder)
            .chain(&self.synth_decoder)
            .chain([
                &self.mgm_context,
                &self.mgm_mlp_hidden,
                &self.mgm_mlp_out,
                &self.mgm_generator_hidden,
                &self.upblock_trunk,
                &self.upblock_hidden,
            ]);
        if all.into_iter().any(|&w| w == 0) {
            return Err(config_err!("channel widths must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    F32,
    F64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub pyramid: PyramidConfig,
    pub widths: Widths,
    pub loss: LossConfig,
    /// Temporal position of the synthesized frame.
    pub t: f64,
    pub seed: u64,
    pub precision: Precision,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            pyramid: PyramidConfig::default(),
            widths: Widths::default(),
            loss: LossConfig::default(),
            t: 0.5,
            seed: 42,
            precision: Precision::F32,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Format(format!("run config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.pyramid.validate()?;
        self.widths.validate()?;
        self.loss.validate()?;
        if !(0.0..=1.0).contains(&self.t) {
            return Err(config_err!("t = {} outside [0, 1]", self.t));
        }
        Ok(())
    }
}
