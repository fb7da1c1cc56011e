//! Parameter layout, deterministic initialisation and conversion between the
//! weight archive and the typed per-stage weights.
//!
//! Every convolution `name` is stored as two tensors: `{name}.kernel` with
//! shape `[out, in, k, k]` and `{name}.bias` with shape `[out]`.

use std::collections::BTreeMap;

use crate::archive::WeightArchive;
use crate::config::RunConfig;
use crate::correlation::{DqbcWeights, EnhanceWeights, FeatureExtractorWeights};
use crate::error::{Error, Result};
use crate::motion::{ContextWeights, MgmWeights, MrmWeights, UpBlockWeights, HEAD_CHANNELS};
use crate::numerics::ConvSpec;
use crate::rng::SplitMix64;
use crate::synthesis::{SynthUpWeights, SynthWeights};
use crate::tensor::Real;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConvLayout {
    pub name: String,
    pub out_channels: usize,
    pub in_channels: usize,
    pub kernel: usize,
    pub stride: usize,
}

impl ConvLayout {
    fn new(name: impl Into<String>, out_channels: usize, in_channels: usize, kernel: usize, stride: usize) -> Self {
        Self { name: name.into(), out_channels, in_channels, kernel, stride }
    }

    pub fn kernel_shape(&self) -> [usize; 4] {
        [self.out_channels, self.in_channels, self.kernel, self.kernel]
    }

    pub fn kernel_name(&self) -> String {
        format!("{}.kernel", self.name)
    }

    pub fn bias_name(&self) -> String {
        format!("{}.bias", self.name)
    }

    pub fn param_count(&self) -> usize {
        self.kernel_shape().iter().product::<usize>() + self.out_channels
    }

    fn zeros<T: Real>(&self) -> ConvSpec<T> {
        ConvSpec::zeros(self.out_channels, self.in_channels, self.kernel, self.stride)
    }
}

/// Every convolution of the model, in initialisation order.
pub fn model_layout(config: &RunConfig) -> Vec<ConvLayout> {
    let w = &config.widths;
    let n = config.pyramid.channels_per_direction();
    let [e0, e1, e2] = w.extractor;
    let ctx = w.context;
    let mut out = vec![
        ConvLayout::new("dqbc.extractor.conv0", e0, 3, 3, 2),
        ConvLayout::new("dqbc.extractor.conv1", e1, e0, 3, 2),
        ConvLayout::new("dqbc.extractor.conv2", e2, e1, 3, 2),
        ConvLayout::new("dqbc.enhance.conv0", n, n, 3, 1),
        ConvLayout::new("dqbc.enhance.conv1", n, n, 3, 1),
    ];
    for k in 0..3 {
        let cin = if k == 0 { 3 } else { ctx[k - 1] };
        out.push(ConvLayout::new(format!("context.block{k}.conv0"), ctx[k], cin, 3, 2));
        out.push(ConvLayout::new(format!("context.block{k}.conv1"), ctx[k], ctx[k], 3, 1));
    }
    let mc = w.mgm_context;
    out.extend([
        ConvLayout::new("mgm.context.conv0", mc, 6, 3, 2),
        ConvLayout::new("mgm.context.conv1", mc, mc, 3, 2),
        ConvLayout::new("mgm.context.conv2", mc, mc, 3, 2),
        ConvLayout::new("mgm.mlp.fc0", w.mgm_mlp_hidden, 2 * n, 1, 1),
        ConvLayout::new("mgm.mlp.fc1", w.mgm_mlp_out, w.mgm_mlp_hidden, 1, 1),
        ConvLayout::new("mgm.generator.conv0", w.mgm_generator_hidden, mc + w.mgm_mlp_out, 3, 1),
        ConvLayout::new("mgm.generator.conv1", 4, w.mgm_generator_hidden, 3, 1),
    ]);
    let (trunk, hidden) = (w.upblock_trunk, w.upblock_hidden);
    for i in 1..=3 {
        let ctx_ch = ctx[3 - i];
        let cin = 4 + 2 * ctx_ch + if i > 1 { hidden } else { 0 };
        out.extend([
            ConvLayout::new(format!("mrm.up{i}.trunk.conv0"), trunk, cin, 3, 1),
            ConvLayout::new(format!("mrm.up{i}.trunk.conv1"), trunk, trunk, 3, 1),
            ConvLayout::new(format!("mrm.up{i}.head"), HEAD_CHANNELS, trunk, 3, 1),
            ConvLayout::new(format!("mrm.up{i}.hidden"), hidden, trunk, 3, 1),
        ]);
    }
    out.push(ConvLayout::new("mrm.occlusion", 1, hidden, 3, 1));
    let enc = w.synth_encoder;
    let dec = w.synth_decoder;
    for k in 0..3 {
        let cin = if k == 0 { 7 } else { enc[k - 1] };
        out.push(ConvLayout::new(format!("synth.down{}.conv0", k + 1), enc[k], cin, 3, 2));
        out.push(ConvLayout::new(format!("synth.down{}.conv1", k + 1), enc[k], enc[k], 3, 1));
    }
    // Decoder block i works at 1/2^(3-i); its fused width is the width it
    // receives from below, or the bottleneck width for the first block.
    let up_io = [(enc[2], enc[2], dec[0]), (dec[0] + enc[1], dec[0], dec[1]), (dec[1] + enc[0], dec[1], dec[2])];
    for (k, &(skip_in, fused, up_out)) in up_io.iter().enumerate() {
        let i = k + 1;
        let cin = skip_in + 2 * ctx[2 - k];
        out.extend([
            ConvLayout::new(format!("synth.up{i}.fuse"), fused, cin, 3, 1),
            ConvLayout::new(format!("synth.up{i}.residual.conv0"), fused, fused, 3, 1),
            ConvLayout::new(format!("synth.up{i}.residual.conv1"), fused, fused, 3, 1),
            ConvLayout::new(format!("synth.up{i}.upconv"), up_out, fused, 3, 1),
        ]);
    }
    out.push(ConvLayout::new("synth.head.conv0", dec[2], dec[2] + 7, 3, 1));
    out.push(ConvLayout::new("synth.head.conv1", 4, dec[2], 3, 1));
    out
}

/// `(name, shape)` of every tensor the archive must contain.
pub fn required_tensors(layout: &[ConvLayout]) -> Vec<(String, Vec<usize>)> {
    layout
        .iter()
        .flat_map(|l| [(l.kernel_name(), l.kernel_shape().to_vec()), (l.bias_name(), vec![l.out_channels])])
        .collect()
}

/// Kernels uniform in `±sqrt(6 / fan_in)` drawn in layout order from a
/// SplitMix64 stream seeded with `config.seed`; biases zero.
pub fn init_weights(config: &RunConfig) -> Result<WeightArchive> {
    config.validate()?;
    let mut rng = SplitMix64::new(config.seed);
    let mut archive = WeightArchive::new();
    for l in model_layout(config) {
        let fan_in = l.in_channels * l.kernel * l.kernel;
        let bound = (6.0 / fan_in as f64).sqrt();
        let count = l.kernel_shape().iter().product();
        let kernel: Vec<f32> = (0..count).map(|_| rng.uniform(-bound, bound) as f32).collect();
        archive.insert(&l.kernel_name(), l.kernel_shape().to_vec(), &kernel)?;
        archive.insert(&l.bias_name(), vec![l.out_channels], &vec![0.0; l.out_channels])?;
    }
    Ok(archive)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelWeights<T = f32> {
    pub dqbc: DqbcWeights<T>,
    pub context: ContextWeights<T>,
    pub mgm: MgmWeights<T>,
    pub mrm: MrmWeights<T>,
    pub synth: SynthWeights<T>,
}

struct Convs<T>(BTreeMap<String, ConvSpec<T>>);

impl<T: Real> Convs<T> {
    fn take(&mut self, name: &str) -> ConvSpec<T> {
        self.0.remove(name).unwrap_or_else(|| panic!("layout has no conv {name}"))
    }

    fn take_n<const N: usize>(&mut self, names: [String; N]) -> [ConvSpec<T>; N] {
        names.map(|n| self.take(&n))
    }
}

impl<T: Real> ModelWeights<T> {
    fn assemble(layout: &[ConvLayout], mut make: impl FnMut(&ConvLayout) -> Result<ConvSpec<T>>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for l in layout {
            map.insert(l.name.clone(), make(l)?);
        }
        let mut c = Convs(map);
        let dqbc = DqbcWeights {
            extractor: FeatureExtractorWeights::new(c.take_n(
                ["conv0", "conv1", "conv2"].map(|s| format!("dqbc.extractor.{s}")),
            ))?,
            enhance: EnhanceWeights::new(c.take("dqbc.enhance.conv0"), c.take("dqbc.enhance.conv1"))?,
        };
        let context = ContextWeights {
            blocks: [0, 1, 2].map(|k| c.take_n([0, 1].map(|j| format!("context.block{k}.conv{j}")))),
        };
        let mgm = MgmWeights {
            context: c.take_n([0, 1, 2].map(|j| format!("mgm.context.conv{j}"))),
            mlp: c.take_n([0, 1].map(|j| format!("mgm.mlp.fc{j}"))),
            generator: c.take_n([0, 1].map(|j| format!("mgm.generator.conv{j}"))),
        };
        let mrm = MrmWeights {
            blocks: [1, 2, 3].map(|i| UpBlockWeights {
                trunk: c.take_n([0, 1].map(|j| format!("mrm.up{i}.trunk.conv{j}"))),
                head: c.take(&format!("mrm.up{i}.head")),
                hidden: c.take(&format!("mrm.up{i}.hidden")),
            }),
            occlusion: c.take("mrm.occlusion"),
        };
        let synth = SynthWeights {
            down: [1, 2, 3].map(|k| c.take_n([0, 1].map(|j| format!("synth.down{k}.conv{j}")))),
            up: [1, 2, 3].map(|i| SynthUpWeights {
                fuse: c.take(&format!("synth.up{i}.fuse")),
                residual: c.take_n([0, 1].map(|j| format!("synth.up{i}.residual.conv{j}"))),
                upconv: c.take(&format!("synth.up{i}.upconv")),
            }),
            head: c.take_n([0, 1].map(|j| format!("synth.head.conv{j}"))),
        };
        debug_assert!(c.0.is_empty(), "unused layout entries: {:?}", c.0.keys());
        Ok(Self { dqbc, context, mgm, mrm, synth })
    }

    /// All-zero weights for the layout of `config`.
    pub fn zeros(config: &RunConfig) -> Result<Self> {
        config.validate()?;
        Self::assemble(&model_layout(config), |l| Ok(l.zeros()))
    }

    /// Reads every tensor required by `config`. Missing or mis-shaped
    /// tensors are reported together by name.
    pub fn from_archive(archive: &WeightArchive, config: &RunConfig) -> Result<Self> {
        config.validate()?;
        let layout = model_layout(config);
        let required = required_tensors(&layout);
        archive.validate(required.iter().map(|(n, s)| (n.as_str(), s.as_slice())))?;
        let mut bad = Vec::new();
        for (name, _) in &required {
            let (_, data) = archive.get(name).expect("validated");
            if data.iter().any(|v| !v.is_finite()) {
                bad.push(format!("{name} (non-finite values)"));
            }
        }
        if !bad.is_empty() {
            return Err(Error::Validation(bad));
        }
        Self::assemble(&layout, |l| {
            let kernel = archive.get(&l.kernel_name()).expect("validated").1.iter().map(|&v| T::from_f32(v)).collect();
            let bias = archive.get(&l.bias_name()).expect("validated").1.iter().map(|&v| T::from_f32(v)).collect();
            ConvSpec::new(l.out_channels, l.in_channels, l.kernel, l.kernel, kernel, bias, l.stride, l.kernel / 2)
        })
    }

    pub fn cast<U: Real>(&self) -> ModelWeights<U> {
        ModelWeights {
            dqbc: self.dqbc.cast(),
            context: self.context.cast(),
            mgm: self.mgm.cast(),
            mrm: self.mrm.cast(),
            synth: self.synth.cast(),
        }
    }
}
