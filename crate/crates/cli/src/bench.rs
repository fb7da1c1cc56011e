//! Median wall-clock timings of the core kernels, reported as CSV.

use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use dqbc_core::correlation::{build_key_pyramid, gather_unilateral_correlation, Direction};
use dqbc_core::motion::{convex_upsample, UPSAMPLE_LOGITS};
use dqbc_core::numerics::{backward_warp, conv2d, ConvSpec};
use dqbc_core::rng::SplitMix64;
use dqbc_core::{MotionField, PyramidConfig, Result, Tensor3};

pub const CSV_HEADER: &str = "op,height,width,channels,config,median_ns,throughput_elems_per_s";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BenchOp {
    Gather,
    Warp,
    Conv,
    Upsample,
}

impl BenchOp {
    pub const ALL: [BenchOp; 4] = [BenchOp::Gather, BenchOp::Warp, BenchOp::Conv, BenchOp::Upsample];

    pub fn name(self) -> &'static str {
        match self {
            BenchOp::Gather => "gather",
            BenchOp::Warp => "warp",
            BenchOp::Conv => "conv",
            BenchOp::Upsample => "upsample",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BenchSize {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
}

impl FromStr for BenchSize {
    type Err = String;

    /// `HxWxC`.
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<usize> = s
            .split('x')
            .map(|p| p.trim().parse::<usize>().map_err(|e| format!("bad size {s:?}: {e}")))
            .collect::<std::result::Result<_, _>>()?;
        match parts[..] {
            [height, width, channels] if height > 0 && width > 0 && channels > 0 => {
                Ok(Self { height, width, channels })
            }
            _ => Err(format!("size {s:?} must be HxWxC with positive extents")),
        }
    }
}

fn random(h: usize, w: usize, c: usize, rng: &mut SplitMix64) -> Tensor3<f32> {
    Tensor3::from_fn(h, w, c, |_, _, _| rng.uniform(-1.0, 1.0) as f32)
}

fn median_ns(samples: &mut [u128]) -> u128 {
    samples.sort_unstable();
    samples[samples.len() / 2]
}

/// One timed configuration: returns `(config label, output elements, median ns)`.
fn time_op(op: BenchOp, size: BenchSize, repetitions: usize) -> Result<(String, usize, u128)> {
    let BenchSize { height: h, width: w, channels: c } = size;
    let mut rng = SplitMix64::new(7);
    match op {
        BenchOp::Gather => {
            let cfg = PyramidConfig::default();
            let label = cfg.radii.iter().map(|r| r.to_string()).collect::<Vec<_>>().join("-");
            let q = random(h, w, c, &mut rng);
            let keys = build_key_pyramid(&random(h, w, c, &mut rng), &cfg)?;
            measure(format!("radii={label}"), repetitions, || {
                Ok(gather_unilateral_correlation(&q, &keys, &cfg, Direction::ZeroToOne)?.scores().len())
            })
        }
        BenchOp::Warp => {
            let src = random(h, w, c, &mut rng);
            let flow = MotionField::new(Tensor3::from_fn(h, w, 2, |_, _, _| rng.uniform(-4.0, 4.0) as f32))?;
            measure("bilinear".into(), repetitions, || Ok(backward_warp(&src, &flow)?.len()))
        }
        BenchOp::Conv => {
            let input = random(h, w, c, &mut rng);
            let kernel = (0..c * c * 9).map(|_| rng.uniform(-0.1, 0.1) as f32).collect();
            let spec = ConvSpec::same(c, c, 3, kernel, vec![0.0; c])?;
            measure("k=3".into(), repetitions, || Ok(conv2d(&input, &spec)?.len()))
        }
        BenchOp::Upsample => {
            let field = MotionField::new(random(h, w, 2, &mut rng))?;
            let logits = random(h, w, UPSAMPLE_LOGITS, &mut rng);
            measure("logits=36".into(), repetitions, || Ok(convex_upsample(&field, &logits)?.as_tensor().len()))
        }
    }
}

fn measure(label: String, repetitions: usize, mut f: impl FnMut() -> Result<usize>) -> Result<(String, usize, u128)> {
    let mut samples = Vec::with_capacity(repetitions.max(1));
    let mut elems = 0;
    for _ in 0..repetitions.max(1) {
        let start = Instant::now();
        elems = std::hint::black_box(f()?);
        samples.push(start.elapsed().as_nanos());
    }
    Ok((label, elems, median_ns(&mut samples)))
}

/// Writes the header and one row per `(op, size)`.
pub fn run_bench(ops: &[BenchOp], sizes: &[BenchSize], repetitions: usize, out: &mut dyn Write) -> crate::CliResult<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for &op in ops {
        for &size in sizes {
            let (label, elems, ns) = time_op(op, size, repetitions)?;
            let throughput = elems as f64 / (ns.max(1) as f64 * 1e-9);
            let channels = if op == BenchOp::Upsample { 2 } else { size.channels };
            writeln!(
                out,
                "{},{},{},{},{},{},{:.0}",
                op.name(),
                size.height,
                size.width,
                channels,
                label,
                ns,
                throughput
            )?;
        }
    }
    Ok(())
}
