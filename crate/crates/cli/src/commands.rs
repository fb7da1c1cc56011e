//! Subcommand implementations. Each returns `Ok` or a [`CliError`] carrying
//! the exit code; human-readable output goes to the supplied writer.

use std::io::Write;
use std::path::{Path, PathBuf};

use dqbc_core::verify::Suite;
use dqbc_core::{init_weights, interpolate_midframe, ModelWeights, Precision, Real, RunConfig, WeightArchive};

use crate::bench::{run_bench, BenchOp, BenchSize};
use crate::error::{CliError, CliResult};
use crate::fit::{fit_motion, mean_endpoint_error, FitOptions};
use crate::flowviz::render_flow;
use crate::image_io::{load_rgb, save_gray, save_rgb};

/// Runs `f` on a dedicated pool of `threads` workers, or on the global pool.
pub fn with_threads<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> CliResult<R> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(CliError::Validation("--threads must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Validation(format!("cannot start {n} threads: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

pub fn load_config(path: Option<&Path>, seed: Option<u64>) -> CliResult<RunConfig> {
    let mut cfg = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
            RunConfig::from_json(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn load_archive(path: Option<&Path>, cfg: &RunConfig) -> CliResult<WeightArchive> {
    match path {
        Some(p) => WeightArchive::load(p).map_err(|e| match e {
            dqbc_core::Error::Io(io) => CliError::Io(format!("{}: {io}", p.display())),
            other => other.into(),
        }),
        None => Ok(init_weights(cfg)?),
    }
}

#[derive(Clone, Debug, Default)]
pub struct InterpolateArgs {
    pub frame0: PathBuf,
    pub frame1: PathBuf,
    pub output: PathBuf,
    pub weights: Option<PathBuf>,
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub dump_flow: bool,
}

/// Paths of the auxiliary images written with `--dump-flow`.
pub fn dump_paths(output: &Path) -> [PathBuf; 4] {
    let stem = output.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into());
    let dir = output.parent().unwrap_or_else(|| Path::new(""));
    ["flow_t0", "flow_t1", "occlusion", "occlusion_final"].map(|k| dir.join(format!("{stem}_{k}.png")))
}

fn interpolate_in<T: Real>(args: &InterpolateArgs, cfg: &RunConfig, archive: &WeightArchive) -> CliResult<()> {
    let weights = ModelWeights::<T>::from_archive(archive, cfg)?;
    let f0 = load_rgb::<T>(&args.frame0)?;
    let f1 = load_rgb::<T>(&args.frame1)?;
    let (frame, diag) = with_threads(args.threads, || {
        interpolate_midframe(&f0, &f1, &weights, &cfg.pyramid, T::cst(cfg.t))
    })??;
    save_rgb(&args.output, &frame)?;
    if args.dump_flow {
        let [p0, p1, po, pf] = dump_paths(&args.output);
        for (path, field) in [(p0, &diag.fields.0), (p1, &diag.fields.1)] {
            render_flow(field).save(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        }
        save_gray(&po, diag.occlusion.as_tensor())?;
        save_gray(&pf, diag.final_occlusion.as_tensor())?;
    }
    Ok(())
}

pub fn cmd_interpolate(args: &InterpolateArgs) -> CliResult<()> {
    let cfg = load_config(args.config.as_deref(), args.seed)?;
    let archive = load_archive(args.weights.as_deref(), &cfg)?;
    match cfg.precision {
        Precision::F32 => interpolate_in::<f32>(args, &cfg, &archive),
        Precision::F64 => interpolate_in::<f64>(args, &cfg, &archive),
    }
}

pub fn cmd_init_weights(output: &Path, config: Option<&Path>, seed: Option<u64>, out: &mut dyn Write) -> CliResult<()> {
    let cfg = load_config(config, seed)?;
    let archive = init_weights(&cfg)?;
    archive.save(output).map_err(|e| CliError::Io(format!("{}: {e}", output.display())))?;
    writeln!(out, "wrote {} tensors ({} parameters) to {}", archive.len(), archive.payload().len(), output.display())?;
    Ok(())
}

/// Runs the selected suites and prints one line per check.
pub fn cmd_check(suites: &[Suite], threads: Option<usize>, out: &mut dyn Write) -> CliResult<()> {
    let mut failures = Vec::new();
    for &suite in suites {
        let outcomes = with_threads(threads, || suite.run())?;
        let passed = outcomes.iter().all(|o| o.passed);
        writeln!(out, "[{}] suite {}", if passed { "PASS" } else { "FAIL" }, suite.name())?;
        for o in outcomes {
            let status = if o.passed { "pass" } else { "FAIL" };
            match &o.error {
                Some(e) => writeln!(out, "  {status} {}: {e}", o.name)?,
                None => writeln!(out, "  {status} {}: max error {:.3e} (tolerance {:.1e})", o.name, o.max_error, o.tolerance)?,
            }
            if !o.passed {
                failures.push(format!("{}/{}", suite.name(), o.name));
            }
        }
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Property(format!("{} check(s) failed: {}", failures.len(), failures.join("; "))))
    }
}

pub fn cmd_bench(
    ops: &[BenchOp],
    sizes: &[BenchSize],
    repetitions: usize,
    threads: Option<usize>,
    out: &mut (dyn Write + Send),
) -> CliResult<()> {
    with_threads(threads, || run_bench(ops, sizes, repetitions, out))?
}

#[derive(Clone, Debug, Default)]
pub struct FitArgs {
    pub frame0: PathBuf,
    pub frame1: PathBuf,
    pub options: FitOptions,
    pub truth: Option<(f64, f64)>,
    pub threads: Option<usize>,
}

/// Fraction of each side excluded when scoring against `--truth-flow`.
pub const EPE_MARGIN: f64 = 0.1;

pub fn cmd_fit_motion(args: &FitArgs, out: &mut dyn Write) -> CliResult<()> {
    let f0 = load_rgb::<f64>(&args.frame0)?;
    let f1 = load_rgb::<f64>(&args.frame1)?;
    let report = with_threads(args.threads, || fit_motion(&f0, &f1, &args.options))??;
    writeln!(out, "initial_loss={:.6e}", report.losses[0])?;
    writeln!(out, "final_loss={:.6e}", report.final_loss())?;
    writeln!(out, "iterations={}", report.losses.len() - 1)?;
    if let Some(truth) = args.truth {
        writeln!(out, "mean_epe_interior={:.6}", mean_endpoint_error(&report.field, truth, EPE_MARGIN))?;
    }
    Ok(())
}
