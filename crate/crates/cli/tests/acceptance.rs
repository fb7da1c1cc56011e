//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use dqbc_cli::commands::{cmd_fit_motion, cmd_interpolate, FitArgs, InterpolateArgs};
use dqbc_cli::fit::{translated_pair, FitOptions};
use dqbc_cli::image_io::save_rgb;
use dqbc_core::correlation::assemble_dqbc;
use dqbc_core::losses::{distillation_loss, reconstruction_loss, teacher_reconstruction_loss, total_loss};
use dqbc_core::numerics::backward_warp;
use dqbc_core::rng::SplitMix64;
use dqbc_core::synthesis::compose_frame;
use dqbc_core::tensor::BitPattern;
use dqbc_core::verify::{correlation_oracle, exact_checks, grad_checks};
use dqbc_core::{
    init_weights, interpolate_midframe, Error, LossConfig, ModelWeights, MotionField, OcclusionMap, Real,
    RunConfig, Tensor3, WeightArchive,
};
use sha2::{Digest, Sha256};

/// SHA-256 of the archive written by `init_weights` with the default configuration.
const GOLDEN_DEFAULT_ARCHIVE_SHA256: &str = "c13d5293db8284d3919ff115b74aec3dbb316712288a5a061302ab48e9d7eb76";

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn random<T: Real>(h: usize, w: usize, c: usize, rng: &mut SplitMix64) -> Tensor3<T> {
    Tensor3::from_fn(h, w, c, |_, _, _| T::cst(rng.next_f64()))
}

fn correlation_equivalence() -> Result<Outcome, Error> {
    let start = Instant::now();
    let (e32, e64) = correlation_oracle(24, 2024)?;
    let secs = start.elapsed().as_secs_f64();
    Ok(outcome(
        e32 < 1e-5 && e64 < 1e-10 && secs < 5.0,
        format!("24 instances, max abs diff f32 {e32:.2e}, f64 {e64:.2e}, {secs:.2}s"),
    ))
}

fn channel_counts() -> Result<Outcome, Error> {
    let cfg = RunConfig::default();
    let per = cfg.pyramid.channels_per_direction();
    let weights = ModelWeights::<f32>::zeros(&cfg)?;
    let frame = Tensor3::full(64, 64, 3, 0.5f32);
    let vol = assemble_dqbc(&frame, &frame, &weights.dqbc, &cfg.pyramid, 0.5)?;
    let total = vol.channels();
    Ok(outcome(per == 371 && total == 742, format!("{per} per direction, {total} assembled")))
}

fn exactness() -> Result<Outcome, Error> {
    let checks = exact_checks();
    let failed: Vec<_> = checks.iter().filter(|c| !c.passed).map(|c| c.name.clone()).collect();
    Ok(outcome(failed.is_empty(), format!("{} exact checks, failed: {failed:?}", checks.len())))
}

fn gradients() -> Result<Outcome, Error> {
    let start = Instant::now();
    let checks = grad_checks();
    let secs = start.elapsed().as_secs_f64();
    let worst = checks.iter().map(|c| c.max_error).fold(0.0, f64::max);
    let all = checks.iter().all(|c| c.passed);
    let names: Vec<_> = checks.iter().map(|c| format!("{} {:.1e}", c.name, c.max_error)).collect();
    Ok(outcome(all && worst < 1e-5 && secs < 60.0, format!("{}; {secs:.2}s", names.join(", "))))
}

fn motion_fit(dir: &Path) -> Result<Outcome, Error> {
    let (i0, i1) = translated_pair(64, 64, 3.0, -2.0);
    let (p0, p1) = (dir.join("fit0.png"), dir.join("fit1.png"));
    save_rgb(&p0, &i0).map_err(|e| Error::Data(e.to_string()))?;
    save_rgb(&p1, &i1).map_err(|e| Error::Data(e.to_string()))?;
    let args = FitArgs {
        frame0: p0,
        frame1: p1,
        options: FitOptions::default(),
        truth: Some((3.0, -2.0)),
        threads: Some(1),
    };
    let mut report = Vec::new();
    let start = Instant::now();
    cmd_fit_motion(&args, &mut report).map_err(|e| Error::Data(e.to_string()))?;
    let secs = start.elapsed().as_secs_f64();
    let text = String::from_utf8_lossy(&report);
    let epe: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("mean_epe_interior="))
        .and_then(|v| v.parse().ok())
        .unwrap_or(f64::NAN);
    Ok(outcome(epe < 0.1 && secs < 30.0, format!("mean interior EPE {epe:.2e} px after 500 iterations, {secs:.2}s")))
}

fn shape_contract() -> Result<Outcome, Error> {
    let cfg = RunConfig::default();
    let weights = ModelWeights::<f32>::from_archive(&init_weights(&cfg)?, &cfg)?;
    let mut rng = SplitMix64::new(6);
    let (a, b) = (random::<f32>(64, 64, 3, &mut rng), random::<f32>(64, 64, 3, &mut rng));
    let (out, diag) = interpolate_midframe(&a, &b, &weights, &cfg.pyramid, 0.5)?;
    let sizes: Vec<usize> = diag.trace.iter().map(|(m, _)| m.height()).collect();
    let trace_ok = sizes == [8, 16, 32, 64] && diag.trace.iter().all(|(m0, m1)| m0.width() == m0.height() && m1.height() == m0.height());
    let full_ok = out.shape() == (64, 64, 3) && diag.occlusion.height() == 64 && diag.residual.shape() == (64, 64, 3);

    let (c, d) = (random::<f32>(68, 100, 3, &mut rng), random::<f32>(68, 100, 3, &mut rng));
    let (out2, diag2) = interpolate_midframe(&c, &d, &weights, &cfg.pyramid, 0.5)?;
    let pad_ok = out2.shape() == (68, 100, 3) && diag2.padded_size == (72, 104);
    let range_ok = [&out, &out2].iter().all(|t| t.data().iter().all(|v| (0.0..=1.0).contains(v)));
    Ok(outcome(
        trace_ok && full_ok && pad_ok && range_ok,
        format!(
            "trace heights {sizes:?}, output {:?}; 100x68 -> {}x{} via {}x{}",
            out.shape(),
            out2.width(),
            out2.height(),
            diag2.padded_size.1,
            diag2.padded_size.0
        ),
    ))
}

fn composition_in<T: Real + BitPattern>(seed: u64) -> Result<bool, Error> {
    let mut rng = SplitMix64::new(seed);
    let (a, b) = (random::<T>(9, 7, 3, &mut rng), random::<T>(9, 7, 3, &mut rng));
    let z1 = Tensor3::zeros(9, 7, 1);
    let z3 = Tensor3::zeros(9, 7, 3);
    let blend = |o: f64| -> Result<Tensor3<T>, Error> {
        compose_frame(&a, &b, &OcclusionMap::constant(9, 7, T::cst(o))?, &z1, &z3)
    };
    let half = a.zip_map(&b, |x, y| (x + y) / T::cst(2.0))?;
    // Zero flows: the warped frames are the frames themselves.
    let zero = MotionField::zeros(9, 7);
    let wa = backward_warp(&a, &zero)?;
    let wb = backward_warp(&b, &zero)?;
    let avg = compose_frame(&wa, &wb, &OcclusionMap::constant(9, 7, T::cst(0.5))?, &z1, &z3)?;
    Ok(blend(1.0)?.bitwise_eq(&a) && blend(0.0)?.bitwise_eq(&b) && avg.bitwise_eq(&half))
}

fn composition() -> Result<Outcome, Error> {
    let f64_ok = composition_in::<f64>(7)?;
    let f32_ok = composition_in::<f32>(7)?;
    Ok(outcome(f64_ok && f32_ok, format!("O=1, O=0, O=0.5 bitwise: f64 {f64_ok}, f32 {f32_ok}")))
}

fn loss_values() -> Result<Outcome, Error> {
    let cfg = LossConfig::default();
    let mut rng = SplitMix64::new(8);
    let a = random::<f64>(6, 5, 3, &mut rng);
    let g = random::<f64>(6, 5, 3, &mut rng);
    let truth = random::<f64>(6, 5, 3, &mut rng);
    let zero = MotionField::zeros(6, 5);
    let one = OcclusionMap::constant(6, 5, 1.0)?;
    let half = OcclusionMap::constant(6, 5, 0.5)?;
    let m = MotionField::constant(6, 5, 1.0, -1.0);

    let teacher = (MotionField::constant(8, 8, 1.0, 2.0), MotionField::constant(8, 8, -0.5, 0.0));
    let matched = vec![
        (MotionField::constant(1, 1, 0.125, 0.25), MotionField::constant(1, 1, -0.0625, 0.0)),
        (MotionField::constant(8, 8, 1.0, 2.0), MotionField::constant(8, 8, -0.5, 0.0)),
    ];
    let offset = vec![(MotionField::constant(8, 8, 2.0, 2.0), teacher.1.clone())];
    let doubled = LossConfig { distill_level_weights: vec![2.0; 4], ..cfg.clone() };
    let zeroed = LossConfig { lambda1: 0.0, lambda2: 0.0, ..cfg.clone() };

    let checks = [
        ("identical -> 0", reconstruction_loss(&a, &a)? == 0.0),
        (
            "constant 0.5 gap -> 0.5",
            reconstruction_loss(&Tensor3::full(4, 4, 3, 0.25), &Tensor3::full(4, 4, 3, 0.75))? == 0.5,
        ),
        ("teacher zero fields on identical frames -> 0", teacher_reconstruction_loss(&a, &a, (&zero, &zero), &half, &a)? == 0.0),
        (
            "teacher with O=1 reduces to warped frame0",
            teacher_reconstruction_loss(&a, &g, (&m, &zero), &one, &truth)?
                == reconstruction_loss(&backward_warp(&a, &m)?, &truth)?,
        ),
        ("distillation matched -> 0", distillation_loss(&matched, (&teacher.0, &teacher.1), &cfg)? == 0.0),
        ("distillation unit offset -> 0.5", distillation_loss(&offset, (&teacher.0, &teacher.1), &cfg)? == 0.5),
        ("doubled level weights -> 1.0", distillation_loss(&offset, (&teacher.0, &teacher.1), &doubled)? == 1.0),
        ("total(1,0,0) -> 1", total_loss(1.0, 0.0, 0.0, &cfg) == 1.0),
        ("total(1,1,1) -> 2.01", total_loss(1.0, 1.0, 1.0, &cfg) == 2.01),
        ("zero lambdas -> l_rec", total_loss(0.3, 5.0, 7.0, &zeroed) == 0.3),
    ];
    let failed: Vec<_> = checks.iter().filter(|(_, ok)| !ok).map(|(n, _)| *n).collect();
    Ok(outcome(failed.is_empty(), format!("{} exact loss cases, failed: {failed:?}", checks.len())))
}

fn determinism(dir: &Path) -> Result<Outcome, Error> {
    let digest = hex(&Sha256::digest(init_weights(&RunConfig::default())?.to_bytes()));
    let golden_ok = digest == GOLDEN_DEFAULT_ARCHIVE_SHA256;

    let mut rng = SplitMix64::new(9);
    let (p0, p1) = (dir.join("det0.png"), dir.join("det1.png"));
    save_rgb(&p0, &random::<f32>(40, 56, 3, &mut rng)).map_err(|e| Error::Data(e.to_string()))?;
    save_rgb(&p1, &random::<f32>(40, 56, 3, &mut rng)).map_err(|e| Error::Data(e.to_string()))?;
    let mut outputs = Vec::new();
    for threads in [1, 4] {
        for run in 0..2 {
            let output = dir.join(format!("det_out_{threads}_{run}.png"));
            let args = InterpolateArgs {
                frame0: p0.clone(),
                frame1: p1.clone(),
                output: output.clone(),
                threads: Some(threads),
                ..Default::default()
            };
            cmd_interpolate(&args).map_err(|e| Error::Data(e.to_string()))?;
            outputs.push(std::fs::read(&output)?);
        }
    }
    let identical = outputs.windows(2).all(|p| p[0] == p[1]);
    Ok(outcome(
        golden_ok && identical,
        format!("archive sha256 {digest} (golden match {golden_ok}); 4 interpolations identical {identical}"),
    ))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn archive_io(dir: &Path) -> Result<Outcome, Error> {
    let cfg = RunConfig::default();
    let archive = init_weights(&cfg)?;
    let (first, second) = (dir.join("a.dqbw"), dir.join("b.dqbw"));
    archive.save(&first)?;
    WeightArchive::load(&first)?.save(&second)?;
    let same = std::fs::read(&first)? == std::fs::read(&second)?;

    // Rebuild the archive with one tensor re-declared under the wrong shape.
    let target = "mrm.up2.head.kernel";
    let mut corrupted = WeightArchive::new();
    for (name, entry) in archive.entries() {
        let (_, data) = archive.get(name).expect("listed");
        let shape = if name == target { vec![entry.numel()] } else { entry.shape.clone() };
        corrupted.insert(name, shape, data)?;
    }
    let named = match ModelWeights::<f32>::from_archive(&corrupted, &cfg) {
        Err(Error::Validation(names)) => names.len() == 1 && names[0].starts_with(target),
        _ => false,
    };

    let mut bytes = archive.to_bytes();
    bytes.truncate(bytes.len() - 16);
    let truncated = matches!(WeightArchive::from_bytes(&bytes), Err(Error::Format(ref m)) if m.contains("out of bounds"));
    Ok(outcome(
        same && named && truncated,
        format!("save/load/save identical {same}; mis-shaped {target} named {named}; truncation rejected {truncated}"),
    ))
}

fn main() -> ExitCode {
    let dir = tempfile::tempdir().expect("temporary directory");
    let criteria: Vec<(&str, Box<dyn Fn() -> Result<Outcome, Error>>)> = vec![
        ("correlation oracle equivalence", Box::new(correlation_equivalence)),
        ("channel-count identity", Box::new(channel_counts)),
        ("exactness suite", Box::new(exactness)),
        ("gradient suite", Box::new(gradients)),
        ("motion-fit demo", Box::new(|| motion_fit(dir.path()))),
        ("end-to-end shape contract", Box::new(shape_contract)),
        ("composition degenerate cases", Box::new(composition)),
        ("loss unit values", Box::new(loss_values)),
        ("determinism", Box::new(|| determinism(dir.path()))),
        ("weight archive", Box::new(|| archive_io(dir.path()))),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let result = check().unwrap_or_else(|e| outcome(false, format!("error: {e}")));
        let status = if result.passed { "PASS" } else { "FAIL" };
        println!("{status} criterion {:>2}: {name}: {}", i + 1, result.detail);
        failures += usize::from(!result.passed);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
