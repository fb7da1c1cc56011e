use crate::config::PyramidConfig;
use crate::correlation::{
    build_key_pyramid, channel_meta, distribute_correlation, distribute_correlation_adjoint, gather_from_features,
    gather_unilateral_correlation, gather_unilateral_correlation_adjoint, CorrelationVolume, Direction, KeyPyramid,
};
use crate::error::Result;
use crate::motion::{centre_tap_logits, convex_upsample, convex_upsample_adjoint, UPSAMPLE_LOGITS};
use crate::numerics::{backward_warp, backward_warp_adjoint, check_adjoint, conv2d, translate_fractional, ConvSpec};
use crate::rng::SplitMix64;
use crate::tensor::{MotionField, Real, Tensor3};

use super::{oracles, CheckOutcome};

const FD_EPS: f64 = 1e-6;
const GRAD_TOL: f64 = 1e-5;

fn random(h: usize, w: usize, c: usize, lo: f64, hi: f64, rng: &mut SplitMix64) -> Tensor3<f64> {
    Tensor3::from_fn(h, w, c, |_, _, _| rng.uniform(lo, hi))
}

/// Flow whose components keep a fractional part in `[0.25, 0.75)`, away
/// from the kinks of bilinear interpolation.
fn jittered_flow(h: usize, w: usize, max: i64, rng: &mut SplitMix64) -> MotionField<f64> {
    MotionField::new(Tensor3::from_fn(h, w, 2, |_, _, _| {
        let whole = (rng.next_u64() % (2 * max as u64 + 1)) as i64 - max;
        whole as f64 + rng.uniform(0.25, 0.75)
    }))
    .expect("finite flow")
}

/// Max abs difference of the gather against the nested-loop reference over
/// `instances` random problems up to 8x8x8 with three levels and radii
/// (2, 1, 1). Returns `(f32 error, f64 error)`.
pub fn correlation_oracle(instances: usize, seed: u64) -> Result<(f64, f64)> {
    let cfg = PyramidConfig::new(vec![2, 1, 1])?;
    let mut rng = SplitMix64::new(seed);
    let (mut e32, mut e64) = (0.0f64, 0.0f64);
    for _ in 0..instances {
        let h = 4 * (1 + (rng.next_u64() % 2) as usize);
        let w = 4 * (1 + (rng.next_u64() % 2) as usize);
        let c = 1 + (rng.next_u64() % 8) as usize;
        let q = random(h, w, c, -1.0, 1.0, &mut rng);
        let k = random(h, w, c, -1.0, 1.0, &mut rng);
        let expect = oracles::correlation(&q, &k, &cfg.radii);
        let got64 = gather_from_features(&q, &k, &cfg, Direction::ZeroToOne)?;
        e64 = e64.max(got64.scores().max_abs_diff(&expect));
        let got32 = gather_from_features(&q.cast::<f32>(), &k.cast::<f32>(), &cfg, Direction::ZeroToOne)?;
        e32 = e32.max(got32.scores().cast::<f64>().max_abs_diff(&expect));
    }
    Ok((e32, e64))
}

fn conv_oracle(seed: u64) -> Result<f64> {
    let mut rng = SplitMix64::new(seed);
    let mut worst = 0.0f64;
    for (cin, cout, k, stride) in [(3, 4, 3, 1), (2, 5, 3, 2), (4, 3, 1, 1), (1, 1, 3, 2)] {
        let input = random(7, 6, cin, -1.0, 1.0, &mut rng);
        let kernel = (0..cout * cin * k * k).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let bias = (0..cout).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let spec = ConvSpec::new(cout, cin, k, k, kernel, bias, stride, k / 2)?;
        worst = worst.max(conv2d(&input, &spec)?.max_abs_diff(&oracles::conv(&input, &spec)));
    }
    Ok(worst)
}

fn upsample_oracle(seed: u64) -> Result<f64> {
    let mut rng = SplitMix64::new(seed);
    let field = MotionField::new(random(5, 6, 2, -4.0, 4.0, &mut rng))?;
    let logits = random(5, 6, UPSAMPLE_LOGITS, -3.0, 3.0, &mut rng);
    Ok(convex_upsample(&field, &logits)?.as_tensor().max_abs_diff(&oracles::convex_upsample(&field, &logits)))
}

fn warp_oracle(seed: u64) -> Result<f64> {
    let mut rng = SplitMix64::new(seed);
    let src = random(8, 7, 3, -1.0, 1.0, &mut rng);
    let flow = MotionField::new(random(8, 7, 2, -3.0, 3.0, &mut rng))?;
    Ok(backward_warp(&src, &flow)?.max_abs_diff(&oracles::warp(&src, &flow)))
}

fn channel_count() -> Result<f64> {
    let cfg = PyramidConfig::default();
    let per = cfg.channels_per_direction();
    let meta = channel_meta(&cfg, Direction::ZeroToOne).len();
    Ok((per as f64 - 371.0).abs() + (meta as f64 - 371.0).abs())
}

pub fn oracle_checks() -> Vec<CheckOutcome> {
    let corr = correlation_oracle(20, 0x5EED);
    let (c32, c64) = match &corr {
        Ok((a, b)) => (Ok(*a), Ok(*b)),
        Err(e) => (Err(crate::Error::Verification(e.to_string())), Err(crate::Error::Verification(e.to_string()))),
    };
    vec![
        CheckOutcome::from_result("correlation vs nested loops (f64)", c64, 1e-10),
        CheckOutcome::from_result("correlation vs nested loops (f32)", c32, 1e-5),
        CheckOutcome::from_result("conv2d vs direct summation", conv_oracle(11), 1e-12),
        CheckOutcome::from_result("convex up-sampling vs weighted sum", upsample_oracle(12), 1e-12),
        CheckOutcome::from_result("backward warp vs bilinear reads", warp_oracle(13), 1e-12),
        CheckOutcome::from_result("default pyramid has 371 channels per direction", channel_count(), 0.0),
    ]
}

fn warp_grad(seed: u64) -> Result<f64> {
    let mut rng = SplitMix64::new(seed);
    let (h, w, c) = (6, 7, 2);
    let src = random(h, w, c, -1.0, 1.0, &mut rng);
    let flow = jittered_flow(h, w, 2, &mut rng);
    let cot = random(h, w, c, -1.0, 1.0, &mut rng);
    let mut point = src.data().to_vec();
    point.extend_from_slice(flow.as_tensor().data());
    let n = src.len();
    let split = |p: &[f64]| {
        (
            Tensor3::new(h, w, c, p[..n].to_vec()).expect("shape"),
            MotionField::new(Tensor3::new(h, w, 2, p[n..].to_vec()).expect("shape")).expect("finite"),
        )
    };
    let report = check_adjoint(
        |p| {
            let (s, f) = split(p);
            backward_warp(&s, &f).expect("shapes").into_data()
        },
        |p, g| {
            let (s, f) = split(p);
            let g = Tensor3::new(h, w, c, g.to_vec()).expect("shape");
            let grads = backward_warp_adjoint(&s, &f, &g).expect("shapes");
            let mut out = grads.source.into_data();
            out.extend(grads.flow.into_data());
            out
        },
        &point,
        cot.data(),
        FD_EPS,
    )?;
    Ok(report.max_rel_error)
}

fn gather_grad(seed: u64) -> Result<f64> {
    let mut rng = SplitMix64::new(seed);
    let cfg = PyramidConfig::new(vec![2, 1, 1])?;
    let (h, w, c) = (8, 8, 3);
    let q = random(h, w, c, -1.0, 1.0, &mut rng);
    let k = random(h, w, c, -1.0, 1.0, &mut rng);
    let cot = random(h, w, cfg.channels_per_direction(), -1.0, 1.0, &mut rng);
    let mut point = q.data().to_vec();
    point.extend_from_slice(k.data());
    let n = q.len();
    let split = |p: &[f64]| {
        let q = Tensor3::new(h, w, c, p[..n].to_vec()).expect("shape");
        let k = Tensor3::new(h, w, c, p[n..].to_vec()).expect("shape");
        let keys = build_key_pyramid(&k, &cfg).expect("divisible");
        (q, keys)
    };
    let report = check_adjoint(
        |p| {
            let (q, keys) = split(p);
            gather_unilateral_correlation(&q, &keys, &cfg, Direction::ZeroToOne).expect("shapes").into_parts().0.into_data()
        },
        |p, g| {
            let (q, keys) = split(p);
            let g = Tensor3::new(h, w, cfg.channels_per_direction(), g.to_vec()).expect("shape");
            let grads = gather_unilateral_correlation_adjoint(&q, &keys, &cfg, &g).expect("shapes");
            let mut out = grads.queries.into_data();
            out.extend(KeyPyramid::backprop(&grads.key_levels).expect("levels").into_data());
            out
        },
        &point,
        cot.data(),
        FD_EPS,
    )?;
    Ok(report.max_rel_error)
}

fn distribute_grad(seed: u64) -> Result<f64> {
    let mut rng = SplitMix64::new(seed);
    let cfg = PyramidConfig::new(vec![2, 1, 1])?;
    let meta = channel_meta(&cfg, Direction::ZeroToOne);
    let (h, w, n) = (8, 8, meta.len());
    let vol = CorrelationVolume::new(random(h, w, n, -1.0, 1.0, &mut rng), meta)?;
    let cot = random(h, w, n, -1.0, 1.0, &mut rng);
    let mut point = vol.scores().data().to_vec();
    point.push(0.3719);
    let m = point.len() - 1;
    let rebuild = |p: &[f64]| vol.with_scores(Tensor3::new(h, w, n, p[..m].to_vec()).expect("shape")).expect("meta");
    let report = check_adjoint(
        |p| distribute_correlation(&rebuild(p), p[m]).expect("shapes").into_parts().0.into_data(),
        |p, g| {
            let g = Tensor3::new(h, w, n, g.to_vec()).expect("shape");
            let (gs, gf) = distribute_correlation_adjoint(&rebuild(p), p[m], &g).expect("shapes");
            let mut out = gs.into_data();
            out.push(gf);
            out
        },
        &point,
        cot.data(),
        FD_EPS,
    )?;
    Ok(report.max_rel_error)
}

fn upsample_grad(seed: u64) -> Result<f64> {
    let mut rng = SplitMix64::new(seed);
    let (h, w) = (4, 5);
    let field = random(h, w, 2, -3.0, 3.0, &mut rng);
    let logits = random(h, w, UPSAMPLE_LOGITS, -2.0, 2.0, &mut rng);
    let cot = random(2 * h, 2 * w, 2, -1.0, 1.0, &mut rng);
    let mut point = field.data().to_vec();
    point.extend_from_slice(logits.data());
    let n = field.len();
    let split = |p: &[f64]| {
        (
            MotionField::new(Tensor3::new(h, w, 2, p[..n].to_vec()).expect("shape")).expect("finite"),
            Tensor3::new(h, w, UPSAMPLE_LOGITS, p[n..].to_vec()).expect("shape"),
        )
    };
    let report = check_adjoint(
        |p| {
            let (f, l) = split(p);
            convex_upsample(&f, &l).expect("shapes").into_tensor().into_data()
        },
        |p, g| {
            let (f, l) = split(p);
            let g = Tensor3::new(2 * h, 2 * w, 2, g.to_vec()).expect("shape");
            let (gf, gl) = convex_upsample_adjoint(&f, &l, &g).expect("shapes");
            let mut out = gf.into_data();
            out.extend(gl.into_data());
            out
        },
        &point,
        cot.data(),
        FD_EPS,
    )?;
    Ok(report.max_rel_error)
}

pub fn grad_checks() -> Vec<CheckOutcome> {
    vec![
        CheckOutcome::from_result("backward_warp adjoint", warp_grad(21), GRAD_TOL),
        CheckOutcome::from_result("gather_unilateral_correlation adjoint", gather_grad(22), GRAD_TOL),
        CheckOutcome::from_result("distribute_correlation adjoint", distribute_grad(23), GRAD_TOL),
        CheckOutcome::from_result("convex_upsample adjoint", upsample_grad(24), GRAD_TOL),
    ]
}

/// Number of mismatching elements, so that zero means bitwise agreement.
fn mismatches<T: Real>(a: &Tensor3<T>, b: &Tensor3<T>) -> f64 {
    if a.shape() != b.shape() {
        return f64::INFINITY;
    }
    a.data().iter().zip(b.data()).filter(|(x, y)| x.as_f64().to_bits() != y.as_f64().to_bits()).count() as f64
}

fn shifted<T: Real>(src: &Tensor3<T>, dx: i64, dy: i64) -> Tensor3<T> {
    let (h, w, c) = src.shape();
    Tensor3::from_fn(h, w, c, |y, x, ch| {
        let (sy, sx) = (y as i64 - dy, x as i64 - dx);
        if sy >= 0 && sx >= 0 && (sy as usize) < h && (sx as usize) < w {
            src.at(sy as usize, sx as usize, ch)
        } else {
            T::zero()
        }
    })
}

fn exact_in<T: Real>(seed: u64) -> Result<[f64; 4]> {
    let mut rng = SplitMix64::new(seed);
    let src = random(6, 7, 3, -1.0, 1.0, &mut rng).cast::<T>();
    let zero_warp = mismatches(&backward_warp(&src, &MotionField::zeros(6, 7))?, &src);

    let flow = MotionField::constant(6, 7, T::cst(2.0), T::cst(-1.0));
    let int_warp = mismatches(&backward_warp(&src, &flow)?, &shifted(&src, -2, 1));

    let cfg = PyramidConfig::new(vec![1, 1])?;
    let meta = channel_meta(&cfg, Direction::ZeroToOne);
    let n = meta.len();
    let vol = CorrelationVolume::new(random(8, 8, n, -1.0, 1.0, &mut rng).cast::<T>(), meta.clone())?;
    let out = distribute_correlation(&vol, T::one())?;
    let mut dist = 0.0;
    for (c, m) in meta.iter().enumerate() {
        let a = out.scores().channel_range(c, 1)?;
        let b = shifted(&vol.scores().channel_range(c, 1)?, m.dx, m.dy);
        dist += mismatches(&a, &b);
    }

    let field = MotionField::new(random(3, 4, 2, -5.0, 5.0, &mut rng).cast::<T>())?;
    let up = convex_upsample(&field, &centre_tap_logits(3, 4))?;
    let replicated = Tensor3::from_fn(6, 8, 2, |y, x, c| T::cst(2.0) * field.as_tensor().at(y / 2, x / 2, c));
    let one_hot = mismatches(up.as_tensor(), &replicated);
    Ok([zero_warp, int_warp, dist, one_hot])
}

fn translate_round_trip(seed: u64) -> Result<f64> {
    let mut rng = SplitMix64::new(seed);
    let src = random(5, 6, 2, -1.0, 1.0, &mut rng);
    let back = translate_fractional(&translate_fractional(&src, 1.0, 0.0), -1.0, 0.0);
    Ok(mismatches(&back.crop(0, 1, 5, 4)?, &src.crop(0, 1, 5, 4)?))
}

pub fn exact_checks() -> Vec<CheckOutcome> {
    let names = [
        "zero-flow warp is the identity",
        "integer-flow warp is an index shift",
        "integer-displacement distribute is an index shift",
        "one-hot convex up-sampling is 2x replication",
    ];
    let mut out = Vec::new();
    for (label, res) in [("f64", exact_in::<f64>(31)), ("f32", exact_in::<f32>(31))] {
        match res {
            Ok(errs) => {
                for (name, e) in names.iter().zip(errs) {
                    out.push(CheckOutcome::measured(format!("{name} ({label})"), e, 0.0));
                }
            }
            Err(e) => out.push(CheckOutcome::from_result(format!("exactness ({label})"), Err(e), 0.0)),
        }
    }
    out.push(CheckOutcome::from_result("translate by (1,0) then (-1,0) restores interior", translate_round_trip(32), 0.0));
    out
}
