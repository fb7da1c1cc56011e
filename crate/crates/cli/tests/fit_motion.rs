use dqbc_cli::fit::{fit_motion, mean_endpoint_error, texture, translated_pair, FitOptions};
use dqbc_cli::image_io::to_byte;

#[test]
fn recovers_constant_translation() {
    let (i0, i1) = translated_pair(64, 64, 3.0, -2.0);
    let report = fit_motion(&i0, &i1, &FitOptions::default()).unwrap();
    let epe = mean_endpoint_error(&report.field, (3.0, -2.0), 0.1);
    assert!(epe < 0.1, "mean interior endpoint error {epe}");
}

#[test]
fn recovers_translation_from_quantized_frames() {
    let (i0, i1) = translated_pair(64, 64, 3.0, -2.0);
    let q = |t: &dqbc_core::Tensor3<f64>| t.map(|v| to_byte(v) as f64 / 255.0);
    let report = fit_motion(&q(&i0), &q(&i1), &FitOptions::default()).unwrap();
    assert!(mean_endpoint_error(&report.field, (3.0, -2.0), 0.1) < 0.1);
}

#[test]
fn loss_never_increases() {
    let (i0, i1) = translated_pair(32, 32, 1.5, 0.5);
    let report = fit_motion(&i0, &i1, &FitOptions { iterations: 60, step: 0.5 }).unwrap();
    assert!(report.losses.windows(2).all(|p| p[1] <= p[0]), "{:?}", report.losses);
    assert!(report.final_loss() < report.losses[0]);
}

#[test]
fn texture_is_strictly_increasing_after_quantization() {
    for c in 0..3 {
        for i in 0..70 {
            let (a, b) = match c {
                0 => (texture(i as f64, 5.0, c), texture(i as f64 + 1.0, 5.0, c)),
                1 => (texture(5.0, i as f64, c), texture(5.0, i as f64 + 1.0, c)),
                _ => (texture(i as f64, 0.0, c), texture(i as f64 + 1.0, 0.0, c)),
            };
            assert!(to_byte(b) > to_byte(a), "channel {c} at {i}");
            assert!((0.0..=1.0).contains(&b));
        }
    }
}
