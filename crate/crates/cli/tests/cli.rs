use std::path::Path;
use std::process::{Command, Output};

use dqbc_cli::image_io::save_rgb;
use dqbc_core::Tensor3;

fn dqbc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dqbc")).args(args).output().expect("binary runs")
}

fn write_frame(path: &Path, h: usize, w: usize, phase: f64) {
    let t = Tensor3::<f64>::from_fn(h, w, 3, |y, x, c| 0.5 + 0.4 * ((x as f64 + phase) * 0.3 + y as f64 * 0.2 + c as f64).sin());
    save_rgb(path, &t).unwrap();
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn mismatched_sizes_exit_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, out) = (dir.path().join("a.png"), dir.path().join("b.png"), dir.path().join("out.png"));
    write_frame(&a, 64, 64, 0.0);
    write_frame(&b, 64, 63, 1.0);
    let o = dqbc(&["interpolate", s(&a), s(&b), s(&out)]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!out.exists());
}

#[test]
fn missing_input_exits_with_io_code() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.png");
    write_frame(&a, 16, 16, 0.0);
    let o = dqbc(&["interpolate", s(&a), s(&dir.path().join("nope.png")), s(&dir.path().join("o.png"))]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn interpolate_writes_output_and_four_dumps() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.png"), dir.path().join("b.png"));
    let out = dir.path().join("mid.png");
    write_frame(&a, 20, 28, 0.0);
    write_frame(&b, 20, 28, 1.5);
    let o = dqbc(&["--threads", "2", "interpolate", s(&a), s(&b), s(&out), "--dump-flow"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let img = image::open(&out).unwrap();
    assert_eq!((img.width(), img.height()), (28, 20));
    let mut names: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.starts_with("mid_"))
        .collect();
    names.sort();
    assert_eq!(names, ["mid_flow_t0.png", "mid_flow_t1.png", "mid_occlusion.png", "mid_occlusion_final.png"]);
}

#[test]
fn init_weights_then_interpolate_with_archive() {
    let dir = tempfile::tempdir().unwrap();
    let w = dir.path().join("w.dqbw");
    assert!(dqbc(&["init-weights", s(&w), "--seed", "3"]).status.success());
    let (a, out) = (dir.path().join("a.png"), dir.path().join("o.png"));
    write_frame(&a, 16, 16, 0.0);
    let o = dqbc(&["interpolate", s(&a), s(&a), s(&out), "--weights", s(&w)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let mut bytes = std::fs::read(&w).unwrap();
    bytes.truncate(bytes.len() - 8);
    std::fs::write(&w, bytes).unwrap();
    let o = dqbc(&["interpolate", s(&a), s(&a), s(&out), "--weights", s(&w)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn check_passes() {
    let o = dqbc(&["check"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn bench_prints_csv() {
    let o = dqbc(&["bench", "--op", "warp", "--sizes", "8x8x2,16x8x3", "--repetitions", "1"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], "op,height,width,channels,config,median_ns,throughput_elems_per_s");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("warp,8,8,2,"));
    assert!(lines[2].starts_with("warp,16,8,3,"));
}

#[test]
fn fit_motion_on_identical_frames_stays_at_zero() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.png");
    write_frame(&a, 24, 24, 0.0);
    let o = dqbc(&["fit-motion", s(&a), s(&a), "--iterations", "5", "--truth-flow", "0,0"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("final_loss=0.000000e0"), "{text}");
    assert!(text.contains("mean_epe_interior=0.000000"), "{text}");
}
