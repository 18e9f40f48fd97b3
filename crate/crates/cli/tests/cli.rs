//! End-to-end runs of the `rotorsim` binary.

use std::path::Path;
use std::process::{Command, Output};

fn rotorsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rotorsim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}, stderr: {}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn bench_physics_prints_a_report() {
    let out = rotorsim(&[
        "bench-physics",
        "--num-envs",
        "16",
        "--steps",
        "50",
        "--workers",
        "1",
    ]);
    let text = stdout(&out);
    assert!(text.contains("benchmark: bench-physics"));
    assert!(text.contains("num_envs: 16"));
    assert!(text.contains("physics_sps:"));
    assert!(text.contains("4.43e6 SPS"), "reference footer missing");
}

#[test]
fn bench_render_prints_fps() {
    let out = rotorsim(&[
        "bench-render",
        "--num-envs",
        "2",
        "--frames",
        "3",
        "--resolution",
        "16x12",
        "--workers",
        "1",
    ]);
    let text = stdout(&out);
    assert!(text.contains("benchmark: bench-render"));
    assert!(text.contains("render_fps:"));
    assert!(text.contains("37597 FPS"), "reference footer missing");
}

#[test]
fn run_task_prints_summary() {
    let out = rotorsim(&[
        "run-task",
        "--num-envs",
        "2",
        "--steps",
        "20",
        "--policy",
        "hover",
        "--workers",
        "1",
    ]);
    let text = stdout(&out);
    assert!(text.contains("benchmark: run-task"));
    assert!(text.contains("mean_reward:"));
    assert!(text.contains("episodes_finished: 0"));
}

#[test]
fn record_same_seed_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let record = |name: &str| {
        let path = dir.path().join(name);
        let out = rotorsim(&[
            "record",
            "--steps",
            "40",
            "--seed",
            "9",
            "--output",
            path.to_str().unwrap(),
        ]);
        stdout(&out);
        std::fs::read(&path).unwrap()
    };
    let a = record("a.csv");
    let b = record("b.csv");
    assert_eq!(a, b);

    let text = String::from_utf8(a).unwrap();
    let mut lines = text.lines();
    assert!(lines
        .next()
        .unwrap()
        .starts_with("env,step,time,px,py,pz,qx,qy,qz,qw,vx,vy,vz,wx,wy,wz,a0"));
    // Default hover policy from the default spawn: z stays within a cm.
    for line in lines {
        let z: f64 = line.split(',').nth(5).unwrap().parse().unwrap();
        assert!(z.abs() < 0.01);
    }
}

#[test]
fn dump_frames_writes_all_channels() {
    let dir = tempfile::tempdir().unwrap();
    let out = rotorsim(&[
        "dump-frames",
        "--resolution",
        "8x6",
        "--pose",
        "0,0,0",
        "--pose",
        "1,0,0,0,0,0.5",
        "--output",
        dir.path().to_str().unwrap(),
    ]);
    let text = stdout(&out);
    assert_eq!(text.lines().filter(|l| l.starts_with("wrote ")).count(), 16);
    for k in 0..2 {
        for name in [
            "depth.pgm",
            "range.pgm",
            "segmentation.csv",
            "instance.csv",
            "face.csv",
            "normal.csv",
            "barycentric.csv",
            "valid.csv",
        ] {
            let path = dir.path().join(format!("pose{k:03}_{name}"));
            assert!(path.exists(), "missing {}", path.display());
        }
    }
}

#[test]
fn bad_inputs_fail_with_a_message() {
    let out = rotorsim(&["run-task", "--policy", "walk"]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("policy"), "stderr was: {err}");

    let out = rotorsim(&["bench-render", "--resolution", "nonsense"]);
    assert!(!out.status.success());

    let missing = Path::new("/definitely/not/here.toml");
    let out = rotorsim(&["bench-physics", "--robot", missing.to_str().unwrap()]);
    assert!(!out.status.success());
}
