//! Physics and rendering throughput benchmarks.

use std::mem::size_of;
use std::time::Instant;

use nalgebra::Vector3;
use rayon::prelude::*;

use rotorsim::render::camera::render_camera_into;
use rotorsim::state::EnvState;
use rotorsim::{
    CameraModel, ControlCommand, ResetSpec, RobotConfig, SensorImage, SimOptions, Simulator,
    WorldMesh,
};

use crate::report::BenchReport;
use crate::setup::CliError;

/// Stepping knobs shared by both benchmarks.
#[derive(Debug, Clone, Copy)]
pub struct BenchOpts {
    /// Step length (s).
    pub dt: f64,
    pub seed: u64,
    /// 1 = serial, 0 = process-wide pool, n = dedicated pool.
    pub workers: usize,
}

/// Motor and rigid-body throughput: every environment tracks the same
/// constant hover RPM setpoints in an obstacle-free world, one physics step
/// per reported step.
pub fn bench_physics(
    robot: RobotConfig<f64>,
    num_envs: usize,
    steps: usize,
    opts: BenchOpts,
) -> Result<BenchReport, CliError> {
    let options = SimOptions {
        control_dt: opts.dt,
        substeps: 1,
        seed: opts.seed,
        workers: opts.workers,
        ..SimOptions::default()
    };
    let mut sim = Simulator::new(robot, num_envs, options)?;
    sim.reset_all(&ResetSpec::default());
    let setpoints = sim.store().hover_rpm().to_vec();

    let start = Instant::now();
    for _ in 0..steps {
        sim.step_rpm_setpoints(&setpoints);
    }
    let wall = start.elapsed().as_secs_f64();

    let motors = sim.store().num_motors();
    let per_env = size_of::<EnvState<f64>>() + motors * size_of::<f64>();
    let mut report = BenchReport::new(
        "bench-physics",
        num_envs,
        steps,
        wall,
        (num_envs * per_env) as u64,
        opts.seed,
    );
    report.physics_sps = Some(report.throughput());
    Ok(report)
}

/// Rendering throughput with the controller in the loop: each frame runs one
/// position-hold control step, then renders every environment's camera
/// against the shared scene. All image channels are filled per frame.
pub fn bench_render(
    robot: RobotConfig<f64>,
    num_envs: usize,
    frames: usize,
    camera: CameraModel<f64>,
    world: &WorldMesh<f64>,
    opts: BenchOpts,
) -> Result<BenchReport, CliError> {
    let options = SimOptions {
        control_dt: opts.dt,
        seed: opts.seed,
        workers: opts.workers,
        ..SimOptions::default()
    };
    let mut sim = Simulator::new(robot, num_envs, options)?;
    sim.reset_all(&ResetSpec::default());
    let mut images: Vec<SensorImage<f64>> = (0..num_envs)
        .map(|_| SensorImage::new(camera.width, camera.height))
        .collect();
    let hold = ControlCommand::Position {
        position: Vector3::zeros(),
        yaw: 0.0,
    };

    let start = Instant::now();
    for _ in 0..frames {
        sim.step_with(None, |_, _| Some(hold.clone()));
        let envs = sim.store().envs();
        if sim.serial() {
            for (img, env) in images.iter_mut().zip(envs) {
                render_camera_into(world, &camera, &env.position, &env.orientation, img);
            }
        } else {
            let cam = &camera;
            let imgs = &mut images;
            sim.install(|| {
                imgs.par_iter_mut()
                    .zip_eq(envs.par_iter())
                    .for_each(|(img, env)| {
                        render_camera_into(world, cam, &env.position, &env.orientation, img);
                    });
            });
        }
    }
    let wall = start.elapsed().as_secs_f64();

    // Dominant buffers: the per-pixel channels of every environment's image.
    let per_pixel = 2 * size_of::<f64>()        // depth, range
        + 3 * size_of::<i32>()                  // segmentation, instance, face
        + 3 * size_of::<f64>()                  // normal
        + 2 * size_of::<f64>()                  // barycentric
        + size_of::<bool>();
    let image_bytes = num_envs * camera.width * camera.height * per_pixel;
    let state_bytes = num_envs * size_of::<EnvState<f64>>();
    let mut report = BenchReport::new(
        "bench-render",
        num_envs,
        frames,
        wall,
        (image_bytes + state_bytes) as u64,
        opts.seed,
    );
    report.render_fps = Some(report.throughput());
    report.physics_sps = Some(report.throughput());
    Ok(report)
}
