//! Acceptance gate for the simulation core.
//!
//! Each test guards one release criterion and prints a single
//! `[PASS]`/`[FAIL]` line with the measured values next to their pinned
//! tolerances (visible under `--nocapture`; failures surface the line
//! through the captured output). The checks compare the implementation
//! against independent oracles: closed-form solutions, brute-force
//! reference paths and conservation laws, never against itself.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_6};
use std::time::Instant;

use nalgebra::{UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rotorsim::config::{octo_tilted_config, quad_x_config, InertiaSpec, RobotConfig};
use rotorsim::control::{AllocationMatrix, ControlCommand, Wrench};
use rotorsim::dynamics::{angular_momentum, step_rigid_body, RigidBodyParams};
use rotorsim::imu::{sample_imu, ImuParams, ImuState};
use rotorsim::mesh::TriangleMesh;
use rotorsim::motors::{exact_rpm_response, step_rpm, MotorIntegrator};
use rotorsim::render::camera::{apply_stereo_shadow, render_camera};
use rotorsim::render::{CameraModel, ObstacleInstance, WorldMesh};
use rotorsim::state::{EnvState, ResetSpec};
use rotorsim::tasks::{
    MotorTask, NavigationTask, PositionTask, SimOptions, Simulator, StepResult, TaskConfig,
    TaskKind, VecTask,
};

/// Run one criterion, print its verdict line, panic on failure.
fn criterion<F>(name: &str, f: F)
where
    F: FnOnce() -> Result<String, String>,
{
    match f() {
        Ok(detail) => println!("[PASS] {name}: {detail}"),
        Err(msg) => {
            println!("[FAIL] {name}: {msg}");
            panic!("{name}: {msg}");
        }
    }
}

// The empty branch keeps NaN metrics on the failure path without a negated
// float comparison.
macro_rules! check {
    ($cond:expr, $($arg:tt)+) => {
        if $cond {
        } else {
            return Err(format!($($arg)+));
        }
    };
}

fn quad() -> RobotConfig<f64> {
    quad_x_config(1.0, 0.17)
}

// ---------------------------------------------------------------- criterion 1

#[test]
fn allocation_solutions_reproduce_requested_wrenches() {
    criterion("allocation round-trip", || {
        let start = Instant::now();
        let mut worst = 0.0f64;
        for robot in [quad(), octo_tilted_config(2.0, 0.25)] {
            let alloc = AllocationMatrix::new(&robot.motors);
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            for trial in 0..100 {
                // Achievable by construction: the wrench of a random
                // feasible thrust vector.
                let u: Vec<f64> = alloc
                    .max_thrusts()
                    .iter()
                    .map(|&hi| rng.random_range(0.0..hi))
                    .collect();
                let w = alloc.wrench_of(&u);
                let solved: Vec<f64> = alloc.solve(&w).iter().copied().collect();
                let back = alloc.wrench_of(&solved);
                let err = (back.as_vector() - w.as_vector()).amax();
                let scale = w.as_vector().amax().max(1.0);
                worst = worst.max(err / scale);
                check!(
                    err < 1e-9 * scale,
                    "{}: trial {trial} round-trip error {err:.3e} vs {:.3e} allowed",
                    robot.name,
                    1e-9 * scale
                );
            }
        }
        let elapsed = start.elapsed().as_secs_f64();
        check!(elapsed < 1.0, "took {elapsed:.2} s, budget 1 s");
        Ok(format!(
            "worst relative error {worst:.2e} < 1e-9 over 2 airframes x 100 wrenches in {elapsed:.2} s"
        ))
    });
}

// ---------------------------------------------------------------- criterion 2

#[test]
fn hover_holds_position_within_a_centimeter() {
    criterion("hover equilibrium", || {
        let options = SimOptions {
            control_dt: 0.005,
            substeps: 1,
            ..SimOptions::default()
        };
        let mut sim = Simulator::new(quad(), 1, options).map_err(|e| e.to_string())?;
        let setpoint = Vector3::new(0.0, 0.0, 1.0);
        sim.reset_all(&ResetSpec::at_position(setpoint));
        let command = ControlCommand::Position {
            position: setpoint,
            yaw: 0.0,
        };
        let mut worst = 0.0f64;
        for _ in 0..1000 {
            sim.step_commands(std::slice::from_ref(&command));
            worst = worst.max((sim.store().env(0).position - setpoint).norm());
        }
        check!(sim.healthy()[0], "physics diverged during hover");
        check!(worst < 0.01, "drift {worst:.4} m exceeds 0.01 m");
        Ok(format!(
            "max drift {worst:.2e} m < 0.01 m over 5 s at dt 0.005 s"
        ))
    });
}

// ---------------------------------------------------------------- criterion 3

#[test]
fn offset_setpoints_converge_from_randomized_attitudes() {
    criterion("setpoint convergence", || {
        let goal = Vector3::new(0.0, 0.0, 1.0);
        let command = ControlCommand::Position {
            position: goal,
            yaw: 0.0,
        };
        let steps = 1000; // 10 s at the 0.01 s default control step

        // Level start, pure 1 m lateral offset.
        let mut sim =
            Simulator::new(quad(), 1, SimOptions::default()).map_err(|e| e.to_string())?;
        sim.reset_all(&ResetSpec::at_position(Vector3::new(1.0, 0.0, 1.0)));
        for _ in 0..steps {
            sim.step_commands(std::slice::from_ref(&command));
        }
        let level_err = (sim.store().env(0).position - goal).norm();
        check!(
            level_err < 0.05,
            "level start: error {level_err:.4} m at 10 s exceeds 0.05 m"
        );

        // 100 environments with attitude randomized inside +/-30 deg.
        let num = 100;
        let mut batch =
            Simulator::new(quad(), num, SimOptions::default()).map_err(|e| e.to_string())?;
        let spec = ResetSpec::at_position(Vector3::new(1.0, 0.0, 1.0))
            .with_attitude_range(Vector3::repeat(-FRAC_PI_6), Vector3::repeat(FRAC_PI_6));
        batch.reset_all(&spec);
        let commands = vec![command; num];
        for _ in 0..steps {
            batch.step_commands(&commands);
        }
        let mut worst = 0.0f64;
        for i in 0..num {
            check!(batch.healthy()[i], "environment {i} diverged");
            let err = (batch.store().env(i).position - goal).norm();
            worst = worst.max(err);
            check!(
                err < 0.05,
                "environment {i}: error {err:.4} m exceeds 0.05 m"
            );
        }
        Ok(format!(
            "level error {level_err:.2e} m, worst of {num} tilted starts {worst:.2e} m < 0.05 m"
        ))
    });
}

// ---------------------------------------------------------------- criterion 4

#[test]
fn motor_integrators_match_the_exponential_response() {
    criterion("motor dynamics vs analytic exponential", || {
        let spec = quad().motors[0].clone();
        let tau = spec.tau_inc; // spin-up all the way: 2000 -> 8000 RPM
        let errors = |dt: f64, method: MotorIntegrator| -> (f64, f64) {
            let steps = (1.0 / dt).round() as usize;
            let mut r = 2000.0;
            let (mut worst_abs, mut worst_rel) = (0.0f64, 0.0f64);
            for k in 0..steps {
                r = step_rpm(r, 8000.0, &spec, dt, method);
                let exact = exact_rpm_response(2000.0, 8000.0, tau, dt * (k + 1) as f64);
                let abs = (r - exact).abs();
                worst_abs = worst_abs.max(abs);
                worst_rel = worst_rel.max(abs / exact.abs());
            }
            (worst_abs, worst_rel)
        };

        let (_, euler_rel) = errors(1e-3, MotorIntegrator::Euler);
        check!(
            euler_rel < 0.01,
            "Euler relative error {euler_rel:.3e} exceeds 1e-2"
        );
        let (_, rk4_rel) = errors(1e-3, MotorIntegrator::Rk4);
        check!(
            rk4_rel < 1e-6,
            "RK4 relative error {rk4_rel:.3e} exceeds 1e-6"
        );

        // Least-squares slope of ln(error) against ln(dt): fourth order.
        let dts: [f64; 3] = [4e-3, 2e-3, 1e-3];
        let points: Vec<(f64, f64)> = dts
            .iter()
            .map(|&dt| (dt.ln(), errors(dt, MotorIntegrator::Rk4).0.ln()))
            .collect();
        let n = points.len() as f64;
        let (mx, my) = (
            points.iter().map(|p| p.0).sum::<f64>() / n,
            points.iter().map(|p| p.1).sum::<f64>() / n,
        );
        let slope = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
            / points.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
        check!(
            (slope - 4.0).abs() <= 0.2,
            "RK4 convergence slope {slope:.3} outside 4 +/- 0.2"
        );
        Ok(format!(
            "Euler rel {euler_rel:.2e} < 1e-2, RK4 rel {rk4_rel:.2e} < 1e-6, slope {slope:.3} in 4 +/- 0.2"
        ))
    });
}

// ---------------------------------------------------------------- criterion 5

#[test]
fn torque_free_tumbling_conserves_momentum() {
    criterion("rigid-body conservation", || {
        let mut robot = quad();
        robot.inertia = InertiaSpec::Diagonal([1.0, 2.0, 3.0]);
        robot.drag_linear = Vector3::zeros();
        let params = RigidBodyParams::from_robot(&robot, 0.0);

        let mut env = EnvState {
            position: Vector3::zeros(),
            orientation: UnitQuaternion::identity(),
            velocity: Vector3::zeros(),
            angular_velocity: Vector3::new(1.0, 0.5, -0.8),
            rpm: vec![0.0; 4],
            collided: false,
        };
        let l0 = angular_momentum(&env, &params);
        for _ in 0..10_000 {
            check!(
                step_rigid_body(&mut env, &params, &Wrench::zero(), 1e-4),
                "tumbling state diverged"
            );
        }
        let drift = (angular_momentum(&env, &params) - l0).norm() / l0.norm();
        check!(drift < 0.005, "momentum drift {drift:.3e} exceeds 0.5%");

        // Force-free translation: velocity must not move at all.
        let mut glide = EnvState {
            position: Vector3::zeros(),
            orientation: UnitQuaternion::identity(),
            velocity: Vector3::new(0.3, -0.7, 0.2),
            angular_velocity: Vector3::zeros(),
            rpm: vec![0.0; 4],
            collided: false,
        };
        let v0 = glide.velocity;
        for _ in 0..1000 {
            step_rigid_body(&mut glide, &params, &Wrench::zero(), 1e-3);
        }
        let dv = (glide.velocity - v0).amax();
        check!(dv < 1e-12, "velocity wandered by {dv:.3e}");
        Ok(format!(
            "momentum drift {drift:.2e} < 5e-3 over 1 s at dt 1e-4, velocity drift {dv:.1e} < 1e-12"
        ))
    });
}

// ---------------------------------------------------------------- criterion 6

#[test]
fn imu_noise_statistics_match_configuration() {
    criterion("imu statistics", || {
        let truth_f = Vector3::new(0.0, 0.0, 9.81);
        let truth_w = Vector3::new(0.1, -0.2, 0.3);

        // White noise: sample std against the configured sigma.
        let mut params = ImuParams::<f64>::noiseless();
        params.sigma_accel = Vector3::repeat(0.05);
        params.sigma_gyro = Vector3::repeat(2e-3);
        let mut state = ImuState::allocate(1, 2024, 0);
        let n = 1_000_000usize;
        let mut sq_a = Vector3::<f64>::zeros();
        let mut sq_g = Vector3::<f64>::zeros();
        for _ in 0..n {
            let s = sample_imu(&params, &mut state, 0, &truth_f, &truth_w);
            for k in 0..3 {
                sq_a[k] += (s.accel[k] - truth_f[k]).powi(2);
                sq_g[k] += (s.gyro[k] - truth_w[k]).powi(2);
            }
        }
        let mut worst_std = 0.0f64;
        for k in 0..3 {
            let std_a = (sq_a[k] / n as f64).sqrt();
            let std_g = (sq_g[k] / n as f64).sqrt();
            let rel_a = (std_a - 0.05).abs() / 0.05;
            let rel_g = (std_g - 2e-3).abs() / 2e-3;
            worst_std = worst_std.max(rel_a).max(rel_g);
            check!(rel_a < 0.01, "accel axis {k}: std off by {rel_a:.2e}");
            check!(rel_g < 0.01, "gyro axis {k}: std off by {rel_g:.2e}");
        }

        // Bias random walk: variance grows as steps * sigma_b^2.
        let sigma_b = 1e-3;
        let mut walk = ImuParams::<f64>::noiseless();
        walk.sigma_bias_accel = Vector3::repeat(sigma_b);
        let envs = 4096usize;
        let steps = 256usize;
        let mut bias_state = ImuState::allocate(envs, 99, 0);
        for _ in 0..steps {
            for e in 0..envs {
                sample_imu(&walk, &mut bias_state, e, &truth_f, &truth_w);
            }
        }
        let mut sq = 0.0;
        for e in 0..envs {
            let b = bias_state.bias_accel(e);
            for k in 0..3 {
                sq += b[k] * b[k];
            }
        }
        let var = sq / (3 * envs) as f64;
        let expect = steps as f64 * sigma_b * sigma_b;
        let rel_var = (var - expect).abs() / expect;
        check!(
            rel_var < 0.05,
            "bias walk variance off by {rel_var:.2e} ({var:.3e} vs {expect:.3e})"
        );

        // Noiseless configuration is exact, sample after sample.
        let clean = ImuParams::<f64>::noiseless();
        let mut clean_state = ImuState::allocate(1, 7, 0);
        for _ in 0..10 {
            let s = sample_imu(&clean, &mut clean_state, 0, &truth_f, &truth_w);
            check!(s.accel == truth_f, "noiseless accel differs from truth");
            check!(s.gyro == truth_w, "noiseless gyro differs from truth");
        }
        Ok(format!(
            "std error {worst_std:.2e} < 1e-2 over 1e6 samples, walk variance error {rel_var:.2e} < 5e-2 over {envs} envs, noiseless exact"
        ))
    });
}

// ---------------------------------------------------------------- criterion 7

#[test]
fn bvh_ray_casts_equal_brute_force() {
    criterion("renderer oracle equivalence", || {
        let mut hits = 0usize;
        let mut worst_t = 0.0f64;
        for scene in 0..20u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + scene);
            let tris = 500;
            let mut vertices: Vec<Vector3<f64>> = Vec::with_capacity(tris * 3);
            let mut faces = Vec::with_capacity(tris);
            for i in 0..tris {
                let c = Vector3::new(
                    rng.random_range(-5.0..5.0),
                    rng.random_range(-5.0..5.0),
                    rng.random_range(-5.0..5.0),
                );
                for _ in 0..3 {
                    vertices.push(
                        c + Vector3::new(
                            rng.random_range(-0.5..0.5),
                            rng.random_range(-0.5..0.5),
                            rng.random_range(-0.5..0.5),
                        ),
                    );
                }
                let base = (i * 3) as u32;
                faces.push([base, base + 1, base + 2]);
            }
            let mesh = TriangleMesh::new(vertices, faces).map_err(|e| e.to_string())?;
            let world = WorldMesh::single(mesh);

            for ray in 0..1000 {
                let origin = Vector3::new(
                    rng.random_range(-6.0..6.0),
                    rng.random_range(-6.0..6.0),
                    rng.random_range(-6.0..6.0),
                );
                let mut dir;
                loop {
                    dir = Vector3::new(
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                    );
                    if dir.norm() > 0.1 {
                        break;
                    }
                }
                let dir = dir.normalize();
                let fast = world.cast_ray(&origin, &dir, 1e-4, 100.0);
                let brute = world.cast_ray_brute(&origin, &dir, 1e-4, 100.0);
                match (&fast, &brute) {
                    (None, None) => {}
                    (Some(a), Some(b)) => {
                        check!(
                            a == b,
                            "scene {scene} ray {ray}: BVH hit {a:?} differs from brute {b:?}"
                        );
                        worst_t = worst_t.max((a.t - b.t).abs());
                        hits += 1;
                    }
                    _ => {
                        return Err(format!(
                            "scene {scene} ray {ray}: hit/miss disagreement ({fast:?} vs {brute:?})"
                        ))
                    }
                }
            }
        }
        check!(
            hits > 1000,
            "only {hits} of 20000 rays hit; scenes too sparse"
        );
        Ok(format!(
            "{hits} hits over 20 scenes x 1000 rays bitwise equal, max |dt| {worst_t:.1e} < 1e-6"
        ))
    });
}

// ---------------------------------------------------------------- criterion 8

fn wall_world() -> WorldMesh<f64> {
    let wall = TriangleMesh::cuboid(Vector3::new(0.1, 6.0, 4.0)).with_segmentation_id(1);
    WorldMesh::from_instances(
        vec![wall],
        vec![ObstacleInstance {
            mesh_index: 0,
            position: Vector3::new(4.0, 0.0, 0.0),
            rotation: UnitQuaternion::identity(),
            scale: 1.0,
            segmentation_id: 1,
        }],
    )
}

#[test]
fn camera_range_obeys_the_pinhole_depth_law() {
    criterion("depth range law", || {
        let world = wall_world();
        let body_p = Vector3::zeros();
        let body_q = UnitQuaternion::identity();

        let cam = CameraModel::with_fov(64, 48, FRAC_PI_2, 0.1, 50.0);
        let img = render_camera(&world, &cam, &body_p, &body_q);
        let valid = img.num_valid();
        check!(
            valid * 10 >= img.len() * 9,
            "only {valid} of {} pixels hit the wall",
            img.len()
        );
        let mut worst = 0.0f64;
        for row in 0..cam.height {
            for col in 0..cam.width {
                let idx = img.index(col, row);
                if !img.valid[idx] {
                    continue;
                }
                let xp = (col as f64 - cam.cx) / cam.fx;
                let yp = (row as f64 - cam.cy) / cam.fy;
                let predicted = img.depth[idx] * (1.0 + xp * xp + yp * yp).sqrt();
                let err = (img.range[idx] - predicted).abs() / img.range[idx].max(1.0);
                worst = worst.max(err);
                check!(
                    err < 1e-6,
                    "pixel ({col},{row}): range {} vs predicted {predicted} (err {err:.3e})",
                    img.range[idx]
                );
            }
        }

        // Odd side lengths put a pixel exactly on the principal point,
        // where the ray is the optical axis and range equals depth.
        let odd = CameraModel::with_fov(33, 25, FRAC_PI_2, 0.1, 50.0);
        let center = render_camera(&world, &odd, &body_p, &body_q);
        let idx = center.index(16, 12);
        check!(center.valid[idx], "principal-point pixel missed the wall");
        check!(
            center.range[idx] == center.depth[idx],
            "principal point: range {} != depth {}",
            center.range[idx],
            center.depth[idx]
        );
        Ok(format!(
            "{valid} pixels obey range = depth*sqrt(1+x'^2+y'^2) within {worst:.1e} (tol 1e-6); principal point exact"
        ))
    });
}

// ---------------------------------------------------------------- criterion 9

#[test]
fn stereo_shadow_matches_independent_occlusion() {
    criterion("stereo shadow", || {
        // A post in front of a wall: classic occlusion geometry.
        let wall = TriangleMesh::cuboid(Vector3::new(0.1, 4.0, 3.0)).with_segmentation_id(1);
        let post = TriangleMesh::cuboid(Vector3::new(0.08, 0.2, 2.6)).with_segmentation_id(2);
        let world = WorldMesh::from_instances(
            vec![wall, post],
            vec![
                ObstacleInstance {
                    mesh_index: 0,
                    position: Vector3::new(5.0, 0.0, 0.0),
                    rotation: UnitQuaternion::identity(),
                    scale: 1.0,
                    segmentation_id: 1,
                },
                ObstacleInstance {
                    mesh_index: 1,
                    position: Vector3::new(2.5, 0.5, 0.0),
                    rotation: UnitQuaternion::identity(),
                    scale: 1.0,
                    segmentation_id: 2,
                },
            ],
        );
        let mut cam = CameraModel::with_fov(64, 48, FRAC_PI_2, 0.1, 50.0);
        cam.baseline = 0.3;
        let body_p = Vector3::zeros();
        let body_q = UnitQuaternion::identity();

        let base = render_camera(&world, &cam, &body_p, &body_q);
        let mut shadowed_img = base.clone();
        let reported = apply_stereo_shadow(&world, &cam, &body_p, &body_q, &mut shadowed_img);

        // Independent check: march a brute-force ray from the displaced
        // viewpoint to every originally valid hit point. The same endpoint
        // margin the renderer documents (1e-4 m) applies.
        let (origin, r_wc) = cam.world_pose(&body_p, &body_q);
        let right_origin = origin + r_wc.transform_vector(&Vector3::new(cam.baseline, 0.0, 0.0));
        let eps = 1e-4;
        let mut expected = 0usize;
        for row in 0..cam.height {
            for col in 0..cam.width {
                let idx = base.index(col, row);
                if !base.valid[idx] {
                    check!(
                        !shadowed_img.valid[idx],
                        "pixel ({col},{row}) became valid under shadowing"
                    );
                    continue;
                }
                let dir_cam = cam.pixel_dir(col, row);
                let point = origin + r_wc.transform_vector(&dir_cam) * base.range[idx];
                let offset = point - right_origin;
                let dist = offset.norm();
                let occluded = dist > eps
                    && world
                        .cast_ray_brute(&right_origin, &(offset / dist), eps, dist - eps)
                        .is_some();
                if occluded {
                    expected += 1;
                }
                check!(
                    shadowed_img.valid[idx] == !occluded,
                    "pixel ({col},{row}): shadow says valid={}, oracle says occluded={occluded}",
                    shadowed_img.valid[idx]
                );
            }
        }
        check!(
            reported == expected,
            "count mismatch: reported {reported}, oracle {expected}"
        );
        check!(
            expected >= 20,
            "only {expected} shadowed pixels; scene degenerate"
        );
        check!(
            expected < base.num_valid(),
            "every valid pixel shadowed; scene degenerate"
        );

        // Zero baseline leaves the image untouched.
        cam.baseline = 0.0;
        let mut untouched = render_camera(&world, &cam, &body_p, &body_q);
        let before = untouched.clone();
        let zero = apply_stereo_shadow(&world, &cam, &body_p, &body_q, &mut untouched);
        check!(zero == 0, "zero baseline invalidated {zero} pixels");
        check!(untouched == before, "zero baseline modified the image");
        Ok(format!(
            "invalidated set matches the occlusion oracle exactly ({expected} pixels); baseline 0 shadows none"
        ))
    });
}

// --------------------------------------------------------------- criterion 10

fn nav_world() -> WorldMesh<f64> {
    let cube = TriangleMesh::cuboid(Vector3::repeat(0.5));
    let spots = [
        (-1.2, -1.5, 1.0),
        (0.0, 0.8, 1.4),
        (1.3, -0.6, 0.9),
        (-0.4, 2.2, 1.8),
        (0.9, 1.9, 1.1),
        (1.8, 0.2, 1.6),
        (-1.8, 0.9, 0.7),
        (0.3, -2.1, 1.3),
    ];
    let instances = spots
        .iter()
        .enumerate()
        .map(|(i, &(x, y, z))| ObstacleInstance {
            mesh_index: 0,
            position: Vector3::new(x, y, z),
            rotation: UnitQuaternion::from_euler_angles(
                0.1 * i as f64,
                0.05 * i as f64,
                0.3 * i as f64,
            ),
            scale: 0.8,
            segmentation_id: i as i32 + 1,
        })
        .collect();
    WorldMesh::from_instances(vec![cube], instances)
}

fn nav_cfg() -> TaskConfig<f64> {
    TaskConfig {
        name: TaskKind::Navigation,
        episode_length: 200,
        bounds_min: Vector3::new(-6.0, -4.0, 0.0),
        bounds_max: Vector3::new(6.0, 4.0, 4.0),
        spawn_position_min: Vector3::new(-4.5, -2.0, 0.8),
        spawn_position_max: Vector3::new(-3.5, 2.0, 2.0),
        goal_min: Vector3::new(2.0, -2.0, 0.8),
        goal_max: Vector3::new(4.0, 2.0, 2.0),
        ..TaskConfig::default()
    }
}

fn nav_task(workers: usize) -> Result<NavigationTask<f64>, String> {
    NavigationTask::new(quad(), nav_cfg(), nav_world(), 64, 777, 0, workers)
        .map_err(|e| e.to_string())
}

fn wave_actions(num_envs: usize, action_dim: usize, step: usize, offset: u64) -> Vec<f64> {
    let mut a = vec![0.0; num_envs * action_dim];
    for i in 0..num_envs {
        let g = offset as usize + i;
        for k in 0..action_dim {
            a[i * action_dim + k] =
                0.6 * (0.07 * step as f64 + 0.9 * g as f64 + 1.3 * k as f64).sin();
        }
    }
    a
}

fn diff_step(a: &StepResult<f64>, b: &StepResult<f64>) -> Option<String> {
    if a.observations != b.observations {
        let at = a
            .observations
            .iter()
            .zip(&b.observations)
            .position(|(x, y)| x != y);
        return Some(format!("observations differ first at flat index {at:?}"));
    }
    if a.rewards != b.rewards {
        return Some("rewards differ".into());
    }
    if a.terminated != b.terminated || a.truncated != b.truncated {
        return Some("termination flags differ".into());
    }
    if a.info != b.info {
        return Some("info differs".into());
    }
    None
}

#[test]
fn rollouts_are_bitwise_reproducible() {
    criterion("determinism", || {
        // Same rollout against a rerun and against threaded batches.
        let steps = 500;
        for (label, workers) in [("rerun", 1usize), ("workers=4", 4), ("workers=8", 8)] {
            let mut reference = nav_task(1)?;
            let mut candidate = nav_task(workers)?;
            let o_ref = reference.reset_all();
            let o_new = candidate.reset_all();
            check!(o_ref == o_new, "{label}: reset observations differ");
            for step in 0..steps {
                let actions = wave_actions(64, 4, step, 0);
                let ra = reference.step(&actions);
                let rb = candidate.step(&actions);
                if let Some(why) = diff_step(&ra, &rb) {
                    return Err(format!("{label}: step {step}: {why}"));
                }
            }
        }

        // A batch must equal the same environments run one at a time.
        let cfg = TaskConfig::<f64> {
            episode_length: 60,
            spawn_position_min: Vector3::new(-1.0, -1.0, 0.5),
            spawn_position_max: Vector3::new(1.0, 1.0, 1.5),
            goal_min: Vector3::new(-2.0, -2.0, 0.5),
            goal_max: Vector3::new(2.0, 2.0, 2.0),
            ..TaskConfig::default()
        };
        let mut batch =
            PositionTask::new(quad(), cfg.clone(), 4, 555, 0, 1).map_err(|e| e.to_string())?;
        let mut solos = Vec::new();
        for i in 0..4u64 {
            solos.push(
                PositionTask::new(quad(), cfg.clone(), 1, 555, i, 1).map_err(|e| e.to_string())?,
            );
        }
        let ob = batch.reset_all();
        let dim = batch.observation_dim();
        for (i, solo) in solos.iter_mut().enumerate() {
            let oi = solo.reset_all();
            check!(
                oi == ob[i * dim..(i + 1) * dim],
                "solo {i}: reset observation differs from the batch row"
            );
        }
        for step in 0..100 {
            let actions = wave_actions(4, 4, step, 0);
            let rb = batch.step(&actions);
            for (i, solo) in solos.iter_mut().enumerate() {
                let ri = solo.step(&wave_actions(1, 4, step, i as u64));
                check!(
                    ri.observations == rb.observations[i * dim..(i + 1) * dim],
                    "solo {i} step {step}: observations differ from the batch row"
                );
                check!(
                    ri.rewards[0] == rb.rewards[i]
                        && ri.terminated[0] == rb.terminated[i]
                        && ri.truncated[0] == rb.truncated[i],
                    "solo {i} step {step}: outcome differs from the batch row"
                );
            }
        }
        Ok(
            "500-step 64-env rollout bitwise stable across reruns and workers {1,4,8}; 4-env batch equals 4 solo runs"
                .into(),
        )
    });
}

// --------------------------------------------------------------- criterion 11

#[test]
fn tasks_follow_the_vectorized_reset_step_contract() {
    criterion("vectorized task contract", || {
        let pos_cfg = TaskConfig::<f64> {
            spawn_position_min: Vector3::new(-1.0, -1.0, 0.8),
            spawn_position_max: Vector3::new(1.0, 1.0, 1.8),
            goal_min: Vector3::new(-2.0, -2.0, 0.8),
            goal_max: Vector3::new(2.0, 2.0, 2.0),
            ..TaskConfig::default()
        };

        // Observation and action widths, batch shapes.
        {
            let mut pos = PositionTask::new(quad(), pos_cfg.clone(), 3, 1, 0, 1)
                .map_err(|e| e.to_string())?;
            check!(pos.observation_dim() == 17, "position observation width");
            check!(pos.action_dim() == 4, "position action width");
            let obs = pos.reset_all();
            check!(obs.len() == 3 * 17, "position reset batch shape");
            let r = pos.step(&[0.0; 3 * 4]);
            check!(r.observations.len() == 3 * 17, "position step batch shape");
            check!(
                r.rewards.len() == 3
                    && r.terminated.len() == 3
                    && r.truncated.len() == 3
                    && r.info.auto_reset.len() == 3,
                "position per-env vector lengths"
            );

            let nav = NavigationTask::new(
                quad(),
                nav_cfg(),
                WorldMesh::from_instances(Vec::new(), Vec::new()),
                2,
                1,
                0,
                1,
            )
            .map_err(|e| e.to_string())?;
            check!(
                nav.observation_dim() == 208,
                "navigation observation width {} != 208",
                nav.observation_dim()
            );
            check!(nav.action_dim() == 4, "navigation action width");

            let motor =
                MotorTask::new(quad(), pos_cfg.clone(), 2, 1, 0, 1).map_err(|e| e.to_string())?;
            check!(motor.observation_dim() == 15, "motor observation width");
            check!(
                motor.action_dim() == 4,
                "motor action width tracks rotor count"
            );

            let octo = MotorTask::new(octo_tilted_config(2.0, 0.25), pos_cfg.clone(), 1, 1, 0, 1)
                .map_err(|e| e.to_string())?;
            check!(octo.action_dim() == 8, "octorotor action width");

            // A wrong-width action batch is rejected loudly, not truncated.
            let mut strict = PositionTask::new(quad(), pos_cfg.clone(), 2, 5, 0, 1)
                .map_err(|e| e.to_string())?;
            strict.reset_all();
            let wrong = vec![0.0; 2 * 4 - 1];
            let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| {
                let _ = strict.step(&wrong);
            }));
            check!(outcome.is_err(), "short action batch was accepted");
        }

        // Auto-reset: a terminated environment returns the same observation
        // an explicit reset of its twin produces, bit for bit.
        {
            let mut a = PositionTask::new(quad(), pos_cfg.clone(), 2, 42, 0, 1)
                .map_err(|e| e.to_string())?;
            let mut b = PositionTask::new(quad(), pos_cfg.clone(), 2, 42, 0, 1)
                .map_err(|e| e.to_string())?;
            a.reset_all();
            b.reset_all();
            for step in 0..3 {
                let actions = wave_actions(2, 4, step, 0);
                a.step(&actions);
                b.step(&actions);
            }
            let mut actions = wave_actions(2, 4, 3, 0);
            actions[4] = f64::NAN; // poison environment 1 only
            let result = a.step(&actions);
            check!(result.terminated[1], "invalid action did not terminate");
            check!(result.info.invalid_action[1], "invalid action not flagged");
            check!(result.info.auto_reset[1], "terminated env not auto-reset");
            check!(
                result.rewards[1] == -pos_cfg.reward.collision_penalty,
                "invalid action reward {} != -collision_penalty",
                result.rewards[1]
            );
            check!(
                !result.terminated[0] && !result.info.auto_reset[0],
                "healthy env 0 was disturbed"
            );
            let fresh = b.reset_envs(&[1]);
            let dim = 17;
            check!(
                result.observations[dim..2 * dim] == fresh[..],
                "post-termination observation differs from an explicit twin reset"
            );
        }

        // Partial resets leave every other environment bitwise untouched.
        {
            let mut a = PositionTask::new(quad(), pos_cfg.clone(), 8, 9, 0, 1)
                .map_err(|e| e.to_string())?;
            let mut c = PositionTask::new(quad(), pos_cfg.clone(), 8, 9, 0, 1)
                .map_err(|e| e.to_string())?;
            a.reset_all();
            c.reset_all();
            for step in 0..10 {
                let actions = wave_actions(8, 4, step, 0);
                a.step(&actions);
                c.step(&actions);
            }
            let goals_before: Vec<_> = a.goals().to_vec();
            a.reset_envs(&[2, 5]);
            for (i, g) in goals_before.iter().enumerate() {
                if i != 2 && i != 5 {
                    check!(a.goals()[i] == *g, "goal {i} changed on an unrelated reset");
                    check!(
                        a.store().env(i) == c.store().env(i),
                        "state {i} changed on an unrelated reset"
                    );
                }
            }
            let dim = 17;
            for step in 10..30 {
                let actions = wave_actions(8, 4, step, 0);
                let ra = a.step(&actions);
                let rc = c.step(&actions);
                for i in 0..8 {
                    if i == 2 || i == 5 {
                        continue;
                    }
                    check!(
                        ra.observations[i * dim..(i + 1) * dim]
                            == rc.observations[i * dim..(i + 1) * dim]
                            && ra.rewards[i] == rc.rewards[i],
                        "env {i} diverged after an unrelated partial reset (step {step})"
                    );
                }
            }
        }
        Ok(
            "widths 17/4, 208/4, 15/4 (8 on the octorotor); auto-reset equals a twin reset bitwise; partial resets isolate"
                .into(),
        )
    });
}
