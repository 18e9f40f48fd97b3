//! Obstacle navigation task: fly to sampled goals through a static world
//! while observing a min-pooled forward depth image.

use std::f64::consts::FRAC_PI_2;

use nalgebra::{UnitQuaternion, Vector3};
use rayon::prelude::*;

use crate::config::{ConfigError, RobotConfig, SensorConfig};
use crate::dynamics::sphere_collides;
use crate::render::camera::render_camera_into;
use crate::render::{CameraModel, SensorImage, WorldMesh};
use crate::state::StateStore;
use crate::{real, Real};

use super::base::{squash_row, velocity_level_command, TaskCore};
use super::{StepInfo, StepResult, VecTask};

/// Observation row layout (16 + pooled-depth values): unit vector toward the
/// goal in the vehicle frame (3), distance to the goal (1), roll (1), pitch
/// (1), body-frame linear velocity (3), body-frame angular velocity (3),
/// previous action mapped to physical command units (4), then the
/// depth_downsample block: the camera depth image min-pooled over 2x2 pixel
/// blocks, divided by the far clip, with misses reading 1.0.
///
/// The vehicle frame shares the body yaw but stays level: goal direction is
/// the world error rotated by the negative yaw. Actions are as in
/// [`PositionTask`](super::PositionTask).
///
/// Spawn poses and goals are rejection-sampled so the vehicle sphere plus
/// `goal_clearance` misses all obstacles and the goal sits at least
/// `goal_separation` from the start; after 100 failed attempts the last
/// draw is kept.
pub struct NavigationTask<T: Real> {
    core: TaskCore<T>,
    world: WorldMesh<T>,
    camera: CameraModel<T>,
    images: Vec<SensorImage<T>>,
    pooled_w: usize,
    pooled_h: usize,
}

const MAX_SAMPLE_ATTEMPTS: usize = 100;

impl<T: Real> NavigationTask<T> {
    pub const ACTION_DIM: usize = 4;

    /// Uses `cfg.camera` when present; a 32x24 forward camera with a 90
    /// degree field of view and a 10 m far clip is used when omitted. Image
    /// sides must be even so 2x2 pooling covers every pixel.
    pub fn new(
        robot: RobotConfig<T>,
        cfg: super::TaskConfig<T>,
        world: WorldMesh<T>,
        num_envs: usize,
        seed: u64,
        env_offset: u64,
        workers: usize,
    ) -> Result<Self, ConfigError> {
        let camera = match &cfg.camera {
            Some(c) => {
                SensorConfig::Camera(c.clone()).validate()?;
                CameraModel::from_config(c)
            }
            None => CameraModel::with_fov(32, 24, real(FRAC_PI_2), real(0.1), real(10.0)),
        };
        if camera.width % 2 != 0 || camera.height % 2 != 0 {
            return Err(ConfigError::Validation {
                field: "camera".into(),
                message: "depth features min-pool 2x2 blocks; width and height must be even".into(),
            });
        }
        let (pooled_w, pooled_h) = (camera.width / 2, camera.height / 2);
        let images = (0..num_envs)
            .map(|_| SensorImage::new(camera.width, camera.height))
            .collect();
        let core = TaskCore::new(
            robot,
            cfg,
            Self::ACTION_DIM,
            num_envs,
            seed,
            env_offset,
            workers,
        )?;
        Ok(Self {
            core,
            world,
            camera,
            images,
            pooled_w,
            pooled_h,
        })
    }

    pub fn camera(&self) -> &CameraModel<T> {
        &self.camera
    }

    pub fn world(&self) -> &WorldMesh<T> {
        &self.world
    }

    /// Width of the pooled depth block appended to each observation row.
    pub fn depth_feature_dim(&self) -> usize {
        self.pooled_w * self.pooled_h
    }

    /// Resample the pose until the padded vehicle sphere clears the world,
    /// then a goal that is both clear and far enough from the start.
    fn reset_sampled(&mut self, ids: &[usize]) {
        let radius = self.core.sim.robot().collision_radius + self.core.cfg.goal_clearance;
        let separation = self.core.cfg.goal_separation;
        for &i in ids {
            for _ in 0..MAX_SAMPLE_ATTEMPTS {
                self.core
                    .sim
                    .reset_envs(std::slice::from_ref(&i), &self.core.reset_spec);
                let pos = self.core.sim.store().env(i).position;
                if !sphere_collides(
                    &pos,
                    Some(&self.world),
                    &self.core.sim.options().bounds,
                    radius,
                ) {
                    break;
                }
            }
            let start = self.core.sim.store().env(i).position;
            let mut goal = start;
            for _ in 0..MAX_SAMPLE_ATTEMPTS {
                goal = self.core.sample_goal(i);
                let clear = !sphere_collides(
                    &goal,
                    Some(&self.world),
                    &self.core.sim.options().bounds,
                    radius,
                );
                if clear && (goal - start).norm() >= separation {
                    break;
                }
            }
            self.core.goals[i] = goal;
            self.core.restart_episode(i);
        }
    }

    fn render_env(&mut self, i: usize) {
        let env = self.core.sim.store().env(i);
        render_camera_into(
            &self.world,
            &self.camera,
            &env.position,
            &env.orientation,
            &mut self.images[i],
        );
    }

    fn render_all(&mut self) {
        let world = &self.world;
        let camera = &self.camera;
        let envs = self.core.sim.store().envs();
        if self.core.sim.serial() {
            for (img, env) in self.images.iter_mut().zip(envs) {
                render_camera_into(world, camera, &env.position, &env.orientation, img);
            }
        } else {
            let images = &mut self.images;
            self.core.sim.install(|| {
                images
                    .par_iter_mut()
                    .zip_eq(envs.par_iter())
                    .for_each(|(img, env)| {
                        render_camera_into(world, camera, &env.position, &env.orientation, img);
                    });
            });
        }
    }

    /// Min over each 2x2 pixel block of depth / far clip, misses as 1.0.
    fn pool_depth(&self, i: usize, out: &mut [T]) {
        let img = &self.images[i];
        let t_max = self.camera.t_max;
        for pr in 0..self.pooled_h {
            for pc in 0..self.pooled_w {
                let mut best = T::one();
                for dr in 0..2 {
                    for dc in 0..2 {
                        let idx = img.index(pc * 2 + dc, pr * 2 + dr);
                        let v = if img.valid[idx] {
                            img.depth[idx] / t_max
                        } else {
                            T::one()
                        };
                        if v < best {
                            best = v;
                        }
                    }
                }
                out[pr * self.pooled_w + pc] = best;
            }
        }
    }

    fn observe_row(&self, i: usize, out: &mut [T]) {
        let env = self.core.sim.store().env(i);
        let e = self.core.goals[i] - env.position;
        let (roll, pitch, yaw) = env.orientation.euler_angles();
        let dist = e.norm();
        let n_v = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), -yaw) * e;
        let dir = if dist > real::<T>(1e-9) {
            n_v / dist
        } else {
            Vector3::zeros()
        };
        out[0..3].copy_from_slice(dir.as_slice());
        out[3] = dist;
        out[4] = roll;
        out[5] = pitch;
        out[6..9].copy_from_slice(env.body_velocity().as_slice());
        out[9..12].copy_from_slice(env.angular_velocity.as_slice());
        let prev = &self.core.prev_action[i * 4..(i + 1) * 4];
        out[12..16].copy_from_slice(&squash_row(&self.core.cfg, prev));
        self.pool_depth(i, &mut out[16..]);
    }

    fn observe_ids(&self, ids: &[usize]) -> Vec<T> {
        let dim = self.observation_dim();
        let mut obs = vec![T::zero(); ids.len() * dim];
        for (row, &i) in obs.chunks_mut(dim).zip(ids) {
            self.observe_row(i, row);
        }
        obs
    }

    fn observe_all(&self) -> Vec<T> {
        let dim = self.observation_dim();
        let mut obs = vec![T::zero(); self.num_envs() * dim];
        for (i, row) in obs.chunks_mut(dim).enumerate() {
            self.observe_row(i, row);
        }
        obs
    }
}

impl<T: Real> VecTask<T> for NavigationTask<T> {
    fn num_envs(&self) -> usize {
        self.core.num_envs()
    }

    fn observation_dim(&self) -> usize {
        16 + self.pooled_w * self.pooled_h
    }

    fn action_dim(&self) -> usize {
        Self::ACTION_DIM
    }

    fn reset_all(&mut self) -> Vec<T> {
        let ids: Vec<usize> = (0..self.num_envs()).collect();
        self.reset_envs(&ids)
    }

    fn reset_envs(&mut self, ids: &[usize]) -> Vec<T> {
        self.reset_sampled(ids);
        for &i in ids {
            self.render_env(i);
        }
        self.observe_ids(ids)
    }

    fn step(&mut self, actions: &[T]) -> StepResult<T> {
        let invalid = self.core.sanitize_actions(actions);
        {
            let buf = &self.core.action_buf;
            let cfg = &self.core.cfg;
            let flags = &invalid;
            let world = &self.world;
            self.core.sim.step_with(Some(world), |i, env| {
                if flags[i] {
                    return None;
                }
                Some(velocity_level_command(cfg, &buf[i * 4..(i + 1) * 4], env))
            });
        }
        let settled = self.core.settle(&invalid);
        self.reset_sampled(&settled.reset_ids);
        self.render_all();
        let mut auto_reset = vec![false; self.num_envs()];
        for &i in &settled.reset_ids {
            auto_reset[i] = true;
        }
        StepResult {
            observations: self.observe_all(),
            rewards: settled.rewards,
            terminated: settled.terminated,
            truncated: settled.truncated,
            info: StepInfo {
                auto_reset,
                collided: settled.collided,
                invalid_action: invalid,
                distance_to_goal: settled.distance,
            },
        }
    }

    fn store(&self) -> &StateStore<T> {
        self.core.sim.store()
    }

    fn goals(&self) -> &[Vector3<T>] {
        &self.core.goals
    }
}
