//! Episode state shared by the task families: goals, previous actions,
//! step counters and the common reward/termination bookkeeping.

use nalgebra::{UnitQuaternion, Vector3};

use crate::config::{BoundsConfig, ConfigError, RobotConfig};
use crate::control::ControlCommand;
use crate::state::{sample_box, EnvState, ResetSpec};
use crate::Real;

use super::engine::{SimOptions, Simulator};
use super::{shaped_reward, ActionMode, TaskConfig};

/// Map a normalized `[vx, vy, vz, yaw-rate]` action row to a cascade
/// command. Linear components are vehicle-frame (yaw-only rotation of the
/// body frame) and get rotated into the world by the current yaw; the yaw
/// setpoint advances from the current yaw by one control step of the
/// commanded rate.
pub(super) fn velocity_level_command<T: Real>(
    cfg: &TaskConfig<T>,
    row: &[T],
    env: &EnvState<T>,
) -> ControlCommand<T> {
    let yaw = env.orientation.euler_angles().2;
    let to_world = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), yaw);
    let xyz = Vector3::new(row[0], row[1], row[2]);
    let yaw_d = yaw + row[3] * cfg.max_yaw_rate * cfg.control_dt;
    match cfg.action_mode {
        ActionMode::Velocity => ControlCommand::Velocity {
            velocity: to_world * (xyz * cfg.max_velocity),
            yaw: yaw_d,
        },
        ActionMode::Acceleration => ControlCommand::Acceleration {
            acceleration: to_world * (xyz * cfg.max_acceleration),
            yaw: yaw_d,
        },
    }
}

/// Physical command values of a normalized action row: three linear
/// components scaled by the mode's bound, then the yaw rate.
pub(super) fn squash_row<T: Real>(cfg: &TaskConfig<T>, row: &[T]) -> [T; 4] {
    let lin = match cfg.action_mode {
        ActionMode::Velocity => cfg.max_velocity,
        ActionMode::Acceleration => cfg.max_acceleration,
    };
    [
        row[0] * lin,
        row[1] * lin,
        row[2] * lin,
        row[3] * cfg.max_yaw_rate,
    ]
}

/// Termination and reward summary of one step, before auto-resets.
pub(super) struct Settled<T: Real> {
    pub rewards: Vec<T>,
    pub terminated: Vec<bool>,
    pub truncated: Vec<bool>,
    pub collided: Vec<bool>,
    pub distance: Vec<T>,
    /// Environments to auto-reset (terminated or truncated).
    pub reset_ids: Vec<usize>,
}

/// Simulator plus per-environment episode bookkeeping.
pub(super) struct TaskCore<T: Real> {
    pub sim: Simulator<T>,
    pub cfg: TaskConfig<T>,
    pub reset_spec: ResetSpec<T>,
    pub goals: Vec<Vector3<T>>,
    /// Last accepted action rows, normalized to `[-1, 1]`.
    pub prev_action: Vec<T>,
    pub prev_dist: Vec<T>,
    pub steps: Vec<usize>,
    pub action_dim: usize,
    /// Clamped copy of the incoming action batch.
    pub action_buf: Vec<T>,
}

impl<T: Real> TaskCore<T> {
    pub fn new(
        robot: RobotConfig<T>,
        cfg: TaskConfig<T>,
        action_dim: usize,
        num_envs: usize,
        seed: u64,
        env_offset: u64,
        workers: usize,
    ) -> Result<Self, ConfigError> {
        cfg.validate()?;
        let options = SimOptions {
            gravity: cfg.gravity,
            control_dt: cfg.control_dt,
            substeps: cfg.physics_substeps,
            integrator: cfg.motor_integrator,
            bounds: BoundsConfig {
                min: cfg.bounds_min,
                max: cfg.bounds_max,
            },
            seed,
            env_offset,
            workers,
        };
        let sim = Simulator::new(robot, num_envs, options)?;
        let reset_spec = ResetSpec::default()
            .with_position_range(cfg.spawn_position_min, cfg.spawn_position_max)
            .with_attitude_range(cfg.spawn_rpy_min, cfg.spawn_rpy_max)
            .with_velocity_range(cfg.spawn_velocity_min, cfg.spawn_velocity_max)
            .with_omega_range(cfg.spawn_omega_min, cfg.spawn_omega_max);
        Ok(Self {
            sim,
            cfg,
            reset_spec,
            goals: vec![Vector3::zeros(); num_envs],
            prev_action: vec![T::zero(); num_envs * action_dim],
            prev_dist: vec![T::zero(); num_envs],
            steps: vec![0; num_envs],
            action_dim,
            action_buf: vec![T::zero(); num_envs * action_dim],
        })
    }

    pub fn num_envs(&self) -> usize {
        self.sim.num_envs()
    }

    /// Draw a goal for one environment from its own stream (three draws).
    pub fn sample_goal(&mut self, i: usize) -> Vector3<T> {
        sample_box(
            self.sim.store_mut().rng_mut(i),
            &self.cfg.goal_min,
            &self.cfg.goal_max,
        )
    }

    /// Zero the previous action and restart the episode counters of a
    /// freshly reset environment. The goal must already be in place.
    pub fn restart_episode(&mut self, i: usize) {
        let ad = self.action_dim;
        self.prev_action[i * ad..(i + 1) * ad].fill(T::zero());
        self.prev_dist[i] = (self.goals[i] - self.sim.store().env(i).position).norm();
        self.steps[i] = 0;
    }

    /// Reset the listed environments with a plain draw (no obstacle-aware
    /// rejection) and a fresh goal each.
    pub fn reset_plain(&mut self, ids: &[usize]) {
        self.sim.reset_envs(ids, &self.reset_spec);
        for &i in ids {
            self.goals[i] = self.sample_goal(i);
            self.restart_episode(i);
        }
    }

    /// Copy `actions` into the clamp buffer and flag rows containing
    /// non-finite values. Finite components are clamped to `[-1, 1]`.
    pub fn sanitize_actions(&mut self, actions: &[T]) -> Vec<bool> {
        let n = self.num_envs();
        let ad = self.action_dim;
        assert_eq!(
            actions.len(),
            n * ad,
            "expected {n} rows of {ad} action values"
        );
        let mut invalid = vec![false; n];
        for i in 0..n {
            let row = &actions[i * ad..(i + 1) * ad];
            if row.iter().any(|a| !a.is_finite()) {
                invalid[i] = true;
                continue;
            }
            for (dst, &a) in self.action_buf[i * ad..(i + 1) * ad].iter_mut().zip(row) {
                *dst = nalgebra::clamp(a, -T::one(), T::one());
            }
        }
        invalid
    }

    /// Rewards, termination and episode bookkeeping after the physics step.
    ///
    /// Invalid-action and diverged environments terminate with the bare
    /// collision penalty; everything else gets the shaped reward. Updates
    /// `prev_action` (valid rows only), `prev_dist` and the step counters.
    pub fn settle(&mut self, invalid: &[bool]) -> Settled<T> {
        let n = self.num_envs();
        let ad = self.action_dim;
        let weights = self.cfg.reward.clone();
        let limit = self.cfg.episode_length;
        let mut out = Settled {
            rewards: vec![T::zero(); n],
            terminated: vec![false; n],
            truncated: vec![false; n],
            collided: vec![false; n],
            distance: vec![T::zero(); n],
            reset_ids: Vec::new(),
        };
        for (i, &bad_action) in invalid.iter().enumerate() {
            let env = self.sim.store().env(i);
            let dist = (self.goals[i] - env.position).norm();
            let collided = env.collided;
            let broken = bad_action || !self.sim.healthy()[i];
            out.rewards[i] = if broken {
                -weights.collision_penalty
            } else {
                let mut delta_sq = T::zero();
                for k in 0..ad {
                    let d = self.action_buf[i * ad + k] - self.prev_action[i * ad + k];
                    delta_sq += d * d;
                }
                shaped_reward(
                    &weights,
                    self.prev_dist[i],
                    dist,
                    env.angular_velocity.norm(),
                    delta_sq.sqrt(),
                    collided,
                )
            };
            out.terminated[i] = collided || broken;
            self.steps[i] += 1;
            out.truncated[i] = !out.terminated[i] && self.steps[i] >= limit;
            out.collided[i] = collided;
            out.distance[i] = dist;
            self.prev_dist[i] = dist;
            if !bad_action {
                for k in 0..ad {
                    self.prev_action[i * ad + k] = self.action_buf[i * ad + k];
                }
            }
            if out.terminated[i] || out.truncated[i] {
                out.reset_ids.push(i);
            }
        }
        out
    }
}
