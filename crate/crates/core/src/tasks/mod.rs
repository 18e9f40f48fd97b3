//! Vectorized task environments with a reset/step API.
//!
//! A task owns a [`Simulator`] batch plus goals and episode bookkeeping, and
//! exposes the familiar vectorized reinforcement-learning contract: `step`
//! takes one action row per environment and returns observations, rewards
//! and termination flags; environments that finish are reset automatically
//! and report the post-reset observation. Everything is deterministic in the
//! seed and independent of batch partitioning and worker count.
//!
//! Three task families are provided: [`PositionTask`] (velocity or
//! acceleration commands toward a position setpoint), [`NavigationTask`]
//! (velocity commands through an obstacle world with a depth camera in the
//! observation) and [`MotorTask`] (per-rotor thrust commands).

mod base;
mod engine;
mod motor;
mod navigation;
mod position;

use nalgebra::{Matrix3, Vector3};
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::config::{load_toml, CameraConfig, ConfigError};
use crate::motors::MotorIntegrator;
use crate::state::StateStore;
use crate::{real, Real};

pub use engine::{SimOptions, Simulator};
pub use motor::MotorTask;
pub use navigation::NavigationTask;
pub use position::PositionTask;

/// Which task family a config describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    #[default]
    Position,
    Navigation,
    Motor,
}

/// Interpretation of the first three action components in the velocity-level
/// tasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionMode {
    #[default]
    Velocity,
    Acceleration,
}

/// Weights of the per-step reward
/// `progress * (prev_dist - dist) - omega * |rate| - action_rate * |da|
///  + goal_bonus * [dist < goal_radius] - collision_penalty * [collision]`.
///
/// The action-rate term uses the normalized action difference, so the
/// defaults behave the same across action modes. With the defaults the
/// collision penalty dominates any single-step shaping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    default,
    bound(serialize = "T: Serialize", deserialize = "T: DeserializeOwned")
)]
pub struct RewardWeights<T: Real> {
    pub progress: T,
    pub omega: T,
    pub action_rate: T,
    pub goal_bonus: T,
    /// Distance (m) under which the goal bonus applies.
    pub goal_radius: T,
    pub collision_penalty: T,
}

impl<T: Real> Default for RewardWeights<T> {
    fn default() -> Self {
        Self {
            progress: real(10.0),
            omega: real(0.02),
            action_rate: real(0.05),
            goal_bonus: real(2.0),
            goal_radius: real(0.2),
            collision_penalty: real(20.0),
        }
    }
}

/// The documented default per-step reward; see [`RewardWeights`].
pub fn shaped_reward<T: Real>(
    weights: &RewardWeights<T>,
    prev_dist: T,
    dist: T,
    omega_norm: T,
    action_delta: T,
    collided: bool,
) -> T {
    let mut r = weights.progress * (prev_dist - dist)
        - weights.omega * omega_norm
        - weights.action_rate * action_delta;
    if dist < weights.goal_radius {
        r += weights.goal_bonus;
    }
    if collided {
        r -= weights.collision_penalty;
    }
    r
}

/// Task description: family, action mapping, episode bookkeeping, reset and
/// goal ranges, reward weights and the optional camera attachment.
///
/// All fields have working defaults, so a TOML file only needs the ones it
/// changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    default,
    bound(serialize = "T: Serialize", deserialize = "T: DeserializeOwned")
)]
pub struct TaskConfig<T: Real> {
    pub name: TaskKind,
    pub action_mode: ActionMode,
    /// Steps per episode before truncation.
    pub episode_length: usize,
    /// Duration of one control step (s).
    pub control_dt: T,
    /// Physics substeps per control step.
    pub physics_substeps: usize,
    pub motor_integrator: MotorIntegrator,
    pub gravity: T,
    /// World box; leaving it terminates the episode as a collision.
    pub bounds_min: Vector3<T>,
    pub bounds_max: Vector3<T>,
    /// Reset draw ranges; zero width pins the value exactly.
    pub spawn_position_min: Vector3<T>,
    pub spawn_position_max: Vector3<T>,
    /// Reset attitude range as roll/pitch/yaw (rad).
    pub spawn_rpy_min: Vector3<T>,
    pub spawn_rpy_max: Vector3<T>,
    pub spawn_velocity_min: Vector3<T>,
    pub spawn_velocity_max: Vector3<T>,
    pub spawn_omega_min: Vector3<T>,
    pub spawn_omega_max: Vector3<T>,
    /// Goal draw range.
    pub goal_min: Vector3<T>,
    pub goal_max: Vector3<T>,
    /// Minimum start-to-goal distance (m) enforced by the navigation task.
    pub goal_separation: T,
    /// Clearance margin (m) beyond the collision radius for sampled spawns
    /// and goals in the navigation task.
    pub goal_clearance: T,
    /// Velocity command bound (m/s); actions scale linearly into it.
    pub max_velocity: T,
    /// Acceleration command bound (m/s^2).
    pub max_acceleration: T,
    /// Yaw-rate command bound (rad/s).
    pub max_yaw_rate: T,
    pub reward: RewardWeights<T>,
    /// Depth camera for the navigation observation; a 32x24 forward camera
    /// is used when omitted.
    pub camera: Option<CameraConfig<T>>,
}

impl<T: Real> Default for TaskConfig<T> {
    fn default() -> Self {
        Self {
            name: TaskKind::default(),
            action_mode: ActionMode::default(),
            episode_length: 500,
            control_dt: real(0.01),
            physics_substeps: 2,
            motor_integrator: MotorIntegrator::default(),
            gravity: real(crate::control::GRAVITY),
            bounds_min: Vector3::repeat(real(-10.0)),
            bounds_max: Vector3::repeat(real(10.0)),
            spawn_position_min: Vector3::zeros(),
            spawn_position_max: Vector3::zeros(),
            spawn_rpy_min: Vector3::zeros(),
            spawn_rpy_max: Vector3::zeros(),
            spawn_velocity_min: Vector3::zeros(),
            spawn_velocity_max: Vector3::zeros(),
            spawn_omega_min: Vector3::zeros(),
            spawn_omega_max: Vector3::zeros(),
            goal_min: Vector3::zeros(),
            goal_max: Vector3::zeros(),
            goal_separation: real(1.0),
            goal_clearance: real(0.2),
            max_velocity: real(2.0),
            max_acceleration: real(5.0),
            max_yaw_rate: real(1.5),
            reward: RewardWeights::default(),
            camera: None,
        }
    }
}

impl<T: Real> TaskConfig<T> {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |field: &str, message: &str| ConfigError::Validation {
            field: field.into(),
            message: message.into(),
        };
        if self.episode_length == 0 {
            return Err(invalid("episode_length", "must be at least 1"));
        }
        if self.control_dt <= T::zero() {
            return Err(invalid("control_dt", "must be positive"));
        }
        if self.physics_substeps == 0 {
            return Err(invalid("physics_substeps", "must be at least 1"));
        }
        let ranges = [
            ("bounds", &self.bounds_min, &self.bounds_max),
            (
                "spawn_position",
                &self.spawn_position_min,
                &self.spawn_position_max,
            ),
            ("spawn_rpy", &self.spawn_rpy_min, &self.spawn_rpy_max),
            (
                "spawn_velocity",
                &self.spawn_velocity_min,
                &self.spawn_velocity_max,
            ),
            ("spawn_omega", &self.spawn_omega_min, &self.spawn_omega_max),
            ("goal", &self.goal_min, &self.goal_max),
        ];
        for (name, min, max) in ranges {
            if (0..3).any(|i| min[i] > max[i]) {
                return Err(invalid(name, "min must be <= max per axis"));
            }
        }
        for (name, value) in [
            ("max_velocity", self.max_velocity),
            ("max_acceleration", self.max_acceleration),
            ("max_yaw_rate", self.max_yaw_rate),
        ] {
            if value <= T::zero() {
                return Err(invalid(name, "must be positive"));
            }
        }
        for (name, value) in [
            ("goal_separation", self.goal_separation),
            ("goal_clearance", self.goal_clearance),
            ("reward.progress", self.reward.progress),
            ("reward.omega", self.reward.omega),
            ("reward.action_rate", self.reward.action_rate),
            ("reward.goal_bonus", self.reward.goal_bonus),
            ("reward.goal_radius", self.reward.goal_radius),
            ("reward.collision_penalty", self.reward.collision_penalty),
        ] {
            if value < T::zero() {
                return Err(invalid(name, "must be >= 0"));
            }
        }
        Ok(())
    }
}

/// Load and validate a task config file.
pub fn load_task_config<T: Real + DeserializeOwned>(
    path: impl AsRef<std::path::Path>,
) -> Result<TaskConfig<T>, ConfigError> {
    let config: TaskConfig<T> = load_toml(path)?;
    config.validate()?;
    Ok(config)
}

/// First two columns of a rotation matrix, a continuous 6-number attitude
/// encoding.
pub fn rotation_to_6d<T: Real>(r: &Matrix3<T>) -> [T; 6] {
    [
        r[(0, 0)],
        r[(1, 0)],
        r[(2, 0)],
        r[(0, 1)],
        r[(1, 1)],
        r[(2, 1)],
    ]
}

/// Batched outcome of one control step, row-major over environments.
#[derive(Debug, Clone, PartialEq)]
pub struct StepResult<T: Real> {
    /// `num_envs * observation_dim` values, one row per environment. Rows of
    /// environments that finished this step hold the post-reset observation.
    pub observations: Vec<T>,
    pub rewards: Vec<T>,
    /// Episode ended by collision, divergence or an invalid action.
    pub terminated: Vec<bool>,
    /// Episode ended by the step limit alone.
    pub truncated: Vec<bool>,
    pub info: StepInfo<T>,
}

/// Per-environment diagnostics accompanying a [`StepResult`].
#[derive(Debug, Clone, PartialEq)]
pub struct StepInfo<T: Real> {
    /// The environment was auto-reset after this step; its observation row
    /// is the post-reset one.
    pub auto_reset: Vec<bool>,
    /// Collision flag observed this step (bounds exit or scene contact).
    pub collided: Vec<bool>,
    /// The action row contained a non-finite value; physics was skipped and
    /// the environment terminated with the collision penalty.
    pub invalid_action: Vec<bool>,
    /// Distance to goal (m) after the step, before any auto-reset.
    pub distance_to_goal: Vec<T>,
}

/// Vectorized reset/step contract shared by all task families.
pub trait VecTask<T: Real> {
    fn num_envs(&self) -> usize;
    fn observation_dim(&self) -> usize;
    fn action_dim(&self) -> usize;
    /// Reset every environment and return the full observation batch.
    fn reset_all(&mut self) -> Vec<T>;
    /// Reset the listed environments only, leaving all other environments'
    /// state and random streams untouched. Returns the observation rows of
    /// the reset environments in the given order.
    fn reset_envs(&mut self, ids: &[usize]) -> Vec<T>;
    /// Advance one control step; `actions` is row-major
    /// `num_envs * action_dim` with components in `[-1, 1]`.
    fn step(&mut self, actions: &[T]) -> StepResult<T>;
    /// The batched vehicle state behind the task.
    fn store(&self) -> &StateStore<T>;
    /// Current goal positions (world frame).
    fn goals(&self) -> &[Vector3<T>];
}
