//! Position-setpoint task: reach and hold a sampled goal position using
//! velocity or acceleration commands.

use nalgebra::Vector3;

use crate::config::{ConfigError, RobotConfig};
use crate::Real;

use super::base::{velocity_level_command, TaskCore};
use super::{StepInfo, StepResult, VecTask};
use crate::state::StateStore;

/// Observation row layout (17 values): goal position error in the world
/// frame (3), orientation quaternion as `i, j, k, w` (4), body-frame linear
/// velocity (3), body-frame angular velocity (3), previous normalized action
/// (4).
///
/// Action row layout (4 values in `[-1, 1]`): vehicle-frame linear velocity
/// or acceleration per [`ActionMode`](super::ActionMode), then yaw rate.
pub struct PositionTask<T: Real> {
    core: TaskCore<T>,
}

impl<T: Real> PositionTask<T> {
    pub const OBSERVATION_DIM: usize = 17;
    pub const ACTION_DIM: usize = 4;

    /// `seed` fixes all draws; `env_offset` names this batch's first global
    /// environment index so partitioned batches reproduce one large batch;
    /// `workers` as in [`SimOptions`](super::SimOptions).
    pub fn new(
        robot: RobotConfig<T>,
        cfg: super::TaskConfig<T>,
        num_envs: usize,
        seed: u64,
        env_offset: u64,
        workers: usize,
    ) -> Result<Self, ConfigError> {
        let core = TaskCore::new(
            robot,
            cfg,
            Self::ACTION_DIM,
            num_envs,
            seed,
            env_offset,
            workers,
        )?;
        Ok(Self { core })
    }

    fn observe_row(&self, i: usize, out: &mut [T]) {
        let env = self.core.sim.store().env(i);
        let e = self.core.goals[i] - env.position;
        out[0..3].copy_from_slice(e.as_slice());
        out[3..7].copy_from_slice(env.orientation.as_ref().coords.as_slice());
        out[7..10].copy_from_slice(env.body_velocity().as_slice());
        out[10..13].copy_from_slice(env.angular_velocity.as_slice());
        out[13..17].copy_from_slice(&self.core.prev_action[i * 4..(i + 1) * 4]);
    }

    fn observe_ids(&self, ids: &[usize]) -> Vec<T> {
        let mut obs = vec![T::zero(); ids.len() * Self::OBSERVATION_DIM];
        for (row, &i) in obs.chunks_mut(Self::OBSERVATION_DIM).zip(ids) {
            self.observe_row(i, row);
        }
        obs
    }

    fn observe_all(&self) -> Vec<T> {
        let mut obs = vec![T::zero(); self.num_envs() * Self::OBSERVATION_DIM];
        for (i, row) in obs.chunks_mut(Self::OBSERVATION_DIM).enumerate() {
            self.observe_row(i, row);
        }
        obs
    }
}

impl<T: Real> VecTask<T> for PositionTask<T> {
    fn num_envs(&self) -> usize {
        self.core.num_envs()
    }

    fn observation_dim(&self) -> usize {
        Self::OBSERVATION_DIM
    }

    fn action_dim(&self) -> usize {
        Self::ACTION_DIM
    }

    fn reset_all(&mut self) -> Vec<T> {
        let ids: Vec<usize> = (0..self.num_envs()).collect();
        self.reset_envs(&ids)
    }

    fn reset_envs(&mut self, ids: &[usize]) -> Vec<T> {
        self.core.reset_plain(ids);
        self.observe_ids(ids)
    }

    fn step(&mut self, actions: &[T]) -> StepResult<T> {
        let invalid = self.core.sanitize_actions(actions);
        let buf = &self.core.action_buf;
        let cfg = &self.core.cfg;
        let flags = &invalid;
        self.core.sim.step_with(None, |i, env| {
            if flags[i] {
                return None;
            }
            Some(velocity_level_command(cfg, &buf[i * 4..(i + 1) * 4], env))
        });
        let settled = self.core.settle(&invalid);
        self.core.reset_plain(&settled.reset_ids);
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
