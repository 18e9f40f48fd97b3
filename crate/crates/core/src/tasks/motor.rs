//! Per-motor thrust task: actions drive individual rotor thrusts directly,
//! bypassing the control cascade and allocation.

use nalgebra::Vector3;

use crate::config::{ConfigError, RobotConfig};
use crate::control::ControlCommand;
use crate::{real, Real};

use super::base::TaskCore;
use super::{rotation_to_6d, StepInfo, StepResult, VecTask};
use crate::state::StateStore;

/// Observation row layout (15 values): goal position error in the world
/// frame (3), the first two rotation matrix columns (6), world-frame linear
/// velocity (3), body-frame angular velocity (3).
///
/// Action row layout (one value per motor in `[-1, 1]`): `-1` commands zero
/// thrust, `+1` the motor's maximum thrust, linear in between.
pub struct MotorTask<T: Real> {
    core: TaskCore<T>,
    max_thrusts: Vec<T>,
}

impl<T: Real> MotorTask<T> {
    pub const OBSERVATION_DIM: usize = 15;

    /// Parameters as in [`PositionTask::new`](super::PositionTask::new);
    /// the action width equals the robot's motor count.
    pub fn new(
        robot: RobotConfig<T>,
        cfg: super::TaskConfig<T>,
        num_envs: usize,
        seed: u64,
        env_offset: u64,
        workers: usize,
    ) -> Result<Self, ConfigError> {
        let action_dim = robot.motors.len();
        let max_thrusts: Vec<T> = robot.motors.iter().map(|m| m.max_thrust()).collect();
        let core = TaskCore::new(robot, cfg, action_dim, num_envs, seed, env_offset, workers)?;
        Ok(Self { core, max_thrusts })
    }

    fn observe_row(&self, i: usize, out: &mut [T]) {
        let env = self.core.sim.store().env(i);
        let e = self.core.goals[i] - env.position;
        out[0..3].copy_from_slice(e.as_slice());
        let r6 = rotation_to_6d(env.orientation.to_rotation_matrix().matrix());
        out[3..9].copy_from_slice(&r6);
        out[9..12].copy_from_slice(env.velocity.as_slice());
        out[12..15].copy_from_slice(env.angular_velocity.as_slice());
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

impl<T: Real> VecTask<T> for MotorTask<T> {
    fn num_envs(&self) -> usize {
        self.core.num_envs()
    }

    fn observation_dim(&self) -> usize {
        Self::OBSERVATION_DIM
    }

    fn action_dim(&self) -> usize {
        self.max_thrusts.len()
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
        let ad = self.max_thrusts.len();
        let buf = &self.core.action_buf;
        let max = &self.max_thrusts;
        let flags = &invalid;
        let half = real::<T>(0.5);
        self.core.sim.step_with(None, |i, _env| {
            if flags[i] {
                return None;
            }
            let row = &buf[i * ad..(i + 1) * ad];
            let thrusts = row
                .iter()
                .zip(max)
                .map(|(&a, &hi)| (a + T::one()) * half * hi)
                .collect();
            Some(ControlCommand::MotorThrusts(thrusts))
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
