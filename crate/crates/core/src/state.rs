//! Batched simulation state.
//!
//! All per-environment state lives in one preallocated store, laid out
//! environment-major so a step can hand disjoint `&mut` slices to worker
//! threads. Every environment owns a counter-seeded RNG stream keyed by its
//! global index, which makes results independent of batch partitioning: the
//! same environment produces bitwise identical draws whether it is stepped
//! inside a large batch, alone, or on a different number of threads.

use nalgebra::{UnitQuaternion, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::RobotConfig;
use crate::control::AllocationMatrix;
use crate::motors::rpm_for_thrust;
use crate::rand_util::uniform;
use crate::Real;

/// Kinematic state and rotor speeds of one environment. Linear quantities
/// are world frame; `angular_velocity` is body frame.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvState<T: Real> {
    pub position: Vector3<T>,
    pub orientation: UnitQuaternion<T>,
    /// World-frame linear velocity (m/s).
    pub velocity: Vector3<T>,
    /// Body-frame angular velocity (rad/s).
    pub angular_velocity: Vector3<T>,
    /// Current rotor speeds (RPM), one per motor.
    pub rpm: Vec<T>,
    pub collided: bool,
}

impl<T: Real> EnvState<T> {
    fn rest(num_motors: usize) -> Self {
        Self {
            position: Vector3::zeros(),
            orientation: UnitQuaternion::identity(),
            velocity: Vector3::zeros(),
            angular_velocity: Vector3::zeros(),
            rpm: vec![T::zero(); num_motors],
            collided: false,
        }
    }

    /// Linear velocity expressed in the body frame.
    pub fn body_velocity(&self) -> Vector3<T> {
        self.orientation.inverse_transform_vector(&self.velocity)
    }
}

/// Initial rotor speeds applied on reset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialRpm<T: Real> {
    /// The same speed (RPM) on every rotor.
    Constant(T),
    /// Speeds that balance gravity for this robot's layout.
    HoverTrim,
}

/// Uniform ranges drawn from on reset. Each range may be zero width, in
/// which case the value is exact but the RNG still advances, so streams
/// stay aligned across specs.
///
/// Draw order per environment is fixed: position (3 draws), roll/pitch/yaw
/// (3), velocity (3), angular velocity (3).
#[derive(Debug, Clone, PartialEq)]
pub struct ResetSpec<T: Real> {
    pub position_min: Vector3<T>,
    pub position_max: Vector3<T>,
    /// Attitude range as roll/pitch/yaw (rad).
    pub rpy_min: Vector3<T>,
    pub rpy_max: Vector3<T>,
    pub velocity_min: Vector3<T>,
    pub velocity_max: Vector3<T>,
    pub omega_min: Vector3<T>,
    pub omega_max: Vector3<T>,
    pub initial_rpm: InitialRpm<T>,
}

impl<T: Real> Default for ResetSpec<T> {
    fn default() -> Self {
        Self::at_position(Vector3::zeros())
    }
}

impl<T: Real> ResetSpec<T> {
    /// Rest at an exact pose: identity attitude, zero twist, hover-trim rotors.
    pub fn at_position(position: Vector3<T>) -> Self {
        Self {
            position_min: position,
            position_max: position,
            rpy_min: Vector3::zeros(),
            rpy_max: Vector3::zeros(),
            velocity_min: Vector3::zeros(),
            velocity_max: Vector3::zeros(),
            omega_min: Vector3::zeros(),
            omega_max: Vector3::zeros(),
            initial_rpm: InitialRpm::HoverTrim,
        }
    }

    pub fn with_position_range(mut self, min: Vector3<T>, max: Vector3<T>) -> Self {
        self.position_min = min;
        self.position_max = max;
        self
    }

    pub fn with_attitude_range(mut self, rpy_min: Vector3<T>, rpy_max: Vector3<T>) -> Self {
        self.rpy_min = rpy_min;
        self.rpy_max = rpy_max;
        self
    }

    pub fn with_velocity_range(mut self, min: Vector3<T>, max: Vector3<T>) -> Self {
        self.velocity_min = min;
        self.velocity_max = max;
        self
    }

    pub fn with_omega_range(mut self, min: Vector3<T>, max: Vector3<T>) -> Self {
        self.omega_min = min;
        self.omega_max = max;
        self
    }

    pub fn with_initial_rpm(mut self, initial_rpm: InitialRpm<T>) -> Self {
        self.initial_rpm = initial_rpm;
        self
    }
}

/// Preallocated state for a batch of environments.
pub struct StateStore<T: Real> {
    envs: Vec<EnvState<T>>,
    rngs: Vec<ChaCha8Rng>,
    hover_rpm: Vec<T>,
    base_seed: u64,
    env_offset: u64,
}

impl<T: Real> StateStore<T> {
    /// Allocate `num_envs` environments at rest.
    ///
    /// `base_seed` fixes the whole run; `env_offset` is the global index of
    /// this store's first environment, so a batch split across several
    /// stores reproduces the draws of one large store.
    pub fn allocate(
        robot: &RobotConfig<T>,
        gravity: T,
        num_envs: usize,
        base_seed: u64,
        env_offset: u64,
    ) -> Self {
        let allocation = AllocationMatrix::new(&robot.motors);
        let hover_rpm: Vec<T> = allocation
            .hover_thrusts(robot.mass, gravity)
            .iter()
            .zip(&robot.motors)
            .map(|(&thrust, m)| rpm_for_thrust(thrust, m.thrust_constant))
            .collect();
        let envs = vec![EnvState::rest(robot.motors.len()); num_envs];
        let rngs = (0..num_envs)
            .map(|i| ChaCha8Rng::seed_from_u64(base_seed ^ (env_offset + i as u64)))
            .collect();
        Self {
            envs,
            rngs,
            hover_rpm,
            base_seed,
            env_offset,
        }
    }

    pub fn num_envs(&self) -> usize {
        self.envs.len()
    }

    pub fn num_motors(&self) -> usize {
        self.hover_rpm.len()
    }

    pub fn base_seed(&self) -> u64 {
        self.base_seed
    }

    pub fn env_offset(&self) -> u64 {
        self.env_offset
    }

    /// Rotor speeds that balance gravity, as computed at allocation time.
    pub fn hover_rpm(&self) -> &[T] {
        &self.hover_rpm
    }

    pub fn env(&self, i: usize) -> &EnvState<T> {
        &self.envs[i]
    }

    pub fn env_mut(&mut self, i: usize) -> &mut EnvState<T> {
        &mut self.envs[i]
    }

    pub fn envs(&self) -> &[EnvState<T>] {
        &self.envs
    }

    pub fn envs_mut(&mut self) -> &mut [EnvState<T>] {
        &mut self.envs
    }

    pub fn rng_mut(&mut self, i: usize) -> &mut ChaCha8Rng {
        &mut self.rngs[i]
    }

    /// Mutable views of states and RNGs for zipped per-environment work.
    pub fn split_mut(&mut self) -> (&mut [EnvState<T>], &mut [ChaCha8Rng]) {
        (&mut self.envs, &mut self.rngs)
    }

    /// Redraw the listed environments from `spec`, leaving all others
    /// untouched. Each environment consumes draws only from its own stream.
    pub fn reset_envs(&mut self, indices: &[usize], spec: &ResetSpec<T>) {
        for &i in indices {
            let rng = &mut self.rngs[i];
            let position = sample_box(rng, &spec.position_min, &spec.position_max);
            let rpy = sample_box(rng, &spec.rpy_min, &spec.rpy_max);
            let velocity = sample_box(rng, &spec.velocity_min, &spec.velocity_max);
            let omega = sample_box(rng, &spec.omega_min, &spec.omega_max);
            let env = &mut self.envs[i];
            env.position = position;
            env.orientation = UnitQuaternion::from_euler_angles(rpy.x, rpy.y, rpy.z);
            env.velocity = velocity;
            env.angular_velocity = omega;
            match spec.initial_rpm {
                InitialRpm::Constant(r) => env.rpm.iter_mut().for_each(|v| *v = r),
                InitialRpm::HoverTrim => env.rpm.copy_from_slice(&self.hover_rpm),
            }
            env.collided = false;
        }
    }

    pub fn reset_all(&mut self, spec: &ResetSpec<T>) {
        let indices: Vec<usize> = (0..self.num_envs()).collect();
        self.reset_envs(&indices, spec);
    }

    /// Rescale every orientation back to unit norm and report environments
    /// whose quaternion had drifted beyond recovery (non-finite or norm off
    /// by more than 0.5); those are left untouched for the caller to reset.
    pub fn renormalize_orientations(&mut self) -> Vec<usize> {
        let half = crate::real::<T>(0.5);
        let mut pathological = Vec::new();
        for (i, env) in self.envs.iter_mut().enumerate() {
            let q = env.orientation.as_ref();
            let norm = q.norm();
            if !norm.is_finite() || (norm - T::one()).abs() > half {
                pathological.push(i);
                continue;
            }
            env.orientation = UnitQuaternion::new_normalize(*q);
        }
        pathological
    }
}

/// Three uniform draws forming a point in the axis-aligned box `[min, max]`.
pub(crate) fn sample_box<T: Real>(
    rng: &mut ChaCha8Rng,
    min: &Vector3<T>,
    max: &Vector3<T>,
) -> Vector3<T> {
    Vector3::new(
        uniform(rng, min.x, max.x),
        uniform(rng, min.y, max.y),
        uniform(rng, min.z, max.z),
    )
}
