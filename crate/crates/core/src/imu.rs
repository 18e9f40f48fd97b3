//! Simulated inertial measurement unit.
//!
//! The accelerometer reads specific force (net non-gravitational force over
//! mass) and the gyroscope body rates, both expressed in the sensor frame.
//! Each sample first advances a per-axis bias random walk, then adds white
//! noise, so bias variance grows linearly with the sample count. Noise is
//! drawn from dedicated per-environment streams: attaching an IMU never
//! perturbs the draws the physics reset path consumes.

use nalgebra::{UnitQuaternion, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::ImuConfig;
use crate::rand_util::normal;
use crate::{real, Real};

/// Keeps IMU streams disjoint from the state-store streams under the same
/// base seed.
const IMU_STREAM_SALT: u64 = 0x494D_5500_C0FF_EE01;

/// Noise magnitudes (per sample step) and mounting of one IMU.
#[derive(Debug, Clone, PartialEq)]
pub struct ImuParams<T: Real> {
    pub sigma_accel: Vector3<T>,
    pub sigma_gyro: Vector3<T>,
    pub sigma_bias_accel: Vector3<T>,
    pub sigma_bias_gyro: Vector3<T>,
    /// Body-from-sensor rotation.
    pub mount_rotation: UnitQuaternion<T>,
    /// Keep every k-th sample when decimating high-rate physics steps.
    pub decimation: usize,
}

impl<T: Real> ImuParams<T> {
    /// Perfect sensor: zero noise, zero bias walk, identity mount.
    pub fn noiseless() -> Self {
        Self {
            sigma_accel: Vector3::zeros(),
            sigma_gyro: Vector3::zeros(),
            sigma_bias_accel: Vector3::zeros(),
            sigma_bias_gyro: Vector3::zeros(),
            mount_rotation: UnitQuaternion::identity(),
            decimation: 1,
        }
    }

    /// MEMS-class noise figures, per millisecond sample step.
    pub fn consumer_grade() -> Self {
        Self {
            sigma_accel: Vector3::repeat(real(2.0e-2)),
            sigma_gyro: Vector3::repeat(real(1.5e-3)),
            sigma_bias_accel: Vector3::repeat(real(5.0e-5)),
            sigma_bias_gyro: Vector3::repeat(real(2.0e-6)),
            mount_rotation: UnitQuaternion::identity(),
            decimation: 1,
        }
    }

    /// An order cleaner than [`consumer_grade`](Self::consumer_grade).
    pub fn navigation_grade() -> Self {
        Self {
            sigma_accel: Vector3::repeat(real(2.0e-3)),
            sigma_gyro: Vector3::repeat(real(1.5e-4)),
            sigma_bias_accel: Vector3::repeat(real(5.0e-6)),
            sigma_bias_gyro: Vector3::repeat(real(2.0e-7)),
            mount_rotation: UnitQuaternion::identity(),
            decimation: 1,
        }
    }

    pub fn from_config(config: &ImuConfig<T>) -> Self {
        Self {
            sigma_accel: config.sigma_accel,
            sigma_gyro: config.sigma_gyro,
            sigma_bias_accel: config.sigma_bias_accel,
            sigma_bias_gyro: config.sigma_bias_gyro,
            mount_rotation: UnitQuaternion::from_euler_angles(
                config.mounting_rpy.x,
                config.mounting_rpy.y,
                config.mounting_rpy.z,
            ),
            decimation: config.decimation,
        }
    }
}

/// One accelerometer + gyroscope reading in the sensor frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImuSample<T: Real> {
    /// Specific force (m/s^2); reads +g upward in hover.
    pub accel: Vector3<T>,
    /// Angular rate (rad/s).
    pub gyro: Vector3<T>,
}

/// Per-environment bias walks and noise streams.
pub struct ImuState<T: Real> {
    bias_accel: Vec<Vector3<T>>,
    bias_gyro: Vec<Vector3<T>>,
    rngs: Vec<ChaCha8Rng>,
}

impl<T: Real> ImuState<T> {
    /// Seeding mirrors the state store: stream `i` belongs to global
    /// environment `env_offset + i`, independent of batch partitioning.
    pub fn allocate(num_envs: usize, base_seed: u64, env_offset: u64) -> Self {
        Self {
            bias_accel: vec![Vector3::zeros(); num_envs],
            bias_gyro: vec![Vector3::zeros(); num_envs],
            rngs: (0..num_envs)
                .map(|i| {
                    ChaCha8Rng::seed_from_u64(base_seed ^ IMU_STREAM_SALT ^ (env_offset + i as u64))
                })
                .collect(),
        }
    }

    pub fn num_envs(&self) -> usize {
        self.rngs.len()
    }

    /// Zero the bias walk of a freshly reset environment. The noise stream
    /// keeps its position so other environments are unaffected.
    pub fn reset_env(&mut self, env: usize) {
        self.bias_accel[env] = Vector3::zeros();
        self.bias_gyro[env] = Vector3::zeros();
    }

    pub fn bias_accel(&self, env: usize) -> &Vector3<T> {
        &self.bias_accel[env]
    }

    pub fn bias_gyro(&self, env: usize) -> &Vector3<T> {
        &self.bias_gyro[env]
    }
}

/// Draw one sample for environment `env`.
///
/// `specific_force_body` is the body-frame non-gravitational force over
/// mass (rotor thrust plus drag, divided by mass); `omega_body` the body
/// rates. Per sample, in fixed draw order, the bias walks advance first
/// (accelerometer xyz, gyro xyz), then white noise is added (same order),
/// all in sensor axes.
pub fn sample_imu<T: Real>(
    params: &ImuParams<T>,
    state: &mut ImuState<T>,
    env: usize,
    specific_force_body: &Vector3<T>,
    omega_body: &Vector3<T>,
) -> ImuSample<T> {
    let rng = &mut state.rngs[env];
    for k in 0..3 {
        state.bias_accel[env][k] += normal(rng, params.sigma_bias_accel[k]);
    }
    for k in 0..3 {
        state.bias_gyro[env][k] += normal(rng, params.sigma_bias_gyro[k]);
    }
    let f_sensor = params
        .mount_rotation
        .inverse_transform_vector(specific_force_body);
    let w_sensor = params.mount_rotation.inverse_transform_vector(omega_body);
    let mut accel = f_sensor + state.bias_accel[env];
    let mut gyro = w_sensor + state.bias_gyro[env];
    for k in 0..3 {
        accel[k] += normal(rng, params.sigma_accel[k]);
    }
    for k in 0..3 {
        gyro[k] += normal(rng, params.sigma_gyro[k]);
    }
    ImuSample { accel, gyro }
}
