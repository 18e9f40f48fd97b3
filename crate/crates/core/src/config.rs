//! Robot, environment and sensor configuration files.
//!
//! Configs are TOML documents with SI units throughout and angles in
//! radians. This is the only module that reads input files; everything it
//! returns is validated, immutable and safe to share across threads.

use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use serde::{de::DeserializeOwned, Deserialize, Serialize};
use thiserror::Error;

use crate::{real, Real};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("io error reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid value for `{field}`: {message}")]
    Validation { field: String, message: String },
}

fn invalid(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Validation {
        field: field.to_string(),
        message: message.into(),
    }
}

/// Parse any TOML config file into a serde-deserializable type.
pub fn load_toml<C: DeserializeOwned>(path: impl AsRef<Path>) -> Result<C, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    toml::from_str(&text).map_err(|e| ConfigError::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Control abstraction level a robot is driven at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ControlMode {
    #[default]
    Position,
    Velocity,
    Acceleration,
    AttitudeThrust,
    RateThrust,
    BodyWrench,
    Motor,
}

/// Per-axis controller weights. Keys in config files follow the common
/// controller notation: `k_x` (position), `k_v` (velocity), `k_R`
/// (attitude), `k_omega` (body rate).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: DeserializeOwned"))]
pub struct ControlGains<T: Real> {
    #[serde(rename = "k_x")]
    pub position: Vector3<T>,
    #[serde(rename = "k_v")]
    pub velocity: Vector3<T>,
    #[serde(rename = "k_R")]
    pub attitude: Vector3<T>,
    #[serde(rename = "k_omega")]
    pub rate: Vector3<T>,
}

impl<T: Real> ControlGains<T> {
    /// Default tuning: translational gains scale with mass so the commanded
    /// acceleration is platform independent; attitude gains are absolute and
    /// sized for quad-scale inertias. The rate gain keeps the inner-loop
    /// crossover below the rotor-lag pole; pushing it higher rings the
    /// rotors, and the square-law thrust map rectifies that ringing into a
    /// standing thrust bias.
    pub fn default_for_mass(mass: T) -> Self {
        let k_x = real::<T>(6.0) * mass;
        let k_v = real::<T>(4.0) * mass;
        Self {
            position: Vector3::new(k_x, k_x, k_x),
            velocity: Vector3::new(k_v, k_v, k_v),
            attitude: Vector3::repeat(real(1.0)),
            rate: Vector3::repeat(real(0.18)),
        }
    }

    fn validate(&self) -> Result<(), ConfigError> {
        for (name, v) in [
            ("gains.k_x", &self.position),
            ("gains.k_v", &self.velocity),
            ("gains.k_R", &self.attitude),
            ("gains.k_omega", &self.rate),
        ] {
            if v.iter().any(|g| *g < T::zero()) {
                return Err(invalid(name, "gains must be non-negative"));
            }
        }
        Ok(())
    }
}

/// One motor: placement in the body frame plus thrust/torque/response model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: DeserializeOwned"))]
pub struct MotorSpec<T: Real> {
    /// Rotor hub position in the body frame (m).
    pub position: Vector3<T>,
    /// Unit thrust direction in the body frame.
    pub thrust_axis: Vector3<T>,
    /// Spin direction, +1 or -1; sets the sign of the reaction torque.
    pub direction: i8,
    /// Thrust constant c_f (N/RPM^2): u = c_f r^2.
    pub thrust_constant: T,
    /// Torque coefficient c_tau (m): reaction torque = -d c_tau u.
    pub torque_coefficient: T,
    /// Spin-up time constant (s).
    pub tau_inc: T,
    /// Spin-down time constant (s).
    pub tau_dec: T,
    /// RPM ceiling.
    pub rpm_max: T,
}

impl<T: Real> MotorSpec<T> {
    /// Largest thrust this motor can produce (N).
    pub fn max_thrust(&self) -> T {
        self.thrust_constant * self.rpm_max * self.rpm_max
    }

    fn validate(&self, index: usize) -> Result<(), ConfigError> {
        let field = |name: &str| format!("motors[{index}].{name}");
        let axis_err = (self.thrust_axis.norm() - T::one()).abs();
        // 1e-9 in double precision; single precision can only promise ~1e-5.
        let tol = real::<T>(1e-9).max(T::default_epsilon() * real(100.0));
        if axis_err > tol {
            return Err(invalid(&field("thrust_axis"), "must be unit length"));
        }
        if self.direction != 1 && self.direction != -1 {
            return Err(invalid(&field("direction"), "must be +1 or -1"));
        }
        if self.thrust_constant <= T::zero() {
            return Err(invalid(&field("thrust_constant"), "must be > 0"));
        }
        if self.torque_coefficient < T::zero() {
            return Err(invalid(&field("torque_coefficient"), "must be >= 0"));
        }
        if self.tau_inc <= T::zero() || self.tau_dec <= T::zero() {
            return Err(invalid(&field("tau_inc/tau_dec"), "must be > 0"));
        }
        if self.rpm_max <= T::zero() {
            return Err(invalid(&field("rpm_max"), "must be > 0"));
        }
        Ok(())
    }
}

/// Inertia as written in a config file: principal diagonal or the six
/// upper-triangle entries `[ixx, iyy, izz, ixy, ixz, iyz]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    untagged,
    bound(serialize = "T: Serialize", deserialize = "T: DeserializeOwned")
)]
pub enum InertiaSpec<T: Real> {
    Diagonal([T; 3]),
    UpperTriangle([T; 6]),
}

impl<T: Real> InertiaSpec<T> {
    /// Symmetric inertia matrix (kg m^2).
    pub fn matrix(&self) -> Matrix3<T> {
        match *self {
            InertiaSpec::Diagonal([xx, yy, zz]) => {
                Matrix3::from_diagonal(&Vector3::new(xx, yy, zz))
            }
            InertiaSpec::UpperTriangle([xx, yy, zz, xy, xz, yz]) => {
                Matrix3::new(xx, xy, xz, xy, yy, yz, xz, yz, zz)
            }
        }
    }
}

/// Noise model block for the simulated IMU, embedded in the robot config.
/// Standard deviations are per discrete sample step; datasheet noise
/// densities convert as sigma_step = density * sqrt(1/dt).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: DeserializeOwned"))]
pub struct ImuConfig<T: Real> {
    /// Accelerometer noise std (m/s^2).
    pub sigma_accel: Vector3<T>,
    /// Gyroscope noise std (rad/s).
    pub sigma_gyro: Vector3<T>,
    /// Accelerometer bias random-walk std per step (m/s^2).
    pub sigma_bias_accel: Vector3<T>,
    /// Gyroscope bias random-walk std per step (rad/s).
    pub sigma_bias_gyro: Vector3<T>,
    /// Mounting rotation as roll/pitch/yaw of the sensor frame in the body frame (rad).
    #[serde(default = "zero_vec3")]
    pub mounting_rpy: Vector3<T>,
    /// Keep every k-th physics substep sample.
    #[serde(default = "one_usize")]
    pub decimation: usize,
}

fn zero_vec3<T: Real>() -> Vector3<T> {
    Vector3::zeros()
}
fn one_usize() -> usize {
    1
}

impl<T: Real> ImuConfig<T> {
    fn validate(&self) -> Result<(), ConfigError> {
        for (name, v) in [
            ("imu.sigma_accel", &self.sigma_accel),
            ("imu.sigma_gyro", &self.sigma_gyro),
            ("imu.sigma_bias_accel", &self.sigma_bias_accel),
            ("imu.sigma_bias_gyro", &self.sigma_bias_gyro),
        ] {
            if v.iter().any(|s| *s < T::zero()) {
                return Err(invalid(name, "noise std must be non-negative"));
            }
        }
        if self.decimation == 0 {
            return Err(invalid("imu.decimation", "must be >= 1"));
        }
        Ok(())
    }
}

/// Full description of one robot platform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: DeserializeOwned"))]
pub struct RobotConfig<T: Real> {
    #[serde(default)]
    pub name: String,
    /// Mass (kg).
    pub mass: T,
    /// Inertia (kg m^2), diagonal or upper triangle.
    pub inertia: InertiaSpec<T>,
    pub motors: Vec<MotorSpec<T>>,
    /// Linear drag coefficients (N s/m), applied to the body-frame velocity.
    #[serde(default = "zero_vec3")]
    pub drag_linear: Vector3<T>,
    /// Quadratic drag coefficients (N s^2/m^2).
    #[serde(default = "zero_vec3")]
    pub drag_quadratic: Vector3<T>,
    /// Bounding-sphere radius used for collision flagging (m).
    pub collision_radius: T,
    #[serde(default)]
    pub control_mode: ControlMode,
    /// Controller weights; defaults derived from mass when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gains: Option<ControlGains<T>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub imu: Option<ImuConfig<T>>,
}

impl<T: Real> RobotConfig<T> {
    pub fn num_motors(&self) -> usize {
        self.motors.len()
    }

    /// Symmetric inertia matrix.
    pub fn inertia_matrix(&self) -> Matrix3<T> {
        self.inertia.matrix()
    }

    /// Controller gains, falling back to the mass-scaled defaults.
    pub fn resolved_gains(&self) -> ControlGains<T> {
        self.gains
            .clone()
            .unwrap_or_else(|| ControlGains::default_for_mass(self.mass))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.mass <= T::zero() {
            return Err(invalid("mass", "must be > 0"));
        }
        let inertia = self.inertia_matrix();
        if nalgebra::Cholesky::new(inertia).is_none() {
            return Err(invalid("inertia", "must be positive definite"));
        }
        if self.motors.is_empty() {
            return Err(invalid("motors", "at least one motor required"));
        }
        for (i, m) in self.motors.iter().enumerate() {
            m.validate(i)?;
        }
        if self.collision_radius <= T::zero() {
            return Err(invalid("collision_radius", "must be > 0"));
        }
        for (name, v) in [
            ("drag_linear", &self.drag_linear),
            ("drag_quadratic", &self.drag_quadratic),
        ] {
            if v.iter().any(|c| *c < T::zero()) {
                return Err(invalid(name, "drag coefficients must be >= 0"));
            }
        }
        if let Some(g) = &self.gains {
            g.validate()?;
        }
        if let Some(imu) = &self.imu {
            imu.validate()?;
        }
        Ok(())
    }
}

/// Load and validate a robot config file.
pub fn load_robot_config<T: Real + DeserializeOwned>(
    path: impl AsRef<Path>,
) -> Result<RobotConfig<T>, ConfigError> {
    let config: RobotConfig<T> = load_toml(path)?;
    config.validate()?;
    Ok(config)
}

/// Axis-aligned box, used for world bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: DeserializeOwned"))]
pub struct BoundsConfig<T: Real> {
    pub min: Vector3<T>,
    pub max: Vector3<T>,
}

impl<T: Real> BoundsConfig<T> {
    pub fn contains(&self, p: &Vector3<T>) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }
}

/// Per-axis uniform ranges for obstacle placement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: DeserializeOwned"))]
pub struct PoseRandomization<T: Real> {
    /// Translation range lower corner (m).
    pub position_min: Vector3<T>,
    /// Translation range upper corner (m).
    pub position_max: Vector3<T>,
    /// Euler-angle range lower corner (rad, roll/pitch/yaw).
    #[serde(default = "zero_vec3")]
    pub rotation_min: Vector3<T>,
    /// Euler-angle range upper corner (rad).
    #[serde(default = "zero_vec3")]
    pub rotation_max: Vector3<T>,
}

/// One independent world: bounds, obstacle assets and randomization ranges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: DeserializeOwned"))]
pub struct EnvironmentConfig<T: Real> {
    pub bounds: BoundsConfig<T>,
    /// Mesh files (OBJ) cycled through when placing obstacles.
    #[serde(default)]
    pub obstacle_assets: Vec<String>,
    #[serde(default)]
    pub obstacle_count: usize,
    #[serde(default = "default_pose_randomization")]
    pub pose_randomization: PoseRandomization<T>,
    /// Uniform scale range applied per obstacle.
    #[serde(default = "default_scale_range")]
    pub scale_randomization: [T; 2],
    #[serde(default)]
    pub seed: u64,
}

fn default_pose_randomization<T: Real>() -> PoseRandomization<T> {
    PoseRandomization {
        position_min: Vector3::zeros(),
        position_max: Vector3::zeros(),
        rotation_min: Vector3::zeros(),
        rotation_max: Vector3::zeros(),
    }
}

fn default_scale_range<T: Real>() -> [T; 2] {
    [T::one(), T::one()]
}

impl<T: Real> EnvironmentConfig<T> {
    /// An empty, obstacle-free world with the given bounds.
    pub fn empty(min: Vector3<T>, max: Vector3<T>) -> Self {
        Self {
            bounds: BoundsConfig { min, max },
            obstacle_assets: Vec::new(),
            obstacle_count: 0,
            pose_randomization: default_pose_randomization(),
            scale_randomization: default_scale_range(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for i in 0..3 {
            if self.bounds.min[i] >= self.bounds.max[i] {
                return Err(invalid("bounds", "min must be strictly below max per axis"));
            }
        }
        let pr = &self.pose_randomization;
        for i in 0..3 {
            if pr.position_min[i] > pr.position_max[i] {
                return Err(invalid(
                    "pose_randomization.position",
                    "range must satisfy lo <= hi",
                ));
            }
            if pr.rotation_min[i] > pr.rotation_max[i] {
                return Err(invalid(
                    "pose_randomization.rotation",
                    "range must satisfy lo <= hi",
                ));
            }
        }
        let [lo, hi] = self.scale_randomization;
        if lo > hi {
            return Err(invalid(
                "scale_randomization",
                "range must satisfy lo <= hi",
            ));
        }
        if lo <= T::zero() {
            return Err(invalid("scale_randomization", "scale must be > 0"));
        }
        if self.obstacle_count > 0 && self.obstacle_assets.is_empty() {
            return Err(invalid(
                "obstacle_assets",
                "obstacle_count > 0 but no assets listed",
            ));
        }
        Ok(())
    }
}

/// Load and validate an environment config file.
pub fn load_environment_config<T: Real + DeserializeOwned>(
    path: impl AsRef<Path>,
) -> Result<EnvironmentConfig<T>, ConfigError> {
    let config: EnvironmentConfig<T> = load_toml(path)?;
    config.validate()?;
    Ok(config)
}

/// Exteroceptive sensor description, tagged by `type`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    tag = "type",
    rename_all = "snake_case",
    bound(serialize = "T: Serialize", deserialize = "T: DeserializeOwned")
)]
pub enum SensorConfig<T: Real> {
    Camera(CameraConfig<T>),
    Lidar(LidarConfig<T>),
}

/// Pinhole depth camera. Either `fov_deg` (horizontal) or explicit focal
/// lengths must be given; the principal point defaults to the image center.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: DeserializeOwned"))]
pub struct CameraConfig<T: Real> {
    pub width: usize,
    pub height: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fov_deg: Option<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fx: Option<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fy: Option<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cx: Option<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cy: Option<T>,
    /// Near clip (m).
    pub t_min: T,
    /// Far clip (m); misses beyond it are invalid.
    pub t_max: T,
    /// Sensor position in the body frame (m).
    #[serde(default = "zero_vec3")]
    pub position: Vector3<T>,
    /// Sensor orientation in the body frame as roll/pitch/yaw (rad). When
    /// omitted the optical axis looks along body +x.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation_rpy: Option<Vector3<T>>,
    /// Stereo baseline (m); 0 disables shadow masking.
    #[serde(default = "zero_t")]
    pub baseline: T,
}

fn zero_t<T: Real>() -> T {
    T::zero()
}

/// Spinning/dome LiDAR as an azimuth-elevation grid of beams.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: DeserializeOwned"))]
pub struct LidarConfig<T: Real> {
    /// Azimuth sweep [lo, hi] (rad).
    pub azimuth_range: [T; 2],
    pub azimuth_count: usize,
    /// Elevation sweep [lo, hi] (rad).
    pub elevation_range: [T; 2],
    pub elevation_count: usize,
    pub t_min: T,
    pub t_max: T,
    #[serde(default = "zero_vec3")]
    pub position: Vector3<T>,
    #[serde(default = "zero_vec3")]
    pub rotation_rpy: Vector3<T>,
}

impl<T: Real> SensorConfig<T> {
    pub fn validate(&self) -> Result<(), ConfigError> {
        match self {
            SensorConfig::Camera(c) => {
                if c.width == 0 || c.height == 0 {
                    return Err(invalid("sensor.width/height", "must be positive"));
                }
                if c.fov_deg.is_none() && (c.fx.is_none() || c.fy.is_none()) {
                    return Err(invalid("sensor.fov_deg", "need fov_deg or fx+fy"));
                }
                if let Some(fov) = c.fov_deg {
                    if fov <= T::zero() || fov >= real(180.0) {
                        return Err(invalid("sensor.fov_deg", "must be in (0, 180)"));
                    }
                }
                if c.t_min >= c.t_max {
                    return Err(invalid("sensor.t_min", "must be < t_max"));
                }
                if c.baseline < T::zero() {
                    return Err(invalid("sensor.baseline", "must be >= 0"));
                }
            }
            SensorConfig::Lidar(l) => {
                if l.azimuth_count == 0 || l.elevation_count == 0 {
                    return Err(invalid("sensor.azimuth_count", "must be positive"));
                }
                if l.t_min >= l.t_max {
                    return Err(invalid("sensor.t_min", "must be < t_max"));
                }
            }
        }
        Ok(())
    }
}

/// Load and validate a sensor config file.
pub fn load_sensor_config<T: Real + DeserializeOwned>(
    path: impl AsRef<Path>,
) -> Result<SensorConfig<T>, ConfigError> {
    let config: SensorConfig<T> = load_toml(path)?;
    config.validate()?;
    Ok(config)
}

/// A symmetric planar quad in X configuration, used by tests and benches.
///
/// Arm length `arm` (m), motors on the body z plane with alternating spin
/// directions; hover thrust per motor is mass * 9.81 / 4.
pub fn quad_x_config<T: Real>(mass: T, arm: T) -> RobotConfig<T> {
    let thrust_constant = real::<T>(2.5e-7);
    let motor = |x: T, y: T, direction: i8| MotorSpec {
        position: Vector3::new(x, y, T::zero()),
        thrust_axis: Vector3::new(T::zero(), T::zero(), T::one()),
        direction,
        thrust_constant,
        torque_coefficient: real(0.016),
        tau_inc: real(0.08),
        tau_dec: real(0.12),
        rpm_max: real(12000.0),
    };
    RobotConfig {
        name: "quad_x".into(),
        mass,
        inertia: InertiaSpec::Diagonal([real(0.007), real(0.007), real(0.012)]),
        motors: vec![
            motor(arm, -arm, 1),
            motor(-arm, -arm, -1),
            motor(-arm, arm, 1),
            motor(arm, arm, -1),
        ],
        drag_linear: Vector3::repeat(real(0.05)),
        drag_quadratic: Vector3::zeros(),
        collision_radius: real(0.25),
        control_mode: ControlMode::Position,
        gains: None,
        imu: None,
    }
}

/// A fully actuated octorotor: eight rotors on a ring of radius `arm`,
/// thrust axes tilted 15 degrees tangentially with alternating sign, so the
/// layout can produce force and torque along every body axis.
pub fn octo_tilted_config<T: Real>(mass: T, arm: T) -> RobotConfig<T> {
    let tilt = real::<T>(15.0f64.to_radians());
    let motors = (0..8)
        .map(|k| {
            let theta = real::<T>(std::f64::consts::FRAC_PI_4 * k as f64);
            let sign = if k % 2 == 0 { T::one() } else { -T::one() };
            let (sin_a, cos_a) = (tilt * sign).sin_cos();
            let (sin_t, cos_t) = theta.sin_cos();
            MotorSpec {
                position: Vector3::new(arm * cos_t, arm * sin_t, T::zero()),
                // e3 rotated about the radial direction by the tilt angle.
                thrust_axis: Vector3::new(sin_t * sin_a, -cos_t * sin_a, cos_a),
                direction: if k % 2 == 0 { 1 } else { -1 },
                thrust_constant: real(2.5e-7),
                torque_coefficient: real(0.016),
                tau_inc: real(0.08),
                tau_dec: real(0.12),
                rpm_max: real(12000.0),
            }
        })
        .collect();
    RobotConfig {
        name: "octo_tilted".into(),
        mass,
        inertia: InertiaSpec::Diagonal([real(0.02), real(0.02), real(0.035)]),
        motors,
        drag_linear: Vector3::repeat(real(0.05)),
        drag_quadratic: Vector3::zeros(),
        collision_radius: real(0.4),
        control_mode: ControlMode::Position,
        gains: None,
        imu: None,
    }
}
