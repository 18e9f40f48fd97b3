//! Batched, deterministic simulation of arbitrary n-rotor aerial vehicles.
//!
//! The crate combines rigid-body dynamics, a geometric control suite with
//! pseudoinverse control allocation, first-order motor dynamics, an IMU model
//! and a BVH ray-casting renderer, all stepped over many independent
//! environments at once. Tasks expose the combination through a vectorized
//! reset/step API.
//!
//! All numeric code is generic over the scalar type via [`Real`] (`f32` or
//! `f64`); the aliases at the crate root pick a concrete width. `f64` is the
//! default used by the CLI and the test suite.

pub mod config;
pub mod control;
pub mod dynamics;
pub mod imu;
pub mod mesh;
pub mod motors;
pub mod render;
pub mod state;
pub mod tasks;

mod rand_util;

/// Scalar type for all simulation math: `f32` or `f64`.
///
/// Anything that is a nalgebra [`RealField`](nalgebra::RealField) with
/// primitive conversions qualifies; the blanket impl covers both float
/// widths. `Send + Sync` lets batched state cross worker threads.
pub trait Real:
    nalgebra::RealField
    + num_traits::FromPrimitive
    + num_traits::ToPrimitive
    + Copy
    + Default
    + Send
    + Sync
{
}
impl<T> Real for T where
    T: nalgebra::RealField
        + num_traits::FromPrimitive
        + num_traits::ToPrimitive
        + Copy
        + Default
        + Send
        + Sync
{
}

/// Convert an `f64` constant into the working scalar type.
#[inline]
pub fn real<T: Real>(x: f64) -> T {
    nalgebra::convert(x)
}

pub use config::{ControlGains, ControlMode, EnvironmentConfig, MotorSpec, RobotConfig};
pub use control::{AllocationMatrix, ControlCommand, Controller, Wrench};
pub use dynamics::RigidBodyParams;
pub use imu::{ImuParams, ImuSample};
pub use mesh::TriangleMesh;
pub use render::{CameraModel, LidarPattern, RayHit, SensorImage, WorldMesh};
pub use state::{ResetSpec, StateStore};
pub use tasks::{SimOptions, Simulator, StepResult, TaskConfig, VecTask};

/// Single-precision state store.
pub type StateStore32 = state::StateStore<f32>;
/// Double-precision state store (default width).
pub type StateStore64 = state::StateStore<f64>;
/// Single-precision world geometry.
pub type WorldMesh32 = render::WorldMesh<f32>;
/// Double-precision world geometry (default width).
pub type WorldMesh64 = render::WorldMesh<f64>;
/// Double-precision position-setpoint task.
pub type PositionTask64 = tasks::PositionTask<f64>;
/// Double-precision navigation task.
pub type NavigationTask64 = tasks::NavigationTask<f64>;
/// Double-precision motor-command task.
pub type MotorTask64 = tasks::MotorTask<f64>;
/// Double-precision batched simulator.
pub type Simulator64 = tasks::Simulator<f64>;
