//! Rigid-body dynamics for a single vehicle.
//!
//! Integration is semi-implicit Euler: velocities are updated from
//! accelerations evaluated at the step start, then positions advance with
//! the updated velocities. The orientation update composes the quaternion
//! with the exponential of the new body rate and renormalizes, so the
//! attitude stays on the unit sphere for arbitrarily long rollouts.

use nalgebra::{Matrix3, UnitQuaternion, Vector3};

use crate::config::{BoundsConfig, MotorSpec, RobotConfig};
use crate::control::Wrench;
use crate::motors::thrust_at_rpm;
use crate::render::WorldMesh;
use crate::state::EnvState;
use crate::{real, Real};

/// States whose position, velocity or rate exceed this magnitude are
/// reported as diverged.
const DIVERGENCE_LIMIT: f64 = 1e6;

/// Precomputed physical constants for one robot.
#[derive(Debug, Clone)]
pub struct RigidBodyParams<T: Real> {
    pub mass: T,
    pub inertia: Matrix3<T>,
    pub inertia_inv: Matrix3<T>,
    /// Gravitational acceleration (m/s^2), pulling along world -z.
    pub gravity: T,
    pub drag_linear: Vector3<T>,
    pub drag_quadratic: Vector3<T>,
}

impl<T: Real> RigidBodyParams<T> {
    pub fn from_robot(robot: &RobotConfig<T>, gravity: T) -> Self {
        let inertia = robot.inertia_matrix();
        let inertia_inv = inertia
            .try_inverse()
            .expect("validated inertia is invertible");
        Self {
            mass: robot.mass,
            inertia,
            inertia_inv,
            gravity,
            drag_linear: robot.drag_linear,
            drag_quadratic: robot.drag_quadratic,
        }
    }
}

/// Body wrench produced by the rotors at their current speeds.
pub fn aggregate_motor_wrench<T: Real>(motors: &[MotorSpec<T>], rpms: &[T]) -> Wrench<T> {
    debug_assert_eq!(motors.len(), rpms.len());
    let mut force = Vector3::zeros();
    let mut torque = Vector3::zeros();
    for (m, &rpm) in motors.iter().zip(rpms) {
        let thrust = thrust_at_rpm(m.thrust_constant, rpm);
        let spin = real::<T>(f64::from(m.direction)) * m.torque_coefficient;
        force += m.thrust_axis * thrust;
        torque += (m.position.cross(&m.thrust_axis) - m.thrust_axis * spin) * thrust;
    }
    Wrench { force, torque }
}

/// Aerodynamic drag force in the body frame:
/// `-c1 . v_b - c2 . |v_b| . v_b` per axis.
pub fn drag_force<T: Real>(params: &RigidBodyParams<T>, body_velocity: &Vector3<T>) -> Vector3<T> {
    let mut f = Vector3::zeros();
    for i in 0..3 {
        let v = body_velocity[i];
        f[i] = -params.drag_linear[i] * v - params.drag_quadratic[i] * v.abs() * v;
    }
    f
}

/// Advance one environment by `dt` under the given rotor wrench (body
/// frame). Drag and gravity are added internally. Returns `false` when the
/// state left the finite, bounded region the simulator trusts.
pub fn step_rigid_body<T: Real>(
    env: &mut EnvState<T>,
    params: &RigidBodyParams<T>,
    rotor_wrench: &Wrench<T>,
    dt: T,
) -> bool {
    let body_force = rotor_wrench.force + drag_force(params, &env.body_velocity());
    let world_force = env.orientation.transform_vector(&body_force);
    let accel = world_force / params.mass - Vector3::new(T::zero(), T::zero(), params.gravity);
    env.velocity += accel * dt;
    env.position += env.velocity * dt;

    let omega = env.angular_velocity;
    let omega_dot =
        params.inertia_inv * (rotor_wrench.torque - omega.cross(&(params.inertia * omega)));
    env.angular_velocity += omega_dot * dt;
    let delta = UnitQuaternion::from_scaled_axis(env.angular_velocity * dt);
    env.orientation = UnitQuaternion::new_normalize((env.orientation * delta).into_inner());

    state_is_healthy(env)
}

fn state_is_healthy<T: Real>(env: &EnvState<T>) -> bool {
    let limit = real::<T>(DIVERGENCE_LIMIT);
    let finite = |v: &Vector3<T>| v.iter().all(|x| x.is_finite() && x.abs() < limit);
    finite(&env.position)
        && finite(&env.velocity)
        && finite(&env.angular_velocity)
        && env.orientation.as_ref().norm().is_finite()
}

/// World-frame angular momentum `R J omega`, conserved in free tumbling.
pub fn angular_momentum<T: Real>(env: &EnvState<T>, params: &RigidBodyParams<T>) -> Vector3<T> {
    env.orientation
        .transform_vector(&(params.inertia * env.angular_velocity))
}

/// Whether a bounding sphere at `position` leaves the world box or touches
/// scene geometry.
pub fn sphere_collides<T: Real>(
    position: &Vector3<T>,
    world: Option<&WorldMesh<T>>,
    bounds: &BoundsConfig<T>,
    radius: T,
) -> bool {
    let outside = (0..3)
        .any(|i| position[i] - radius < bounds.min[i] || position[i] + radius > bounds.max[i]);
    outside || world.is_some_and(|w| w.distance_below(position, radius))
}

/// Flag environments whose bounding sphere leaves the world box or touches
/// scene geometry. Flags only ever turn on here; resets clear them.
pub fn check_collisions<T: Real>(
    envs: &mut [EnvState<T>],
    world: Option<&WorldMesh<T>>,
    bounds: &BoundsConfig<T>,
    radius: T,
) {
    for env in envs.iter_mut() {
        if !env.collided && sphere_collides(&env.position, world, bounds, radius) {
            env.collided = true;
        }
    }
}
