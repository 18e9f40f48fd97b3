//! Multi-level flight control and rotor thrust allocation.
//!
//! The controller is a geometric cascade on SO(3): a translational loop
//! produces a desired world force, the force direction and a heading angle
//! fix a desired attitude, and an attitude loop turns the orientation error
//! into a body torque. Commands can enter the cascade at any level, from
//! world positions down to per-rotor thrusts.
//!
//! Allocation maps the requested body wrench to rotor thrusts through the
//! pseudo-inverse of the 6 x n effectiveness matrix, so the same code
//! covers planar quads and fully actuated tilted platforms.

use nalgebra::{DMatrix, DVector, Matrix3, UnitQuaternion, Vector3, Vector6};

use crate::config::{ControlGains, MotorSpec, RobotConfig};
use crate::{real, Real};

/// Standard gravity (m/s^2) used wherever a default is needed.
pub const GRAVITY: f64 = 9.81;

/// Desired-orientation construction fails when the thrust direction is
/// within this of being parallel to the heading vector.
const HEADING_SINGULARITY: f64 = 1e-6;

/// Net body-frame force and torque requested from the rotors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wrench<T: Real> {
    pub force: Vector3<T>,
    pub torque: Vector3<T>,
}

impl<T: Real> Wrench<T> {
    pub fn zero() -> Self {
        Self {
            force: Vector3::zeros(),
            torque: Vector3::zeros(),
        }
    }

    /// Stacked `[force; torque]` vector.
    pub fn as_vector(&self) -> Vector6<T> {
        Vector6::new(
            self.force.x,
            self.force.y,
            self.force.z,
            self.torque.x,
            self.torque.y,
            self.torque.z,
        )
    }
}

/// Skew-symmetric matrix with `hat(a) * b == a.cross(&b)`.
pub fn hat<T: Real>(v: &Vector3<T>) -> Matrix3<T> {
    Matrix3::new(
        T::zero(),
        -v.z,
        v.y,
        v.z,
        T::zero(),
        -v.x,
        -v.y,
        v.x,
        T::zero(),
    )
}

/// Inverse of [`hat`]; the input must be skew symmetric.
pub fn vee<T: Real>(m: &Matrix3<T>) -> Vector3<T> {
    Vector3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)])
}

/// Attitude error `0.5 * (R_d^T R - R^T R_d)^vee`, expressed in the body
/// frame and zero when `r == r_d`.
pub fn attitude_error<T: Real>(r: &Matrix3<T>, r_d: &Matrix3<T>) -> Vector3<T> {
    let skew = (r_d.transpose() * r - r.transpose() * r_d) * real::<T>(0.5);
    vee(&skew)
}

/// Body-rate error `omega - R^T R_d omega_d`.
pub fn rate_error<T: Real>(
    omega: &Vector3<T>,
    r: &Matrix3<T>,
    r_d: &Matrix3<T>,
    omega_d: &Vector3<T>,
) -> Vector3<T> {
    omega - r.transpose() * r_d * omega_d
}

/// Desired world-frame force from translational errors:
/// `k_x . e_pos + k_v . e_vel + m g e3 - m a_d`.
pub fn desired_force<T: Real>(
    gains: &ControlGains<T>,
    mass: T,
    gravity: T,
    e_pos: &Vector3<T>,
    e_vel: &Vector3<T>,
    accel_d: &Vector3<T>,
) -> Vector3<T> {
    gains.position.component_mul(e_pos)
        + gains.velocity.component_mul(e_vel)
        + Vector3::new(T::zero(), T::zero(), mass * gravity)
        - accel_d * mass
}

/// Desired attitude whose third column is the force direction and whose
/// second column is normal to the heading vector `(cos yaw, sin yaw, 0)`.
/// Returns `None` when the force vanishes or is parallel to the heading.
pub fn desired_orientation<T: Real>(f_des: &Vector3<T>, yaw: T) -> Option<Matrix3<T>> {
    let norm = f_des.norm();
    if norm < real(HEADING_SINGULARITY) {
        return None;
    }
    let b3 = f_des / norm;
    let heading = Vector3::new(yaw.cos(), yaw.sin(), T::zero());
    let cross = b3.cross(&heading);
    let cross_norm = cross.norm();
    if cross_norm < real(HEADING_SINGULARITY) {
        return None;
    }
    let b2 = cross / cross_norm;
    let b1 = b2.cross(&b3);
    Some(Matrix3::from_columns(&[b1, b2, b3]))
}

/// Attitude-loop torque
/// `-k_R . e_att - k_omega . e_rate + omega x (J omega)`.
pub fn body_torque<T: Real>(
    gains: &ControlGains<T>,
    inertia: &Matrix3<T>,
    omega: &Vector3<T>,
    e_att: &Vector3<T>,
    e_rate: &Vector3<T>,
) -> Vector3<T> {
    -gains.attitude.component_mul(e_att) - gains.rate.component_mul(e_rate)
        + omega.cross(&(inertia * omega))
}

/// A setpoint at one of the cascade's entry levels. Errors are formed as
/// desired minus current throughout.
#[derive(Debug, Clone, PartialEq)]
pub enum ControlCommand<T: Real> {
    /// Reach a world position while holding a yaw angle (rad).
    Position { position: Vector3<T>, yaw: T },
    /// Track a world velocity while holding a yaw angle.
    Velocity { velocity: Vector3<T>, yaw: T },
    /// Track a world acceleration while holding a yaw angle.
    Acceleration { acceleration: Vector3<T>, yaw: T },
    /// Hold an attitude with a given collective thrust (N).
    AttitudeThrust {
        attitude: UnitQuaternion<T>,
        thrust: T,
    },
    /// Track body rates (rad/s) with a given collective thrust.
    RateThrust { rates: Vector3<T>, thrust: T },
    /// Request a body wrench directly.
    BodyWrench(Wrench<T>),
    /// Per-rotor thrusts (N); bypasses the controller and allocation solve.
    MotorThrusts(Vec<T>),
}

/// The control cascade's gains and physical constants, free of
/// per-environment state so one instance can serve many environments
/// concurrently.
#[derive(Debug, Clone)]
pub struct ControlLaw<T: Real> {
    pub gains: ControlGains<T>,
    mass: T,
    inertia: Matrix3<T>,
    gravity: T,
}

impl<T: Real> ControlLaw<T> {
    pub fn new(robot: &RobotConfig<T>, gravity: T) -> Self {
        Self {
            gains: robot.resolved_gains(),
            mass: robot.mass,
            inertia: robot.inertia_matrix(),
            gravity,
        }
    }

    pub fn gravity(&self) -> T {
        self.gravity
    }

    pub fn mass(&self) -> T {
        self.mass
    }

    /// Wrench that balances gravity exactly; the initial fallback.
    pub fn hover_wrench(&self) -> Wrench<T> {
        Wrench {
            force: Vector3::new(T::zero(), T::zero(), self.mass * self.gravity),
            torque: Vector3::zeros(),
        }
    }

    /// Wrench for one environment given its current kinematic state.
    ///
    /// `velocity` is the world-frame linear velocity and `omega` the
    /// body-frame angular velocity. `held` is that environment's fallback:
    /// it is returned unchanged when the desired-attitude construction is
    /// singular or the command is `MotorThrusts` (which the caller handles),
    /// and refreshed with the new wrench otherwise.
    pub fn wrench_with(
        &self,
        held: &mut Wrench<T>,
        position: &Vector3<T>,
        orientation: &UnitQuaternion<T>,
        velocity: &Vector3<T>,
        omega: &Vector3<T>,
        command: &ControlCommand<T>,
    ) -> Wrench<T> {
        let r = orientation.to_rotation_matrix().into_inner();
        let result = match command {
            ControlCommand::Position {
                position: target,
                yaw,
            } => self.translational(
                &r,
                omega,
                &(target - position),
                &-velocity,
                &Vector3::zeros(),
                *yaw,
            ),
            ControlCommand::Velocity {
                velocity: target,
                yaw,
            } => self.translational(
                &r,
                omega,
                &Vector3::zeros(),
                &(target - velocity),
                &Vector3::zeros(),
                *yaw,
            ),
            ControlCommand::Acceleration { acceleration, yaw } => self.translational(
                &r,
                omega,
                &Vector3::zeros(),
                &Vector3::zeros(),
                acceleration,
                *yaw,
            ),
            ControlCommand::AttitudeThrust { attitude, thrust } => Some(self.attitude_thrust(
                &r,
                omega,
                &attitude.to_rotation_matrix().into_inner(),
                &Vector3::zeros(),
                *thrust,
            )),
            ControlCommand::RateThrust { rates, thrust } => {
                let torque = body_torque(
                    &self.gains,
                    &self.inertia,
                    omega,
                    &Vector3::zeros(),
                    &(omega - rates),
                );
                Some(Wrench {
                    force: Vector3::new(T::zero(), T::zero(), *thrust),
                    torque,
                })
            }
            ControlCommand::BodyWrench(w) => Some(*w),
            ControlCommand::MotorThrusts(_) => None,
        };
        if let Some(w) = result {
            *held = w;
        }
        *held
    }

    fn translational(
        &self,
        r: &Matrix3<T>,
        omega: &Vector3<T>,
        e_pos: &Vector3<T>,
        e_vel: &Vector3<T>,
        accel_d: &Vector3<T>,
        yaw: T,
    ) -> Option<Wrench<T>> {
        let f_des = desired_force(&self.gains, self.mass, self.gravity, e_pos, e_vel, accel_d);
        let r_d = desired_orientation(&f_des, yaw)?;
        let body_z = Vector3::from(r.column(2));
        let thrust = f_des.dot(&body_z);
        Some(self.attitude_thrust(r, omega, &r_d, &Vector3::zeros(), thrust))
    }

    fn attitude_thrust(
        &self,
        r: &Matrix3<T>,
        omega: &Vector3<T>,
        r_d: &Matrix3<T>,
        omega_d: &Vector3<T>,
        thrust: T,
    ) -> Wrench<T> {
        let e_att = attitude_error(r, r_d);
        let e_rate = rate_error(omega, r, r_d, omega_d);
        let torque = body_torque(&self.gains, &self.inertia, omega, &e_att, &e_rate);
        Wrench {
            force: Vector3::new(T::zero(), T::zero(), thrust),
            torque,
        }
    }
}

/// Geometric controller with per-environment fallback state.
///
/// When the desired-attitude construction is singular for an environment
/// the controller repeats that environment's previous wrench; the fallback
/// starts as a pure hover force.
pub struct Controller<T: Real> {
    law: ControlLaw<T>,
    held: Vec<Wrench<T>>,
}

impl<T: Real> Controller<T> {
    pub fn new(robot: &RobotConfig<T>, gravity: T, num_envs: usize) -> Self {
        let law = ControlLaw::new(robot, gravity);
        let held = vec![law.hover_wrench(); num_envs];
        Self { law, held }
    }

    pub fn law(&self) -> &ControlLaw<T> {
        &self.law
    }

    pub fn gains(&self) -> &ControlGains<T> {
        &self.law.gains
    }

    pub fn gravity(&self) -> T {
        self.law.gravity
    }

    pub fn mass(&self) -> T {
        self.law.mass
    }

    /// Law plus the per-environment fallbacks, for callers that fan the
    /// cascade out over environments themselves.
    pub fn split_mut(&mut self) -> (&ControlLaw<T>, &mut [Wrench<T>]) {
        (&self.law, &mut self.held)
    }

    /// Drop any held fallback for a freshly reset environment.
    pub fn reset_env(&mut self, env: usize) {
        self.held[env] = self.law.hover_wrench();
    }

    /// Wrench for one environment given its current kinematic state.
    ///
    /// `velocity` is the world-frame linear velocity and `omega` the
    /// body-frame angular velocity. `MotorThrusts` commands are handled by
    /// the caller; for them this returns the held wrench.
    pub fn wrench(
        &mut self,
        env: usize,
        position: &Vector3<T>,
        orientation: &UnitQuaternion<T>,
        velocity: &Vector3<T>,
        omega: &Vector3<T>,
        command: &ControlCommand<T>,
    ) -> Wrench<T> {
        self.law.wrench_with(
            &mut self.held[env],
            position,
            orientation,
            velocity,
            omega,
            command,
        )
    }
}

/// Thrust allocation for an arbitrary rotor layout.
///
/// Column `k` of the effectiveness matrix holds the body wrench of one
/// newton of thrust from rotor `k`: the thrust axis on top, and
/// `position x axis - direction * c_tau * axis` below. The solve goes
/// through the SVD pseudo-inverse, so unreachable wrench components are
/// projected out and redundant layouts get the minimum-norm solution.
pub struct AllocationMatrix<T: Real> {
    effectiveness: DMatrix<T>,
    pinv: DMatrix<T>,
    rank: usize,
    max_thrusts: Vec<T>,
}

impl<T: Real> AllocationMatrix<T> {
    pub fn new(motors: &[MotorSpec<T>]) -> Self {
        let n = motors.len();
        let mut b = DMatrix::zeros(6, n);
        for (k, m) in motors.iter().enumerate() {
            let spin = real::<T>(f64::from(m.direction)) * m.torque_coefficient;
            let torque = m.position.cross(&m.thrust_axis) - m.thrust_axis * spin;
            for i in 0..3 {
                b[(i, k)] = m.thrust_axis[i];
                b[(3 + i, k)] = torque[i];
            }
        }
        let svd = b.clone().svd(true, true);
        let max_sv = svd
            .singular_values
            .iter()
            .fold(T::zero(), |acc, s| if *s > acc { *s } else { acc });
        let rel_cutoff = real::<T>(1e-10).max(T::default_epsilon() * real(100.0));
        let eps = max_sv * rel_cutoff;
        let rank = svd.rank(eps);
        let pinv = svd
            .pseudo_inverse(eps)
            .expect("svd was computed with u and v_t");
        Self {
            effectiveness: b,
            pinv,
            rank,
            max_thrusts: motors.iter().map(MotorSpec::max_thrust).collect(),
        }
    }

    pub fn num_motors(&self) -> usize {
        self.max_thrusts.len()
    }

    /// Numerical rank of the effectiveness matrix; 6 means fully actuated.
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn effectiveness(&self) -> &DMatrix<T> {
        &self.effectiveness
    }

    pub fn max_thrusts(&self) -> &[T] {
        &self.max_thrusts
    }

    /// Body wrench produced by the given rotor thrusts.
    pub fn wrench_of(&self, thrusts: &[T]) -> Wrench<T> {
        assert_eq!(thrusts.len(), self.num_motors());
        let u = DVector::from_column_slice(thrusts);
        let w = &self.effectiveness * u;
        Wrench {
            force: Vector3::new(w[0], w[1], w[2]),
            torque: Vector3::new(w[3], w[4], w[5]),
        }
    }

    /// Minimum-norm least-squares thrusts for a wrench, before any limits.
    pub fn solve(&self, wrench: &Wrench<T>) -> DVector<T> {
        let w = DVector::from_column_slice(wrench.as_vector().as_slice());
        &self.pinv * w
    }

    /// Like [`solve`](Self::solve) but clamped to `[0, max_thrust]` per rotor.
    pub fn solve_clamped(&self, wrench: &Wrench<T>) -> Vec<T> {
        self.solve(wrench)
            .iter()
            .zip(&self.max_thrusts)
            .map(|(&u, &hi)| nalgebra::clamp(u, T::zero(), hi))
            .collect()
    }

    /// Per-rotor thrusts that balance gravity, clamped to motor limits.
    pub fn hover_thrusts(&self, mass: T, gravity: T) -> Vec<T> {
        self.solve_clamped(&Wrench {
            force: Vector3::new(T::zero(), T::zero(), mass * gravity),
            torque: Vector3::zeros(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{octo_tilted_config, quad_x_config};
    use approx::assert_relative_eq;
    use nalgebra::Rotation3;
    use proptest::prelude::*;

    fn quad() -> RobotConfig<f64> {
        quad_x_config(1.0, 0.17)
    }

    #[test]
    fn hat_vee_round_trip() {
        let v = Vector3::new(0.3, -1.2, 2.5);
        assert_eq!(vee(&hat(&v)), v);
        let w = Vector3::new(-0.7, 0.1, 0.4);
        assert_relative_eq!(hat(&v) * w, v.cross(&w), max_relative = 1e-15);
    }

    #[test]
    fn attitude_error_vanishes_at_target() {
        let r = Rotation3::from_euler_angles(0.3, -0.2, 1.0).into_inner();
        assert_relative_eq!(attitude_error(&r, &r).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn attitude_error_matches_small_yaw_rotation() {
        let theta = 0.01f64;
        let r = Rotation3::from_axis_angle(&Vector3::z_axis(), theta).into_inner();
        let e = attitude_error(&r, &Matrix3::identity());
        assert_relative_eq!(e, Vector3::new(0.0, 0.0, theta.sin()), epsilon = 1e-14);
    }

    #[test]
    fn thrust_drops_when_above_target() {
        let gains = ControlGains {
            position: Vector3::repeat(4.0),
            velocity: Vector3::zeros(),
            attitude: Vector3::repeat(8.0),
            rate: Vector3::repeat(1.2),
        };
        let mass = 1.0;
        let e_pos = Vector3::new(0.0, 0.0, -0.5);
        let f = desired_force(
            &gains,
            mass,
            GRAVITY,
            &e_pos,
            &Vector3::zeros(),
            &Vector3::zeros(),
        );
        let thrust = f.dot(&Vector3::z());
        assert_relative_eq!(thrust, mass * GRAVITY - 2.0, epsilon = 1e-12);
    }

    #[test]
    fn desired_orientation_recovers_yaw() {
        let up = Vector3::new(0.0, 0.0, 9.81);
        let r_d = desired_orientation(&up, std::f64::consts::FRAC_PI_2).unwrap();
        let expected = Rotation3::from_axis_angle(&Vector3::z_axis(), std::f64::consts::FRAC_PI_2)
            .into_inner();
        assert_relative_eq!(r_d, expected, epsilon = 1e-12);
        let hover = desired_orientation(&up, 0.0).unwrap();
        assert_relative_eq!(hover, Matrix3::identity(), epsilon = 1e-12);
    }

    #[test]
    fn desired_orientation_is_orthonormal() {
        let f = Vector3::new(2.0, -1.0, 7.0);
        let r_d = desired_orientation(&f, 0.7).unwrap();
        assert_relative_eq!(r_d.transpose() * r_d, Matrix3::identity(), epsilon = 1e-12);
        assert_relative_eq!(r_d.determinant(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(Vector3::from(r_d.column(2)), f.normalize(), epsilon = 1e-12);
    }

    #[test]
    fn desired_orientation_singular_when_force_along_heading() {
        assert!(desired_orientation(&Vector3::new(1.0, 0.0, 0.0), 0.0).is_none());
        assert!(desired_orientation(&Vector3::<f64>::zeros(), 0.0).is_none());
    }

    #[test]
    fn controller_holds_previous_wrench_through_singularity() {
        let robot = quad();
        let mut ctl = Controller::new(&robot, GRAVITY, 1);
        let q = UnitQuaternion::identity();
        let hover = ControlCommand::Position {
            position: Vector3::new(0.0, 0.0, 1.0),
            yaw: 0.0,
        };
        let normal = ctl.wrench(
            0,
            &Vector3::new(0.0, 0.0, 1.0),
            &q,
            &Vector3::zeros(),
            &Vector3::zeros(),
            &hover,
        );
        // Commanding free fall makes the desired force vanish.
        let free_fall = ControlCommand::Acceleration {
            acceleration: Vector3::new(0.0, 0.0, GRAVITY),
            yaw: 0.0,
        };
        let held = ctl.wrench(
            0,
            &Vector3::zeros(),
            &q,
            &Vector3::zeros(),
            &Vector3::zeros(),
            &free_fall,
        );
        assert_eq!(held, normal);
    }

    #[test]
    fn restoring_torque_opposes_roll_offset() {
        let robot = quad();
        let mut ctl = Controller::new(&robot, GRAVITY, 1);
        let q = UnitQuaternion::from_axis_angle(&Vector3::x_axis(), 0.2);
        let w = ctl.wrench(
            0,
            &Vector3::zeros(),
            &q,
            &Vector3::zeros(),
            &Vector3::zeros(),
            &ControlCommand::Position {
                position: Vector3::zeros(),
                yaw: 0.0,
            },
        );
        assert!(
            w.torque.x < 0.0,
            "expected negative roll torque, got {:?}",
            w.torque
        );
    }

    #[test]
    fn rate_command_damps_toward_target() {
        let robot = quad();
        let mut ctl = Controller::new(&robot, GRAVITY, 1);
        let w = ctl.wrench(
            0,
            &Vector3::zeros(),
            &UnitQuaternion::identity(),
            &Vector3::zeros(),
            &Vector3::new(0.0, 0.0, 0.0),
            &ControlCommand::RateThrust {
                rates: Vector3::new(1.0, 0.0, 0.0),
                thrust: 9.81,
            },
        );
        assert!(w.torque.x > 0.0);
        assert_relative_eq!(w.force.z, 9.81);
    }

    #[test]
    fn allocation_round_trip_on_planar_quad() {
        let alloc = AllocationMatrix::new(&quad().motors);
        assert_eq!(alloc.rank(), 4);
        let u_star = [1.0, 2.0, 3.0, 4.0];
        let w = alloc.wrench_of(&u_star);
        let u = alloc.solve(&w);
        for (got, want) in u.iter().zip(u_star) {
            assert_relative_eq!(*got, want, max_relative = 1e-9);
        }
    }

    #[test]
    fn allocation_round_trip_on_tilted_octo() {
        let octo = octo_tilted_config::<f64>(2.0, 0.3);
        octo.validate().unwrap();
        let alloc = AllocationMatrix::new(&octo.motors);
        assert_eq!(alloc.rank(), 6, "tilted octo should be fully actuated");
        let u_star: Vec<f64> = (0..8).map(|k| 1.0 + 0.5 * k as f64).collect();
        let w_star = alloc.wrench_of(&u_star);
        let u = alloc.solve(&w_star);
        let w = alloc.wrench_of(u.as_slice());
        let scale = w_star.as_vector().norm();
        assert!((w.as_vector() - w_star.as_vector()).norm() < 1e-9 * scale);
    }

    #[test]
    fn unreachable_force_is_projected_out() {
        let alloc = AllocationMatrix::new(&quad().motors);
        let sideways = Wrench {
            force: Vector3::new(5.0, 0.0, 9.81),
            torque: Vector3::zeros(),
        };
        let u = alloc.solve(&sideways);
        let w = alloc.wrench_of(u.as_slice());
        assert_relative_eq!(w.force.x, 0.0, epsilon = 1e-9);
        assert_relative_eq!(w.force.z, 9.81, epsilon = 1e-9);
    }

    #[test]
    fn yaw_torque_loads_counter_spinning_rotors() {
        let alloc = AllocationMatrix::new(&quad().motors);
        let u = alloc.solve(&Wrench {
            force: Vector3::zeros(),
            torque: Vector3::new(0.0, 0.0, 0.5),
        });
        // direction = -1 rotors react with positive yaw torque.
        assert!(u[1] > 0.0 && u[3] > 0.0);
        assert!(u[0] < 0.0 && u[2] < 0.0);
    }

    #[test]
    fn reaction_torque_sign_single_rotor() {
        let motors = vec![MotorSpec::<f64> {
            position: Vector3::zeros(),
            thrust_axis: Vector3::z(),
            direction: 1,
            thrust_constant: 1e-6,
            torque_coefficient: 0.02,
            tau_inc: 0.1,
            tau_dec: 0.1,
            rpm_max: 10000.0,
        }];
        let alloc = AllocationMatrix::new(&motors);
        assert_relative_eq!(alloc.effectiveness()[(5, 0)], -0.02);
        assert_relative_eq!(alloc.effectiveness()[(2, 0)], 1.0);
    }

    #[test]
    fn clamped_solve_respects_limits() {
        let alloc = AllocationMatrix::new(&quad().motors);
        let huge = Wrench {
            force: Vector3::new(0.0, 0.0, 1e6),
            torque: Vector3::new(50.0, -50.0, 10.0),
        };
        let u = alloc.solve_clamped(&huge);
        for (k, thrust) in u.iter().enumerate() {
            assert!(*thrust >= 0.0 && *thrust <= alloc.max_thrusts()[k]);
        }
    }

    #[test]
    fn hover_thrusts_split_weight_evenly() {
        let alloc = AllocationMatrix::new(&quad().motors);
        let u = alloc.hover_thrusts(1.0, GRAVITY);
        for thrust in &u {
            assert_relative_eq!(*thrust, GRAVITY / 4.0, max_relative = 1e-9);
        }
    }

    #[test]
    fn single_precision_allocation_round_trip() {
        let alloc = AllocationMatrix::new(&quad_x_config::<f32>(1.0, 0.17).motors);
        assert_eq!(alloc.rank(), 4);
        let u_star = [1.0f32, 2.0, 3.0, 4.0];
        let w = alloc.wrench_of(&u_star);
        let u = alloc.solve(&w);
        for (got, want) in u.iter().zip(u_star) {
            assert_relative_eq!(*got, want, max_relative = 1e-3);
        }
    }

    proptest! {
        #[test]
        fn allocation_is_linear(
            a in proptest::array::uniform4(-5.0f64..5.0),
            b in proptest::array::uniform4(-5.0f64..5.0),
            alpha in -2.0f64..2.0,
        ) {
            let alloc = AllocationMatrix::new(&quad().motors);
            let mixed: Vec<f64> = a.iter().zip(b).map(|(x, y)| alpha * x + y).collect();
            let w_mixed = alloc.wrench_of(&mixed).as_vector();
            let w_sum = alloc.wrench_of(&a).as_vector() * alpha + alloc.wrench_of(&b).as_vector();
            prop_assert!((w_mixed - w_sum).norm() <= 1e-9);
        }
    }
}
