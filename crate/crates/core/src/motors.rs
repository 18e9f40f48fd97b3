//! First-order rotor speed dynamics and the thrust model.
//!
//! Each rotor tracks its commanded speed through `dr/dt = (r_ref - r) / tau`
//! with separate spin-up and spin-down time constants. The time constant is
//! chosen once at the start of a step from the sign of `r_ref - r`, so a
//! single step integrates a linear ODE and has a closed-form solution to
//! test against. Speeds are clamped to `[0, rpm_max]` after integration.
//! Thrust follows `u = c_f r^2`.

use serde::{Deserialize, Serialize};

use crate::config::MotorSpec;
use crate::Real;

/// Integration scheme for the rotor speed ODE.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MotorIntegrator {
    #[default]
    Euler,
    Rk4,
}

/// Commanded speed that produces `thrust` in steady state. Negative thrust
/// demands map to zero speed.
#[inline]
pub fn rpm_for_thrust<T: Real>(thrust: T, thrust_constant: T) -> T {
    if thrust <= T::zero() {
        T::zero()
    } else {
        (thrust / thrust_constant).sqrt()
    }
}

/// Thrust produced at rotor speed `rpm`.
#[inline]
pub fn thrust_at_rpm<T: Real>(thrust_constant: T, rpm: T) -> T {
    thrust_constant * rpm * rpm
}

/// Advance one rotor speed by `dt`.
#[inline]
pub fn step_rpm<T: Real>(
    rpm: T,
    rpm_ref: T,
    spec: &MotorSpec<T>,
    dt: T,
    method: MotorIntegrator,
) -> T {
    let tau = if rpm_ref >= rpm {
        spec.tau_inc
    } else {
        spec.tau_dec
    };
    let next = match method {
        MotorIntegrator::Euler => rpm + dt * (rpm_ref - rpm) / tau,
        MotorIntegrator::Rk4 => {
            let f = |r: T| (rpm_ref - r) / tau;
            let half = dt / crate::real(2.0);
            let k1 = f(rpm);
            let k2 = f(rpm + half * k1);
            let k3 = f(rpm + half * k2);
            let k4 = f(rpm + dt * k3);
            let sixth = dt / crate::real(6.0);
            rpm + sixth * (k1 + crate::real::<T>(2.0) * (k2 + k3) + k4)
        }
    };
    nalgebra::clamp(next, T::zero(), spec.rpm_max)
}

/// Closed-form speed after `dt` with a fixed time constant, used as the
/// reference solution in tests.
#[inline]
pub fn exact_rpm_response<T: Real>(rpm: T, rpm_ref: T, tau: T, dt: T) -> T {
    rpm_ref + (rpm - rpm_ref) * (-dt / tau).exp()
}
