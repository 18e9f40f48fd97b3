//! Batched control-to-physics pipeline shared by every task.
//!
//! One control step runs the cascade once per environment, converts the
//! resulting wrench to rotor speed setpoints, then advances motors and the
//! rigid body through a fixed number of physics substeps. Environments never
//! share mutable state, so per-environment results are bitwise identical
//! whether the batch runs serially or on any number of worker threads.

use rayon::prelude::*;

use crate::config::{BoundsConfig, ConfigError, RobotConfig};
use crate::control::{AllocationMatrix, ControlCommand, Controller, Wrench, GRAVITY};
use crate::dynamics::{aggregate_motor_wrench, sphere_collides, step_rigid_body, RigidBodyParams};
use crate::motors::{rpm_for_thrust, step_rpm, MotorIntegrator};
use crate::render::WorldMesh;
use crate::state::{EnvState, ResetSpec, StateStore};
use crate::{real, Real};

/// Knobs for [`Simulator::new`] with working defaults.
#[derive(Debug, Clone)]
pub struct SimOptions<T: Real> {
    pub gravity: T,
    /// Duration of one control step (s).
    pub control_dt: T,
    /// Physics substeps per control step.
    pub substeps: usize,
    pub integrator: MotorIntegrator,
    /// World box; leaving it counts as a collision.
    pub bounds: BoundsConfig<T>,
    pub seed: u64,
    /// Global index of the first environment, for partitioned batches.
    pub env_offset: u64,
    /// Worker threads: 1 runs serially, 0 uses the process-wide pool, any
    /// other count gets a dedicated pool.
    pub workers: usize,
}

impl<T: Real> Default for SimOptions<T> {
    fn default() -> Self {
        let span = real::<T>(1e6);
        Self {
            gravity: real(GRAVITY),
            control_dt: real(0.01),
            substeps: 2,
            integrator: MotorIntegrator::default(),
            bounds: BoundsConfig {
                min: nalgebra::Vector3::repeat(-span),
                max: nalgebra::Vector3::repeat(span),
            },
            seed: 0,
            env_offset: 0,
            workers: 1,
        }
    }
}

/// Per-environment scratch reused across steps to keep the hot loop free of
/// allocations that scale with the batch.
#[derive(Clone)]
struct Scratch<T: Real> {
    rpm_ref: Vec<T>,
}

/// A robot model plus batched state, stepped one control period at a time.
pub struct Simulator<T: Real> {
    robot: RobotConfig<T>,
    params: RigidBodyParams<T>,
    controller: Controller<T>,
    allocation: AllocationMatrix<T>,
    store: StateStore<T>,
    options: SimOptions<T>,
    /// Cleared when an environment's physics leaves the finite region;
    /// restored by reset.
    healthy: Vec<bool>,
    scratch: Vec<Scratch<T>>,
    pool: Option<rayon::ThreadPool>,
}

impl<T: Real> Simulator<T> {
    pub fn new(
        robot: RobotConfig<T>,
        num_envs: usize,
        options: SimOptions<T>,
    ) -> Result<Self, ConfigError> {
        robot.validate()?;
        if options.control_dt <= T::zero() {
            return Err(ConfigError::Validation {
                field: "control_dt".into(),
                message: "must be positive".into(),
            });
        }
        if options.substeps == 0 {
            return Err(ConfigError::Validation {
                field: "substeps".into(),
                message: "must be at least 1".into(),
            });
        }
        let pool = if options.workers > 1 {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(options.workers)
                    .build()
                    .expect("worker pool"),
            )
        } else {
            None
        };
        let params = RigidBodyParams::from_robot(&robot, options.gravity);
        let controller = Controller::new(&robot, options.gravity, num_envs);
        let allocation = AllocationMatrix::new(&robot.motors);
        let store = StateStore::allocate(
            &robot,
            options.gravity,
            num_envs,
            options.seed,
            options.env_offset,
        );
        let scratch = vec![
            Scratch {
                rpm_ref: vec![T::zero(); robot.motors.len()],
            };
            num_envs
        ];
        Ok(Self {
            robot,
            params,
            controller,
            allocation,
            store,
            options,
            healthy: vec![true; num_envs],
            scratch,
            pool,
        })
    }

    pub fn robot(&self) -> &RobotConfig<T> {
        &self.robot
    }

    pub fn params(&self) -> &RigidBodyParams<T> {
        &self.params
    }

    pub fn allocation(&self) -> &AllocationMatrix<T> {
        &self.allocation
    }

    pub fn options(&self) -> &SimOptions<T> {
        &self.options
    }

    pub fn control_dt(&self) -> T {
        self.options.control_dt
    }

    pub fn num_envs(&self) -> usize {
        self.store.num_envs()
    }

    pub fn store(&self) -> &StateStore<T> {
        &self.store
    }

    pub fn store_mut(&mut self) -> &mut StateStore<T> {
        &mut self.store
    }

    /// Per-environment physics health; `false` after divergence.
    pub fn healthy(&self) -> &[bool] {
        &self.healthy
    }

    /// Run `f` on the configured execution resources: inline when serial,
    /// inside the dedicated pool when one exists, otherwise on the global
    /// pool. Callers use this to parallelize their own per-environment work.
    pub fn install<R, F>(&self, f: F) -> R
    where
        F: FnOnce() -> R + Send,
        R: Send,
    {
        match &self.pool {
            Some(pool) => pool.install(f),
            None => f(),
        }
    }

    /// Whether per-environment loops should run on the calling thread.
    pub fn serial(&self) -> bool {
        self.options.workers == 1
    }

    /// Redraw the listed environments and clear their controller fallback
    /// and health flags.
    pub fn reset_envs(&mut self, ids: &[usize], spec: &ResetSpec<T>) {
        self.store.reset_envs(ids, spec);
        for &i in ids {
            self.controller.reset_env(i);
            self.healthy[i] = true;
        }
    }

    pub fn reset_all(&mut self, spec: &ResetSpec<T>) {
        let ids: Vec<usize> = (0..self.num_envs()).collect();
        self.reset_envs(&ids, spec);
    }

    /// Advance every environment by one control step.
    ///
    /// `make_command` maps an environment's pre-step state to its command;
    /// returning `None` skips physics for that environment (used for
    /// rejected actions). `MotorThrusts` commands bypass the cascade and the
    /// allocation solve. After the substeps each environment's collision
    /// flag is refreshed against `world` and the bounds.
    pub fn step_with<F>(&mut self, world: Option<&WorldMesh<T>>, make_command: F)
    where
        F: Fn(usize, &EnvState<T>) -> Option<ControlCommand<T>> + Sync,
    {
        let substeps = self.options.substeps;
        let dt_sub = self.options.control_dt / real::<T>(substeps as f64);
        let params = &self.params;
        let motors = &self.robot.motors;
        let allocation = &self.allocation;
        let bounds = &self.options.bounds;
        let radius = self.robot.collision_radius;
        let integrator = self.options.integrator;
        let (law, held_all) = self.controller.split_mut();
        let envs = self.store.envs_mut();
        let healthy = &mut self.healthy;
        let scratch = &mut self.scratch;

        let step_env = |i: usize,
                        env: &mut EnvState<T>,
                        held: &mut Wrench<T>,
                        ok: &mut bool,
                        scratch: &mut Scratch<T>| {
            let Some(command) = make_command(i, env) else {
                return;
            };
            let wrench = law.wrench_with(
                held,
                &env.position,
                &env.orientation,
                &env.velocity,
                &env.angular_velocity,
                &command,
            );
            match &command {
                ControlCommand::MotorThrusts(thrusts) => {
                    assert_eq!(thrusts.len(), motors.len(), "thrust count");
                    for ((r, &u), m) in scratch.rpm_ref.iter_mut().zip(thrusts).zip(motors) {
                        let clamped = nalgebra::clamp(u, T::zero(), m.max_thrust());
                        *r = rpm_for_thrust(clamped, m.thrust_constant);
                    }
                }
                _ => {
                    let thrusts = allocation.solve_clamped(&wrench);
                    for ((r, &u), m) in scratch.rpm_ref.iter_mut().zip(&thrusts).zip(motors) {
                        *r = rpm_for_thrust(u, m.thrust_constant);
                    }
                }
            }
            for _ in 0..substeps {
                for (rpm, (&r_ref, m)) in env.rpm.iter_mut().zip(scratch.rpm_ref.iter().zip(motors))
                {
                    *rpm = step_rpm(*rpm, r_ref, m, dt_sub, integrator);
                }
                let rotor = aggregate_motor_wrench(motors, &env.rpm);
                *ok = step_rigid_body(env, params, &rotor, dt_sub) && *ok;
            }
            if !env.collided && sphere_collides(&env.position, world, bounds, radius) {
                env.collided = true;
            }
        };

        if self.options.workers == 1 {
            for (i, (((env, held), ok), sc)) in envs
                .iter_mut()
                .zip(held_all.iter_mut())
                .zip(healthy.iter_mut())
                .zip(scratch.iter_mut())
                .enumerate()
            {
                step_env(i, env, held, ok, sc);
            }
        } else {
            let mut run = || {
                envs.par_iter_mut()
                    .zip_eq(held_all.par_iter_mut())
                    .zip_eq(healthy.par_iter_mut())
                    .zip_eq(scratch.par_iter_mut())
                    .enumerate()
                    .for_each(|(i, (((env, held), ok), sc))| step_env(i, env, held, ok, sc));
            };
            match &self.pool {
                Some(pool) => pool.install(run),
                None => run(),
            }
        }
    }

    /// One control step with a fixed per-environment command list.
    pub fn step_commands(&mut self, commands: &[ControlCommand<T>]) {
        assert_eq!(commands.len(), self.num_envs(), "command count");
        self.step_with(None, |i, _| Some(commands[i].clone()));
    }

    /// Motor and rigid-body updates only, tracking the same RPM setpoints in
    /// every environment. No controller, allocation or collision work runs.
    pub fn step_rpm_setpoints(&mut self, rpm_ref: &[T]) {
        assert_eq!(rpm_ref.len(), self.robot.motors.len(), "setpoint count");
        let substeps = self.options.substeps;
        let dt_sub = self.options.control_dt / real::<T>(substeps as f64);
        let params = &self.params;
        let motors = &self.robot.motors;
        let integrator = self.options.integrator;
        let envs = self.store.envs_mut();
        let healthy = &mut self.healthy;

        let step_env = |env: &mut EnvState<T>, ok: &mut bool| {
            for _ in 0..substeps {
                for (rpm, (&r_ref, m)) in env.rpm.iter_mut().zip(rpm_ref.iter().zip(motors)) {
                    *rpm = step_rpm(*rpm, r_ref, m, dt_sub, integrator);
                }
                let rotor = aggregate_motor_wrench(motors, &env.rpm);
                *ok = step_rigid_body(env, params, &rotor, dt_sub) && *ok;
            }
        };

        if self.options.workers == 1 {
            for (env, ok) in envs.iter_mut().zip(healthy.iter_mut()) {
                step_env(env, ok);
            }
        } else {
            let mut run = || {
                envs.par_iter_mut()
                    .zip_eq(healthy.par_iter_mut())
                    .for_each(|(env, ok)| step_env(env, ok));
            };
            match &self.pool {
                Some(pool) => pool.install(run),
                None => run(),
            }
        }
    }
}
