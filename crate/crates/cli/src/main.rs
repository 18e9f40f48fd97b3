//! `rotorsim`: benchmarks, rollouts and sensor dumps for the simulator.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rotorsim::tasks::{load_task_config, TaskConfig};

use rotorsim_cli::bench::{bench_physics, bench_render, BenchOpts};
use rotorsim_cli::frames::dump_sensor_frames;
use rotorsim_cli::record::{build_task, record_trajectory, run_rollout, Policy, PolicyDriver};
use rotorsim_cli::setup::{
    camera_sensor, load_robot, load_sensor, load_world, parse_resolution, CliError, Pose,
};

#[derive(Parser)]
#[command(
    name = "rotorsim",
    version,
    about = "Batched n-rotor simulator: benchmarks, rollouts, sensor dumps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Motor + rigid-body throughput under constant RPM setpoints.
    BenchPhysics {
        #[arg(long, default_value_t = 1024)]
        num_envs: usize,
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        /// Physics step length (s).
        #[arg(long, default_value_t = 0.01)]
        dt: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// 1 = serial, 0 = process-wide pool, n = dedicated pool.
        #[arg(long, default_value_t = 0)]
        workers: usize,
        /// Robot TOML; defaults to a built-in 1 kg quad.
        #[arg(long)]
        robot: Option<PathBuf>,
    },
    /// Depth-camera throughput with the position controller in the loop.
    BenchRender {
        #[arg(long, default_value_t = 16)]
        num_envs: usize,
        #[arg(long, default_value_t = 100)]
        frames: usize,
        /// Control step length (s).
        #[arg(long, default_value_t = 0.01)]
        dt: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        workers: usize,
        #[arg(long)]
        robot: Option<PathBuf>,
        /// Scene TOML; defaults to 20 random cubes ahead of the robots.
        #[arg(long)]
        env: Option<PathBuf>,
        /// Sensor TOML; defaults to a forward 90 degree depth camera.
        #[arg(long)]
        sensor: Option<PathBuf>,
        /// Image size WxH, e.g. 480x270.
        #[arg(long, value_parser = parse_resolution)]
        resolution: Option<(usize, usize)>,
    },
    /// Roll a task out under a policy and print a summary.
    RunTask {
        /// Task TOML; defaults to the position task with default settings.
        #[arg(long)]
        task: Option<PathBuf>,
        #[arg(long, default_value_t = 16)]
        num_envs: usize,
        #[arg(long, default_value_t = 500)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long)]
        robot: Option<PathBuf>,
        /// Scene TOML for the navigation task.
        #[arg(long)]
        env: Option<PathBuf>,
        /// hover, random or scripted-waypoints.
        #[arg(long, default_value = "random")]
        policy: Policy,
    },
    /// Record a rollout as CSV (same seed, same bytes).
    Record {
        #[arg(long)]
        task: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        num_envs: usize,
        #[arg(long, default_value_t = 500)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long)]
        robot: Option<PathBuf>,
        #[arg(long)]
        env: Option<PathBuf>,
        #[arg(long, default_value = "hover")]
        policy: Policy,
        /// CSV file to write.
        #[arg(long)]
        output: PathBuf,
    },
    /// Render a sensor at fixed poses and dump every channel to files.
    DumpFrames {
        #[arg(long)]
        env: Option<PathBuf>,
        #[arg(long)]
        sensor: Option<PathBuf>,
        #[arg(long, value_parser = parse_resolution)]
        resolution: Option<(usize, usize)>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Body pose `x,y,z` or `x,y,z,roll,pitch,yaw` (m, rad); repeatable.
        #[arg(long)]
        pose: Vec<Pose>,
        /// Directory for the dumped files.
        #[arg(long)]
        output: PathBuf,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}

fn load_task(path: Option<&PathBuf>) -> Result<TaskConfig<f64>, CliError> {
    match path {
        Some(p) => Ok(load_task_config(p)?),
        None => Ok(TaskConfig::default()),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::BenchPhysics {
            num_envs,
            steps,
            dt,
            seed,
            workers,
            robot,
        } => {
            let robot = load_robot(robot.as_deref())?;
            let report = bench_physics(robot, num_envs, steps, BenchOpts { dt, seed, workers })?;
            print!("{}", report.text());
        }
        Command::BenchRender {
            num_envs,
            frames,
            dt,
            seed,
            workers,
            robot,
            env,
            sensor,
            resolution,
        } => {
            let robot = load_robot(robot.as_deref())?;
            let world = load_world(env.as_deref(), 20, seed)?;
            let camera = camera_sensor(load_sensor(sensor.as_deref(), resolution)?)?;
            let report = bench_render(
                robot,
                num_envs,
                frames,
                camera,
                &world,
                BenchOpts { dt, seed, workers },
            )?;
            print!("{}", report.text());
        }
        Command::RunTask {
            task,
            num_envs,
            steps,
            seed,
            workers,
            robot,
            env,
            policy,
        } => {
            let robot = load_robot(robot.as_deref())?;
            let cfg = load_task(task.as_ref())?;
            let world = env
                .as_deref()
                .map(|p| load_world(Some(p), 20, seed))
                .transpose()?;
            let mut driver = PolicyDriver::new(policy, &cfg, &robot, num_envs, seed)?;
            let control_dt = cfg.control_dt;
            let mut task = build_task(robot, cfg, world, num_envs, seed, workers)?;
            let summary = run_rollout(
                "run-task",
                task.as_mut(),
                &mut driver,
                steps,
                control_dt,
                seed,
                None,
            )?;
            print!("{}", summary.report.text());
            println!("mean_reward: {:?}", summary.mean_reward);
            println!("episodes_finished: {}", summary.episodes_finished);
        }
        Command::Record {
            task,
            num_envs,
            steps,
            seed,
            workers,
            robot,
            env,
            policy,
            output,
        } => {
            let robot = load_robot(robot.as_deref())?;
            let mut cfg = load_task(task.as_ref())?;
            // A mid-recording truncation teleports the robot; keep episodes
            // at least as long as the recording.
            cfg.episode_length = cfg.episode_length.max(steps);
            let world = env
                .as_deref()
                .map(|p| load_world(Some(p), 20, seed))
                .transpose()?;
            let mut driver = PolicyDriver::new(policy, &cfg, &robot, num_envs, seed)?;
            let control_dt = cfg.control_dt;
            let mut task = build_task(robot, cfg, world, num_envs, seed, workers)?;
            let summary =
                record_trajectory(&output, task.as_mut(), &mut driver, steps, control_dt, seed)?;
            print!("{}", summary.report.text());
            println!("output: {}", output.display());
        }
        Command::DumpFrames {
            env,
            sensor,
            resolution,
            seed,
            pose,
            output,
        } => {
            let world = load_world(env.as_deref(), 20, seed)?;
            let sensor = load_sensor(sensor.as_deref(), resolution)?;
            let poses = if pose.is_empty() {
                vec![Pose::default()]
            } else {
                pose
            };
            let files = dump_sensor_frames(&world, &sensor, &poses, &output)?;
            for f in &files {
                println!("wrote {}", f.display());
            }
        }
    }
    Ok(())
}
