//! Shared input handling: config loading, default scenes, flag parsing.

use std::path::Path;
use std::str::FromStr;

use nalgebra::{UnitQuaternion, Vector3};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rotorsim::config::{
    load_environment_config, load_robot_config, load_sensor_config, quad_x_config, SensorConfig,
};
use rotorsim::mesh::TriangleMesh;
use rotorsim::render::ObstacleInstance;
use rotorsim::{CameraModel, RobotConfig, WorldMesh};

/// One error type for the whole binary; every failure ends up on stderr.
pub type CliError = Box<dyn std::error::Error + Send + Sync>;

/// The robot from `--robot`, or the built-in 1 kg quad with 0.17 m arms.
pub fn load_robot(path: Option<&Path>) -> Result<RobotConfig<f64>, CliError> {
    match path {
        Some(p) => Ok(load_robot_config(p)?),
        None => Ok(quad_x_config(1.0, 0.17)),
    }
}

/// The scene from `--env`, or the default field of `count` unit cubes ahead
/// of the origin. Mesh paths in the config resolve relative to its directory.
pub fn load_world(
    path: Option<&Path>,
    count: usize,
    seed: u64,
) -> Result<WorldMesh<f64>, CliError> {
    match path {
        Some(p) => {
            let config = load_environment_config::<f64>(p)?;
            let base = p.parent().unwrap_or_else(|| Path::new("."));
            let mut meshes = Vec::with_capacity(config.obstacle_assets.len());
            for asset in &config.obstacle_assets {
                let asset_path = base.join(asset);
                let (mesh, _skipped) = TriangleMesh::load_obj(&asset_path)?;
                meshes.push(mesh);
            }
            Ok(WorldMesh::build_world(&config, meshes))
        }
        None => Ok(cube_field_scene(count, seed)),
    }
}

/// A field of unit cubes scattered in front of the origin (+x), the default
/// render-benchmark scene. Draws per cube, in order: position (3),
/// roll/pitch/yaw (3), scale (1).
pub fn cube_field_scene(count: usize, seed: u64) -> WorldMesh<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cube = TriangleMesh::cuboid(Vector3::new(0.5, 0.5, 0.5));
    let instances = (0..count)
        .map(|i| {
            let position = Vector3::new(
                rng.random_range(3.0..15.0),
                rng.random_range(-6.0..6.0),
                rng.random_range(-2.0..6.0),
            );
            let roll = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
            let pitch = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
            let yaw = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
            let scale = rng.random_range(0.6..1.8);
            ObstacleInstance {
                mesh_index: 0,
                position,
                rotation: UnitQuaternion::from_euler_angles(roll, pitch, yaw),
                scale,
                segmentation_id: i as i32 + 1,
            }
        })
        .collect();
    WorldMesh::from_instances(vec![cube], instances)
}

/// The sensor from `--sensor`, or a forward 90 degree depth camera at the
/// given (or default 480x270) resolution with a 30 m far clip.
pub fn load_sensor(
    path: Option<&Path>,
    resolution: Option<(usize, usize)>,
) -> Result<SensorConfig<f64>, CliError> {
    match path {
        Some(p) => {
            let mut sensor = load_sensor_config::<f64>(p)?;
            if let (SensorConfig::Camera(c), Some((w, h))) = (&mut sensor, resolution) {
                // New size, recentered principal point; an explicit focal
                // length survives, a field of view is recomputed.
                c.width = w;
                c.height = h;
                c.cx = None;
                c.cy = None;
            }
            Ok(sensor)
        }
        None => {
            let (width, height) = resolution.unwrap_or((480, 270));
            Ok(SensorConfig::Camera(rotorsim::config::CameraConfig {
                width,
                height,
                fov_deg: Some(90.0),
                fx: None,
                fy: None,
                cx: None,
                cy: None,
                t_min: 0.1,
                t_max: 30.0,
                position: Vector3::zeros(),
                rotation_rpy: None,
                baseline: 0.0,
            }))
        }
    }
}

/// The camera for render benchmarks; LiDAR configs are rejected here.
pub fn camera_sensor(sensor: SensorConfig<f64>) -> Result<CameraModel<f64>, CliError> {
    match sensor {
        SensorConfig::Camera(c) => Ok(CameraModel::from_config(&c)),
        SensorConfig::Lidar(_) => Err("this command needs a camera sensor, got a lidar".into()),
    }
}

/// `WxH` image size, e.g. `480x270`.
pub fn parse_resolution(text: &str) -> Result<(usize, usize), CliError> {
    let (w, h) = text
        .split_once(['x', 'X'])
        .ok_or("resolution must look like WxH, e.g. 480x270")?;
    let width: usize = w.trim().parse().map_err(|_| "bad resolution width")?;
    let height: usize = h.trim().parse().map_err(|_| "bad resolution height")?;
    if width == 0 || height == 0 {
        return Err("resolution sides must be positive".into());
    }
    Ok((width, height))
}

/// A body pose for frame dumps: `x,y,z` or `x,y,z,roll,pitch,yaw`, meters
/// and radians.
#[derive(Debug, Clone, PartialEq)]
pub struct Pose {
    pub position: Vector3<f64>,
    pub orientation: UnitQuaternion<f64>,
}

impl Default for Pose {
    fn default() -> Self {
        Self {
            position: Vector3::zeros(),
            orientation: UnitQuaternion::identity(),
        }
    }
}

impl FromStr for Pose {
    type Err = String;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let values: Result<Vec<f64>, _> = text.split(',').map(|v| v.trim().parse()).collect();
        let values = values.map_err(|_| format!("bad pose number in {text:?}"))?;
        match values.len() {
            3 => Ok(Pose {
                position: Vector3::new(values[0], values[1], values[2]),
                orientation: UnitQuaternion::identity(),
            }),
            6 => Ok(Pose {
                position: Vector3::new(values[0], values[1], values[2]),
                orientation: UnitQuaternion::from_euler_angles(values[3], values[4], values[5]),
            }),
            n => Err(format!("pose needs 3 or 6 comma-separated values, got {n}")),
        }
    }
}
