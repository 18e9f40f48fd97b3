//! Sensor frame dumps: every image channel of every pose as PGM or CSV.

use std::fmt::Display;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rotorsim::config::SensorConfig;
use rotorsim::render::camera::{apply_stereo_shadow, render_camera, render_lidar};
use rotorsim::render::export::{lidar_points, write_pgm16, write_point_cloud_csv};
use rotorsim::render::{CameraModel, LidarPattern, SensorImage};
use rotorsim::WorldMesh;

use crate::setup::{CliError, Pose};

/// Render the sensor at each pose and write one file per channel:
/// `pose000_depth.pgm`, `pose000_range.pgm`, plus CSV grids for
/// segmentation, instance, face, normal, barycentric and validity. LiDAR
/// poses get a range PGM and a sensor-frame point cloud instead. Returns
/// the created paths.
pub fn dump_sensor_frames(
    world: &WorldMesh<f64>,
    sensor: &SensorConfig<f64>,
    poses: &[Pose],
    out_dir: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    for (k, pose) in poses.iter().enumerate() {
        match sensor {
            SensorConfig::Camera(config) => {
                let camera = CameraModel::from_config(config);
                let mut img = render_camera(world, &camera, &pose.position, &pose.orientation);
                if camera.baseline > 0.0 {
                    apply_stereo_shadow(
                        world,
                        &camera,
                        &pose.position,
                        &pose.orientation,
                        &mut img,
                    );
                }
                dump_image(&img, out_dir, k, &mut written)?;
            }
            SensorConfig::Lidar(config) => {
                let pattern = LidarPattern::from_config(config);
                let img = render_lidar(world, &pattern, &pose.position, &pose.orientation);
                let path = out_dir.join(format!("pose{k:03}_range.pgm"));
                write_pgm16(&path, img.width, img.height, &img.range)?;
                written.push(path);
                let path = out_dir.join(format!("pose{k:03}_points.csv"));
                write_point_cloud_csv(&path, &lidar_points(&pattern, &img))?;
                written.push(path);
            }
        }
    }
    Ok(written)
}

fn dump_image(
    img: &SensorImage<f64>,
    out_dir: &Path,
    k: usize,
    written: &mut Vec<PathBuf>,
) -> Result<(), CliError> {
    let file = |name: &str| out_dir.join(format!("pose{k:03}_{name}"));

    let path = file("depth.pgm");
    write_pgm16(&path, img.width, img.height, &img.depth)?;
    written.push(path);
    let path = file("range.pgm");
    write_pgm16(&path, img.width, img.height, &img.range)?;
    written.push(path);

    let path = file("segmentation.csv");
    write_grid_csv(&path, img.width, &img.segmentation)?;
    written.push(path);
    let path = file("instance.csv");
    write_grid_csv(&path, img.width, &img.instance)?;
    written.push(path);
    let path = file("face.csv");
    write_grid_csv(&path, img.width, &img.face)?;
    written.push(path);

    let path = file("normal.csv");
    write_vector_csv(&path, img.width, img.normal.iter().map(|n| [n.x, n.y, n.z]))?;
    written.push(path);
    let path = file("barycentric.csv");
    write_vector_csv(&path, img.width, img.barycentric.iter().copied())?;
    written.push(path);

    let path = file("valid.csv");
    write_grid_csv(
        &path,
        img.width,
        &img.valid.iter().map(|&v| v as u8).collect::<Vec<_>>(),
    )?;
    written.push(path);
    Ok(())
}

/// One image row per line, comma-separated values.
fn write_grid_csv<V: Display>(path: &Path, width: usize, values: &[V]) -> Result<(), CliError> {
    let mut out = BufWriter::new(File::create(path)?);
    for row in values.chunks(width) {
        let mut first = true;
        for v in row {
            if !first {
                write!(out, ",")?;
            }
            write!(out, "{v}")?;
            first = false;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

/// One image row per line; each pixel contributes its components in order.
fn write_vector_csv<const N: usize>(
    path: &Path,
    width: usize,
    values: impl Iterator<Item = [f64; N]>,
) -> Result<(), CliError> {
    let mut out = BufWriter::new(File::create(path)?);
    let mut col = 0;
    for v in values {
        for (j, x) in v.iter().enumerate() {
            if col > 0 || j > 0 {
                write!(out, ",")?;
            }
            write!(out, "{x:?}")?;
        }
        col += 1;
        if col == width {
            writeln!(out)?;
            col = 0;
        }
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::setup::{cube_field_scene, load_sensor};
    use nalgebra::Vector3;
    use rotorsim::mesh::TriangleMesh;
    use rotorsim::render::export::read_pgm16;

    fn camera_sensor(width: usize, height: usize, baseline: f64) -> SensorConfig<f64> {
        match load_sensor(None, Some((width, height))).unwrap() {
            SensorConfig::Camera(mut c) => {
                c.baseline = baseline;
                SensorConfig::Camera(c)
            }
            SensorConfig::Lidar(_) => unreachable!(),
        }
    }

    #[test]
    fn empty_scene_dumps_sentinel_depth() {
        let dir = tempfile::tempdir().unwrap();
        let world = WorldMesh::from_instances(Vec::new(), Vec::new());
        let files = dump_sensor_frames(
            &world,
            &camera_sensor(8, 6, 0.0),
            &[Pose::default()],
            dir.path(),
        )
        .unwrap();
        assert_eq!(files.len(), 8);
        let (w, h, samples) = read_pgm16(dir.path().join("pose000_depth.pgm")).unwrap();
        assert_eq!((w, h), (8, 6));
        assert!(samples.iter().all(|&s| s == 0), "misses must quantize to 0");
    }

    #[test]
    fn cube_scene_depth_is_nonzero_in_footprint_only() {
        let dir = tempfile::tempdir().unwrap();
        let world = WorldMesh::single(TriangleMesh::cuboid(Vector3::new(0.5, 0.5, 0.5)));
        // Camera 3 m back along -x looking forward at the cube.
        let pose: Pose = "-3,0,0".parse().unwrap();
        dump_sensor_frames(&world, &camera_sensor(32, 24, 0.0), &[pose], dir.path()).unwrap();
        let (_, _, samples) = read_pgm16(dir.path().join("pose000_depth.pgm")).unwrap();
        let hits = samples.iter().filter(|&&s| s > 0).count();
        assert!(hits > 0, "cube must be visible");
        assert!(hits < samples.len(), "cube must not fill the frame");
        // Valid grid agrees with the PGM sentinel pattern.
        let valid = std::fs::read_to_string(dir.path().join("pose000_valid.csv")).unwrap();
        let flags: Vec<u8> = valid
            .lines()
            .flat_map(|l| l.split(',').map(|v| v.parse().unwrap()))
            .collect();
        for (s, v) in samples.iter().zip(flags) {
            assert_eq!(*s > 0, v == 1);
        }
    }

    #[test]
    fn stereo_baseline_invalidates_extra_pixels() {
        let dir = tempfile::tempdir().unwrap();
        let world = cube_field_scene(20, 11);
        let pose = Pose::default();
        let count_valid = |baseline: f64, sub: &str| {
            let d = dir.path().join(sub);
            dump_sensor_frames(
                &world,
                &camera_sensor(64, 48, baseline),
                std::slice::from_ref(&pose),
                &d,
            )
            .unwrap();
            let text = std::fs::read_to_string(d.join("pose000_valid.csv")).unwrap();
            text.split(',')
                .flat_map(|v| v.trim().parse::<u8>())
                .filter(|&v| v == 1)
                .count()
        };
        let plain = count_valid(0.0, "plain");
        let stereo = count_valid(0.05, "stereo");
        assert!(plain > 0);
        assert!(
            stereo < plain,
            "stereo shadow must drop pixels: {stereo} vs {plain}"
        );
    }

    #[test]
    fn lidar_dumps_points_and_range() {
        let dir = tempfile::tempdir().unwrap();
        let world = WorldMesh::single(TriangleMesh::cuboid(Vector3::new(4.0, 4.0, 4.0)));
        let sensor = SensorConfig::Lidar(rotorsim::config::LidarConfig {
            azimuth_range: [-std::f64::consts::PI, std::f64::consts::PI],
            azimuth_count: 16,
            elevation_range: [-0.3, 0.3],
            elevation_count: 4,
            t_min: 0.1,
            t_max: 50.0,
            position: Vector3::zeros(),
            rotation_rpy: Vector3::zeros(),
        });
        let files = dump_sensor_frames(&world, &sensor, &[Pose::default()], dir.path()).unwrap();
        assert_eq!(files.len(), 2);
        let points = std::fs::read_to_string(dir.path().join("pose000_points.csv")).unwrap();
        // Header plus one return per beam from inside a closed box.
        assert_eq!(points.lines().count(), 1 + 16 * 4);
    }
}
