//! Depth camera and LiDAR sensors built on the ray caster.
//!
//! Cameras follow the pinhole model: the ray of pixel `(i, j)` points along
//! `((i - cx)/fx, (j - cy)/fy, 1)` in the optical frame (z forward, x right
//! in the image, y down). `depth` is distance along the optical axis,
//! `range` the Euclidean ray length, so `range = depth * sqrt(1 + x'^2 +
//! y'^2)` at every valid pixel. Invalid pixels (miss, or outside the clip
//! window) carry -1 in scalar channels and -1 ids.

use nalgebra::{Matrix3, Rotation3, UnitQuaternion, Vector3};

use crate::config::{CameraConfig, LidarConfig};
use crate::render::WorldMesh;
use crate::{real, Real};

/// Occlusion checks ignore hits within this distance of either endpoint.
const STEREO_EPS: f64 = 1e-4;

/// Pinhole depth camera and its mounting on the vehicle body.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraModel<T: Real> {
    pub width: usize,
    pub height: usize,
    pub fx: T,
    pub fy: T,
    pub cx: T,
    pub cy: T,
    pub t_min: T,
    pub t_max: T,
    /// Optical center in the body frame.
    pub mount_position: Vector3<T>,
    /// Body-from-camera rotation.
    pub mount_rotation: UnitQuaternion<T>,
    /// Stereo baseline along camera +x (m); 0 disables shadowing.
    pub baseline: T,
}

impl<T: Real> CameraModel<T> {
    /// Forward-looking mount: optical axis along body +x, image x along
    /// body -y, image y along body -z.
    pub fn forward_mount() -> UnitQuaternion<T> {
        let m = Matrix3::new(
            T::zero(),
            T::zero(),
            T::one(),
            -T::one(),
            T::zero(),
            T::zero(),
            T::zero(),
            -T::one(),
            T::zero(),
        );
        UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(m))
    }

    /// Square-pixel camera from a horizontal field of view (rad); the
    /// principal point sits at the pixel-grid center.
    pub fn with_fov(width: usize, height: usize, fov: T, t_min: T, t_max: T) -> Self {
        let two = real::<T>(2.0);
        let fx = real::<T>(width as f64) / (two * (fov / two).tan());
        Self {
            width,
            height,
            fx,
            fy: fx,
            cx: real::<T>((width as f64 - 1.0) / 2.0),
            cy: real::<T>((height as f64 - 1.0) / 2.0),
            t_min,
            t_max,
            mount_position: Vector3::zeros(),
            mount_rotation: Self::forward_mount(),
            baseline: T::zero(),
        }
    }

    /// Resolve a config block. `rotation_rpy`, when present, rotates the
    /// forward-looking mount (so pitching -0.5 looks down half a radian).
    pub fn from_config(config: &CameraConfig<T>) -> Self {
        let mut cam = match config.fov_deg {
            Some(fov) => Self::with_fov(
                config.width,
                config.height,
                fov * real(std::f64::consts::PI / 180.0),
                config.t_min,
                config.t_max,
            ),
            None => Self::with_fov(
                config.width,
                config.height,
                real(std::f64::consts::FRAC_PI_2),
                config.t_min,
                config.t_max,
            ),
        };
        if let Some(fx) = config.fx {
            cam.fx = fx;
        }
        if let Some(fy) = config.fy {
            cam.fy = fy;
        }
        if let Some(cx) = config.cx {
            cam.cx = cx;
        }
        if let Some(cy) = config.cy {
            cam.cy = cy;
        }
        cam.mount_position = config.position;
        if let Some(rpy) = config.rotation_rpy {
            cam.mount_rotation =
                UnitQuaternion::from_euler_angles(rpy.x, rpy.y, rpy.z) * Self::forward_mount();
        }
        cam.baseline = config.baseline;
        cam
    }

    /// Unit ray of pixel `(col, row)` in the optical frame.
    pub fn pixel_dir(&self, col: usize, row: usize) -> Vector3<T> {
        let x = (real::<T>(col as f64) - self.cx) / self.fx;
        let y = (real::<T>(row as f64) - self.cy) / self.fy;
        Vector3::new(x, y, T::one()).normalize()
    }

    /// World-frame optical center and world-from-camera rotation for a body
    /// at the given pose.
    pub fn world_pose(
        &self,
        body_position: &Vector3<T>,
        body_orientation: &UnitQuaternion<T>,
    ) -> (Vector3<T>, UnitQuaternion<T>) {
        let origin = body_position + body_orientation.transform_vector(&self.mount_position);
        (origin, body_orientation * self.mount_rotation)
    }
}

/// Output buffers of one sensor sweep, row major.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorImage<T: Real> {
    pub width: usize,
    pub height: usize,
    /// Distance along the optical axis; equals `range` for LiDAR.
    pub depth: Vec<T>,
    /// Euclidean distance along the ray.
    pub range: Vec<T>,
    pub segmentation: Vec<i32>,
    pub instance: Vec<i32>,
    pub face: Vec<i32>,
    /// Unit winding normal of the hit triangle; zero when invalid.
    pub normal: Vec<Vector3<T>>,
    /// Barycentric weights of the hit triangle's second and third corner.
    pub barycentric: Vec<[T; 2]>,
    pub valid: Vec<bool>,
}

impl<T: Real> SensorImage<T> {
    pub fn new(width: usize, height: usize) -> Self {
        let n = width * height;
        let mut img = Self {
            width,
            height,
            depth: vec![T::zero(); n],
            range: vec![T::zero(); n],
            segmentation: vec![0; n],
            instance: vec![0; n],
            face: vec![0; n],
            normal: vec![Vector3::zeros(); n],
            barycentric: vec![[T::zero(); 2]; n],
            valid: vec![false; n],
        };
        for i in 0..n {
            img.invalidate(i);
        }
        img
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, col: usize, row: usize) -> usize {
        row * self.width + col
    }

    /// Write the miss sentinels into one pixel.
    pub fn invalidate(&mut self, idx: usize) {
        self.depth[idx] = -T::one();
        self.range[idx] = -T::one();
        self.segmentation[idx] = -1;
        self.instance[idx] = -1;
        self.face[idx] = -1;
        self.normal[idx] = Vector3::zeros();
        self.barycentric[idx] = [T::zero(); 2];
        self.valid[idx] = false;
    }

    pub fn num_valid(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }
}

/// Render a depth camera into an existing image buffer.
pub fn render_camera_into<T: Real>(
    world: &WorldMesh<T>,
    camera: &CameraModel<T>,
    body_position: &Vector3<T>,
    body_orientation: &UnitQuaternion<T>,
    img: &mut SensorImage<T>,
) {
    assert_eq!((img.width, img.height), (camera.width, camera.height));
    let (origin, r_wc) = camera.world_pose(body_position, body_orientation);
    for row in 0..camera.height {
        for col in 0..camera.width {
            let idx = img.index(col, row);
            let dir_cam = camera.pixel_dir(col, row);
            let dir_world = r_wc.transform_vector(&dir_cam);
            match world.cast_ray(&origin, &dir_world, camera.t_min, camera.t_max) {
                Some(hit) => {
                    img.depth[idx] = hit.t * dir_cam.z;
                    img.range[idx] = hit.t;
                    img.segmentation[idx] = hit.segmentation_id;
                    img.instance[idx] = hit.instance as i32;
                    img.face[idx] = hit.face as i32;
                    img.normal[idx] = world.hit_normal(&hit);
                    img.barycentric[idx] = [hit.u, hit.v];
                    img.valid[idx] = true;
                }
                None => img.invalidate(idx),
            }
        }
    }
}

/// Render a depth camera into a fresh image.
pub fn render_camera<T: Real>(
    world: &WorldMesh<T>,
    camera: &CameraModel<T>,
    body_position: &Vector3<T>,
    body_orientation: &UnitQuaternion<T>,
) -> SensorImage<T> {
    let mut img = SensorImage::new(camera.width, camera.height);
    render_camera_into(world, camera, body_position, body_orientation, &mut img);
    img
}

/// Invalidate pixels whose hit point is occluded from a second viewpoint
/// displaced by the stereo baseline along camera +x, the way a stereo
/// matcher loses correspondences in the right image. Returns the number of
/// pixels invalidated; zero baseline shadows nothing.
pub fn apply_stereo_shadow<T: Real>(
    world: &WorldMesh<T>,
    camera: &CameraModel<T>,
    body_position: &Vector3<T>,
    body_orientation: &UnitQuaternion<T>,
    img: &mut SensorImage<T>,
) -> usize {
    if camera.baseline <= T::zero() {
        return 0;
    }
    let (origin, r_wc) = camera.world_pose(body_position, body_orientation);
    let right_origin =
        origin + r_wc.transform_vector(&Vector3::new(camera.baseline, T::zero(), T::zero()));
    let eps = real::<T>(STEREO_EPS);
    let mut shadowed = 0;
    for row in 0..camera.height {
        for col in 0..camera.width {
            let idx = img.index(col, row);
            if !img.valid[idx] {
                continue;
            }
            let dir_cam = camera.pixel_dir(col, row);
            let point = origin + r_wc.transform_vector(&dir_cam) * img.range[idx];
            let offset = point - right_origin;
            let dist = offset.norm();
            if dist <= eps {
                continue;
            }
            let dir = offset / dist;
            if world
                .cast_ray(&right_origin, &dir, eps, dist - eps)
                .is_some()
            {
                img.invalidate(idx);
                shadowed += 1;
            }
        }
    }
    shadowed
}

/// Fixed grid of LiDAR beams and its mounting on the body.
#[derive(Debug, Clone, PartialEq)]
pub struct LidarPattern<T: Real> {
    /// Beam azimuths (rad) about sensor z, measured from sensor +x.
    pub azimuths: Vec<T>,
    /// Beam elevations (rad) above the sensor x-y plane.
    pub elevations: Vec<T>,
    pub t_min: T,
    pub t_max: T,
    pub mount_position: Vector3<T>,
    /// Body-from-sensor rotation; identity aligns sensor and body axes.
    pub mount_rotation: UnitQuaternion<T>,
}

impl<T: Real> LidarPattern<T> {
    /// Evenly spaced grid. Azimuths exclude the range end (a full-circle
    /// sweep does not duplicate the wrap-around beam); elevations include
    /// both ends.
    pub fn grid(
        azimuth_range: [T; 2],
        azimuth_count: usize,
        elevation_range: [T; 2],
        elevation_count: usize,
        t_min: T,
        t_max: T,
    ) -> Self {
        let az_step = (azimuth_range[1] - azimuth_range[0]) / real(azimuth_count as f64);
        let azimuths = (0..azimuth_count)
            .map(|i| azimuth_range[0] + az_step * real(i as f64))
            .collect();
        let elevations = if elevation_count == 1 {
            vec![elevation_range[0]]
        } else {
            let el_step =
                (elevation_range[1] - elevation_range[0]) / real((elevation_count - 1) as f64);
            (0..elevation_count)
                .map(|i| elevation_range[0] + el_step * real(i as f64))
                .collect()
        };
        Self {
            azimuths,
            elevations,
            t_min,
            t_max,
            mount_position: Vector3::zeros(),
            mount_rotation: UnitQuaternion::identity(),
        }
    }

    pub fn from_config(config: &LidarConfig<T>) -> Self {
        let mut pattern = Self::grid(
            config.azimuth_range,
            config.azimuth_count,
            config.elevation_range,
            config.elevation_count,
            config.t_min,
            config.t_max,
        );
        pattern.mount_position = config.position;
        pattern.mount_rotation = UnitQuaternion::from_euler_angles(
            config.rotation_rpy.x,
            config.rotation_rpy.y,
            config.rotation_rpy.z,
        );
        pattern
    }

    /// Unit beam direction in the sensor frame.
    pub fn beam_dir(azimuth: T, elevation: T) -> Vector3<T> {
        let (sin_e, cos_e) = elevation.sin_cos();
        let (sin_a, cos_a) = azimuth.sin_cos();
        Vector3::new(cos_e * cos_a, cos_e * sin_a, sin_e)
    }
}

/// Render a LiDAR sweep: one row per elevation, one column per azimuth.
/// `depth` duplicates `range` since beams have no projection plane.
pub fn render_lidar<T: Real>(
    world: &WorldMesh<T>,
    pattern: &LidarPattern<T>,
    body_position: &Vector3<T>,
    body_orientation: &UnitQuaternion<T>,
) -> SensorImage<T> {
    let mut img = SensorImage::new(pattern.azimuths.len(), pattern.elevations.len());
    let origin = body_position + body_orientation.transform_vector(&pattern.mount_position);
    let r_ws = body_orientation * pattern.mount_rotation;
    for (row, &el) in pattern.elevations.iter().enumerate() {
        for (col, &az) in pattern.azimuths.iter().enumerate() {
            let idx = img.index(col, row);
            let dir = r_ws.transform_vector(&LidarPattern::beam_dir(az, el));
            match world.cast_ray(&origin, &dir, pattern.t_min, pattern.t_max) {
                Some(hit) => {
                    img.depth[idx] = hit.t;
                    img.range[idx] = hit.t;
                    img.segmentation[idx] = hit.segmentation_id;
                    img.instance[idx] = hit.instance as i32;
                    img.face[idx] = hit.face as i32;
                    img.normal[idx] = world.hit_normal(&hit);
                    img.barycentric[idx] = [hit.u, hit.v];
                    img.valid[idx] = true;
                }
                None => img.invalidate(idx),
            }
        }
    }
    img
}
