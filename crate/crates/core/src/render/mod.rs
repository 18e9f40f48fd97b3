//! Ray-casting renderer over instanced triangle meshes.
//!
//! A [`WorldMesh`] flattens mesh instances into one world-space triangle
//! soup with a BVH on top. Cameras and LiDAR patterns cast rays against it;
//! every query can also run brute force over the soup, which tests use as
//! the ground-truth oracle.

pub mod bvh;
pub mod camera;
pub mod export;

pub use bvh::{point_triangle_distance_sq, ray_triangle, Bvh, BvhHit, Triangle};
pub use camera::{CameraModel, LidarPattern, SensorImage};

use nalgebra::{UnitQuaternion, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::EnvironmentConfig;
use crate::mesh::TriangleMesh;
use crate::rand_util::uniform;
use crate::Real;

/// One placed copy of a source mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct ObstacleInstance<T: Real> {
    pub mesh_index: usize,
    pub position: Vector3<T>,
    pub rotation: UnitQuaternion<T>,
    pub scale: T,
    /// Value reported in segmentation channels for hits on this instance.
    pub segmentation_id: i32,
}

/// A ray hit enriched with scene bookkeeping. `u`/`v` are barycentric
/// weights of the triangle's second and third corner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayHit<T: Real> {
    pub t: T,
    /// Index into the flattened world triangle soup.
    pub triangle: u32,
    pub instance: u32,
    /// Face index within the instance's source mesh.
    pub face: u32,
    pub u: T,
    pub v: T,
    pub segmentation_id: i32,
}

/// All scene geometry, flattened to world space and indexed by a BVH.
pub struct WorldMesh<T: Real> {
    meshes: Vec<TriangleMesh<T>>,
    instances: Vec<ObstacleInstance<T>>,
    triangles: Vec<Triangle<T>>,
    /// Per-soup-triangle (instance, source face) pair.
    meta: Vec<(u32, u32)>,
    bvh: Bvh<T>,
}

impl<T: Real> WorldMesh<T> {
    /// Place instances of the given meshes explicitly.
    pub fn from_instances(
        meshes: Vec<TriangleMesh<T>>,
        instances: Vec<ObstacleInstance<T>>,
    ) -> Self {
        let mut world = Self {
            meshes,
            instances,
            triangles: Vec::new(),
            meta: Vec::new(),
            bvh: Bvh::build(&[]),
        };
        world.rebuild();
        world
    }

    /// One identity-placed instance of a single mesh.
    pub fn single(mesh: TriangleMesh<T>) -> Self {
        let seg = mesh.segmentation_id;
        Self::from_instances(
            vec![mesh],
            vec![ObstacleInstance {
                mesh_index: 0,
                position: Vector3::zeros(),
                rotation: UnitQuaternion::identity(),
                scale: T::one(),
                segmentation_id: seg,
            }],
        )
    }

    /// Sample an obstacle layout from the environment's ranges.
    ///
    /// Draws come from a stream seeded by `config.seed`, in a fixed order
    /// per obstacle: position (3), roll/pitch/yaw (3), scale (1). Obstacle
    /// `i` uses mesh `i % meshes.len()`; its segmentation id is the source
    /// mesh's id when nonzero, otherwise the instance index.
    pub fn build_world(config: &EnvironmentConfig<T>, meshes: Vec<TriangleMesh<T>>) -> Self {
        assert!(
            config.obstacle_count == 0 || !meshes.is_empty(),
            "obstacles requested but no meshes supplied"
        );
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let pr = &config.pose_randomization;
        let [s_lo, s_hi] = config.scale_randomization;
        let instances = (0..config.obstacle_count)
            .map(|i| {
                let position = Vector3::new(
                    uniform(&mut rng, pr.position_min.x, pr.position_max.x),
                    uniform(&mut rng, pr.position_min.y, pr.position_max.y),
                    uniform(&mut rng, pr.position_min.z, pr.position_max.z),
                );
                let roll = uniform(&mut rng, pr.rotation_min.x, pr.rotation_max.x);
                let pitch = uniform(&mut rng, pr.rotation_min.y, pr.rotation_max.y);
                let yaw = uniform(&mut rng, pr.rotation_min.z, pr.rotation_max.z);
                let scale = uniform(&mut rng, s_lo, s_hi);
                let mesh_index = i % meshes.len().max(1);
                let mesh_id = meshes[mesh_index].segmentation_id;
                ObstacleInstance {
                    mesh_index,
                    position,
                    rotation: UnitQuaternion::from_euler_angles(roll, pitch, yaw),
                    scale,
                    segmentation_id: if mesh_id != 0 { mesh_id } else { i as i32 },
                }
            })
            .collect();
        Self::from_instances(meshes, instances)
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_instances(&self) -> usize {
        self.instances.len()
    }

    pub fn instances(&self) -> &[ObstacleInstance<T>] {
        &self.instances
    }

    pub fn triangles(&self) -> &[Triangle<T>] {
        &self.triangles
    }

    /// Edit instance transforms, then reflatten and rebuild the BVH.
    pub fn update_instances(&mut self, mut edit: impl FnMut(usize, &mut ObstacleInstance<T>)) {
        for (i, inst) in self.instances.iter_mut().enumerate() {
            edit(i, inst);
        }
        self.rebuild();
    }

    fn rebuild(&mut self) {
        self.triangles.clear();
        self.meta.clear();
        for (ii, inst) in self.instances.iter().enumerate() {
            let mesh = &self.meshes[inst.mesh_index];
            let place =
                |v: &Vector3<T>| inst.rotation.transform_vector(&(v * inst.scale)) + inst.position;
            for fi in 0..mesh.num_faces() {
                let [a, b, c] = mesh.triangle(fi);
                self.triangles.push(Triangle {
                    a: place(&a),
                    b: place(&b),
                    c: place(&c),
                });
                self.meta.push((ii as u32, fi as u32));
            }
        }
        self.bvh = Bvh::build(&self.triangles);
    }

    fn enrich(&self, hit: BvhHit<T>) -> RayHit<T> {
        let (instance, face) = self.meta[hit.triangle as usize];
        RayHit {
            t: hit.t,
            triangle: hit.triangle,
            instance,
            face,
            u: hit.u,
            v: hit.v,
            segmentation_id: self.instances[instance as usize].segmentation_id,
        }
    }

    /// Closest hit through the BVH.
    pub fn cast_ray(
        &self,
        origin: &Vector3<T>,
        dir: &Vector3<T>,
        t_min: T,
        t_max: T,
    ) -> Option<RayHit<T>> {
        self.bvh
            .intersect(&self.triangles, origin, dir, t_min, t_max)
            .map(|h| self.enrich(h))
    }

    /// Closest hit by scanning every triangle; the reference for
    /// [`cast_ray`](Self::cast_ray), which must agree exactly.
    pub fn cast_ray_brute(
        &self,
        origin: &Vector3<T>,
        dir: &Vector3<T>,
        t_min: T,
        t_max: T,
    ) -> Option<RayHit<T>> {
        let mut best: Option<BvhHit<T>> = None;
        for (i, tri) in self.triangles.iter().enumerate() {
            if let Some((t, u, v)) = ray_triangle(origin, dir, tri) {
                if t < t_min || t > t_max {
                    continue;
                }
                if best.as_ref().is_none_or(|b| t < b.t) {
                    best = Some(BvhHit {
                        t,
                        triangle: i as u32,
                        u,
                        v,
                    });
                }
            }
        }
        best.map(|h| self.enrich(h))
    }

    /// Unit winding normal of the hit triangle, in world space.
    pub fn hit_normal(&self, hit: &RayHit<T>) -> Vector3<T> {
        self.triangles[hit.triangle as usize]
            .raw_normal()
            .normalize()
    }

    /// Barycentric interpolation of the source mesh's vertex annotations at
    /// the hit point. `None` when the mesh carries no annotations.
    pub fn hit_annotation(&self, hit: &RayHit<T>) -> Option<Vec<T>> {
        let inst = &self.instances[hit.instance as usize];
        let mesh = &self.meshes[inst.mesh_index];
        let ann = mesh.vertex_annotations.as_ref()?;
        let [ia, ib, ic] = mesh.faces[hit.face as usize];
        let (a, b, c) = (&ann[ia as usize], &ann[ib as usize], &ann[ic as usize]);
        let w_a = T::one() - hit.u - hit.v;
        let len = a.len().min(b.len()).min(c.len());
        Some(
            (0..len)
                .map(|k| a[k] * w_a + b[k] * hit.u + c[k] * hit.v)
                .collect(),
        )
    }

    /// True when scene geometry lies strictly closer to `p` than `radius`.
    pub fn distance_below(&self, p: &Vector3<T>, radius: T) -> bool {
        self.bvh.any_within(&self.triangles, p, radius)
    }
}
