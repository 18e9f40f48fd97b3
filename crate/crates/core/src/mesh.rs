//! Triangle meshes and the Wavefront OBJ loader.
//!
//! Faces must be triangles or quads; quads are fan-triangulated. Zero-area
//! faces are dropped at load time and reported through a counter so callers
//! can warn about sloppy assets.

use std::path::Path;

use nalgebra::Vector3;
use thiserror::Error;

use crate::Real;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("io error reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("mesh has no faces after loading")]
    Empty,
    #[error("face {face} references vertex {index} but mesh has {len} vertices")]
    IndexOutOfRange {
        face: usize,
        index: usize,
        len: usize,
    },
    #[error("annotation list has {got} entries for {expected} vertices")]
    AnnotationLength { got: usize, expected: usize },
}

/// An indexed triangle mesh with optional per-vertex annotation vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh<T: Real> {
    pub vertices: Vec<Vector3<T>>,
    pub faces: Vec<[u32; 3]>,
    /// Optional k-vector per vertex, interpolated at ray hits.
    pub vertex_annotations: Option<Vec<Vec<T>>>,
    /// Identifier reported in segmentation channels for hits on this mesh.
    pub segmentation_id: i32,
}

impl<T: Real> TriangleMesh<T> {
    /// Build a mesh from raw arrays, validating face indices.
    pub fn new(vertices: Vec<Vector3<T>>, faces: Vec<[u32; 3]>) -> Result<Self, MeshError> {
        for (fi, f) in faces.iter().enumerate() {
            for &i in f {
                if i as usize >= vertices.len() {
                    return Err(MeshError::IndexOutOfRange {
                        face: fi,
                        index: i as usize,
                        len: vertices.len(),
                    });
                }
            }
        }
        Ok(Self {
            vertices,
            faces,
            vertex_annotations: None,
            segmentation_id: 0,
        })
    }

    /// Attach one annotation vector per vertex. All vectors must share a length.
    pub fn with_annotations(mut self, annotations: Vec<Vec<T>>) -> Result<Self, MeshError> {
        if annotations.len() != self.vertices.len() {
            return Err(MeshError::AnnotationLength {
                got: annotations.len(),
                expected: self.vertices.len(),
            });
        }
        self.vertex_annotations = Some(annotations);
        Ok(self)
    }

    pub fn with_segmentation_id(mut self, id: i32) -> Self {
        self.segmentation_id = id;
        self
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    /// Corner positions of face `i`.
    pub fn triangle(&self, i: usize) -> [Vector3<T>; 3] {
        let [a, b, c] = self.faces[i];
        [
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        ]
    }

    /// Axis-aligned cuboid centered at the origin, 12 triangles with outward winding.
    pub fn cuboid(half_extents: Vector3<T>) -> Self {
        let (hx, hy, hz) = (half_extents.x, half_extents.y, half_extents.z);
        let mut vertices = Vec::with_capacity(8);
        for &z in &[-hz, hz] {
            for &y in &[-hy, hy] {
                for &x in &[-hx, hx] {
                    vertices.push(Vector3::new(x, y, z));
                }
            }
        }
        // vertex i = bit0 -> +x, bit1 -> +y, bit2 -> +z
        let faces = vec![
            [0, 2, 1],
            [1, 2, 3], // bottom (-z)
            [4, 5, 6],
            [5, 7, 6], // top (+z)
            [0, 1, 4],
            [1, 5, 4], // front (-y)
            [2, 6, 3],
            [3, 6, 7], // back (+y)
            [0, 4, 2],
            [2, 4, 6], // left (-x)
            [1, 3, 5],
            [3, 7, 5], // right (+x)
        ];
        Self {
            vertices,
            faces,
            vertex_annotations: None,
            segmentation_id: 0,
        }
    }

    /// Parse OBJ text. Returns the mesh and the number of degenerate
    /// (zero-area) faces that were dropped.
    pub fn from_obj_str(text: &str) -> Result<(Self, usize), MeshError> {
        let mut vertices: Vec<Vector3<T>> = Vec::new();
        let mut faces: Vec<[u32; 3]> = Vec::new();
        let mut dropped = 0usize;

        for (ln, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            match parts.next() {
                Some("v") => {
                    let mut coord = |what: &str| -> Result<T, MeshError> {
                        parts
                            .next()
                            .ok_or_else(|| MeshError::Parse {
                                line: ln + 1,
                                message: format!("vertex missing {what} coordinate"),
                            })?
                            .parse::<f64>()
                            .map(crate::real)
                            .map_err(|e| MeshError::Parse {
                                line: ln + 1,
                                message: format!("bad {what} coordinate: {e}"),
                            })
                    };
                    let (x, y, z) = (coord("x")?, coord("y")?, coord("z")?);
                    vertices.push(Vector3::new(x, y, z));
                }
                Some("f") => {
                    let mut idx: Vec<u32> = Vec::with_capacity(4);
                    for tok in parts {
                        // "i", "i/t", "i/t/n", "i//n" forms; only the vertex index matters
                        let head = tok.split('/').next().unwrap_or("");
                        let i: i64 = head.parse().map_err(|e| MeshError::Parse {
                            line: ln + 1,
                            message: format!("bad face index {tok:?}: {e}"),
                        })?;
                        let resolved = if i > 0 {
                            (i - 1) as usize
                        } else if i < 0 {
                            let from_end = vertices.len() as i64 + i;
                            if from_end < 0 {
                                return Err(MeshError::Parse {
                                    line: ln + 1,
                                    message: format!("relative index {i} out of range"),
                                });
                            }
                            from_end as usize
                        } else {
                            return Err(MeshError::Parse {
                                line: ln + 1,
                                message: "face index 0 is not valid in OBJ".into(),
                            });
                        };
                        if resolved >= vertices.len() {
                            return Err(MeshError::Parse {
                                line: ln + 1,
                                message: format!(
                                    "face index {i} out of range ({} vertices so far)",
                                    vertices.len()
                                ),
                            });
                        }
                        idx.push(resolved as u32);
                    }
                    let tris: Vec<[u32; 3]> = match idx.len() {
                        3 => vec![[idx[0], idx[1], idx[2]]],
                        4 => vec![[idx[0], idx[1], idx[2]], [idx[0], idx[2], idx[3]]],
                        n => {
                            return Err(MeshError::Parse {
                                line: ln + 1,
                                message: format!("face with {n} vertices; only tris and quads"),
                            })
                        }
                    };
                    for t in tris {
                        if triangle_area_sq(&vertices, t) <= T::default_epsilon().powi(2) {
                            dropped += 1;
                        } else {
                            faces.push(t);
                        }
                    }
                }
                // vn/vt/usemtl/o/g/s/mtllib carry no geometry we use
                _ => {}
            }
        }

        if faces.is_empty() {
            return Err(MeshError::Empty);
        }
        Ok((
            Self {
                vertices,
                faces,
                vertex_annotations: None,
                segmentation_id: 0,
            },
            dropped,
        ))
    }

    /// Load an OBJ file from disk. See [`TriangleMesh::from_obj_str`].
    pub fn load_obj(path: impl AsRef<Path>) -> Result<(Self, usize), MeshError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| MeshError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_obj_str(&text)
    }
}

fn triangle_area_sq<T: Real>(vertices: &[Vector3<T>], f: [u32; 3]) -> T {
    let a = vertices[f[0] as usize];
    let b = vertices[f[1] as usize];
    let c = vertices[f[2] as usize];
    let four = crate::real::<T>(4.0);
    (b - a).cross(&(c - a)).norm_squared() / four
}
