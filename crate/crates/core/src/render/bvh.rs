//! Bounding volume hierarchy over world-space triangles.
//!
//! The tree is rebuilt from scratch whenever instance transforms change:
//! median split on the longest centroid axis, at most four triangles per
//! leaf. Traversal keeps the running best hit as `(t, triangle index)` and
//! prunes a node only when its entry distance exceeds the best `t`, so the
//! result is always the lexicographic minimum over every intersected
//! triangle, identical to a brute-force scan.

use nalgebra::Vector3;

use crate::{real, Real};

const LEAF_SIZE: usize = 4;

/// One world-space triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct Triangle<T: Real> {
    pub a: Vector3<T>,
    pub b: Vector3<T>,
    pub c: Vector3<T>,
}

impl<T: Real> Triangle<T> {
    pub fn centroid(&self) -> Vector3<T> {
        (self.a + self.b + self.c) / real::<T>(3.0)
    }

    /// Unnormalized winding normal `(b - a) x (c - a)`.
    pub fn raw_normal(&self) -> Vector3<T> {
        (self.b - self.a).cross(&(self.c - self.a))
    }
}

/// Watertight-enough intersection via the Moeller-Trumbore test with
/// inclusive barycentric bounds, so rays through shared edges hit at least
/// one of the adjacent triangles. Returns `(t, u, v)` with the hit point at
/// `a + u (b - a) + v (c - a)`; `t` may be negative.
pub fn ray_triangle<T: Real>(
    origin: &Vector3<T>,
    dir: &Vector3<T>,
    tri: &Triangle<T>,
) -> Option<(T, T, T)> {
    let e1 = tri.b - tri.a;
    let e2 = tri.c - tri.a;
    let p = dir.cross(&e2);
    let det = e1.dot(&p);
    if det.abs() < T::default_epsilon() * real(100.0) {
        return None;
    }
    let inv_det = T::one() / det;
    let s = origin - tri.a;
    let u = s.dot(&p) * inv_det;
    if u < T::zero() || u > T::one() {
        return None;
    }
    let q = s.cross(&e1);
    let v = dir.dot(&q) * inv_det;
    if v < T::zero() || u + v > T::one() {
        return None;
    }
    Some((e2.dot(&q) * inv_det, u, v))
}

/// Squared distance from a point to a triangle (closest-point regions after
/// Ericson's real-time collision detection formulation).
pub fn point_triangle_distance_sq<T: Real>(p: &Vector3<T>, tri: &Triangle<T>) -> T {
    let ab = tri.b - tri.a;
    let ac = tri.c - tri.a;
    let ap = p - tri.a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= T::zero() && d2 <= T::zero() {
        return ap.norm_squared();
    }
    let bp = p - tri.b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= T::zero() && d4 <= d3 {
        return bp.norm_squared();
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= T::zero() && d1 >= T::zero() && d3 <= T::zero() {
        let w = d1 / (d1 - d3);
        return (ap - ab * w).norm_squared();
    }
    let cp = p - tri.c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= T::zero() && d5 <= d6 {
        return cp.norm_squared();
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= T::zero() && d2 >= T::zero() && d6 <= T::zero() {
        let w = d2 / (d2 - d6);
        return (ap - ac * w).norm_squared();
    }
    let va = d3 * d6 - d5 * d4;
    if va <= T::zero() && (d4 - d3) >= T::zero() && (d5 - d6) >= T::zero() {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (bp - (tri.c - tri.b) * w).norm_squared();
    }
    let denom = T::one() / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    (ap - ab * v - ac * w).norm_squared()
}

/// Minimum that drops NaN operands; `x != x` is the NaN probe, and infinities
/// from zero direction components must pass through untouched.
#[allow(clippy::eq_op)]
fn nan_min<T: Real>(a: T, b: T) -> T {
    if b != b {
        a
    } else if a != a || b < a {
        b
    } else {
        a
    }
}

/// Maximum with the same NaN handling as [`nan_min`].
#[allow(clippy::eq_op)]
fn nan_max<T: Real>(a: T, b: T) -> T {
    if b != b {
        a
    } else if a != a || b > a {
        b
    } else {
        a
    }
}

#[derive(Debug, Clone)]
struct Node<T: Real> {
    min: Vector3<T>,
    max: Vector3<T>,
    /// Leaf: first slot in the permuted index array. Internal: left child.
    first_or_left: u32,
    /// Leaf: triangle count (> 0). Internal: 0, right child in `right`.
    count: u32,
    right: u32,
}

impl<T: Real> Node<T> {
    fn is_leaf(&self) -> bool {
        self.count > 0
    }

    /// Entry distance of the ray into this box within `[t_min, t_limit]`,
    /// or `None` when the box cannot contain a closer hit.
    fn slab_entry(
        &self,
        origin: &Vector3<T>,
        inv_dir: &Vector3<T>,
        t_min: T,
        t_limit: T,
    ) -> Option<T> {
        let mut near = t_min;
        let mut far = t_limit;
        for i in 0..3 {
            let t1 = (self.min[i] - origin[i]) * inv_dir[i];
            let t2 = (self.max[i] - origin[i]) * inv_dir[i];
            near = nan_max(near, nan_min(t1, t2));
            far = nan_min(far, nan_max(t1, t2));
        }
        (near <= far).then_some(near)
    }

    fn distance_sq(&self, p: &Vector3<T>) -> T {
        let mut d2 = T::zero();
        for i in 0..3 {
            let v = nalgebra::clamp(p[i], self.min[i], self.max[i]) - p[i];
            d2 += v * v;
        }
        d2
    }
}

/// Closest hit along a ray: distance, triangle index and barycentrics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BvhHit<T: Real> {
    pub t: T,
    pub triangle: u32,
    pub u: T,
    pub v: T,
}

pub struct Bvh<T: Real> {
    nodes: Vec<Node<T>>,
    indices: Vec<u32>,
}

impl<T: Real> Bvh<T> {
    pub fn build(triangles: &[Triangle<T>]) -> Self {
        let mut indices: Vec<u32> = (0..triangles.len() as u32).collect();
        let mut nodes = Vec::with_capacity(2 * triangles.len().max(1));
        if !triangles.is_empty() {
            let centroids: Vec<Vector3<T>> = triangles.iter().map(Triangle::centroid).collect();
            let mut idx = std::mem::take(&mut indices);
            build_range(&mut nodes, triangles, &centroids, &mut idx, 0);
            indices = idx;
        }
        Self { nodes, indices }
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Closest hit with `t` in `[t_min, t_max]`. Ties in `t` resolve to the
    /// lowest triangle index, making the result traversal-order free.
    pub fn intersect(
        &self,
        triangles: &[Triangle<T>],
        origin: &Vector3<T>,
        dir: &Vector3<T>,
        t_min: T,
        t_max: T,
    ) -> Option<BvhHit<T>> {
        if self.nodes.is_empty() {
            return None;
        }
        let inv_dir = Vector3::new(T::one() / dir.x, T::one() / dir.y, T::one() / dir.z);
        let mut best: Option<BvhHit<T>> = None;
        let mut stack: Vec<u32> = Vec::with_capacity(64);
        stack.push(0);
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni as usize];
            let limit = best.as_ref().map_or(t_max, |b| b.t);
            if node.slab_entry(origin, &inv_dir, t_min, limit).is_none() {
                continue;
            }
            if node.is_leaf() {
                let first = node.first_or_left as usize;
                for &tri_idx in &self.indices[first..first + node.count as usize] {
                    let Some((t, u, v)) = ray_triangle(origin, dir, &triangles[tri_idx as usize])
                    else {
                        continue;
                    };
                    if t < t_min || t > t_max {
                        continue;
                    }
                    let closer = match &best {
                        None => true,
                        Some(b) => t < b.t || (t == b.t && tri_idx < b.triangle),
                    };
                    if closer {
                        best = Some(BvhHit {
                            t,
                            triangle: tri_idx,
                            u,
                            v,
                        });
                    }
                }
            } else {
                // Visit the nearer child first so the best hit tightens early.
                let l = node.first_or_left;
                let r = node.right;
                let el = self.nodes[l as usize].slab_entry(origin, &inv_dir, t_min, limit);
                let er = self.nodes[r as usize].slab_entry(origin, &inv_dir, t_min, limit);
                match (el, er) {
                    (Some(a), Some(b)) => {
                        if a <= b {
                            stack.push(r);
                            stack.push(l);
                        } else {
                            stack.push(l);
                            stack.push(r);
                        }
                    }
                    (Some(_), None) => stack.push(l),
                    (None, Some(_)) => stack.push(r),
                    (None, None) => {}
                }
            }
        }
        best
    }

    /// True when any triangle lies strictly closer to `p` than `radius`.
    pub fn any_within(&self, triangles: &[Triangle<T>], p: &Vector3<T>, radius: T) -> bool {
        if self.nodes.is_empty() {
            return false;
        }
        let r2 = radius * radius;
        let mut stack: Vec<u32> = Vec::with_capacity(64);
        stack.push(0);
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni as usize];
            if node.distance_sq(p) >= r2 {
                continue;
            }
            if node.is_leaf() {
                let first = node.first_or_left as usize;
                for &tri_idx in &self.indices[first..first + node.count as usize] {
                    if point_triangle_distance_sq(p, &triangles[tri_idx as usize]) < r2 {
                        return true;
                    }
                }
            } else {
                stack.push(node.first_or_left);
                stack.push(node.right);
            }
        }
        false
    }
}

fn build_range<T: Real>(
    nodes: &mut Vec<Node<T>>,
    triangles: &[Triangle<T>],
    centroids: &[Vector3<T>],
    idx: &mut [u32],
    first: usize,
) -> u32 {
    let node_id = nodes.len() as u32;
    let inf = real::<T>(f64::INFINITY);
    let mut bb_min = Vector3::repeat(inf);
    let mut bb_max = Vector3::repeat(-inf);
    let mut c_min = Vector3::repeat(inf);
    let mut c_max = Vector3::repeat(-inf);
    for &i in idx.iter() {
        let tri = &triangles[i as usize];
        for v in [&tri.a, &tri.b, &tri.c] {
            for k in 0..3 {
                bb_min[k] = nan_min(bb_min[k], v[k]);
                bb_max[k] = nan_max(bb_max[k], v[k]);
            }
        }
        for k in 0..3 {
            c_min[k] = nan_min(c_min[k], centroids[i as usize][k]);
            c_max[k] = nan_max(c_max[k], centroids[i as usize][k]);
        }
    }
    nodes.push(Node {
        min: bb_min,
        max: bb_max,
        first_or_left: first as u32,
        count: idx.len() as u32,
        right: 0,
    });
    if idx.len() <= LEAF_SIZE {
        return node_id;
    }
    let extent = c_max - c_min;
    let axis = if extent.x >= extent.y && extent.x >= extent.z {
        0
    } else if extent.y >= extent.z {
        1
    } else {
        2
    };
    let mid = idx.len() / 2;
    idx.select_nth_unstable_by(mid, |&a, &b| {
        centroids[a as usize][axis]
            .partial_cmp(&centroids[b as usize][axis])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let (lo, hi) = idx.split_at_mut(mid);
    let left = build_range(nodes, triangles, centroids, lo, first);
    let right = build_range(nodes, triangles, centroids, hi, first + mid);
    nodes[node_id as usize].first_or_left = left;
    nodes[node_id as usize].count = 0;
    nodes[node_id as usize].right = right;
    node_id
}
