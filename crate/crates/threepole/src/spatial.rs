//! Exact closest-point queries against a triangle subset.
//!
//! A `SpatialIndex` is a small median-split BVH over a set of triangles from
//! one mesh. Queries return the globally nearest point *of that subset*, the
//! triangle that realizes it (ties broken toward the lowest triangle index),
//! and a normal suitable for the sign test `n(q) · (p - q)`: the face normal
//! when the closest point is interior, otherwise the angle-weighted
//! pseudo-normal of the subset faces incident to the edge or vertex.

use std::collections::HashMap;

use crate::geom::{Aabb, Vec3};
use crate::mesh::TriangleMesh;
use crate::{Error, Result};

/// Which kind of triangle feature realizes a closest point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Feature {
    Face,
    Edge,
    Vertex,
}

/// Result of a closest-point query.
#[derive(Clone, Copy, Debug)]
pub struct ClosestPoint {
    /// Nearest point on the subset.
    pub point: Vec3,
    /// Unsigned distance to `point`.
    pub distance: f64,
    /// Face normal or angle-weighted pseudo-normal at `point`.
    pub normal: Vec3,
    /// Index (into the original mesh) of the triangle realizing the minimum.
    pub primitive: u32,
    /// Feature class of `point` on that triangle.
    pub feature: Feature,
}

/// Closest-point region on a single triangle, with local indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Region {
    Face,
    /// Edge k runs from local vertex k to (k + 1) % 3.
    Edge(u8),
    Vertex(u8),
}

const LEAF_SIZE: usize = 8;

#[derive(Clone, Debug)]
struct Node {
    bbox: Aabb,
    /// Leaf: range into `order`; internal: `left` child is `right - 1`… we
    /// store both child slots explicitly for clarity.
    kind: NodeKind,
}

#[derive(Clone, Copy, Debug)]
enum NodeKind {
    Leaf { start: u32, count: u32 },
    Internal { left: u32, right: u32 },
}

/// BVH over a triangle subset of one mesh.
pub struct SpatialIndex<'m> {
    mesh: &'m TriangleMesh,
    nodes: Vec<Node>,
    /// Triangle ids (into the mesh) in BVH leaf order.
    order: Vec<u32>,
    /// Corner positions cached per entry of `order`.
    corners: Vec<[Vec3; 3]>,
    /// Subset adjacency, keyed by global vertex ids.
    edge_faces: HashMap<(u32, u32), Vec<u32>>,
    vertex_faces: HashMap<u32, Vec<u32>>,
}

impl<'m> SpatialIndex<'m> {
    /// Build over an explicit triangle subset. The ids are deduplicated and
    /// sorted before construction so equal subsets index identically.
    pub fn new(mesh: &'m TriangleMesh, triangle_ids: &[u32]) -> Result<Self> {
        let mut ids: Vec<u32> = triangle_ids.to_vec();
        ids.sort_unstable();
        ids.dedup();
        if ids.is_empty() {
            return Err(Error::EmptySubset);
        }

        let mut edge_faces: HashMap<(u32, u32), Vec<u32>> = HashMap::new();
        let mut vertex_faces: HashMap<u32, Vec<u32>> = HashMap::new();
        for &id in &ids {
            let t = mesh.triangles[id as usize];
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                edge_faces.entry(ordered(a, b)).or_default().push(id);
                vertex_faces.entry(t[k]).or_default().push(id);
            }
        }

        let centroids: Vec<Vec3> = ids
            .iter()
            .map(|&id| {
                let [a, b, c] = mesh.triangle(id as usize);
                (a + b + c) / 3.0
            })
            .collect();

        let mut order: Vec<u32> = (0..ids.len() as u32).collect();
        let mut nodes = Vec::new();
        build_node(mesh, &ids, &centroids, &mut order, 0, &mut nodes);

        let order: Vec<u32> = order.into_iter().map(|k| ids[k as usize]).collect();
        let corners = order.iter().map(|&id| mesh.triangle(id as usize)).collect();

        Ok(Self { mesh, nodes, order, corners, edge_faces, vertex_faces })
    }

    /// Index over every triangle of the mesh.
    pub fn over_mesh(mesh: &'m TriangleMesh) -> Result<Self> {
        let ids: Vec<u32> = (0..mesh.triangles.len() as u32).collect();
        Self::new(mesh, &ids)
    }

    pub fn mesh(&self) -> &'m TriangleMesh {
        self.mesh
    }

    /// Exact nearest point on the subset. Ties on distance go to the lowest
    /// triangle index, making results independent of traversal order.
    pub fn closest_point(&self, p: Vec3) -> ClosestPoint {
        let mut best_d2 = f64::INFINITY;
        let mut best_id = u32::MAX;
        let mut best_point = Vec3::zeros();
        let mut best_region = Region::Face;

        // Manual stack; nearer child first. Nodes at equal bound distance
        // are still visited so the index tie-break stays exact.
        let mut stack: Vec<u32> = vec![0];
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni as usize];
            if node.bbox.distance_sq(p) > best_d2 {
                continue;
            }
            match node.kind {
                NodeKind::Leaf { start, count } => {
                    for k in start..start + count {
                        let id = self.order[k as usize];
                        let [a, b, c] = self.corners[k as usize];
                        let (q, region) = closest_point_on_triangle(p, a, b, c);
                        let d2 = (p - q).norm_squared();
                        if d2 < best_d2 || (d2 == best_d2 && id < best_id) {
                            best_d2 = d2;
                            best_id = id;
                            best_point = q;
                            best_region = region;
                        }
                    }
                }
                NodeKind::Internal { left, right } => {
                    let dl = self.nodes[left as usize].bbox.distance_sq(p);
                    let dr = self.nodes[right as usize].bbox.distance_sq(p);
                    // push the farther child first so the nearer pops first
                    if dl <= dr {
                        stack.push(right);
                        stack.push(left);
                    } else {
                        stack.push(left);
                        stack.push(right);
                    }
                }
            }
        }

        let (normal, feature) = self.normal_at(best_id, best_region);
        ClosestPoint {
            point: best_point,
            distance: best_d2.sqrt(),
            normal,
            primitive: best_id,
            feature,
        }
    }

    /// Normal for the sign test at a feature of triangle `id`.
    fn normal_at(&self, id: u32, region: Region) -> (Vec3, Feature) {
        let tri = self.mesh.triangles[id as usize];
        match region {
            Region::Face => (self.mesh.face_normals[id as usize], Feature::Face),
            Region::Edge(k) => {
                let (a, b) = (tri[k as usize], tri[(k as usize + 1) % 3]);
                let faces = &self.edge_faces[&ordered(a, b)];
                // Each incident face subtends the same angle (π) at an
                // interior edge point, so weights are uniform.
                let mut n = Vec3::zeros();
                for &f in faces {
                    n += self.mesh.face_normals[f as usize];
                }
                (normalize_or_flag(n, id), Feature::Edge)
            }
            Region::Vertex(k) => {
                let v = tri[k as usize];
                let faces = &self.vertex_faces[&v];
                let mut n = Vec3::zeros();
                for &f in faces {
                    n += corner_angle(self.mesh, f, v) * self.mesh.face_normals[f as usize];
                }
                (normalize_or_flag(n, id), Feature::Vertex)
            }
        }
    }
}

fn ordered(a: u32, b: u32) -> (u32, u32) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Interior angle of triangle `f` at global vertex `v`.
fn corner_angle(mesh: &TriangleMesh, f: u32, v: u32) -> f64 {
    let t = mesh.triangles[f as usize];
    let k = t.iter().position(|&x| x == v).expect("vertex not in face");
    let p = mesh.vertices[t[k] as usize];
    let u = mesh.vertices[t[(k + 1) % 3] as usize] - p;
    let w = mesh.vertices[t[(k + 2) % 3] as usize] - p;
    let denom = u.norm() * w.norm();
    if denom == 0.0 {
        return 0.0;
    }
    (u.dot(&w) / denom).clamp(-1.0, 1.0).acos()
}

fn normalize_or_flag(n: Vec3, id: u32) -> Vec3 {
    let len = n.norm();
    if len > 1e-12 {
        n / len
    } else {
        log::debug!("degenerate pseudo-normal near triangle {id}; sign test defaults positive");
        n
    }
}

fn build_node(
    mesh: &TriangleMesh,
    ids: &[u32],
    centroids: &[Vec3],
    order: &mut [u32],
    offset: u32,
    nodes: &mut Vec<Node>,
) -> u32 {
    let bbox = Aabb::from_points(
        order
            .iter()
            .flat_map(|&k| mesh.triangle(ids[k as usize] as usize)),
    );
    let me = nodes.len() as u32;
    nodes.push(Node { bbox, kind: NodeKind::Leaf { start: offset, count: order.len() as u32 } });

    if order.len() > LEAF_SIZE {
        let axis = bbox.extents().imax();
        let mid = order.len() / 2;
        // total order (centroid, id) keeps construction deterministic
        order.select_nth_unstable_by(mid, |&i, &j| {
            let ci = centroids[i as usize][axis];
            let cj = centroids[j as usize][axis];
            ci.partial_cmp(&cj).unwrap().then(i.cmp(&j))
        });
        let (lo, hi) = order.split_at_mut(mid);
        let left = build_node(mesh, ids, centroids, lo, offset, nodes);
        let right = build_node(mesh, ids, centroids, hi, offset + mid as u32, nodes);
        nodes[me as usize].kind = NodeKind::Internal { left, right };
    }
    me
}

/// Closest point on a single triangle, with the realizing feature region
/// (Voronoi-region walk; boundary cases resolve toward vertices first).
pub fn closest_point_on_triangle(p: Vec3, a: Vec3, b: Vec3, c: Vec3) -> (Vec3, Region) {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return (a, Region::Vertex(0));
    }

    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return (b, Region::Vertex(1));
    }

    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let t = d1 / (d1 - d3);
        return (a + ab * t, Region::Edge(0));
    }

    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return (c, Region::Vertex(2));
    }

    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let t = d2 / (d2 - d6);
        return (a + ac * t, Region::Edge(2));
    }

    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && d4 - d3 >= 0.0 && d5 - d6 >= 0.0 {
        let t = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (b + (c - b) * t, Region::Edge(1));
    }

    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    (a + ab * v + ac * w, Region::Face)
}
