//! Procedural test shapes: closed solids and open sheets.
//!
//! All generators emit consistently wound, indexed meshes with outward (or
//! `+z` for the disk) normals. The closed ones are watertight — every edge
//! has exactly two incident faces — so they work with the parity oracle.

use crate::geom::Vec3;
use crate::mesh::TriangleMesh;

/// Axis-aligned closed box given center and half-extents (12 triangles).
pub fn cuboid(center: Vec3, half: Vec3) -> TriangleMesh {
    let mut vertices = Vec::with_capacity(8);
    for i in 0..8u32 {
        vertices.push(Vec3::new(
            center.x + if i & 1 == 1 { half.x } else { -half.x },
            center.y + if i >> 1 & 1 == 1 { half.y } else { -half.y },
            center.z + if i >> 2 & 1 == 1 { half.z } else { -half.z },
        ));
    }
    // two triangles per face, outward winding
    let quads: [[u32; 4]; 6] = [
        [0, 2, 3, 1], // -z
        [4, 5, 7, 6], // +z
        [0, 1, 5, 4], // -y
        [2, 6, 7, 3], // +y
        [0, 4, 6, 2], // -x
        [1, 3, 7, 5], // +x
    ];
    let mut triangles = Vec::with_capacity(12);
    for q in quads {
        triangles.push([q[0], q[1], q[2]]);
        triangles.push([q[0], q[2], q[3]]);
    }
    TriangleMesh::new(vertices, triangles)
}

/// Watertight UV sphere. `slices >= 3` meridians, `stacks >= 2` parallels.
pub fn uv_sphere(center: Vec3, radius: f64, slices: u32, stacks: u32) -> TriangleMesh {
    assert!(slices >= 3 && stacks >= 2);
    let mut vertices = Vec::new();
    vertices.push(center + Vec3::new(0.0, 0.0, radius)); // north pole
    for i in 1..stacks {
        let theta = std::f64::consts::PI * i as f64 / stacks as f64;
        let (st, ct) = theta.sin_cos();
        for j in 0..slices {
            let phi = std::f64::consts::TAU * j as f64 / slices as f64;
            let (sp, cp) = phi.sin_cos();
            vertices.push(center + radius * Vec3::new(st * cp, st * sp, ct));
        }
    }
    vertices.push(center + Vec3::new(0.0, 0.0, -radius)); // south pole

    let ring = |i: u32, j: u32| 1 + (i - 1) * slices + (j % slices);
    let south = vertices.len() as u32 - 1;
    let mut triangles = Vec::new();
    for j in 0..slices {
        triangles.push([0, ring(1, j), ring(1, j + 1)]);
    }
    for i in 1..stacks - 1 {
        for j in 0..slices {
            let (a, b) = (ring(i, j), ring(i, j + 1));
            let (c, d) = (ring(i + 1, j), ring(i + 1, j + 1));
            triangles.push([a, c, d]);
            triangles.push([a, d, b]);
        }
    }
    for j in 0..slices {
        triangles.push([south, ring(stacks - 1, j + 1), ring(stacks - 1, j)]);
    }
    TriangleMesh::new(vertices, triangles)
}

/// Open flat disk in the `z = center.z` plane: a triangle fan with `+z`
/// normals and an open rim (every rim edge has one incident face).
pub fn open_disk(center: Vec3, radius: f64, slices: u32) -> TriangleMesh {
    assert!(slices >= 3);
    let mut vertices = vec![center];
    for j in 0..slices {
        let phi = std::f64::consts::TAU * j as f64 / slices as f64;
        vertices.push(center + radius * Vec3::new(phi.cos(), phi.sin(), 0.0));
    }
    let rim = |j: u32| 1 + j % slices;
    let triangles = (0..slices).map(|j| [0, rim(j), rim(j + 1)]).collect();
    TriangleMesh::new(vertices, triangles)
}

/// Open cylinder side wall around the z-axis through `center` (no caps),
/// outward normals. Both ends are open rims.
pub fn open_cylinder(center: Vec3, radius: f64, half_height: f64, slices: u32) -> TriangleMesh {
    assert!(slices >= 3);
    let mut vertices = Vec::new();
    for &z in &[center.z - half_height, center.z + half_height] {
        for j in 0..slices {
            let phi = std::f64::consts::TAU * j as f64 / slices as f64;
            vertices.push(Vec3::new(
                center.x + radius * phi.cos(),
                center.y + radius * phi.sin(),
                z,
            ));
        }
    }
    let lo = |j: u32| j % slices;
    let hi = |j: u32| slices + j % slices;
    let mut triangles = Vec::new();
    for j in 0..slices {
        triangles.push([lo(j), lo(j + 1), hi(j + 1)]);
        triangles.push([lo(j), hi(j + 1), hi(j)]);
    }
    TriangleMesh::new(vertices, triangles)
}
