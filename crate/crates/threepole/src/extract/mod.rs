//! Null-aware marching cubes and mesh post-processing.
//!
//! Classic marching cubes over a three-pole grid, with one twist: null
//! corners are treated as positive when the 256-case index is formed, and
//! any interpolated edge with a null endpoint produces a vertex flagged
//! *invalid* (placed at the edge midpoint so no non-finite arithmetic ever
//! happens downstream). [`strip_null`] then removes invalid vertices with
//! every face touching them. Because null space never changes sign, the
//! in/out bisector through empty cells produces no geometry at all, and
//! surfaces simply stop where the field stops being signed — open sheets
//! keep their boundaries.

mod mc_tables;

use std::collections::HashMap;

use rayon::prelude::*;

use crate::field::FieldGrid;
use crate::geom::Vec3;
use crate::mesh::TriangleMesh;

use mc_tables::{EDGE_TABLE, TRI_TABLE};

/// If two edge endpoint values differ by less than this, the intersection
/// degenerates to the edge midpoint.
pub const FLAT_EDGE_EPS: f64 = 1e-12;

/// Raw marching-cubes output before stripping: vertices carry validity.
#[derive(Clone, Debug, Default)]
pub struct RawMcMesh {
    pub vertices: Vec<Vec3>,
    /// False where the vertex came from an edge with a null endpoint.
    pub valid: Vec<bool>,
    pub triangles: Vec<[u32; 3]>,
}

/// Per-cube corner offsets in the standard numbering.
const CORNER_OFFSETS: [[u32; 3]; 8] = [
    [0, 0, 0],
    [1, 0, 0],
    [1, 1, 0],
    [0, 1, 0],
    [0, 0, 1],
    [1, 0, 1],
    [1, 1, 1],
    [0, 1, 1],
];

/// Axis (0/1/2) of each cube edge and the corner at its lower end.
const EDGE_AXIS_AND_BASE: [(usize, usize); 12] = [
    (0, 0), // 0-1 along x at corner 0
    (1, 1), // 1-2 along y at corner 1
    (0, 3), // 2-3 along x at corner 3
    (1, 0), // 3-0 along y at corner 0
    (0, 4),
    (1, 5),
    (0, 7),
    (1, 4),
    (2, 0),
    (2, 1),
    (2, 2),
    (2, 3),
];

/// Extract the `iso` level set. Null corners count as positive for the case
/// index; edges touching a null corner yield invalid midpoint vertices.
/// Vertices are deduplicated by global grid edge and numbered by first
/// appearance in cube order (x-fastest, then y, then z); triangles appear in
/// cube order then case-table order. Both orders are fixed, so thread count
/// never changes the output.
pub fn marching_cubes_3p(grid: &FieldGrid, iso: f64) -> RawMcMesh {
    let [nx, ny, nz] = grid.dims();
    let (cx, cy, cz) = (nx - 1, ny - 1, nz - 1);

    // Pass 1 (parallel over cube layers): per-triangle global edge keys.
    // A grid edge is keyed by its lower lattice point and axis.
    let layers: Vec<Vec<[u64; 3]>> = (0..cz)
        .into_par_iter()
        .map(|k| {
            let mut out: Vec<[u64; 3]> = Vec::new();
            let mut corner_vals = [0f32; 8];
            for j in 0..cy {
                for i in 0..cx {
                    let mut case = 0usize;
                    for (c, off) in CORNER_OFFSETS.iter().enumerate() {
                        let v = grid.raw(i + off[0], j + off[1], k + off[2]);
                        corner_vals[c] = v;
                        // NaN compares false: null corners stay positive
                        if v < iso as f32 {
                            case |= 1 << c;
                        }
                    }
                    if EDGE_TABLE[case] == 0 {
                        continue;
                    }
                    let row = &TRI_TABLE[case];
                    let mut e = 0;
                    while row[e] >= 0 {
                        let tri = [
                            edge_key(grid, i, j, k, row[e] as usize),
                            edge_key(grid, i, j, k, row[e + 1] as usize),
                            edge_key(grid, i, j, k, row[e + 2] as usize),
                        ];
                        out.push(tri);
                        e += 3;
                    }
                }
            }
            out
        })
        .collect();

    // Pass 2 (serial): assign vertex ids by first appearance.
    let mut ids: HashMap<u64, u32> = HashMap::new();
    let mut mesh = RawMcMesh::default();
    for layer in layers {
        for tri in layer {
            let mut t = [0u32; 3];
            for (slot, &key) in t.iter_mut().zip(tri.iter()) {
                *slot = *ids.entry(key).or_insert_with(|| {
                    let (p, ok) = edge_vertex(grid, key, iso);
                    mesh.vertices.push(p);
                    mesh.valid.push(ok);
                    (mesh.vertices.len() - 1) as u32
                });
            }
            mesh.triangles.push(t);
        }
    }
    mesh
}

#[inline]
fn edge_key(grid: &FieldGrid, i: u32, j: u32, k: u32, edge: usize) -> u64 {
    let (axis, base) = EDGE_AXIS_AND_BASE[edge];
    let off = CORNER_OFFSETS[base];
    let flat = grid.flat_index(i + off[0], j + off[1], k + off[2]) as u64;
    flat * 3 + axis as u64
}

/// Interpolated vertex for a global edge key: position and validity.
fn edge_vertex(grid: &FieldGrid, key: u64, iso: f64) -> (Vec3, bool) {
    let axis = (key % 3) as usize;
    let flat = (key / 3) as u32;
    let [nx, ny, _] = grid.dims();
    let i = flat % nx;
    let j = flat / nx % ny;
    let k = flat / (nx * ny);

    let mut b_idx = [i, j, k];
    b_idx[axis] += 1;

    let fa = grid.raw(i, j, k) as f64;
    let fb = grid.raw(b_idx[0], b_idx[1], b_idx[2]) as f64;
    let pa = grid.lattice_point(i, j, k);
    let pb = grid.lattice_point(b_idx[0], b_idx[1], b_idx[2]);

    if fa.is_nan() || fb.is_nan() {
        return ((pa + pb) * 0.5, false);
    }
    let t = if (fb - fa).abs() < FLAT_EDGE_EPS {
        0.5
    } else {
        (iso - fa) / (fb - fa)
    };
    (pa + (pb - pa) * t, true)
}

/// Drop every invalid vertex and every triangle referencing one; reindex the
/// survivors compactly (ascending original order). Unreferenced valid
/// vertices left behind by dropped faces are removed too.
pub fn strip_null(raw: &RawMcMesh) -> TriangleMesh {
    let mut referenced = vec![false; raw.vertices.len()];
    let mut triangles = Vec::new();
    for t in &raw.triangles {
        if t.iter().all(|&v| raw.valid[v as usize]) {
            for &v in t {
                referenced[v as usize] = true;
            }
            triangles.push(*t);
        }
    }
    let mut remap = vec![u32::MAX; raw.vertices.len()];
    let mut vertices = Vec::new();
    for (old, (&keep, &p)) in referenced.iter().zip(&raw.vertices).enumerate() {
        if keep {
            remap[old] = vertices.len() as u32;
            vertices.push(p);
        }
    }
    for t in &mut triangles {
        for v in t.iter_mut() {
            *v = remap[*v as usize];
        }
    }
    TriangleMesh::new(vertices, triangles)
}

/// Fill boundary loops of at most `max_hole_edges` edges with triangle fans
/// (winding consistent with the surrounding faces), then run `smooth_iters`
/// rounds of uniform Laplacian smoothing (factor 0.5) with boundary
/// vertices pinned.
pub fn cleanup(mesh: &TriangleMesh, max_hole_edges: usize, smooth_iters: usize) -> TriangleMesh {
    let mut triangles = mesh.triangles.clone();

    if max_hole_edges >= 3 {
        // Directed boundary edges: appear once in face direction, never
        // reversed. Following them traces each hole loop.
        let mut next: HashMap<u32, u32> = HashMap::new();
        for (a, b) in directed_boundary_edges(&triangles) {
            next.insert(a, b);
        }
        let mut visited: std::collections::HashSet<u32> = std::collections::HashSet::new();
        let mut starts: Vec<u32> = next.keys().copied().collect();
        starts.sort_unstable();
        for start in starts {
            if visited.contains(&start) {
                continue;
            }
            let mut loop_verts = vec![start];
            visited.insert(start);
            let mut cur = start;
            let closed = loop {
                match next.get(&cur) {
                    Some(&n) if n == start => break true,
                    Some(&n) if !visited.contains(&n) => {
                        visited.insert(n);
                        loop_verts.push(n);
                        cur = n;
                    }
                    _ => break false, // non-manifold tangle; leave it alone
                }
            };
            if closed && loop_verts.len() >= 3 && loop_verts.len() <= max_hole_edges {
                // fan with reversed edge direction to match neighbor winding
                for w in 1..loop_verts.len() - 1 {
                    triangles.push([loop_verts[0], loop_verts[w + 1], loop_verts[w]]);
                }
            }
        }
    }

    let mut vertices = mesh.vertices.clone();
    if smooth_iters > 0 {
        let mut neighbors: Vec<Vec<u32>> = vec![Vec::new(); vertices.len()];
        for t in &triangles {
            for e in 0..3 {
                let (a, b) = (t[e], t[(e + 1) % 3]);
                neighbors[a as usize].push(b);
                neighbors[b as usize].push(a);
            }
        }
        for n in &mut neighbors {
            n.sort_unstable();
            n.dedup();
        }
        let boundary: std::collections::HashSet<u32> = directed_boundary_edges(&triangles)
            .into_iter()
            .flat_map(|(a, b)| [a, b])
            .collect();

        for _ in 0..smooth_iters {
            let snapshot = vertices.clone();
            for (v, pos) in vertices.iter_mut().enumerate() {
                if boundary.contains(&(v as u32)) || neighbors[v].is_empty() {
                    continue;
                }
                let mut mean = Vec3::zeros();
                for &n in &neighbors[v] {
                    mean += snapshot[n as usize];
                }
                mean /= neighbors[v].len() as f64;
                *pos += (mean - *pos) * 0.5;
            }
        }
    }

    TriangleMesh::new(vertices, triangles)
}

/// Edges that occur exactly once over all faces, in face direction.
fn directed_boundary_edges(triangles: &[[u32; 3]]) -> Vec<(u32, u32)> {
    let mut count: HashMap<(u32, u32), i32> = HashMap::new();
    for t in triangles {
        for e in 0..3 {
            let (a, b) = (t[e], t[(e + 1) % 3]);
            let key = if a < b { (a, b) } else { (b, a) };
            *count.entry(key).or_insert(0) += 1;
        }
    }
    let mut out = Vec::new();
    for t in triangles {
        for e in 0..3 {
            let (a, b) = (t[e], t[(e + 1) % 3]);
            let key = if a < b { (a, b) } else { (b, a) };
            if count[&key] == 1 {
                out.push((a, b));
            }
        }
    }
    out
}
