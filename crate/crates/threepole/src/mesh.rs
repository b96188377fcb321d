//! Indexed triangle meshes and Wavefront OBJ round-tripping.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::geom::{Aabb, Vec3};
use crate::{Error, Result};

/// Relative area threshold below which a loaded triangle is dropped:
/// `area <= DEGENERATE_AREA_FACTOR * bbox_diagonal^2`.
pub const DEGENERATE_AREA_FACTOR: f64 = 1e-12;

/// Indexed triangle mesh with per-face unit normals (right-hand winding).
#[derive(Clone, Debug, Default)]
pub struct TriangleMesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[u32; 3]>,
    pub face_normals: Vec<Vec3>,
}

impl TriangleMesh {
    /// Build a mesh from raw parts, computing face normals. Exactly
    /// degenerate faces get a zero normal; nothing is filtered here (that is
    /// the OBJ loader's job), so meshes produced by isosurfacing stay intact.
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[u32; 3]>) -> Self {
        let face_normals = triangles
            .iter()
            .map(|t| face_normal(vertices[t[0] as usize], vertices[t[1] as usize], vertices[t[2] as usize]))
            .collect();
        Self { vertices, triangles, face_normals }
    }

    pub fn triangle(&self, i: usize) -> [Vec3; 3] {
        let [a, b, c] = self.triangles[i];
        [self.vertices[a as usize], self.vertices[b as usize], self.vertices[c as usize]]
    }

    /// Bounding box of all vertices (referenced or not).
    pub fn bbox(&self) -> Aabb {
        Aabb::from_points(self.vertices.iter().copied())
    }

    pub fn triangle_area(&self, i: usize) -> f64 {
        let [a, b, c] = self.triangle(i);
        (b - a).cross(&(c - a)).norm() * 0.5
    }

    /// Reverse every winding and negate every face normal.
    pub fn flip_windings(&mut self) {
        for t in &mut self.triangles {
            t.swap(1, 2);
        }
        for n in &mut self.face_normals {
            *n = -*n;
        }
    }
}

fn face_normal(a: Vec3, b: Vec3, c: Vec3) -> Vec3 {
    let n = (b - a).cross(&(c - a));
    let len = n.norm();
    if len > 0.0 {
        n / len
    } else {
        Vec3::zeros()
    }
}

/// Load an OBJ file. Only `v` and `f` records are honored (`vn`, `vt`,
/// groups, materials are skipped); faces with more than three vertices are
/// fan-triangulated; negative (relative) indices are resolved. Triangles
/// whose area is at most `1e-12 *` bbox-diagonal² are dropped.
pub fn load_obj(path: impl AsRef<Path>) -> Result<TriangleMesh> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| Error::Io { path: path.into(), source })?;
    let reader = BufReader::new(file);

    let mut vertices: Vec<Vec3> = Vec::new();
    let mut faces: Vec<[u32; 3]> = Vec::new();

    let parse_err = |line: usize, msg: &str| Error::ObjParse {
        path: path.into(),
        line,
        msg: msg.into(),
    };

    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| Error::Io { path: path.into(), source })?;
        let lineno = idx + 1;
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let mut coord = [0.0f64; 3];
                for c in &mut coord {
                    *c = tokens
                        .next()
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| parse_err(lineno, "vertex needs three coordinates"))?;
                }
                vertices.push(Vec3::new(coord[0], coord[1], coord[2]));
            }
            Some("f") => {
                let mut corners: Vec<u32> = Vec::new();
                for tok in tokens {
                    // "i", "i/t", "i//n", "i/t/n" — the vertex index leads.
                    let head = tok.split('/').next().unwrap_or("");
                    let raw: i64 = head
                        .parse()
                        .map_err(|_| parse_err(lineno, "face index is not an integer"))?;
                    let resolved = if raw > 0 {
                        raw - 1
                    } else if raw < 0 {
                        vertices.len() as i64 + raw
                    } else {
                        return Err(parse_err(lineno, "face index 0 is not valid"));
                    };
                    if resolved < 0 || resolved as usize >= vertices.len() {
                        return Err(parse_err(lineno, "face index out of range"));
                    }
                    corners.push(resolved as u32);
                }
                if corners.len() < 3 {
                    return Err(parse_err(lineno, "face needs at least three vertices"));
                }
                for i in 2..corners.len() {
                    faces.push([corners[0], corners[i - 1], corners[i]]);
                }
            }
            _ => {}
        }
    }

    if vertices.is_empty() {
        return Err(Error::EmptyMesh);
    }

    // Drop degenerate faces relative to the model scale.
    let diag2 = {
        let b = Aabb::from_points(vertices.iter().copied());
        let d = b.diagonal();
        d * d
    };
    let threshold = DEGENERATE_AREA_FACTOR * diag2;
    faces.retain(|t| {
        let (a, b, c) = (vertices[t[0] as usize], vertices[t[1] as usize], vertices[t[2] as usize]);
        (b - a).cross(&(c - a)).norm() * 0.5 > threshold
    });

    if faces.is_empty() {
        return Err(Error::EmptyMesh);
    }
    Ok(TriangleMesh::new(vertices, faces))
}

/// Write a mesh as OBJ (`v`/`f` records only). Coordinates use Rust's
/// shortest round-trip float formatting, so writes are byte-deterministic.
pub fn write_obj(mesh: &TriangleMesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|source| Error::Io { path: path.into(), source })?;
    let mut w = BufWriter::new(file);
    let io_err = |source| Error::Io { path: path.into(), source };
    for v in &mesh.vertices {
        writeln!(w, "v {} {} {}", v.x, v.y, v.z).map_err(io_err)?;
    }
    for t in &mesh.triangles {
        writeln!(w, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}
