//! Ray-crossing inside/outside oracle for watertight meshes.
//!
//! Intended as an independent reference for tests: it never looks at signed
//! distances or normals. A point is inside iff a ray from it crosses the
//! surface an odd number of times. Rays that graze an edge, vertex, or a
//! coplanar triangle are rejected and retried with a fresh jittered
//! direction, so the answer is exact whenever it is returned.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geom::Vec3;
use crate::mesh::TriangleMesh;
use crate::spatial::SpatialIndex;
use crate::{Error, Result};

/// Points closer to the surface than this are refused (sign is meaningless).
pub const SURFACE_GUARD: f64 = 1e-9;

const MAX_ATTEMPTS: usize = 32;
/// Barycentric / determinant slack under which a hit counts as grazing.
const GRAZE_EPS: f64 = 1e-10;

/// Parity oracle over one watertight mesh.
pub struct ParityOracle<'m> {
    mesh: &'m TriangleMesh,
    index: SpatialIndex<'m>,
}

impl<'m> ParityOracle<'m> {
    /// Validates watertightness (every edge on exactly two faces).
    pub fn new(mesh: &'m TriangleMesh) -> Result<Self> {
        let mut counts: std::collections::HashMap<(u32, u32), usize> = std::collections::HashMap::new();
        for t in &mesh.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                let key = if a < b { (a, b) } else { (b, a) };
                *counts.entry(key).or_insert(0) += 1;
            }
        }
        let bad = counts.values().filter(|&&c| c != 2).count();
        if bad > 0 {
            return Err(Error::NotWatertight(bad));
        }
        let index = SpatialIndex::over_mesh(mesh)?;
        Ok(Self { mesh, index })
    }

    /// True iff `p` is strictly inside. Errors when `p` is within
    /// [`SURFACE_GUARD`] of the surface or no clean ray is found.
    pub fn is_inside(&self, p: Vec3) -> Result<bool> {
        if self.index.closest_point(p).distance < SURFACE_GUARD {
            return Err(Error::OnSurface(SURFACE_GUARD));
        }

        let mut rng = ChaCha8Rng::seed_from_u64(0x9e3779b97f4a7c15);
        'attempt: for _ in 0..MAX_ATTEMPTS {
            let dir = random_unit(&mut rng);
            let mut crossings = 0usize;
            for i in 0..self.mesh.triangles.len() {
                let [a, b, c] = self.mesh.triangle(i);
                match ray_hit(p, dir, a, b, c) {
                    Hit::Miss => {}
                    Hit::Clean => crossings += 1,
                    Hit::Grazing => continue 'attempt,
                }
            }
            return Ok(crossings % 2 == 1);
        }
        Err(Error::ParityInconclusive(MAX_ATTEMPTS))
    }
}

/// One-shot convenience wrapper around [`ParityOracle`].
pub fn inside_by_parity(mesh: &TriangleMesh, p: Vec3) -> Result<bool> {
    ParityOracle::new(mesh)?.is_inside(p)
}

enum Hit {
    Miss,
    Clean,
    Grazing,
}

fn random_unit(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = Vec3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

/// Möller–Trumbore with conservative grazing detection: any forward hit too
/// close to the triangle boundary, and any near-parallel ray in the
/// triangle's plane, is reported as grazing rather than guessed at.
fn ray_hit(origin: Vec3, dir: Vec3, a: Vec3, b: Vec3, c: Vec3) -> Hit {
    let e1 = b - a;
    let e2 = c - a;
    let pvec = dir.cross(&e2);
    let det = e1.dot(&pvec);
    // det has units of length²; make the tolerance scale-aware
    let scale = e1.norm() * e2.norm();
    if det.abs() <= GRAZE_EPS * scale {
        let n = e1.cross(&e2);
        let nn = n.norm();
        if nn == 0.0 {
            return Hit::Miss; // degenerate triangle cannot be crossed
        }
        let plane_dist = n.dot(&(origin - a)).abs() / nn;
        return if plane_dist <= GRAZE_EPS * (scale.sqrt() + 1.0) {
            Hit::Grazing
        } else {
            Hit::Miss
        };
    }
    let inv = 1.0 / det;
    let tvec = origin - a;
    let u = tvec.dot(&pvec) * inv;
    let qvec = tvec.cross(&e1);
    let v = dir.dot(&qvec) * inv;
    let t = e2.dot(&qvec) * inv;

    if t <= 0.0 {
        // behind the origin; the origin itself is off-surface by contract
        return Hit::Miss;
    }
    if u > GRAZE_EPS && v > GRAZE_EPS && u + v < 1.0 - GRAZE_EPS {
        return Hit::Clean;
    }
    if u < -GRAZE_EPS || v < -GRAZE_EPS || u + v > 1.0 + GRAZE_EPS {
        return Hit::Miss;
    }
    Hit::Grazing
}
