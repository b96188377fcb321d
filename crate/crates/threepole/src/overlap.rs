//! Exact triangle / axis-aligned-box overlap via the separating axis test.
//!
//! The 13 candidate axes are the 3 box axes, the triangle plane normal, and
//! the 9 cross products of box axes with triangle edges. Every comparison is
//! strict on the separation side, so a triangle that merely touches a face,
//! edge, or corner of the box counts as overlapping.

use crate::geom::{Aabb, Vec3};

/// Does the triangle intersect (or touch) the box?
pub fn triangle_cell_overlap(tri: &[Vec3; 3], cell: &Aabb) -> bool {
    let center = cell.center();
    let h = cell.extents() * 0.5;

    // Work in box-centered coordinates.
    let v0 = tri[0] - center;
    let v1 = tri[1] - center;
    let v2 = tri[2] - center;

    let e0 = v1 - v0;
    let e1 = v2 - v1;
    let e2 = v0 - v2;

    // Axis class 1: the box axes (plain AABB overlap).
    for a in 0..3 {
        let lo = v0[a].min(v1[a]).min(v2[a]);
        let hi = v0[a].max(v1[a]).max(v2[a]);
        if lo > h[a] || hi < -h[a] {
            return false;
        }
    }

    // Axis class 2: cross products of box axes with triangle edges.
    // `axis = unit(a) × e` projects two of the three vertices to the same
    // value, so only two projections (p, q) are needed per test.
    let edge_axis = |p: f64, q: f64, rad: f64| -> bool {
        // returns true when separated
        p.min(q) > rad || p.max(q) < -rad
    };

    for e in [e0, e1, e2] {
        let fe = Vec3::new(e.x.abs(), e.y.abs(), e.z.abs());
        // X × e
        let p = e.z * v0.y - e.y * v0.z;
        let q = e.z * v2.y - e.y * v2.z;
        let p1 = e.z * v1.y - e.y * v1.z;
        let rad = fe.z * h.y + fe.y * h.z;
        if edge_axis(min3(p, q, p1), max3(p, q, p1), rad) {
            return false;
        }
        // Y × e
        let p = -e.z * v0.x + e.x * v0.z;
        let q = -e.z * v2.x + e.x * v2.z;
        let p1 = -e.z * v1.x + e.x * v1.z;
        let rad = fe.z * h.x + fe.x * h.z;
        if edge_axis(min3(p, q, p1), max3(p, q, p1), rad) {
            return false;
        }
        // Z × e
        let p = e.y * v0.x - e.x * v0.y;
        let q = e.y * v2.x - e.x * v2.y;
        let p1 = e.y * v1.x - e.x * v1.y;
        let rad = fe.y * h.x + fe.x * h.y;
        if edge_axis(min3(p, q, p1), max3(p, q, p1), rad) {
            return false;
        }
    }

    // Axis class 3: the triangle's plane normal.
    let normal = e0.cross(&e1);
    plane_box_overlap(normal, v0, h)
}

fn min3(a: f64, b: f64, c: f64) -> f64 {
    a.min(b).min(c)
}

fn max3(a: f64, b: f64, c: f64) -> f64 {
    a.max(b).max(c)
}

/// Does the plane `normal · (x - point) = 0` cut the origin-centered box of
/// half-extents `h`? Touching counts.
fn plane_box_overlap(normal: Vec3, point: Vec3, h: Vec3) -> bool {
    let mut vmin = Vec3::zeros();
    let mut vmax = Vec3::zeros();
    for a in 0..3 {
        if normal[a] > 0.0 {
            vmin[a] = -h[a] - point[a];
            vmax[a] = h[a] - point[a];
        } else {
            vmin[a] = h[a] - point[a];
            vmax[a] = -h[a] - point[a];
        }
    }
    if normal.dot(&vmin) > 0.0 {
        return false;
    }
    normal.dot(&vmax) >= 0.0
}
