//! Small geometric primitives shared across the crate.

pub use nalgebra::Vector3;

/// 3D vector / point type used throughout.
pub type Vec3 = Vector3<f64>;

/// Axis-aligned bounding box.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn new(min: Vec3, max: Vec3) -> Self {
        Self { min, max }
    }

    /// Smallest box containing all points. Panics on an empty iterator.
    pub fn from_points<I: IntoIterator<Item = Vec3>>(points: I) -> Self {
        let mut it = points.into_iter();
        let first = it.next().expect("Aabb::from_points on empty iterator");
        let mut b = Aabb::new(first, first);
        for p in it {
            b.min = b.min.inf(&p);
            b.max = b.max.sup(&p);
        }
        b
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    pub fn extents(&self) -> Vec3 {
        self.max - self.min
    }

    pub fn diagonal(&self) -> f64 {
        self.extents().norm()
    }

    /// Closed containment test (boundary points count as inside).
    pub fn contains(&self, p: Vec3) -> bool {
        (0..3).all(|a| p[a] >= self.min[a] && p[a] <= self.max[a])
    }

    /// Cube with the same center whose edge is the largest extent,
    /// scaled by `1 + padding`.
    pub fn cubified(&self, padding: f64) -> Aabb {
        let c = self.center();
        let half = self.extents().max() * 0.5 * (1.0 + padding);
        let h = Vec3::new(half, half, half);
        Aabb::new(c - h, c + h)
    }

    /// Squared distance from `p` to the box (0 inside).
    pub fn distance_sq(&self, p: Vec3) -> f64 {
        let mut d2 = 0.0;
        for a in 0..3 {
            let d = (self.min[a] - p[a]).max(0.0).max(p[a] - self.max[a]);
            d2 += d * d;
        }
        d2
    }

    /// Child octant `i` (bit 0 → +x half, bit 1 → +y, bit 2 → +z).
    pub fn octant(&self, i: usize) -> Aabb {
        let c = self.center();
        let mut min = self.min;
        let mut max = c;
        for a in 0..3 {
            if i >> a & 1 == 1 {
                min[a] = c[a];
                max[a] = self.max[a];
            }
        }
        Aabb::new(min, max)
    }
}

/// Interpolate between grid bounds so that `t = 0` and `t = 1` reproduce the
/// endpoints exactly (plain `min + t*(max-min)` may miss `max` by an ulp).
pub fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a * (1.0 - t) + b * t
}
