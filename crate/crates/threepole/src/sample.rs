//! Training-point generation: random, uniform-lattice, and octree-corner.
//!
//! Labels (and signed targets where they exist) always come from the exact
//! field evaluator, so every strategy produces ground truth — they differ
//! only in *where* they look. Octree sampling concentrates points on leaf
//! cell corners near the surface, which is what makes the learned fields
//! sharpest at equal budget; corner points are labeled with the same
//! all-incident-cells rule the value grids use, so a model trained on them
//! is scored against exactly the field it will be extracted from.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::field::{value_to_label, ThreePoleField, ThreePoleValue};
use crate::geom::{lerp, Vec3};
use crate::mesh::TriangleMesh;
use crate::octree::Octree;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SampleStrategy {
    /// `count_hint` i.i.d. uniform points in the root cube.
    Random,
    /// An equally spaced lattice of about `count_hint` points.
    Uniform,
    /// Deduplicated corner points of all leaf cells (`count_hint` ignored;
    /// the tree decides the budget).
    Octree,
}

/// A labeled batch of query points.
#[derive(Clone, Debug)]
pub struct SampleBatch {
    pub points: Vec<Vec3>,
    /// Class labels: 0 inside, 1 outside, 2 null.
    pub labels: Vec<u8>,
    /// Signed-distance targets for regression; NaN where the field is null.
    pub targets: Vec<f32>,
    pub strategy: SampleStrategy,
}

impl SampleBatch {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Count of each label (inside, outside, null).
    pub fn label_histogram(&self) -> [usize; 3] {
        let mut h = [0usize; 3];
        for &l in &self.labels {
            h[l as usize] += 1;
        }
        h
    }
}

/// Sample labeled points for a mesh/octree pair. Same arguments (including
/// seed) produce identical batches; octree sampling ignores the seed.
pub fn sample_points(
    mesh: &TriangleMesh,
    octree: &Octree,
    strategy: SampleStrategy,
    count_hint: usize,
    seed: u64,
) -> Result<SampleBatch> {
    let field = ThreePoleField::new(mesh, octree);
    sample_points_on(&field, strategy, count_hint, seed)
}

/// Same as [`sample_points`] over an existing evaluator (reuses leaf caches).
pub fn sample_points_on(
    field: &ThreePoleField<'_>,
    strategy: SampleStrategy,
    count_hint: usize,
    seed: u64,
) -> Result<SampleBatch> {
    if count_hint == 0 && strategy != SampleStrategy::Octree {
        return Err(Error::InvalidArgument("count_hint must be positive".into()));
    }
    let octree = field.octree();
    let root = octree.root_bounds();

    // octree-corner points keep their lattice index: corners are valued by
    // the all-incident-cells rule, not by point lookup
    let mut corner_idx: Option<Vec<[u32; 3]>> = None;
    let points = match strategy {
        SampleStrategy::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let ext = root.extents();
            (0..count_hint)
                .map(|_| {
                    Vec3::new(
                        root.min.x + rng.gen::<f64>() * ext.x,
                        root.min.y + rng.gen::<f64>() * ext.y,
                        root.min.z + rng.gen::<f64>() * ext.z,
                    )
                })
                .collect()
        }
        SampleStrategy::Uniform => {
            let n = (count_hint as f64).cbrt().round().max(1.0) as u32;
            let mut pts = Vec::with_capacity((n * n * n) as usize);
            let t = |i: u32| {
                if n == 1 {
                    0.5
                } else {
                    i as f64 / (n - 1) as f64
                }
            };
            for k in 0..n {
                for j in 0..n {
                    for i in 0..n {
                        pts.push(Vec3::new(
                            lerp(root.min.x, root.max.x, t(i)),
                            lerp(root.min.y, root.max.y, t(j)),
                            lerp(root.min.z, root.max.z, t(k)),
                        ));
                    }
                }
            }
            pts
        }
        SampleStrategy::Octree => {
            // corners of every leaf, in units of the finest cell
            let finest = 1u32 << octree.max_depth();
            let mut corners = std::collections::HashSet::new();
            octree.visit_leaves(|leaf| {
                let scale = 1u32 << (octree.max_depth() - leaf.depth);
                for d in 0..8u32 {
                    let c = [
                        (leaf.coords[0] + (d & 1)) * scale,
                        (leaf.coords[1] + (d >> 1 & 1)) * scale,
                        (leaf.coords[2] + (d >> 2 & 1)) * scale,
                    ];
                    corners.insert(c);
                }
            });
            let mut corners: Vec<[u32; 3]> = corners.into_iter().collect();
            // x-fastest order, like the value grids
            corners.sort_unstable_by_key(|c| (c[2], c[1], c[0]));
            let pts = corners
                .iter()
                .map(|c| {
                    Vec3::new(
                        lerp(root.min.x, root.max.x, c[0] as f64 / finest as f64),
                        lerp(root.min.y, root.max.y, c[1] as f64 / finest as f64),
                        lerp(root.min.z, root.max.z, c[2] as f64 / finest as f64),
                    )
                })
                .collect();
            corner_idx = Some(corners);
            pts
        }
    };

    let mut labels = Vec::with_capacity(points.len());
    let mut targets = Vec::with_capacity(points.len());
    for (i, &p) in points.iter().enumerate() {
        let v = match &corner_idx {
            Some(idx) => field.lattice_value(idx[i]),
            None => field.evaluate(p)?,
        };
        labels.push(value_to_label(v));
        targets.push(match v {
            ThreePoleValue::Signed(d) => d as f32,
            ThreePoleValue::Null => ThreePoleValue::Null.to_f32(),
        });
    }

    Ok(SampleBatch { points, labels, targets, strategy })
}
