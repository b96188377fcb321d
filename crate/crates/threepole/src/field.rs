//! The three-pole field: signed distance against local patches, or null.
//!
//! Inside an occupied octree cell the field is the distance to the *local*
//! patch (the triangles overlapping that cell), signed by the pseudo-normal
//! test `n(q) · (p − q) >= 0 → positive`; ties at zero are positive, i.e.
//! "on the surface counts as outside". Inside an empty cell the field is
//! null. Lattice corners sit on up to eight cells at once and answer for
//! all of them (see [`ThreePoleField::lattice_value`]). Null is encoded as
//! a quiet NaN in `f32` grids, with one canonical bit pattern so identical
//! fields serialize to identical bytes.

use std::collections::HashMap;
use std::sync::OnceLock;

use rayon::prelude::*;

use crate::geom::{lerp, Aabb, Vec3};
use crate::mesh::TriangleMesh;
use crate::octree::Octree;
use crate::spatial::SpatialIndex;
use crate::{Error, Result};

/// Canonical quiet-NaN bit pattern used for null in `f32` storage.
pub const NULL_F32_BITS: u32 = 0x7fc0_0000;

/// Value of the field at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ThreePoleValue {
    /// Signed distance: negative inside, positive (or zero) outside.
    Signed(f64),
    /// The third pole: no surface may form here.
    Null,
}

impl ThreePoleValue {
    pub fn is_null(&self) -> bool {
        matches!(self, ThreePoleValue::Null)
    }

    /// Encode for `f32` grids (null → canonical quiet NaN).
    pub fn to_f32(self) -> f32 {
        match self {
            ThreePoleValue::Signed(d) => d as f32,
            ThreePoleValue::Null => f32::from_bits(NULL_F32_BITS),
        }
    }

    /// Decode from `f32` storage (any NaN → null).
    pub fn from_f32(v: f32) -> Self {
        if v.is_nan() {
            ThreePoleValue::Null
        } else {
            ThreePoleValue::Signed(v as f64)
        }
    }
}

/// Class labels for learning: 0 inside, 1 outside, 2 null.
pub const LABEL_INSIDE: u8 = 0;
pub const LABEL_OUTSIDE: u8 = 1;
pub const LABEL_NULL: u8 = 2;

/// Map a field value to its class label. Zero distance is outside.
pub fn value_to_label(v: ThreePoleValue) -> u8 {
    match v {
        ThreePoleValue::Signed(d) if d < 0.0 => LABEL_INSIDE,
        ThreePoleValue::Signed(_) => LABEL_OUTSIDE,
        ThreePoleValue::Null => LABEL_NULL,
    }
}

/// Map a class label back to a representative field value
/// (`0 → −1`, `1 → +1`, `2 → null`). Panics on labels above 2.
pub fn label_to_value(label: u8) -> ThreePoleValue {
    match label {
        LABEL_INSIDE => ThreePoleValue::Signed(-1.0),
        LABEL_OUTSIDE => ThreePoleValue::Signed(1.0),
        LABEL_NULL => ThreePoleValue::Null,
        other => panic!("label {other} out of range 0..=2"),
    }
}

/// Evaluator binding a mesh to its octree, with lazily built per-leaf
/// spatial indexes (thread-safe; evaluation is pure).
pub struct ThreePoleField<'m> {
    mesh: &'m TriangleMesh,
    octree: &'m Octree,
    leaf_indexes: Vec<OnceLock<SpatialIndex<'m>>>,
    corner_cells: OnceLock<HashMap<[u32; 3], [u32; 8]>>,
}

impl<'m> ThreePoleField<'m> {
    pub fn new(mesh: &'m TriangleMesh, octree: &'m Octree) -> Self {
        let mut leaf_indexes = Vec::with_capacity(octree.occupied_count());
        leaf_indexes.resize_with(octree.occupied_count(), OnceLock::new);
        Self { mesh, octree, leaf_indexes, corner_cells: OnceLock::new() }
    }

    pub fn octree(&self) -> &'m Octree {
        self.octree
    }

    pub fn mesh(&self) -> &'m TriangleMesh {
        self.mesh
    }

    fn leaf_index(&self, occupied_id: u32) -> &SpatialIndex<'m> {
        self.leaf_indexes[occupied_id as usize].get_or_init(|| {
            SpatialIndex::new(self.mesh, self.octree.patch_by_id(occupied_id))
                .expect("occupied patch is non-empty")
        })
    }

    /// Field value at `p`. Errors if `p` is outside the root cube.
    pub fn evaluate(&self, p: Vec3) -> Result<ThreePoleValue> {
        let leaf = self
            .octree
            .leaf_at(p)
            .ok_or(Error::OutsideRootCube([p.x, p.y, p.z]))?;
        if leaf.patch.is_none() {
            return Ok(ThreePoleValue::Null);
        };
        let id = leaf.occupied_id.expect("occupied leaf carries an id");
        let hit = self.leaf_index(id).closest_point(p);
        // n(q) · (p − q) >= 0 → outside (ties, including p = q, are positive)
        let sign = if hit.normal.dot(&(p - hit.point)) >= 0.0 { 1.0 } else { -1.0 };
        Ok(ThreePoleValue::Signed(sign * hit.distance))
    }

    /// Occupied cells incident to each finest-lattice corner, in the fixed
    /// leaf-traversal order; `u32::MAX` pads unused slots.
    fn corner_cells(&self) -> &HashMap<[u32; 3], [u32; 8]> {
        self.corner_cells.get_or_init(|| {
            let mut map: HashMap<[u32; 3], [u32; 8]> = HashMap::new();
            self.octree.visit_leaves(|leaf| {
                let Some(id) = leaf.occupied_id else { return };
                debug_assert_eq!(leaf.depth, self.octree.max_depth());
                for d in 0..8u32 {
                    let c = [
                        leaf.coords[0] + (d & 1),
                        leaf.coords[1] + (d >> 1 & 1),
                        leaf.coords[2] + (d >> 2 & 1),
                    ];
                    let slots = map.entry(c).or_insert([u32::MAX; 8]);
                    if let Some(slot) = slots.iter_mut().find(|s| **s == u32::MAX) {
                        *slot = id;
                    }
                }
            });
            map
        })
    }

    /// Field value at corner `idx` of the `(2^depth + 1)³` lattice.
    ///
    /// A lattice corner belongs to up to eight finest cells at once. Letting
    /// the half-open hosting rule of [`evaluate`](Self::evaluate) pick one of
    /// them would read null whenever the winner happens to be empty — the far
    /// endpoint of every surface-crossing grid edge would go null and the
    /// extraction would strip the entire isosurface. Corners therefore answer
    /// for all their cells: the value is the signed distance to the nearest
    /// patch among the incident occupied cells, and null only where every
    /// incident cell is empty. Near the surface the lattice behaves exactly
    /// like a plain signed distance field; away from it the null region is
    /// untouched. Equidistant patches resolve to the first candidate in the
    /// fixed traversal order, so the value is deterministic.
    pub fn lattice_value(&self, idx: [u32; 3]) -> ThreePoleValue {
        let cells = 1u32 << self.octree.max_depth();
        debug_assert!(idx.iter().all(|&i| i <= cells), "lattice index {idx:?} out of range");
        let Some(candidates) = self.corner_cells().get(&idx) else {
            return ThreePoleValue::Null;
        };
        let root = self.octree.root_bounds();
        let t = |i: u32| i as f64 / cells as f64;
        let p = Vec3::new(
            lerp(root.min.x, root.max.x, t(idx[0])),
            lerp(root.min.y, root.max.y, t(idx[1])),
            lerp(root.min.z, root.max.z, t(idx[2])),
        );
        let mut best: Option<(f64, f64)> = None;
        for &id in candidates.iter().take_while(|&&id| id != u32::MAX) {
            let hit = self.leaf_index(id).closest_point(p);
            if best.is_none_or(|(d, _)| hit.distance < d) {
                let sign = if hit.normal.dot(&(p - hit.point)) >= 0.0 { 1.0 } else { -1.0 };
                best = Some((hit.distance, sign * hit.distance));
            }
        }
        match best {
            Some((_, v)) => ThreePoleValue::Signed(v),
            None => ThreePoleValue::Null,
        }
    }
}

/// Dense lattice of field values over a bounding box, x-fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldGrid {
    dims: [u32; 3],
    bbox: Aabb,
    values: Vec<f32>,
}

impl FieldGrid {
    /// Wrap raw values (length must be `nx * ny * nz`, each dim >= 2).
    pub fn from_values(dims: [u32; 3], bbox: Aabb, values: Vec<f32>) -> Result<Self> {
        let n = dims.iter().map(|&d| d as usize).product::<usize>();
        if dims.iter().any(|&d| d < 2) {
            return Err(Error::InvalidArgument(format!("grid dims {dims:?} must all be >= 2")));
        }
        if values.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "grid payload has {} values, dims {:?} need {}",
                values.len(),
                dims,
                n
            )));
        }
        Ok(Self { dims, bbox, values })
    }

    pub fn dims(&self) -> [u32; 3] {
        self.dims
    }

    pub fn bbox(&self) -> Aabb {
        self.bbox
    }

    pub fn raw_values(&self) -> &[f32] {
        &self.values
    }

    #[inline]
    pub fn flat_index(&self, i: u32, j: u32, k: u32) -> usize {
        (i + self.dims[0] * (j + self.dims[1] * k)) as usize
    }

    #[inline]
    pub fn raw(&self, i: u32, j: u32, k: u32) -> f32 {
        self.values[self.flat_index(i, j, k)]
    }

    pub fn get(&self, i: u32, j: u32, k: u32) -> ThreePoleValue {
        ThreePoleValue::from_f32(self.raw(i, j, k))
    }

    /// Position of lattice point `(i, j, k)`; endpoints land exactly on the
    /// box corners.
    pub fn lattice_point(&self, i: u32, j: u32, k: u32) -> Vec3 {
        let t = |idx: u32, d: u32| idx as f64 / (d - 1) as f64;
        Vec3::new(
            lerp(self.bbox.min.x, self.bbox.max.x, t(i, self.dims[0])),
            lerp(self.bbox.min.y, self.bbox.max.y, t(j, self.dims[1])),
            lerp(self.bbox.min.z, self.bbox.max.z, t(k, self.dims[2])),
        )
    }

    /// Fraction of null entries.
    pub fn null_fraction(&self) -> f64 {
        let nulls = self.values.iter().filter(|v| v.is_nan()).count();
        nulls as f64 / self.values.len().max(1) as f64
    }

    /// Class label of every lattice point, x-fastest.
    pub fn labels(&self) -> Vec<u8> {
        self.values
            .iter()
            .map(|&v| value_to_label(ThreePoleValue::from_f32(v)))
            .collect()
    }
}

/// Evaluate the field on the `(2^depth + 1)³` lattice over the octree root
/// cube. Deterministic: every lattice value is an independent pure function
/// of (mesh, octree), so thread count cannot change a single bit.
pub fn compute_grid(mesh: &TriangleMesh, depth: u32) -> Result<FieldGrid> {
    let octree = Octree::build(mesh, depth)?;
    compute_grid_on(mesh, &octree)
}

/// Same as [`compute_grid`] but over a caller-built octree.
pub fn compute_grid_on(mesh: &TriangleMesh, octree: &Octree) -> Result<FieldGrid> {
    let n = octree.grid_points_per_axis();
    let dims = [n, n, n];
    let bbox = octree.root_bounds();
    let field = ThreePoleField::new(mesh, octree);
    field.corner_cells(); // build the shared corner map before fanning out

    let plane = (n as usize) * (n as usize);
    let values: Vec<f32> = (0..n)
        .into_par_iter()
        .map(|k| {
            let mut slab = Vec::with_capacity(plane);
            for j in 0..n {
                for i in 0..n {
                    slab.push(field.lattice_value([i, j, k]).to_f32());
                }
            }
            slab
        })
        .flatten_iter()
        .collect();

    FieldGrid::from_values(dims, bbox, values)
}
