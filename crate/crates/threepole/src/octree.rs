//! Surface-adapted octree over a triangle mesh.
//!
//! The root is the mesh bounding box, cubified and padded. A node is
//! subdivided iff it intersects at least one triangle and its depth is below
//! the maximum; leaves at maximum depth that intersect the surface are
//! *occupied* and keep the exact list of triangles passing the
//! separating-axis overlap test against their cell. Everything else is
//! *empty* — the null region.
//!
//! All cell bounds and split planes are derived from integer cell
//! coordinates through one shared interpolation formula, so a lattice point
//! that lies on a shared cell face compares `>=` against the split plane
//! bit-exactly: point-to-leaf lookup is genuinely half-open (low-inclusive).

use crate::geom::{lerp, Aabb, Vec3};
use crate::mesh::TriangleMesh;
use crate::overlap::triangle_cell_overlap;
use crate::{Error, Result};

/// Supported subdivision depths.
pub const MIN_DEPTH: u32 = 1;
pub const MAX_DEPTH: u32 = 12;
/// Default bounding-box padding (5% of the largest extent).
pub const DEFAULT_PADDING: f64 = 0.05;

#[derive(Clone, Debug)]
enum Node {
    Internal([u32; 8]),
    /// Occupied leaf; payload indexes into `patches`.
    Occupied(u32),
    Empty,
}

/// A leaf cell looked up or visited in the tree.
#[derive(Clone, Copy, Debug)]
pub struct Leaf<'t> {
    pub bounds: Aabb,
    /// Depth of this leaf (occupied leaves always sit at `max_depth`).
    pub depth: u32,
    /// Integer cell coordinates at `depth` (x, y, z).
    pub coords: [u32; 3],
    /// Triangle ids overlapping the cell; `None` for empty leaves.
    pub patch: Option<&'t [u32]>,
    /// Dense id of the occupied leaf (for caching), if occupied.
    pub occupied_id: Option<u32>,
}

pub struct Octree {
    root: Aabb,
    max_depth: u32,
    nodes: Vec<Node>,
    patches: Vec<Vec<u32>>,
}

impl Octree {
    /// Build with the default 5% padding.
    pub fn build(mesh: &TriangleMesh, max_depth: u32) -> Result<Self> {
        Self::build_with_padding(mesh, max_depth, DEFAULT_PADDING)
    }

    pub fn build_with_padding(mesh: &TriangleMesh, max_depth: u32, padding: f64) -> Result<Self> {
        if !(MIN_DEPTH..=MAX_DEPTH).contains(&max_depth) {
            return Err(Error::DepthOutOfRange(max_depth));
        }
        if mesh.triangles.is_empty() {
            return Err(Error::EmptyMesh);
        }
        if !(padding.is_finite() && padding >= 0.0) {
            return Err(Error::InvalidArgument(format!("padding {padding} must be finite and >= 0")));
        }

        let root = mesh.bbox().cubified(padding);
        let mut tree = Self { root, max_depth, nodes: Vec::new(), patches: Vec::new() };
        let all: Vec<u32> = (0..mesh.triangles.len() as u32).collect();
        tree.subdivide(mesh, all, 0, [0, 0, 0]);
        Ok(tree)
    }

    fn subdivide(&mut self, mesh: &TriangleMesh, tris: Vec<u32>, depth: u32, coords: [u32; 3]) -> u32 {
        let id = self.nodes.len() as u32;
        if tris.is_empty() {
            self.nodes.push(Node::Empty);
            return id;
        }
        if depth == self.max_depth {
            self.nodes.push(Node::Occupied(self.patches.len() as u32));
            self.patches.push(tris);
            return id;
        }
        self.nodes.push(Node::Internal([u32::MAX; 8]));
        let mut children = [u32::MAX; 8];
        for (oct, child) in children.iter_mut().enumerate() {
            let ccoords = child_coords(coords, oct);
            let cbox = self.cell_bounds(depth + 1, ccoords);
            // Internal levels filter against a hair-inflated box so that
            // rounding in the separating-axis test can never drop a
            // triangle that exactly touches a descendant cell; the final
            // leaf-level pass is exact against the true cell bounds.
            let filter_box = if depth + 1 == self.max_depth {
                cbox
            } else {
                inflate(&cbox)
            };
            let sub: Vec<u32> = tris
                .iter()
                .copied()
                .filter(|&t| triangle_cell_overlap(&mesh.triangle(t as usize), &filter_box))
                .collect();
            *child = self.subdivide(mesh, sub, depth + 1, ccoords);
        }
        self.nodes[id as usize] = Node::Internal(children);
        id
    }

    /// Exact bounds of the cell `coords` at `depth`. Every box is
    /// interpolated straight from the root, so the same cell always gets
    /// bit-identical bounds no matter how it was reached.
    pub fn cell_bounds(&self, depth: u32, coords: [u32; 3]) -> Aabb {
        let n = (1u64 << depth) as f64;
        let mut min = Vec3::zeros();
        let mut max = Vec3::zeros();
        for a in 0..3 {
            min[a] = lerp(self.root.min[a], self.root.max[a], coords[a] as f64 / n);
            max[a] = lerp(self.root.min[a], self.root.max[a], (coords[a] + 1) as f64 / n);
        }
        Aabb::new(min, max)
    }

    /// Leaf containing `p` under half-open (low-inclusive) cell bounds;
    /// `None` when `p` is outside the root cube. Points on shared faces go
    /// to the higher-coordinate cell, except on the root's own upper faces.
    pub fn leaf_at(&self, p: Vec3) -> Option<Leaf<'_>> {
        if !self.root.contains(p) {
            return None;
        }
        let mut node = 0u32;
        let mut depth = 0u32;
        let mut coords = [0u32; 3];
        loop {
            match &self.nodes[node as usize] {
                Node::Internal(children) => {
                    let half = (1u64 << (depth + 1)) as f64;
                    let mut oct = 0usize;
                    for a in 0..3 {
                        let t = (2 * coords[a] + 1) as f64 / half;
                        let plane = lerp(self.root.min[a], self.root.max[a], t);
                        if p[a] >= plane {
                            oct |= 1 << a;
                        }
                    }
                    coords = child_coords(coords, oct);
                    depth += 1;
                    node = children[oct];
                }
                Node::Occupied(patch) => {
                    return Some(Leaf {
                        bounds: self.cell_bounds(depth, coords),
                        depth,
                        coords,
                        patch: Some(&self.patches[*patch as usize]),
                        occupied_id: Some(*patch),
                    });
                }
                Node::Empty => {
                    return Some(Leaf {
                        bounds: self.cell_bounds(depth, coords),
                        depth,
                        coords,
                        patch: None,
                        occupied_id: None,
                    });
                }
            }
        }
    }

    /// Depth-first visit of every leaf, children in octant order — a fixed,
    /// reproducible traversal.
    pub fn visit_leaves<F: FnMut(Leaf<'_>)>(&self, mut f: F) {
        self.visit_rec(0, 0, [0, 0, 0], &mut f);
    }

    fn visit_rec<F: FnMut(Leaf<'_>)>(&self, node: u32, depth: u32, coords: [u32; 3], f: &mut F) {
        match &self.nodes[node as usize] {
            Node::Internal(children) => {
                for (oct, &c) in children.iter().enumerate() {
                    self.visit_rec(c, depth + 1, child_coords(coords, oct), f);
                }
            }
            Node::Occupied(patch) => f(Leaf {
                bounds: self.cell_bounds(depth, coords),
                depth,
                coords,
                patch: Some(&self.patches[*patch as usize]),
                occupied_id: Some(*patch),
            }),
            Node::Empty => f(Leaf {
                bounds: self.cell_bounds(depth, coords),
                depth,
                coords,
                patch: None,
                occupied_id: None,
            }),
        }
    }

    pub fn root_bounds(&self) -> Aabb {
        self.root
    }

    pub fn max_depth(&self) -> u32 {
        self.max_depth
    }

    /// Number of occupied leaves.
    pub fn occupied_count(&self) -> usize {
        self.patches.len()
    }

    /// Triangle list of the occupied leaf with the given dense id.
    pub fn patch_by_id(&self, occupied_id: u32) -> &[u32] {
        &self.patches[occupied_id as usize]
    }

    /// Edge length of the finest cells.
    pub fn cell_width(&self) -> f64 {
        self.root.extents().x / (1u64 << self.max_depth) as f64
    }

    /// Lattice points per axis for the matching sample grid: `2^depth + 1`.
    pub fn grid_points_per_axis(&self) -> u32 {
        (1u32 << self.max_depth) + 1
    }
}

fn child_coords(coords: [u32; 3], oct: usize) -> [u32; 3] {
    let mut c = coords;
    for a in 0..3 {
        c[a] = 2 * c[a] + (oct as u32 >> a & 1);
    }
    c
}

/// Grow a box by a relative sliver per axis — enough to swallow floating
/// point noise, far below any geometric feature.
fn inflate(b: &Aabb) -> Aabb {
    let pad = (b.max - b.min) * 1e-9;
    Aabb::new(b.min - pad, b.max + pad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;

    /// Oracle: enumerate all cells at depth 2 directly and check occupancy
    /// against an independent SAT pass over the full mesh.
    #[test]
    fn depth2_occupancy_matches_direct_enumeration() {
        let mesh = shapes::uv_sphere(Vec3::new(0.1, -0.05, 0.2), 0.6, 12, 6);
        let tree = Octree::build(&mesh, 2).unwrap();
        let root = tree.root_bounds();

        let mut expected = std::collections::HashSet::new();
        for x in 0..4u32 {
            for y in 0..4u32 {
                for z in 0..4u32 {
                    let cell = tree.cell_bounds(2, [x, y, z]);
                    let hit = (0..mesh.triangles.len())
                        .any(|t| triangle_cell_overlap(&mesh.triangle(t), &cell));
                    if hit {
                        expected.insert([x, y, z]);
                    }
                }
            }
        }

        let mut got = std::collections::HashSet::new();
        tree.visit_leaves(|leaf| {
            if leaf.patch.is_some() {
                assert_eq!(leaf.depth, 2);
                got.insert(leaf.coords);
            }
        });
        assert_eq!(got, expected);
        assert!(root.contains(mesh.bbox().min) && root.contains(mesh.bbox().max));
    }

    /// Every occupied leaf's list must be exactly the overlap set of its box.
    #[test]
    fn patches_are_exact_overlap_sets() {
        let mesh = shapes::cuboid(Vec3::zeros(), Vec3::new(0.7, 0.5, 0.3));
        let tree = Octree::build(&mesh, 3).unwrap();
        tree.visit_leaves(|leaf| {
            if let Some(patch) = leaf.patch {
                let expected: Vec<u32> = (0..mesh.triangles.len() as u32)
                    .filter(|&t| triangle_cell_overlap(&mesh.triangle(t as usize), &leaf.bounds))
                    .collect();
                assert_eq!(patch, &expected[..], "cell {:?}", leaf.coords);
            } else {
                // empty leaves really intersect nothing
                for t in 0..mesh.triangles.len() {
                    assert!(!triangle_cell_overlap(&mesh.triangle(t), &leaf.bounds));
                }
            }
        });
    }

    #[test]
    fn leaves_partition_points_and_lookup_is_low_inclusive() {
        let mesh = shapes::cuboid(Vec3::zeros(), Vec3::new(1.0, 1.0, 1.0));
        let tree = Octree::build_with_padding(&mesh, 2, 0.0).unwrap();
        let root = tree.root_bounds();

        // a point exactly on the mid-plane goes to the upper cell
        let mid = root.center();
        let leaf = tree.leaf_at(mid).unwrap();
        assert!(leaf.coords.iter().all(|&c| c == 1 << 1), "{:?}", leaf.coords);

        // root's min and max corners are owned by corner cells
        assert_eq!(tree.leaf_at(root.min).unwrap().coords, [0, 0, 0]);
        let top = tree.leaf_at(root.max).unwrap();
        assert_eq!(top.coords, [3, 3, 3]);

        assert!(tree.leaf_at(root.max + Vec3::new(1e-9, 0.0, 0.0)).is_none());
    }

    #[test]
    fn depth_bounds_are_enforced() {
        let mesh = shapes::cuboid(Vec3::zeros(), Vec3::new(1.0, 1.0, 1.0));
        assert!(matches!(Octree::build(&mesh, 0), Err(Error::DepthOutOfRange(0))));
        assert!(matches!(Octree::build(&mesh, 13), Err(Error::DepthOutOfRange(13))));
        assert!(Octree::build(&mesh, 1).is_ok());
    }

    #[test]
    fn empty_mesh_is_rejected() {
        let mesh = TriangleMesh::default();
        assert!(matches!(Octree::build(&mesh, 3), Err(Error::EmptyMesh)));
    }
}
