//! Point-set and mesh reconstruction metrics.
//!
//! Chamfer-L2 and F-score run on area-weighted surface samples; nearest
//! neighbors come from an exact k-d tree whose pruning is deliberately
//! conservative, so results equal the exhaustive double loop bit for bit.
//! EMD solves the assignment problem exactly (shortest augmenting paths)
//! and is capped at 2048 points per side.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geom::Vec3;
use crate::mesh::TriangleMesh;
use crate::{Error, Result};

/// Hard cap for [`emd_exact`] (the solver is O(n³) with an n² cost matrix).
pub const EMD_MAX_POINTS: usize = 2048;

/// F-score threshold as a fraction of the ground-truth bbox diagonal.
pub const FSCORE_TAU_FRACTION: f64 = 0.01;

/// Area-weighted uniform sampling of the mesh surface. Deterministic in
/// (mesh, n, seed).
pub fn surface_sample(mesh: &TriangleMesh, n: usize, seed: u64) -> Result<Vec<Vec3>> {
    if mesh.triangles.is_empty() {
        return Err(Error::EmptyMesh);
    }
    let mut cumulative = Vec::with_capacity(mesh.triangles.len());
    let mut total = 0.0;
    for i in 0..mesh.triangles.len() {
        total += mesh.triangle_area(i);
        cumulative.push(total);
    }
    if total <= 0.0 {
        return Err(Error::InvalidArgument("mesh has zero total area".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let r = rng.gen::<f64>() * total;
        let t = cumulative.partition_point(|&c| c <= r).min(mesh.triangles.len() - 1);
        let [a, b, c] = mesh.triangle(t);
        // square-root trick for uniform barycentric coordinates
        let (r1, r2): (f64, f64) = (rng.gen(), rng.gen());
        let s = r1.sqrt();
        let (u, v) = (1.0 - s, r2 * s);
        out.push(a * u + b * v + c * (1.0 - u - v));
    }
    Ok(out)
}

/// Symmetric squared Chamfer distance:
/// `(mean_a min_b |a-b|² + mean_b min_a |a-b|²) / 2`.
pub fn chamfer_l2(a: &[Vec3], b: &[Vec3]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::BadPointSets(a.len(), b.len()));
    }
    let ta = KdTree::build(b);
    let sa: f64 = a.iter().map(|&p| ta.nearest_sq(p)).sum::<f64>() / a.len() as f64;
    let tb = KdTree::build(a);
    let sb: f64 = b.iter().map(|&p| tb.nearest_sq(p)).sum::<f64>() / b.len() as f64;
    Ok(0.5 * (sa + sb))
}

/// Precision, recall, and F-score at distance threshold `tau`.
/// Precision: fraction of `rec` within `tau` of `gt`; recall: the reverse.
/// F = 2PR/(P+R), defined as 0 when both are 0.
pub fn fscore(rec: &[Vec3], gt: &[Vec3], tau: f64) -> Result<(f64, f64, f64)> {
    if rec.is_empty() || gt.is_empty() {
        return Err(Error::BadPointSets(rec.len(), gt.len()));
    }
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::InvalidArgument(format!("tau {tau} must be positive")));
    }
    let tau2 = tau * tau;
    let tg = KdTree::build(gt);
    let precision = rec.iter().filter(|&&p| tg.nearest_sq(p) <= tau2).count() as f64 / rec.len() as f64;
    let tr = KdTree::build(rec);
    let recall = gt.iter().filter(|&&p| tr.nearest_sq(p) <= tau2).count() as f64 / gt.len() as f64;
    let f = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok((precision, recall, f))
}

/// Default F-score threshold: 1% of the ground-truth bbox diagonal.
pub fn default_fscore_tau(gt: &TriangleMesh) -> f64 {
    FSCORE_TAU_FRACTION * gt.bbox().diagonal()
}

/// Exact earth mover's distance between equally sized point sets under
/// Euclidean cost: minimum-cost perfect matching divided by N.
pub fn emd_exact(a: &[Vec3], b: &[Vec3]) -> Result<f64> {
    if a.is_empty() || a.len() != b.len() {
        return Err(Error::BadPointSets(a.len(), b.len()));
    }
    if a.len() > EMD_MAX_POINTS {
        return Err(Error::InvalidArgument(format!(
            "emd_exact supports at most {EMD_MAX_POINTS} points, got {}",
            a.len()
        )));
    }
    let n = a.len();
    let mut cost = vec![0.0f64; n * n];
    for (i, &pa) in a.iter().enumerate() {
        for (j, &pb) in b.iter().enumerate() {
            cost[i * n + j] = (pa - pb).norm();
        }
    }
    let row_to_col = solve_assignment(&cost, n);
    // sum in row order so equal matchings give identical totals
    let total: f64 = row_to_col
        .iter()
        .enumerate()
        .map(|(i, &j)| cost[i * n + j])
        .sum();
    Ok(total / n as f64)
}

/// Dense Hungarian / Jonker-Volgenant style shortest-augmenting-path solver.
/// Returns the column matched to each row of the n×n cost matrix.
fn solve_assignment(cost: &[f64], n: usize) -> Vec<usize> {
    // 1-based potentials; p[j] is the row matched to column j (0 = none).
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];

    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut row_to_col = vec![usize::MAX; n];
    for j in 1..=n {
        row_to_col[p[j] - 1] = j - 1;
    }
    row_to_col
}

/// Mesh topology summary.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TopologyStats {
    /// Edges with exactly one incident face.
    pub boundary_edges: usize,
    /// V − E + F over the mesh as stored.
    pub euler_characteristic: i64,
    /// Connected components under face adjacency (shared edges).
    pub components: usize,
}

pub fn topology_stats(mesh: &TriangleMesh) -> TopologyStats {
    use std::collections::HashMap;
    let mut edges: HashMap<(u32, u32), Vec<u32>> = HashMap::new();
    for (f, t) in mesh.triangles.iter().enumerate() {
        for e in 0..3 {
            let (a, b) = (t[e], t[(e + 1) % 3]);
            let key = if a < b { (a, b) } else { (b, a) };
            edges.entry(key).or_default().push(f as u32);
        }
    }

    let boundary_edges = edges.values().filter(|fs| fs.len() == 1).count();
    let euler_characteristic =
        mesh.vertices.len() as i64 - edges.len() as i64 + mesh.triangles.len() as i64;

    // union-find over faces
    let mut parent: Vec<u32> = (0..mesh.triangles.len() as u32).collect();
    fn find(parent: &mut [u32], x: u32) -> u32 {
        let mut r = x;
        while parent[r as usize] != r {
            r = parent[r as usize];
        }
        let mut cur = x;
        while parent[cur as usize] != r {
            let next = parent[cur as usize];
            parent[cur as usize] = r;
            cur = next;
        }
        r
    }
    for faces in edges.values() {
        for w in faces.windows(2) {
            let (a, b) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
            if a != b {
                parent[a as usize] = b;
            }
        }
    }
    let components = (0..parent.len() as u32)
        .filter(|&f| find(&mut parent, f) == f)
        .count();

    TopologyStats { boundary_edges, euler_characteristic, components }
}

// ---------------------------------------------------------------------------
// exact nearest-neighbor k-d tree

struct KdNode {
    /// Splitting value along `axis`; leaves use `axis == 3`.
    split: f64,
    axis: u8,
    left: u32,
    right: u32,
    /// Leaf payload range in `points`.
    start: u32,
    end: u32,
}

struct KdTree {
    nodes: Vec<KdNode>,
    points: Vec<Vec3>,
}

const KD_LEAF: usize = 16;
/// Pruning slack: bounds are shrunk by this factor so floating-point
/// round-up can never prune the true nearest neighbor.
const KD_PRUNE_SAFETY: f64 = 1.0 - 1e-9;

impl KdTree {
    fn build(points: &[Vec3]) -> Self {
        let mut pts = points.to_vec();
        let mut nodes = Vec::new();
        Self::build_rec(&mut pts, 0, &mut nodes);
        KdTree { nodes, points: pts }
    }

    fn build_rec(pts: &mut [Vec3], offset: u32, nodes: &mut Vec<KdNode>) -> u32 {
        let id = nodes.len() as u32;
        if pts.len() <= KD_LEAF {
            nodes.push(KdNode {
                split: 0.0,
                axis: 3,
                left: 0,
                right: 0,
                start: offset,
                end: offset + pts.len() as u32,
            });
            return id;
        }
        // widest axis of the point cloud
        let bbox = crate::geom::Aabb::from_points(pts.iter().copied());
        let axis = bbox.extents().imax();
        let mid = pts.len() / 2;
        pts.select_nth_unstable_by(mid, |a, b| a[axis].partial_cmp(&b[axis]).unwrap());
        let split = pts[mid][axis];
        nodes.push(KdNode { split, axis: axis as u8, left: 0, right: 0, start: 0, end: 0 });
        let (lo, hi) = pts.split_at_mut(mid);
        let left = Self::build_rec(lo, offset, nodes);
        let right = Self::build_rec(hi, offset + mid as u32, nodes);
        nodes[id as usize].left = left;
        nodes[id as usize].right = right;
        id
    }

    /// Smallest squared distance from `q` to any stored point, computed with
    /// the same expression a brute-force loop would use.
    fn nearest_sq(&self, q: Vec3) -> f64 {
        let mut best = f64::INFINITY;
        self.search(0, q, &mut best);
        best
    }

    fn search(&self, node: u32, q: Vec3, best: &mut f64) {
        let n = &self.nodes[node as usize];
        if n.axis == 3 {
            for p in &self.points[n.start as usize..n.end as usize] {
                let d2 = (q - p).norm_squared();
                if d2 < *best {
                    *best = d2;
                }
            }
            return;
        }
        let delta = q[n.axis as usize] - n.split;
        let (near, far) = if delta < 0.0 { (n.left, n.right) } else { (n.right, n.left) };
        self.search(near, q, best);
        if delta * delta * KD_PRUNE_SAFETY <= *best {
            self.search(far, q, best);
        }
    }
}
