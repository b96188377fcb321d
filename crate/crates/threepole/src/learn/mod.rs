//! From-scratch coordinate networks over three-pole fields.
//!
//! A plain fully connected ReLU trunk maps a (optionally sinusoidally
//! encoded) query point to either three class logits (inside / outside /
//! null) or to a nan/non-nan logit plus a regressed signed distance. No
//! autograd framework: forward, backward, and Adam are written out by hand
//! and checked against finite differences in the tests.

mod loss;
mod train;

pub use loss::{br_loss, triclass_loss, Gradients};
pub use train::{train, AdamState};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::field::{FieldGrid, ThreePoleValue, LABEL_INSIDE, LABEL_NULL, LABEL_OUTSIDE};
use crate::geom::{Aabb, Vec3};
use crate::{Error, Result};

/// Which learning framework the model implements.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LearnMode {
    /// 3-way classification: logits for inside / outside / null.
    TriClass,
    /// Binary nan/non-nan classifier plus signed-distance regressor
    /// sharing the trunk.
    BinaryRegression,
}

/// Number of sinusoid frequencies when positional encoding is on.
pub const POS_ENC_FREQS: usize = 6;

/// Training hyperparameters. Defaults follow the reference setup: 4 hidden
/// layers of 256, Adam at 1e-4 with betas (0.9, 0.999), eps 1e-8, and no
/// weight decay.
#[derive(Clone, Debug)]
pub struct TrainConfig {
    pub mode: LearnMode,
    pub hidden: Vec<usize>,
    pub pos_enc: bool,
    pub learning_rate: f64,
    pub betas: (f64, f64),
    pub eps: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    /// Weight classes by inverse frequency in the cross-entropy.
    pub class_weights: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            mode: LearnMode::TriClass,
            hidden: vec![256; 4],
            pos_enc: false,
            learning_rate: 1e-4,
            betas: (0.9, 0.999),
            eps: 1e-8,
            weight_decay: 0.0,
            batch_size: 512,
            epochs: 100,
            seed: 0,
            class_weights: false,
        }
    }
}

/// One affine layer; `w` is `out × in`.
#[derive(Clone, Debug)]
pub struct Dense {
    pub w: DMatrix<f64>,
    pub b: DVector<f64>,
}

impl Dense {
    fn he_uniform(out: usize, inp: usize, rng: &mut ChaCha8Rng) -> Self {
        let limit = (6.0 / inp as f64).sqrt();
        // column-major fill order, matching the storage layout
        let w = DMatrix::from_fn(out, inp, |_, _| 0.0).map(|_| rng.gen_range(-limit..limit));
        Dense { w, b: DVector::zeros(out) }
    }
}

/// The coordinate network.
#[derive(Clone, Debug)]
pub struct Model {
    pub mode: LearnMode,
    pub pos_enc: bool,
    /// Query points are mapped into `[-1, 1]³` relative to this box before
    /// encoding, so sinusoid frequencies mean the same thing on any shape.
    pub domain: Aabb,
    /// Hidden layers, ReLU after each.
    pub trunk: Vec<Dense>,
    /// TriClass: one `width → 3` layer. BinaryRegression: `width → 1`
    /// nan/non-nan logit head then `width → 1` distance head.
    pub heads: Vec<Dense>,
}

impl Model {
    /// Seeded He-uniform initialization (biases zero).
    pub fn init(mode: LearnMode, hidden: &[usize], pos_enc: bool, domain: Aabb, seed: u64) -> Result<Self> {
        if hidden.is_empty() || hidden.iter().any(|&w| w == 0) {
            return Err(Error::InvalidArgument(format!("bad hidden widths {hidden:?}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let in_dim = input_dim(pos_enc);

        let mut trunk = Vec::with_capacity(hidden.len());
        let mut prev = in_dim;
        for &width in hidden {
            trunk.push(Dense::he_uniform(width, prev, &mut rng));
            prev = width;
        }
        let heads = match mode {
            LearnMode::TriClass => vec![Dense::he_uniform(3, prev, &mut rng)],
            LearnMode::BinaryRegression => vec![
                Dense::he_uniform(1, prev, &mut rng),
                Dense::he_uniform(1, prev, &mut rng),
            ],
        };
        Ok(Model { mode, pos_enc, domain, trunk, heads })
    }

    /// All layers in canonical order: trunk, then heads.
    pub fn layers(&self) -> impl Iterator<Item = &Dense> {
        self.trunk.iter().chain(self.heads.iter())
    }

    pub fn param_count(&self) -> usize {
        self.layers().map(|l| l.w.len() + l.b.len()).sum()
    }

    /// Mutable view of every parameter in canonical order (per layer:
    /// weights column-major, then bias). Adam, serialization, and the
    /// finite-difference tests all walk this same order.
    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.trunk
            .iter_mut()
            .chain(self.heads.iter_mut())
            .flat_map(|l| l.w.as_mut_slice().iter_mut().chain(l.b.as_mut_slice().iter_mut()))
    }

    pub fn params(&self) -> impl Iterator<Item = f64> + '_ {
        self.layers()
            .flat_map(|l| l.w.as_slice().iter().chain(l.b.as_slice().iter()))
            .copied()
    }

    /// Encode a batch of points as network input columns.
    pub fn encode(&self, points: &[Vec3]) -> DMatrix<f64> {
        let dim = input_dim(self.pos_enc);
        let center = self.domain.center();
        let half = self.domain.extents().max() * 0.5;
        let mut x = DMatrix::zeros(dim, points.len());
        for (c, p) in points.iter().enumerate() {
            let q = (p - center) / half;
            let mut col = x.column_mut(c);
            col[0] = q.x;
            col[1] = q.y;
            col[2] = q.z;
            if self.pos_enc {
                let mut row = 3;
                for k in 0..POS_ENC_FREQS {
                    let f = std::f64::consts::PI * (1u64 << k) as f64;
                    for a in 0..3 {
                        let (s, cv) = (f * q[a]).sin_cos();
                        col[row] = s;
                        col[row + 1] = cv;
                        row += 2;
                    }
                }
            }
        }
        x
    }

    /// Forward pass. Output is one column per input point: three class
    /// logits for TriClass, `[nan/non-nan logit, signed distance]` for
    /// BinaryRegression. Row content of a column depends only on that
    /// point, never on its batch neighbors.
    pub fn forward(&self, points: &[Vec3]) -> DMatrix<f64> {
        let (out, _) = self.forward_cached(points);
        out
    }

    /// Forward pass that also returns the per-layer activations needed by
    /// backprop: `acts[0]` is the encoded input, `acts[l+1]` the output of
    /// trunk layer `l` after ReLU.
    pub(crate) fn forward_cached(&self, points: &[Vec3]) -> (DMatrix<f64>, Vec<DMatrix<f64>>) {
        let mut acts = Vec::with_capacity(self.trunk.len() + 1);
        acts.push(self.encode(points));
        for layer in &self.trunk {
            let mut z = affine(layer, acts.last().unwrap());
            z.apply(|v| *v = v.max(0.0));
            acts.push(z);
        }
        let top = acts.last().unwrap();
        let out = match self.mode {
            LearnMode::TriClass => affine(&self.heads[0], top),
            LearnMode::BinaryRegression => {
                let mut y = DMatrix::zeros(2, points.len());
                for (h, head) in self.heads.iter().enumerate() {
                    let row = affine(head, top);
                    for c in 0..points.len() {
                        y[(h, c)] = row[(0, c)];
                    }
                }
                y
            }
        };
        (out, acts)
    }

    /// Predicted class labels (TriClass). Argmax ties resolve to the lowest
    /// class index.
    pub fn predict_labels(&self, points: &[Vec3]) -> Result<Vec<u8>> {
        if self.mode != LearnMode::TriClass {
            return Err(Error::InvalidArgument(
                "predict_labels requires a TriClass model".into(),
            ));
        }
        let logits = self.forward(points);
        Ok(logits
            .column_iter()
            .map(|col| {
                let mut best = 0u8;
                for k in 1..3 {
                    if col[k] > col[best as usize] {
                        best = k as u8;
                    }
                }
                best
            })
            .collect())
    }

    /// Evaluate the model over a grid lattice. TriClass maps labels through
    /// the canonical values (−1 / +1 / null); BinaryRegression gates the
    /// regressed distance by `sigmoid(logit) >= 0.5` (i.e. `logit >= 0`).
    pub fn predict_grid(&self, dims: [u32; 3], bbox: Aabb) -> Result<FieldGrid> {
        let template = FieldGrid::from_values(
            dims,
            bbox,
            vec![0.0; dims.iter().map(|&d| d as usize).product()],
        )?;
        let [nx, ny, nz] = dims;
        let total = (nx as usize) * (ny as usize) * (nz as usize);

        const CHUNK: usize = 4096;
        let starts: Vec<usize> = (0..total).step_by(CHUNK).collect();
        let values: Vec<f32> = starts
            .par_iter()
            .map(|&start| {
                let end = (start + CHUNK).min(total);
                let points: Vec<Vec3> = (start..end)
                    .map(|flat| {
                        let i = flat as u32 % nx;
                        let j = flat as u32 / nx % ny;
                        let k = flat as u32 / (nx * ny);
                        template.lattice_point(i, j, k)
                    })
                    .collect();
                let out = self.forward(&points);
                (0..points.len())
                    .map(|c| match self.mode {
                        LearnMode::TriClass => {
                            let col = out.column(c);
                            let mut best = 0usize;
                            for k in 1..3 {
                                if col[k] > col[best] {
                                    best = k;
                                }
                            }
                            match best as u8 {
                                LABEL_INSIDE => -1.0f32,
                                LABEL_OUTSIDE => 1.0f32,
                                LABEL_NULL => ThreePoleValue::Null.to_f32(),
                                _ => unreachable!(),
                            }
                        }
                        LearnMode::BinaryRegression => {
                            if out[(0, c)] >= 0.0 {
                                out[(1, c)] as f32
                            } else {
                                ThreePoleValue::Null.to_f32()
                            }
                        }
                    })
                    .collect::<Vec<f32>>()
            })
            .flatten_iter()
            .collect();

        FieldGrid::from_values(dims, bbox, values)
    }
}

pub(crate) fn input_dim(pos_enc: bool) -> usize {
    if pos_enc {
        3 + 3 * 2 * POS_ENC_FREQS
    } else {
        3
    }
}

/// `w·x + b`, computed one output column at a time with a fixed
/// accumulation order. Each column of the result depends only on its own
/// input column, so a point's output is bitwise identical whether it is
/// evaluated alone or inside any batch. (A blocked GEMM does not give that
/// guarantee, and reproducible inference is worth more here than the last
/// factor of matmul throughput.)
fn affine(layer: &Dense, x: &DMatrix<f64>) -> DMatrix<f64> {
    let (m, k) = layer.w.shape();
    debug_assert_eq!(k, x.nrows());
    let n = x.ncols();
    let ws = layer.w.as_slice();
    let mut out = DMatrix::zeros(m, n);
    for j in 0..n {
        let xc = x.column(j);
        let oc = &mut out.as_mut_slice()[j * m..(j + 1) * m];
        oc.copy_from_slice(layer.b.as_slice());
        for l in 0..k {
            let s = xc[l];
            if s != 0.0 {
                let wc = &ws[l * m..(l + 1) * m];
                for (o, &w) in oc.iter_mut().zip(wc) {
                    *o += w * s;
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_domain() -> Aabb {
        Aabb::new(Vec3::new(-1.0, -1.0, -1.0), Vec3::new(1.0, 1.0, 1.0))
    }

    #[test]
    fn init_is_seed_deterministic() {
        let a = Model::init(LearnMode::TriClass, &[8, 8], false, unit_domain(), 7).unwrap();
        let b = Model::init(LearnMode::TriClass, &[8, 8], false, unit_domain(), 7).unwrap();
        let c = Model::init(LearnMode::TriClass, &[8, 8], false, unit_domain(), 8).unwrap();
        assert!(a.params().zip(b.params()).all(|(x, y)| x == y));
        assert!(a.params().zip(c.params()).any(|(x, y)| x != y));
        // bound check: He-uniform stays within its limit, biases zero
        let limit = (6.0f64 / 3.0).sqrt();
        assert!(a.trunk[0].w.iter().all(|&w| w.abs() < limit));
        assert!(a.trunk[0].b.iter().all(|&b| b == 0.0));
    }

    #[test]
    fn layer_shapes_chain() {
        let m = Model::init(LearnMode::TriClass, &[16, 8, 4], true, unit_domain(), 0).unwrap();
        assert_eq!(m.trunk[0].w.shape(), (16, 39));
        assert_eq!(m.trunk[1].w.shape(), (8, 16));
        assert_eq!(m.trunk[2].w.shape(), (4, 8));
        assert_eq!(m.heads[0].w.shape(), (3, 4));
        let br = Model::init(LearnMode::BinaryRegression, &[16], false, unit_domain(), 0).unwrap();
        assert_eq!(br.heads.len(), 2);
        assert_eq!(br.heads[0].w.shape(), (1, 16));
        assert_eq!(br.heads[1].w.shape(), (1, 16));
    }

    #[test]
    fn forward_is_batch_invariant() {
        let m = Model::init(LearnMode::TriClass, &[32, 32], true, unit_domain(), 3).unwrap();
        let p = Vec3::new(0.3, -0.2, 0.7);
        let single = m.forward(&[p]);
        let batch = m.forward(&vec![p; 100]);
        for c in 0..100 {
            for r in 0..3 {
                assert_eq!(single[(r, 0)], batch[(r, c)], "row {r} col {c}");
            }
        }
    }

    #[test]
    fn positional_encoding_shape_and_content() {
        let m = Model::init(LearnMode::TriClass, &[4], true, unit_domain(), 0).unwrap();
        let x = m.encode(&[Vec3::new(0.5, 0.0, -1.0)]);
        assert_eq!(x.nrows(), 39);
        assert_eq!(x[(0, 0)], 0.5);
        assert_eq!(x[(2, 0)], -1.0);
        // first sine row is sin(pi * x)
        assert!((x[(3, 0)] - (std::f64::consts::PI * 0.5).sin()).abs() < 1e-15);
        assert!((x[(4, 0)] - (std::f64::consts::PI * 0.5).cos()).abs() < 1e-15);
    }

    #[test]
    fn argmax_ties_take_lowest_class() {
        let mut m = Model::init(LearnMode::TriClass, &[4], false, unit_domain(), 0).unwrap();
        // zero all parameters: every logit identical → label 0 everywhere
        for p in m.params_mut() {
            *p = 0.0;
        }
        let labels = m.predict_labels(&[Vec3::zeros(), Vec3::new(0.5, 0.5, 0.5)]).unwrap();
        assert_eq!(labels, vec![0, 0]);
    }

    #[test]
    fn br_predict_grid_gates_distance_by_logit() {
        let mut m = Model::init(LearnMode::BinaryRegression, &[4], false, unit_domain(), 0).unwrap();
        for p in m.params_mut() {
            *p = 0.0;
        }
        // logit ≡ 0 → sigmoid = 0.5 → non-nan everywhere (inclusive rule);
        // distance ≡ 0 → Signed(0)
        let g = m.predict_grid([2, 2, 2], unit_domain()).unwrap();
        assert!(g.raw_values().iter().all(|&v| v == 0.0));
        // push the mask bias negative → everything null
        m.heads[0].b[0] = -1.0;
        let g = m.predict_grid([2, 2, 2], unit_domain()).unwrap();
        assert!(g.raw_values().iter().all(|v| v.is_nan()));
    }

    #[test]
    fn param_count_matches_layout() {
        let m = Model::init(LearnMode::TriClass, &[8, 4], false, unit_domain(), 0).unwrap();
        // (3*8 + 8) + (8*4 + 4) + (4*3 + 3) = 32 + 36 + 15
        assert_eq!(m.param_count(), 83);
        let mut m2 = m.clone();
        assert_eq!(m2.params_mut().count(), 83);
    }
}
