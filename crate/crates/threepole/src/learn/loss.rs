//! Loss functions and backpropagation.
//!
//! Both losses return the scalar loss together with gradients for every
//! parameter, laid out exactly like [`Model::params_mut`] so the optimizer
//! can walk the two in lockstep. The math is deliberately plain: softmax
//! cross-entropy with max-subtraction, logit-space binary cross-entropy,
//! and an L1 term masked to the non-null samples.

use nalgebra::{DMatrix, DVector};

use super::{LearnMode, Model};
use crate::geom::Vec3;
use crate::{Error, Result};

/// Per-layer gradients in canonical order (trunk layers, then heads).
#[derive(Clone, Debug)]
pub struct Gradients {
    pub layers: Vec<(DMatrix<f64>, DVector<f64>)>,
}

impl Gradients {
    /// Elements in the same order as [`Model::params_mut`].
    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.layers
            .iter()
            .flat_map(|(w, b)| w.as_slice().iter().chain(b.as_slice().iter()))
            .copied()
    }

    pub fn len(&self) -> usize {
        self.layers.iter().map(|(w, b)| w.len() + b.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Softmax cross-entropy over the three classes, optionally weighted per
/// class. With weights the loss is the weighted mean `Σ w_y ce / Σ w_y`.
pub fn triclass_loss(
    model: &Model,
    points: &[Vec3],
    labels: &[u8],
    class_weights: Option<&[f64; 3]>,
) -> Result<(f64, Gradients)> {
    if model.mode != LearnMode::TriClass {
        return Err(Error::InvalidArgument("triclass_loss on a non-TriClass model".into()));
    }
    if points.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    if points.len() != labels.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} points vs {} labels",
            points.len(),
            labels.len()
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l > 2) {
        return Err(Error::InvalidArgument(format!("label {bad} out of range")));
    }

    let (logits, acts) = model.forward_cached(points);
    let n = points.len();
    let mut d_out = DMatrix::zeros(3, n);
    let mut loss_sum = 0.0;
    let mut weight_sum = 0.0;
    for c in 0..n {
        let col = logits.column(c);
        let m = col[0].max(col[1]).max(col[2]);
        let e = [(col[0] - m).exp(), (col[1] - m).exp(), (col[2] - m).exp()];
        let denom = e[0] + e[1] + e[2];
        let lse = denom.ln();
        let y = labels[c] as usize;
        let w = class_weights.map_or(1.0, |cw| cw[y]);
        loss_sum += w * (lse - (col[y] - m));
        weight_sum += w;
        for k in 0..3 {
            let p = e[k] / denom;
            d_out[(k, c)] = w * (p - if k == y { 1.0 } else { 0.0 });
        }
    }
    if weight_sum <= 0.0 {
        return Err(Error::InvalidArgument("class weights sum to zero over batch".into()));
    }
    d_out /= weight_sum;

    let grads = backprop(model, &acts, &d_out);
    Ok((loss_sum / weight_sum, grads))
}

/// Binary cross-entropy on the nan/non-nan logit plus L1 on the regressed
/// distance over the non-null samples, combined 1:1. `targets` carries the
/// signed distances with NaN marking null, as produced by sampling.
pub fn br_loss(model: &Model, points: &[Vec3], targets: &[f32]) -> Result<(f64, Gradients)> {
    if model.mode != LearnMode::BinaryRegression {
        return Err(Error::InvalidArgument("br_loss on a non-BinaryRegression model".into()));
    }
    if points.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    if points.len() != targets.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} points vs {} targets",
            points.len(),
            targets.len()
        )));
    }

    let (out, acts) = model.forward_cached(points);
    let n = points.len();
    let n_valid = targets.iter().filter(|t| !t.is_nan()).count();

    let mut d_out = DMatrix::zeros(2, n);
    let mut bce_sum = 0.0;
    let mut l1_sum = 0.0;
    for c in 0..n {
        let x = out[(0, c)];
        let y = if targets[c].is_nan() { 0.0 } else { 1.0 };
        // stable logit-space BCE: max(x,0) − x·y + ln(1 + exp(−|x|))
        bce_sum += x.max(0.0) - x * y + (-x.abs()).exp().ln_1p();
        d_out[(0, c)] = (sigmoid(x) - y) / n as f64;
        if y == 1.0 {
            let d = out[(1, c)];
            let t = targets[c] as f64;
            l1_sum += (d - t).abs();
            d_out[(1, c)] = sign(d - t) / n_valid as f64;
        }
    }
    let loss = bce_sum / n as f64 + if n_valid > 0 { l1_sum / n_valid as f64 } else { 0.0 };

    let grads = backprop(model, &acts, &d_out);
    Ok((loss, grads))
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Push `d_out` (dL/d network output) back through heads and trunk.
/// `acts[0]` is the encoded input, `acts[l+1]` the ReLU output of trunk
/// layer `l`; ReLU's subgradient at zero is taken as zero.
fn backprop(model: &Model, acts: &[DMatrix<f64>], d_out: &DMatrix<f64>) -> Gradients {
    let top = acts.last().unwrap();
    let mut head_grads = Vec::with_capacity(model.heads.len());
    let mut d_top = DMatrix::zeros(top.nrows(), top.ncols());
    match model.mode {
        LearnMode::TriClass => {
            let head = &model.heads[0];
            head_grads.push((d_out * top.transpose(), d_out.column_sum()));
            d_top += head.w.transpose() * d_out;
        }
        LearnMode::BinaryRegression => {
            for (h, head) in model.heads.iter().enumerate() {
                let d_row = DMatrix::from_fn(1, d_out.ncols(), |_, c| d_out[(h, c)]);
                head_grads.push((&d_row * top.transpose(), d_row.column_sum()));
                d_top += head.w.transpose() * &d_row;
            }
        }
    }

    let mut trunk_grads = vec![None; model.trunk.len()];
    let mut d_x = d_top;
    for l in (0..model.trunk.len()).rev() {
        // activation > 0 ⟺ pre-activation > 0, so the cached output doubles
        // as the ReLU mask
        let mut d_z = d_x;
        for (dz, &a) in d_z.iter_mut().zip(acts[l + 1].iter()) {
            if a <= 0.0 {
                *dz = 0.0;
            }
        }
        trunk_grads[l] = Some((&d_z * acts[l].transpose(), d_z.column_sum()));
        d_x = model.trunk[l].w.transpose() * &d_z;
    }

    let mut layers: Vec<(DMatrix<f64>, DVector<f64>)> =
        trunk_grads.into_iter().map(|g| g.unwrap()).collect();
    layers.extend(head_grads);
    Gradients { layers }
}
