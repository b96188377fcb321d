//! Binary file formats for grids, label grids, sample batches, and model
//! checkpoints. Everything is little-endian with a 4-byte magic:
//!
//! * `3PF1` — field grid: `u32 nx,ny,nz`, bbox as 6×`f64` (min, max), then
//!   `nx·ny·nz` `f32` values x-fastest. Null is stored as the quiet NaN
//!   `0x7fc00000`; any other NaN bit pattern is canonicalized on both write
//!   and read.
//! * `3PL1` — label grid: same header, then one byte per lattice point in
//!   `{0, 1, 2}`.
//! * `3PS1` — sample batch: `u32 count`, then per point 3×`f32`
//!   coordinates and a label byte, optionally followed by an `f32` signed
//!   target. Whether targets are present is inferred from the file size.
//! * `3PM1` — model checkpoint: mode and encoding flags, hidden widths,
//!   normalization box, then all parameters as `f32` in layer order (per
//!   layer: weights column-major, then bias).

use std::fs;
use std::path::Path;

use crate::field::{FieldGrid, NULL_F32_BITS};
use crate::geom::{Aabb, Vec3};
use crate::learn::{LearnMode, Model};
use crate::sample::SampleBatch;
use crate::{Error, Result};

const GRID_MAGIC: [u8; 4] = *b"3PF1";
const LABEL_MAGIC: [u8; 4] = *b"3PL1";
const SAMPLE_MAGIC: [u8; 4] = *b"3PS1";
const MODEL_MAGIC: [u8; 4] = *b"3PM1";

// --- writing -------------------------------------------------------------

pub fn write_grid(path: &Path, grid: &FieldGrid) -> Result<()> {
    let dims = grid.dims();
    let n = grid.raw_values().len();
    let mut buf = Vec::with_capacity(4 + 12 + 48 + 4 * n);
    buf.extend_from_slice(&GRID_MAGIC);
    push_grid_header(&mut buf, dims, grid.bbox());
    for &v in grid.raw_values() {
        push_f32(&mut buf, canonical(v));
    }
    fs::write(path, buf).map_err(|e| io_err(path, e))
}

pub fn write_labels(path: &Path, dims: [u32; 3], bbox: Aabb, labels: &[u8]) -> Result<()> {
    let n: usize = dims.iter().map(|&d| d as usize).product();
    if labels.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "{} labels for a {}x{}x{} grid",
            labels.len(),
            dims[0],
            dims[1],
            dims[2]
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l > 2) {
        return Err(Error::InvalidArgument(format!("label {bad} out of range")));
    }
    let mut buf = Vec::with_capacity(4 + 12 + 48 + n);
    buf.extend_from_slice(&LABEL_MAGIC);
    push_grid_header(&mut buf, dims, bbox);
    buf.extend_from_slice(labels);
    fs::write(path, buf).map_err(|e| io_err(path, e))
}

/// Write a sample batch; `with_targets` appends the signed target after
/// each label byte (NaN targets are canonicalized).
pub fn write_samples(path: &Path, batch: &SampleBatch, with_targets: bool) -> Result<()> {
    if with_targets && batch.targets.len() != batch.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} targets for {} points",
            batch.targets.len(),
            batch.len()
        )));
    }
    let rec = if with_targets { 17 } else { 13 };
    let mut buf = Vec::with_capacity(8 + rec * batch.len());
    buf.extend_from_slice(&SAMPLE_MAGIC);
    push_u32(&mut buf, batch.len() as u32);
    for i in 0..batch.len() {
        let p = batch.points[i];
        push_f32(&mut buf, p.x as f32);
        push_f32(&mut buf, p.y as f32);
        push_f32(&mut buf, p.z as f32);
        buf.push(batch.labels[i]);
        if with_targets {
            push_f32(&mut buf, canonical(batch.targets[i]));
        }
    }
    fs::write(path, buf).map_err(|e| io_err(path, e))
}

pub fn write_model(path: &Path, model: &Model) -> Result<()> {
    let mut buf = Vec::new();
    buf.extend_from_slice(&MODEL_MAGIC);
    buf.push(match model.mode {
        LearnMode::TriClass => 0,
        LearnMode::BinaryRegression => 1,
    });
    buf.push(model.pos_enc as u8);
    push_u32(&mut buf, model.trunk.len() as u32);
    for layer in &model.trunk {
        push_u32(&mut buf, layer.w.nrows() as u32);
    }
    for v in [model.domain.min, model.domain.max] {
        push_f64(&mut buf, v.x);
        push_f64(&mut buf, v.y);
        push_f64(&mut buf, v.z);
    }
    for p in model.params() {
        push_f32(&mut buf, p as f32);
    }
    fs::write(path, buf).map_err(|e| io_err(path, e))
}

// --- reading -------------------------------------------------------------

pub fn read_grid(path: &Path) -> Result<FieldGrid> {
    let buf = fs::read(path).map_err(|e| io_err(path, e))?;
    let mut cur = Cursor::new(&buf, path);
    cur.magic(GRID_MAGIC)?;
    let (dims, bbox) = cur.grid_header()?;
    let n: usize = dims.iter().map(|&d| d as usize).product();
    let mut values = Vec::with_capacity(n);
    for _ in 0..n {
        values.push(canonical(cur.f32()?));
    }
    cur.expect_eof()?;
    FieldGrid::from_values(dims, bbox, values)
}

pub fn read_labels(path: &Path) -> Result<([u32; 3], Aabb, Vec<u8>)> {
    let buf = fs::read(path).map_err(|e| io_err(path, e))?;
    let mut cur = Cursor::new(&buf, path);
    cur.magic(LABEL_MAGIC)?;
    let (dims, bbox) = cur.grid_header()?;
    let n: usize = dims.iter().map(|&d| d as usize).product();
    let labels = cur.take(n)?.to_vec();
    cur.expect_eof()?;
    if let Some(&bad) = labels.iter().find(|&&l| l > 2) {
        return Err(cur.bad(format!("label byte {bad} out of range")));
    }
    Ok((dims, bbox, labels))
}

/// Read a sample batch: points, labels, and targets if the file carries
/// them. (The file does not record the sampling strategy.)
pub fn read_samples(path: &Path) -> Result<(Vec<Vec3>, Vec<u8>, Option<Vec<f32>>)> {
    let buf = fs::read(path).map_err(|e| io_err(path, e))?;
    let mut cur = Cursor::new(&buf, path);
    cur.magic(SAMPLE_MAGIC)?;
    let n = cur.u32()? as usize;
    let body = cur.remaining();
    let with_targets = if body == 17 * n {
        // 13·n == 17·n only when n == 0, where the two layouts coincide
        n > 0
    } else if body == 13 * n {
        false
    } else {
        return Err(cur.bad(format!("{body} payload bytes for {n} records")));
    };

    let mut points = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    let mut targets = with_targets.then(|| Vec::with_capacity(n));
    for _ in 0..n {
        let x = cur.f32()? as f64;
        let y = cur.f32()? as f64;
        let z = cur.f32()? as f64;
        points.push(Vec3::new(x, y, z));
        let label = cur.u8()?;
        if label > 2 {
            return Err(cur.bad(format!("label byte {label} out of range")));
        }
        labels.push(label);
        if let Some(t) = targets.as_mut() {
            t.push(canonical(cur.f32()?));
        }
    }
    cur.expect_eof()?;
    Ok((points, labels, targets))
}

pub fn read_model(path: &Path) -> Result<Model> {
    let buf = fs::read(path).map_err(|e| io_err(path, e))?;
    let mut cur = Cursor::new(&buf, path);
    cur.magic(MODEL_MAGIC)?;
    let mode = match cur.u8()? {
        0 => LearnMode::TriClass,
        1 => LearnMode::BinaryRegression,
        m => return Err(cur.bad(format!("unknown mode byte {m}"))),
    };
    let pos_enc = match cur.u8()? {
        0 => false,
        1 => true,
        b => return Err(cur.bad(format!("bad encoding flag {b}"))),
    };
    let n_hidden = cur.u32()? as usize;
    if n_hidden == 0 || n_hidden > 64 {
        return Err(cur.bad(format!("implausible hidden layer count {n_hidden}")));
    }
    let mut hidden = Vec::with_capacity(n_hidden);
    for _ in 0..n_hidden {
        let w = cur.u32()? as usize;
        if w == 0 || w > 1 << 16 {
            return Err(cur.bad(format!("implausible layer width {w}")));
        }
        hidden.push(w);
    }
    let min = Vec3::new(cur.f64()?, cur.f64()?, cur.f64()?);
    let max = Vec3::new(cur.f64()?, cur.f64()?, cur.f64()?);
    if !(min.iter().all(|v| v.is_finite()) && max.iter().all(|v| v.is_finite()))
        || !(min.x < max.x && min.y < max.y && min.z < max.z)
    {
        return Err(cur.bad("degenerate normalization box".into()));
    }

    let mut model = Model::init(mode, &hidden, pos_enc, Aabb::new(min, max), 0)?;
    let count = model.param_count();
    if cur.remaining() != 4 * count {
        return Err(cur.bad(format!(
            "{} parameter bytes, layout needs {}",
            cur.remaining(),
            4 * count
        )));
    }
    for p in model.params_mut() {
        *p = cur.f32()? as f64;
    }
    cur.expect_eof()?;
    Ok(model)
}

// --- plumbing ------------------------------------------------------------

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io { path: path.to_owned(), source: e }
}

/// Collapse every NaN bit pattern to the canonical null encoding.
fn canonical(v: f32) -> f32 {
    if v.is_nan() {
        f32::from_bits(NULL_F32_BITS)
    } else {
        v
    }
}

fn push_u32(buf: &mut Vec<u8>, v: u32) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn push_f32(buf: &mut Vec<u8>, v: f32) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn push_f64(buf: &mut Vec<u8>, v: f64) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn push_grid_header(buf: &mut Vec<u8>, dims: [u32; 3], bbox: Aabb) {
    for d in dims {
        push_u32(buf, d);
    }
    for v in [bbox.min, bbox.max] {
        push_f64(buf, v.x);
        push_f64(buf, v.y);
        push_f64(buf, v.z);
    }
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Cursor<'a> {
    fn new(buf: &'a [u8], path: &'a Path) -> Self {
        Cursor { buf, pos: 0, path }
    }

    fn bad(&self, msg: String) -> Error {
        Error::BadPayload { path: self.path.to_owned(), msg }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(self.bad(format!(
                "wanted {n} bytes at offset {}, file has {}",
                self.pos,
                self.buf.len()
            )));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn magic(&mut self, expected: [u8; 4]) -> Result<()> {
        let got = self.take(4).map_err(|_| Error::BadMagic {
            path: self.path.to_owned(),
            expected,
        })?;
        if got != expected {
            return Err(Error::BadMagic { path: self.path.to_owned(), expected });
        }
        Ok(())
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    fn expect_eof(&self) -> Result<()> {
        if self.remaining() != 0 {
            return Err(self.bad(format!("{} trailing bytes", self.remaining())));
        }
        Ok(())
    }

    fn grid_header(&mut self) -> Result<([u32; 3], Aabb)> {
        let dims = [self.u32()?, self.u32()?, self.u32()?];
        let min = Vec3::new(self.f64()?, self.f64()?, self.f64()?);
        let max = Vec3::new(self.f64()?, self.f64()?, self.f64()?);
        if !(min.iter().all(|v| v.is_finite()) && max.iter().all(|v| v.is_finite()))
            || !(min.x < max.x && min.y < max.y && min.z < max.z)
        {
            return Err(self.bad("degenerate bounding box".into()));
        }
        Ok((dims, Aabb::new(min, max)))
    }
}
