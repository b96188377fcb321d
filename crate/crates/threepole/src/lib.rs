//! Three-pole signed distance fields.
//!
//! A three-pole field maps a point to either a signed distance (negative
//! inside, positive outside) or to a third, direction-less *null* pole.
//! Null space is where no surface is allowed to form, which lets level-set
//! extraction recover open surfaces (sheets, shells with boundaries) that a
//! classic two-pole SDF would seal shut.
//!
//! The pipeline: an octree localizes a triangle mesh; cells that touch the
//! surface get exact signed distances against their local patch, cells that
//! do not are null. The resulting grids/labels feed a small from-scratch
//! coordinate network, and a null-aware marching cubes turns either exact or
//! predicted fields back into meshes.

pub mod extract;
pub mod field;
pub mod formats;
pub mod geom;
pub mod learn;
pub mod mesh;
pub mod metrics;
pub mod octree;
pub mod overlap;
pub mod parity;
pub mod sample;
pub mod shapes;
pub mod spatial;

mod error;

pub use error::{Error, Result};
