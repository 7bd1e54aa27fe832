//! Gaussian splatting with three primitive kinds: point-centered ellipses,
//! segment-centered "Gaussian lines" and triangle-centered "Gaussian
//! triangles".

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod conic;
pub mod control;
pub mod error;
pub mod fit;
pub mod init;
pub mod io;
pub mod math;
pub mod model;
pub mod splat;

pub use error::{Error, Result};
pub use model::{Camera, Config, Image, Primitive, PrimitiveKind, Scene, Shape};
