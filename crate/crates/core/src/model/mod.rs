//! Domain types shared across the crate.

mod camera;
mod config;
mod image;
mod primitive;
mod scene;
pub mod sh;

pub use camera::Camera;
pub use config::{ColorMetric, Config, Linkage};
pub use image::Image;
pub use primitive::{Primitive, PrimitiveKind, Shape};
pub use scene::Scene;
pub use sh::{sh_coeff_count, sh_to_color};
