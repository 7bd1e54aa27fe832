//! File formats: scene and camera JSON, PPM/PGM/PNG images, SVG sketches.
//! Point clouds are handled by [`crate::init`].

mod image;
mod scene;
mod svg;

pub use image::{decode_netpbm, decode_png, encode_netpbm, encode_png, load_image, quantize16, quantize8, save_image};
pub use scene::{camera_from_json, camera_to_json, load_camera, load_scene, save_camera, save_scene, scene_from_json, scene_to_json};
pub use svg::debug_sketch_svg;
