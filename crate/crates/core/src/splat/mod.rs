//! Projection, boundary re-sketching, region-based fading and tiled
//! alpha-blended rasterization.

mod project;
mod render;
mod sketch;

pub use project::{boundary_radius, project_primitive, projection_jacobian, SplattedPrimitive, LOW_PASS};
pub use render::{prepare, rasterize, render, render_reference, shade_pixel, PreparedSplat, RenderMode, MIN_TRANSMITTANCE, TILE};
pub use sketch::{
    classify_region, edge_fraction_solve, fading, fading_in_region, resketch, sketch_for, vertex_fading, EdgeQuad,
    Region, Sketch, SketchedBoundary,
};
