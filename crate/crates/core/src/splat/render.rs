use nalgebra::Vector2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::project::{project_primitive, SplattedPrimitive};
use super::sketch::{fading, sketch_for, Sketch};
use crate::error::Result;
use crate::model::{Camera, Image, Scene};

pub const TILE: usize = 16;
/// Per-pixel blending stops once transmittance falls below this.
pub const MIN_TRANSMITTANCE: f64 = 1e-4;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RenderMode {
    #[default]
    Rgb,
    Depth,
    Alpha,
}

impl RenderMode {
    pub fn channels(self) -> usize {
        match self {
            RenderMode::Rgb => 3,
            RenderMode::Depth | RenderMode::Alpha => 1,
        }
    }
}

impl std::str::FromStr for RenderMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "rgb" => Ok(RenderMode::Rgb),
            "depth" => Ok(RenderMode::Depth),
            "alpha" => Ok(RenderMode::Alpha),
            _ => Err(format!("unknown render mode `{s}` (rgb, depth, alpha)")),
        }
    }
}

/// A projected, sketched splat ready for rasterization.
#[derive(Clone, Debug)]
pub struct PreparedSplat {
    pub splat: SplattedPrimitive,
    pub sketch: Sketch,
}

/// Projects, culls, sorts front to back (ties by scene index) and sketches.
pub fn prepare(scene: &Scene, cam: &Camera, cutoff: f64) -> Result<Vec<PreparedSplat>> {
    cam.validate()?;
    let mut splats = Vec::with_capacity(scene.primitives.len());
    for (i, p) in scene.primitives.iter().enumerate() {
        if let Some(sp) = project_primitive(p, i, cam, scene.sh_order, cutoff)? {
            splats.push(sp);
        }
    }
    splats.sort_by(|a, b| a.depth.total_cmp(&b.depth).then(a.index.cmp(&b.index)));
    Ok(splats
        .into_par_iter()
        .map(|splat| {
            let sketch = sketch_for(&splat, cutoff);
            PreparedSplat { splat, sketch }
        })
        .collect())
}

fn overlaps_tile(bbox: &[f64; 4], x0: usize, y0: usize, x1: usize, y1: usize) -> bool {
    // pixel centers of the tile span [x0 + 0.5, x1 - 0.5]
    bbox[2] >= x0 as f64 + 0.5 && bbox[0] <= x1 as f64 - 0.5 && bbox[3] >= y0 as f64 + 0.5 && bbox[1] <= y1 as f64 - 0.5
}

/// Blends the prepared splats at one pixel position.
pub fn shade_pixel(
    p: &Vector2<f64>,
    splats: &[&PreparedSplat],
    cam: &Camera,
    mode: RenderMode,
    background: &[f64; 3],
    cutoff: f64,
    out: &mut [f64],
) {
    let mut t = 1.0;
    let mut acc = [0.0; 3];
    for s in splats {
        let g = fading(p, &s.splat, &s.sketch, cutoff);
        if g <= 0.0 {
            continue;
        }
        let w = g * t;
        match mode {
            RenderMode::Rgb => {
                for (a, c) in acc.iter_mut().zip(&s.splat.color) {
                    *a += c * w;
                }
            }
            RenderMode::Depth => acc[0] += s.splat.ray_depth(cam, p) * w,
            RenderMode::Alpha => acc[0] += w,
        }
        t *= 1.0 - g;
        if t < MIN_TRANSMITTANCE {
            break;
        }
    }
    match mode {
        RenderMode::Rgb => {
            for c in 0..3 {
                out[c] = acc[c] + background[c] * t;
            }
        }
        _ => out[0] = acc[0],
    }
}

/// Rasterizes prepared splats on 16x16 tiles.
pub fn rasterize(prepared: &[PreparedSplat], cam: &Camera, mode: RenderMode, background: &[f64; 3], cutoff: f64) -> Image {
    let (w, h) = (cam.width, cam.height);
    let ch = mode.channels();
    let tiles_x = w.div_ceil(TILE);
    let tiles_y = h.div_ceil(TILE);
    let tiles: Vec<(usize, Vec<f64>)> = (0..tiles_x * tiles_y)
        .into_par_iter()
        .map(|k| {
            let (x0, y0) = ((k % tiles_x) * TILE, (k / tiles_x) * TILE);
            let (x1, y1) = ((x0 + TILE).min(w), (y0 + TILE).min(h));
            let list: Vec<&PreparedSplat> = prepared
                .iter()
                .filter(|s| overlaps_tile(&s.splat.bbox, x0, y0, x1, y1))
                .collect();
            let mut buf = vec![0.0; (x1 - x0) * (y1 - y0) * ch];
            for y in y0..y1 {
                for x in x0..x1 {
                    let o = ((y - y0) * (x1 - x0) + (x - x0)) * ch;
                    shade_pixel(&Camera::pixel_center(x, y), &list, cam, mode, background, cutoff, &mut buf[o..o + ch]);
                }
            }
            (k, buf)
        })
        .collect();
    let mut img = Image::new(w, h, ch);
    for (k, buf) in tiles {
        let (x0, y0) = ((k % tiles_x) * TILE, (k / tiles_x) * TILE);
        let x1 = (x0 + TILE).min(w);
        let tw = x1 - x0;
        for (r, row) in buf.chunks(tw * ch).enumerate() {
            let start = img.index(x0, y0 + r, 0);
            img.data[start..start + tw * ch].copy_from_slice(row);
        }
    }
    img
}

/// Renders a scene. Depth and alpha images have one channel; RGB images are
/// composited over the scene background.
pub fn render(scene: &Scene, cam: &Camera, mode: RenderMode, cutoff: f64) -> Result<Image> {
    scene.validate()?;
    let prepared = prepare(scene, cam, cutoff)?;
    Ok(rasterize(&prepared, cam, mode, &scene.background, cutoff))
}

/// Per-pixel loop over every splat, without tiling.
pub fn render_reference(scene: &Scene, cam: &Camera, mode: RenderMode, cutoff: f64) -> Result<Image> {
    let prepared = prepare(scene, cam, cutoff)?;
    let all: Vec<&PreparedSplat> = prepared.iter().collect();
    let ch = mode.channels();
    let mut img = Image::new(cam.width, cam.height, ch);
    for y in 0..cam.height {
        for x in 0..cam.width {
            let o = img.index(x, y, 0);
            shade_pixel(&Camera::pixel_center(x, y), &all, cam, mode, &scene.background, cutoff, &mut img.data[o..o + ch]);
        }
    }
    Ok(img)
}
