//! Desk-scale fitting fixtures: a 64x64 camera looking at the z = 0 plane.

use mixsplat::model::sh::dc_from_rgb;
use mixsplat::{Camera, Image, Primitive, Scene, Shape};
use nalgebra::{Quaternion, Vector2, Vector3};

pub const SIZE: usize = 64;
pub const FOCAL: f64 = 64.0;
const DISTANCE: f64 = 2.0;

pub fn camera() -> Camera {
    Camera::look_at(Vector3::new(0.0, 0.0, DISTANCE), Vector3::zeros(), Vector3::y(), FOCAL, SIZE, SIZE).unwrap()
}

/// World point on z = 0 that projects to pixel position `(u, v)`.
pub fn world(u: f64, v: f64) -> Vector3<f64> {
    let k = DISTANCE / FOCAL;
    Vector3::new((u - SIZE as f64 / 2.0) * k, -(v - SIZE as f64 / 2.0) * k, 0.0)
}

/// World length of `px` pixels on z = 0.
pub fn world_len(px: f64) -> f64 {
    px * DISTANCE / FOCAL
}

/// White-on-black image of a region, box-filtered with `ss x ss` samples per pixel.
pub fn coverage_image(ss: usize, inside: impl Fn(f64, f64) -> bool) -> Image {
    let mut img = Image::new(SIZE, SIZE, 3);
    for y in 0..SIZE {
        for x in 0..SIZE {
            let mut hits = 0;
            for sy in 0..ss {
                for sx in 0..ss {
                    let u = x as f64 + (sx as f64 + 0.5) / ss as f64;
                    let v = y as f64 + (sy as f64 + 0.5) / ss as f64;
                    if inside(u, v) {
                        hits += 1;
                    }
                }
            }
            let c = hits as f64 / (ss * ss) as f64;
            for ch in 0..3 {
                img.set(x, y, ch, c);
            }
        }
    }
    img
}

/// Horizontal bar 2 px wide, from x = 12 to x = 52, centered on row 32's
/// pixel centers so it is anti-aliased over three rows.
pub fn thin_bar_target() -> Image {
    coverage_image(16, |u, v| (12.0..52.0).contains(&u) && (31.5..33.5).contains(&v))
}

/// 24 x 24 px flat square in the middle of the frame.
pub fn flat_square_target() -> Image {
    coverage_image(16, |u, v| (20.0..44.0).contains(&u) && (20.0..44.0).contains(&v))
}

fn gray(c: f64) -> Vec<f64> {
    dc_from_rgb([c; 3]).to_vec()
}

/// A single Line placed near, but not on, the bar.
pub fn thin_bar_start() -> Scene {
    let a = world(14.5, 33.2);
    let b = world(49.0, 32.0);
    let mut s = Scene::new(0);
    s.primitives.push(Primitive {
        mu1: a,
        shape: Shape::Line {
            mu2: Vector2::new(b.x - a.x, b.y - a.y),
        },
        rotation: Quaternion::identity(),
        scale: [world_len(1.2), world_len(1.2)],
        opacity: 0.5,
        sh: gray(0.7),
    });
    s
}

/// Two primitives over the square: triangles splitting it along a diagonal,
/// or ellipses at the same centroids.
pub fn flat_square_start(triangles: bool) -> Scene {
    let corners = [world(21.0, 21.0), world(43.0, 21.0), world(43.0, 43.0), world(21.0, 43.0)];
    let halves = [[corners[0], corners[1], corners[2]], [corners[0], corners[2], corners[3]]];
    let mut s = Scene::new(0);
    for h in halves {
        let centroid = (h[0] + h[1] + h[2]) / 3.0;
        let local = |p: Vector3<f64>| Vector2::new(p.x - h[0].x, p.y - h[0].y);
        let (mu1, shape, scale) = if triangles {
            (
                h[0],
                Shape::Triangle {
                    mu2: local(h[1]),
                    mu3: local(h[2]),
                },
                [world_len(2.0), world_len(2.0)],
            )
        } else {
            (centroid, Shape::Ellipse, [world_len(6.0), world_len(6.0)])
        };
        s.primitives.push(Primitive {
            mu1,
            shape,
            rotation: Quaternion::identity(),
            scale,
            opacity: 0.6,
            sh: gray(0.7),
        });
    }
    s
}
