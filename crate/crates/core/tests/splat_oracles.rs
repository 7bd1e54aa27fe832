mod common;

use common::splat_oracle::{OracleRegion, Whitened};
use mixsplat::model::{Camera, Primitive, PrimitiveKind, Scene, Shape};
use mixsplat::splat::{
    boundary_radius, classify_region, edge_fraction_solve, fading, prepare, render, resketch, RenderMode, Region,
    Sketch, SplattedPrimitive,
};
use nalgebra::{Matrix2, Quaternion, Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CUTOFF: f64 = 1.0 / 255.0;

fn random_splat(rng: &mut ChaCha8Rng, kind: PrimitiveKind) -> SplattedPrimitive {
    let n = kind.vertex_count();
    let vertices: Vec<Vector2<f64>> = (0..n)
        .map(|_| Vector2::new(rng.random_range(0.0..60.0), rng.random_range(0.0..60.0)))
        .collect();
    let a = rng.random_range(0.0..std::f64::consts::PI);
    let (s, c) = a.sin_cos();
    let rot = Matrix2::new(c, -s, s, c);
    let cov = rot * Matrix2::new(rng.random_range(0.5..9.0), 0.0, 0.0, rng.random_range(0.5..9.0)) * rot.transpose();
    SplattedPrimitive {
        index: 0,
        kind,
        vertices,
        cov,
        cov_inv: cov.try_inverse().unwrap(),
        depth: 1.0,
        color: [1.0; 3],
        opacity: rng.random_range(0.05..1.0),
        plane_point: Vector3::z(),
        plane_normal: Vector3::z(),
        bbox: [-1e9, -1e9, 1e9, 1e9],
    }
}

fn to_oracle(r: Region) -> OracleRegion {
    match r {
        Region::Inner => OracleRegion::Inner,
        Region::Edge { i, j, .. } => OracleRegion::Edge(i, j),
        Region::Vertex(j) => OracleRegion::Vertex(j),
        Region::Outside => OracleRegion::Outside,
    }
}

#[test]
fn classification_and_fading_match_whitened_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut seen = std::collections::BTreeSet::new();
    for trial in 0..200 {
        let kind = if trial % 2 == 0 { PrimitiveKind::Triangle } else { PrimitiveKind::Line };
        let sp = random_splat(&mut rng, kind);
        let Ok(sk) = resketch(&sp, CUTOFF) else { continue };
        let w = Whitened::new(&sp.vertices, &sp.cov, CUTOFF);
        let sketch = Sketch::Boundary(sk.clone());
        for _ in 0..500 {
            let p = Vector2::new(rng.random_range(-20.0..80.0), rng.random_range(-20.0..80.0));
            if w.boundary_margin(&p) < 1e-6 {
                continue;
            }
            let region = to_oracle(classify_region(&p, &sp, &sk, CUTOFF));
            assert_eq!(region, w.region(&p), "{p:?}");
            seen.insert(format!("{region:?}").chars().take(4).collect::<String>());
            let g = fading(&p, &sp, &sketch, CUTOFF);
            assert!((g - w.gamma(&p, sp.opacity, CUTOFF)).abs() < 1e-9, "{p:?}");
            assert!((0.0..=sp.opacity).contains(&g));
        }
    }
    assert_eq!(seen.len(), 4, "{seen:?}");
}

#[test]
fn edge_solution_reconstructs_the_point() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let mut checked = 0;
    for _ in 0..200 {
        let sp = random_splat(&mut rng, PrimitiveKind::Triangle);
        let Ok(sk) = resketch(&sp, CUTOFF) else { continue };
        for e in &sk.edges {
            let (mi, mj) = (sp.vertices[e.i], sp.vertices[e.j]);
            for _ in 0..20 {
                let (t, l) = (rng.random_range(0.0..1.0), rng.random_range(0.0..1.0));
                let p = (mi + (e.ti - mi) * t) * (1.0 - l) + (mj + (e.tj - mj) * t) * l;
                let (gt, gl) = edge_fraction_solve(&p, &mi, &mj, &e.ti, &e.tj).unwrap();
                let q = (mi + (e.ti - mi) * gt) * (1.0 - gl) + (mj + (e.tj - mj) * gt) * gl;
                assert!((p - q).norm() < 1e-9);
                // gamma equals the Gaussian at the point on the i-side edge
                let pe = mi + (e.ti - mi) * gt;
                let d = pe - mi;
                let want = sp.opacity * (-0.5 * d.dot(&(sp.cov_inv * d))).exp();
                let got = fading(&p, &sp, &Sketch::Boundary(sk.clone()), CUTOFF);
                assert!((got - want).abs() < 1e-9);
                checked += 1;
            }
        }
    }
    assert!(checked > 1000);
}

#[test]
fn fading_decreases_away_from_each_edge() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..100 {
        let sp = random_splat(&mut rng, PrimitiveKind::Triangle);
        let Ok(sk) = resketch(&sp, CUTOFF) else { continue };
        let sketch = Sketch::Boundary(sk.clone());
        for e in &sk.edges {
            let (mi, mj) = (sp.vertices[e.i], sp.vertices[e.j]);
            let base = mi + (mj - mi) * rng.random_range(0.05..0.95);
            let out = e.ti - mi;
            let mut prev = f64::INFINITY;
            for k in 0..=50 {
                let g = fading(&(base + out * (k as f64 / 50.0)), &sp, &sketch, CUTOFF);
                assert!(g <= prev + 1e-15);
                prev = g;
            }
        }
    }
}

fn camera(rng: &mut ChaCha8Rng, size: usize) -> Camera {
    let eye = Vector3::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(2.0..4.0));
    Camera::look_at(eye, Vector3::zeros(), Vector3::new(0.0, -1.0, 0.0), size as f64, size, size).unwrap()
}

#[test]
fn degenerate_shapes_render_as_ellipses() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    for _ in 0..10 {
        let base = Primitive {
            mu1: Vector3::new(rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3), 0.0),
            shape: Shape::Ellipse,
            rotation: Quaternion::new(rng.random(), rng.random(), rng.random(), rng.random()),
            scale: [rng.random_range(0.02..0.2), rng.random_range(0.02..0.2)],
            opacity: 0.9,
            sh: vec![0.3, -0.2, 0.1],
        };
        let cam = camera(&mut rng, 64);
        let one = |p: Primitive| {
            let mut s = Scene::new(0);
            s.primitives.push(p);
            render(&s, &cam, RenderMode::Rgb, CUTOFF).unwrap()
        };
        let reference = one(base.clone());
        let tri = Primitive { shape: Shape::Triangle { mu2: Vector2::zeros(), mu3: Vector2::zeros() }, ..base.clone() };
        let line = Primitive { shape: Shape::Line { mu2: Vector2::zeros() }, ..base.clone() };
        assert!(one(tri).max_abs_diff(&reference) <= 1e-6);
        assert!(one(line).max_abs_diff(&reference) <= 1e-6);
    }
}

#[test]
fn supersampled_render_is_close() {
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    let mut scene = Scene::new(0);
    for _ in 0..15 {
        let shape = match rng.random_range(0..3) {
            0 => Shape::Ellipse,
            1 => Shape::Line { mu2: Vector2::new(rng.random_range(-0.6..0.6), rng.random_range(-0.6..0.6)) },
            _ => Shape::Triangle {
                mu2: Vector2::new(rng.random_range(-0.6..0.6), rng.random_range(-0.6..0.6)),
                mu3: Vector2::new(rng.random_range(-0.6..0.6), rng.random_range(-0.6..0.6)),
            },
        };
        scene.primitives.push(Primitive {
            mu1: Vector3::new(rng.random_range(-0.8..0.8), rng.random_range(-0.8..0.8), rng.random_range(-0.3..0.3)),
            shape,
            rotation: Quaternion::new(rng.random(), rng.random(), rng.random(), rng.random()),
            scale: [rng.random_range(0.03..0.1), rng.random_range(0.03..0.1)],
            opacity: rng.random_range(0.2..0.9),
            sh: (0..3).map(|_| rng.random_range(-1.0..1.0)).collect(),
        });
    }
    let cam = Camera::look_at(Vector3::new(0.0, 0.0, 3.0), Vector3::zeros(), -Vector3::y(), 48.0, 48, 48).unwrap();
    let cam2 = Camera { fx: 96.0, fy: 96.0, cx: 48.0, cy: 48.0, width: 96, height: 96, ..cam.clone() };
    let lo = render(&scene, &cam, RenderMode::Rgb, CUTOFF).unwrap();
    let hi = render(&scene, &cam2, RenderMode::Rgb, CUTOFF).unwrap().downsample(2);
    let mae = lo.data.iter().zip(&hi.data).map(|(a, b)| (a - b).abs()).sum::<f64>() / lo.data.len() as f64;
    assert!(mae < 2e-2, "{mae}");
}

#[test]
fn transmittance_never_increases() {
    let mut rng = ChaCha8Rng::seed_from_u64(26);
    let mut scene = Scene::new(0);
    for _ in 0..20 {
        scene.primitives.push(Primitive {
            mu1: Vector3::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)),
            shape: Shape::Triangle {
                mu2: Vector2::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)),
                mu3: Vector2::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)),
            },
            rotation: Quaternion::new(rng.random(), rng.random(), rng.random(), rng.random()),
            scale: [0.05, 0.05],
            opacity: 0.5,
            sh: vec![0.0; 3],
        });
    }
    let cam = camera(&mut rng, 32);
    let prepared = prepare(&scene, &cam, CUTOFF).unwrap();
    assert!(prepared.windows(2).all(|w| w[0].splat.depth <= w[1].splat.depth));
    let r = boundary_radius(CUTOFF);
    assert!(r > 3.3);
    for y in 0..32 {
        for x in 0..32 {
            let p = Camera::pixel_center(x, y);
            let mut t: f64 = 1.0;
            for s in &prepared {
                let g = fading(&p, &s.splat, &s.sketch, CUTOFF);
                let next = t * (1.0 - g);
                assert!(next <= t);
                t = next;
            }
        }
    }
}
