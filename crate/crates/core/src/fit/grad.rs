//! Loss evaluation and gradients: central differences for every primitive
//! kind, closed form for ellipse-only scenes with view-independent color.

use nalgebra::{Matrix2, Matrix3, Matrix3x2, Vector2, Vector3};
use rayon::prelude::*;

use super::loss::{photometric_loss, photometric_loss_grad, LossWeights};
use super::params::{pack, unpack};
use crate::error::{Error, Result};
use crate::model::sh::{sh_to_color_raw, SH_C0};
use crate::model::{Camera, Image, PrimitiveKind, Scene};
use crate::splat::{prepare, projection_jacobian, rasterize, render, vertex_fading, PreparedSplat, RenderMode, MIN_TRANSMITTANCE, TILE};

/// Photometric objective for one view.
#[derive(Clone, Copy, Debug)]
pub struct Objective<'a> {
    pub camera: &'a Camera,
    pub target: &'a Image,
    pub weights: LossWeights,
    pub cutoff: f64,
}

impl Objective<'_> {
    pub fn loss(&self, scene: &Scene) -> Result<f64> {
        let img = render(scene, self.camera, RenderMode::Rgb, self.cutoff)?;
        photometric_loss(&img, self.target, &self.weights)
    }

    /// Central differences `(L(x + h) - L(x - h)) / 2h` in packed parameter
    /// space (see [`pack`]) for the selected indices. Probes run in parallel.
    pub fn numeric_gradient(&self, scene: &Scene, selector: &[usize], h: f64) -> Result<Vec<f64>> {
        if !(h > 0.0) {
            return Err(Error::InvalidConfig(format!("finite-difference step must be positive, got {h}")));
        }
        let (x, _) = pack(scene);
        let base = unpack(scene, &x)?;
        selector
            .par_iter()
            .map(|&i| {
                if i >= x.len() {
                    return Err(Error::InvalidConfig(format!("parameter index {i} out of range")));
                }
                let probe = |delta: f64| -> Result<f64> {
                    let mut y = x.clone();
                    y[i] += delta;
                    self.loss(&unpack(&base, &y)?)
                };
                Ok((probe(h)? - probe(-h)?) / (2.0 * h))
            })
            .collect()
    }

    /// Loss and full packed-space gradient in closed form. Only scenes made
    /// of ellipses with SH order 0 are supported.
    pub fn analytic_gradient(&self, scene: &Scene) -> Result<(f64, Vec<f64>)> {
        if !supports_analytic(scene) {
            return Err(Error::InvalidConfig(
                "closed-form gradients need an ellipse-only scene with SH order 0".into(),
            ));
        }
        scene.validate()?;
        let cam = self.camera;
        let prepared = prepare(scene, cam, self.cutoff)?;
        let rendered = rasterize(&prepared, cam, RenderMode::Rgb, &scene.background, self.cutoff);
        let (loss, dimg) = photometric_loss_grad(&rendered, self.target, &self.weights)?;

        // per-splat image-space adjoints, accumulated per band of tile rows
        // and summed in band order so results do not depend on scheduling
        let bands: Vec<Vec<SplatAdjoint>> = (0..cam.height.div_ceil(TILE))
            .into_par_iter()
            .map(|b| {
                let mut acc = vec![SplatAdjoint::default(); prepared.len()];
                let y1 = ((b + 1) * TILE).min(cam.height);
                for y in b * TILE..y1 {
                    for x in 0..cam.width {
                        let o = rendered.index(x, y, 0);
                        let dc = [dimg[o], dimg[o + 1], dimg[o + 2]];
                        backprop_pixel(&Camera::pixel_center(x, y), &prepared, &scene.background, self.cutoff, &dc, &mut acc);
                    }
                }
                acc
            })
            .collect();
        let mut adj = vec![SplatAdjoint::default(); prepared.len()];
        for band in bands {
            for (a, b) in adj.iter_mut().zip(band) {
                a.add(&b);
            }
        }

        let (x, slots) = pack(scene);
        let mut grad = vec![0.0; x.len()];
        let mut offsets = vec![0; scene.primitives.len()];
        for (k, s) in slots.iter().enumerate().rev() {
            offsets[s.primitive] = k;
        }
        for (ps, a) in prepared.iter().zip(&adj) {
            let i = ps.splat.index;
            let g = ellipse_param_gradient(scene, i, cam, ps, a)?;
            grad[offsets[i]..offsets[i] + g.len()].copy_from_slice(&g);
        }
        Ok((loss, grad))
    }
}

pub fn supports_analytic(scene: &Scene) -> bool {
    scene.sh_order == 0 && scene.primitives.iter().all(|p| p.kind() == PrimitiveKind::Ellipse)
}

#[derive(Clone, Copy, Debug, Default)]
struct SplatAdjoint {
    mean: Vector2<f64>,
    conic: Matrix2<f64>,
    opacity: f64,
    color: [f64; 3],
}

impl SplatAdjoint {
    fn add(&mut self, o: &SplatAdjoint) {
        self.mean += o.mean;
        self.conic += o.conic;
        self.opacity += o.opacity;
        for c in 0..3 {
            self.color[c] += o.color[c];
        }
    }
}

/// Replays the front-to-back blend at one pixel and pushes `dL/dC` back onto
/// each contributing splat.
fn backprop_pixel(
    p: &Vector2<f64>,
    prepared: &[PreparedSplat],
    background: &[f64; 3],
    cutoff: f64,
    dc: &[f64; 3],
    acc: &mut [SplatAdjoint],
) {
    if dc.iter().all(|&v| v == 0.0) {
        return;
    }
    let mut hits: Vec<(usize, f64, f64)> = Vec::new();
    let mut t = 1.0;
    for (k, s) in prepared.iter().enumerate() {
        let b = &s.splat.bbox;
        if p.x < b[0] || p.x > b[2] || p.y < b[1] || p.y > b[3] {
            continue;
        }
        let g = vertex_fading(p, &s.splat, 0, cutoff);
        if g <= 0.0 {
            continue;
        }
        hits.push((k, g, t));
        t *= 1.0 - g;
        if t < MIN_TRANSMITTANCE {
            break;
        }
    }
    let dot = |c: &[f64; 3]| c[0] * dc[0] + c[1] * dc[1] + c[2] * dc[2];
    let mut after = dot(background) * t;
    for &(k, g, tk) in hits.iter().rev() {
        let sp = &prepared[k].splat;
        let cd = dot(&sp.color);
        let dg = tk * cd - after / (1.0 - g);
        after += cd * g * tk;
        let a = &mut acc[k];
        for c in 0..3 {
            a.color[c] += g * tk * dc[c];
        }
        let d = p - sp.vertices[0];
        let qd = sp.cov_inv * d;
        a.opacity += dg * g / sp.opacity;
        a.mean += qd * (dg * g);
        a.conic -= d * d.transpose() * (0.5 * dg * g);
    }
}

/// Partial derivatives of the rotation matrix with respect to a unit
/// quaternion `(w, x, y, z)`.
fn rotation_partials(w: f64, x: f64, y: f64, z: f64) -> [Matrix3<f64>; 4] {
    [
        Matrix3::new(0.0, -z, y, z, 0.0, -x, -y, x, 0.0) * 2.0,
        Matrix3::new(0.0, y, z, y, -2.0 * x, -w, z, w, -2.0 * x) * 2.0,
        Matrix3::new(-2.0 * y, x, w, x, 0.0, z, -w, z, -2.0 * y) * 2.0,
        Matrix3::new(-2.0 * z, -w, x, w, -2.0 * z, y, x, y, 0.0) * 2.0,
    ]
}

/// Chains image-space adjoints of one ellipse into its packed parameters.
fn ellipse_param_gradient(scene: &Scene, i: usize, cam: &Camera, ps: &PreparedSplat, a: &SplatAdjoint) -> Result<Vec<f64>> {
    let prim = &scene.primitives[i];
    let sp = &ps.splat;
    let w = cam.rotation();
    let t = cam.to_camera(&prim.mu1);
    let j = projection_jacobian(cam, &t);
    let m = j * w;
    let sigma = prim.covariance();

    // conic = cov^-1, so dL/dcov = -Q dL/dQ Q
    let q = sp.cov_inv;
    let g2 = -(q * a.conic * q);
    let g2 = (g2 + g2.transpose()) * 0.5;
    let h3 = m.transpose() * g2 * m;
    let dm = g2 * m * sigma * 2.0;
    let dj = dm * w.transpose();

    // camera-frame position: through the mean and through J
    let iz = 1.0 / t.z;
    let mut dt = j.transpose() * a.mean;
    dt.x += dj[(0, 2)] * (-cam.fx * iz * iz);
    dt.y += dj[(1, 2)] * (-cam.fy * iz * iz);
    dt.z += dj[(0, 0)] * (-cam.fx * iz * iz)
        + dj[(1, 1)] * (-cam.fy * iz * iz)
        + dj[(0, 2)] * (2.0 * cam.fx * t.x * iz * iz * iz)
        + dj[(1, 2)] * (2.0 * cam.fy * t.y * iz * iz * iz);
    let dmu1: Vector3<f64> = w.transpose() * dt;

    let r = prim.rotation_matrix();
    let (r0, r1) = (r.column(0).into_owned(), r.column(1).into_owned());
    let [s0, s1] = prim.scale;
    let dr0 = h3 * r0 * (2.0 * s0 * s0);
    let dr1 = h3 * r1 * (2.0 * s1 * s1);
    let ds0 = 2.0 * s0 * r0.dot(&(h3 * r0));
    let ds1 = 2.0 * s1 * r1.dot(&(h3 * r1));
    let dr = Matrix3x2::from_columns(&[dr0, dr1]);

    let qn = prim.rotation.norm();
    let u = prim.rotation / qn;
    let parts = rotation_partials(u.w, u.i, u.j, u.k);
    let dunit: Vec<f64> = parts
        .iter()
        .map(|pm| pm.fixed_columns::<2>(0).component_mul(&dr).sum())
        .collect();
    let uvec = [u.w, u.i, u.j, u.k];
    let proj: f64 = uvec.iter().zip(&dunit).map(|(a, b)| a * b).sum();
    let dq: Vec<f64> = (0..4).map(|c| (dunit[c] - uvec[c] * proj) / qn).collect();

    let alpha = prim.opacity;
    let raw = sh_to_color_raw(&prim.sh, &Vector3::z(), 0)?;
    let mut g = Vec::with_capacity(3 + 4 + 2 + 1 + 3);
    g.extend(dmu1.iter());
    // packed quaternion order is (i, j, k, w)
    g.extend([dq[1], dq[2], dq[3], dq[0]]);
    g.push(ds0 * s0);
    g.push(ds1 * s1);
    g.push(a.opacity * alpha * (1.0 - alpha));
    for c in 0..3 {
        let inside = raw[c] > 0.0 && raw[c] < 1.0;
        g.push(if inside { a.color[c] * SH_C0 } else { 0.0 });
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Primitive;
    use nalgebra::Quaternion;
    use rand::{Rng, SeedableRng};

    fn view() -> (Camera, Image) {
        let cam = Camera::look_at(Vector3::new(0.2, 0.1, 3.0), Vector3::zeros(), Vector3::y(), 40.0, 24, 20).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let target = Image::from_data(24, 20, 3, (0..24 * 20 * 3).map(|_| rng.random()).collect()).unwrap();
        (cam, target)
    }

    fn scene(seed: u64) -> Scene {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut s = Scene::new(0);
        s.background = [0.1, 0.2, 0.3];
        for _ in 0..3 {
            s.primitives.push(Primitive::ellipse(
                Vector3::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)),
                Quaternion::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                [rng.random_range(0.05..0.3), rng.random_range(0.05..0.3)],
                rng.random_range(0.2..0.9),
                (0..3).map(|_| rng.random_range(-1.0..1.0)).collect(),
            ));
        }
        s
    }

    #[test]
    fn closed_form_matches_differences() {
        let (cam, target) = view();
        let obj = Objective { camera: &cam, target: &target, weights: LossWeights::default(), cutoff: 1e-12 };
        for seed in 0..5 {
            let s = scene(seed);
            let (l, g) = obj.analytic_gradient(&s).unwrap();
            assert!((l - obj.loss(&s).unwrap()).abs() < 1e-12);
            let all: Vec<usize> = (0..g.len()).collect();
            let fd = obj.numeric_gradient(&s, &all, 1e-5).unwrap();
            for (k, (a, n)) in g.iter().zip(&fd).enumerate() {
                assert!((a - n).abs() <= 1e-4f64.max(1e-2 * n.abs()), "seed {seed} param {k}: {a} vs {n}");
            }
        }
    }

    #[test]
    fn off_screen_primitive_has_zero_gradient() {
        let (cam, target) = view();
        let obj = Objective { camera: &cam, target: &target, weights: LossWeights::default(), cutoff: 1.0 / 255.0 };
        let mut s = Scene::new(0);
        s.primitives.push(Primitive::ellipse(Vector3::new(40.0, 0.0, 0.0), Quaternion::identity(), [0.1, 0.1], 0.5, vec![0.0; 3]));
        let g = obj.numeric_gradient(&s, &[0, 1, 2], 1e-4).unwrap();
        assert_eq!(g, vec![0.0; 3]);
        assert!(obj.numeric_gradient(&s, &[0], 0.0).is_err());
    }
}
