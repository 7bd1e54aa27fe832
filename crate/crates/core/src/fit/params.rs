//! Flat parameter vectors for optimization.
//!
//! Scales are stored as logarithms and opacities as logits so that plain
//! gradient steps keep them in range. Rotations are raw quaternions.

use nalgebra::{Quaternion, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Scene, Shape};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamGroup {
    /// `mu1` and the plane-local offsets `mu2`, `mu3`.
    Position,
    Rotation,
    Scale,
    Opacity,
    Color,
}

/// Where one scalar parameter lives.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ParamSlot {
    pub primitive: usize,
    pub group: ParamGroup,
    /// Index within the primitive's own parameter block.
    pub local: usize,
}

const OPACITY_EPS: f64 = 1e-6;

pub fn logit(a: f64) -> f64 {
    let a = a.clamp(OPACITY_EPS, 1.0 - OPACITY_EPS);
    crate::math::ln(a / (1.0 - a))
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + crate::math::exp(-x))
}

/// Flattens a scene. The layout per primitive is `mu1` (3), plane-local
/// offsets (0, 2 or 4), quaternion (4), log scales (2), opacity logit (1),
/// then SH coefficients.
pub fn pack(scene: &Scene) -> (Vec<f64>, Vec<ParamSlot>) {
    let mut x = Vec::new();
    let mut slots = Vec::new();
    for (i, p) in scene.primitives.iter().enumerate() {
        let mut push = |v: f64, group: ParamGroup, local: &mut usize| {
            x.push(v);
            slots.push(ParamSlot { primitive: i, group, local: *local });
            *local += 1;
        };
        let mut k = 0;
        for v in p.mu1.iter() {
            push(*v, ParamGroup::Position, &mut k);
        }
        for off in p.shape.local_vertices().iter().skip(1) {
            push(off.x, ParamGroup::Position, &mut k);
            push(off.y, ParamGroup::Position, &mut k);
        }
        for v in p.rotation.coords.iter() {
            push(*v, ParamGroup::Rotation, &mut k);
        }
        for s in p.scale {
            push(crate::math::ln(s), ParamGroup::Scale, &mut k);
        }
        push(logit(p.opacity), ParamGroup::Opacity, &mut k);
        for c in &p.sh {
            push(*c, ParamGroup::Color, &mut k);
        }
    }
    (x, slots)
}

/// Inverse of [`pack`]; shapes and SH sizes come from `template`.
pub fn unpack(template: &Scene, x: &[f64]) -> Result<Scene> {
    let mut out = template.clone();
    let mut it = x.iter().copied();
    let mut next = || it.next().ok_or_else(|| Error::InvalidConfig("parameter vector too short".into()));
    for p in &mut out.primitives {
        p.mu1 = Vector3::new(next()?, next()?, next()?);
        p.shape = match p.shape {
            Shape::Ellipse => Shape::Ellipse,
            Shape::Line { .. } => Shape::Line {
                mu2: Vector2::new(next()?, next()?),
            },
            Shape::Triangle { .. } => Shape::Triangle {
                mu2: Vector2::new(next()?, next()?),
                mu3: Vector2::new(next()?, next()?),
            },
        };
        // nalgebra stores quaternion coordinates as (i, j, k, w)
        let (qi, qj, qk, qw) = (next()?, next()?, next()?, next()?);
        p.rotation = Quaternion::new(qw, qi, qj, qk);
        p.scale = [crate::math::exp(next()?), crate::math::exp(next()?)];
        p.opacity = sigmoid(next()?);
        for c in p.sh.iter_mut() {
            *c = next()?;
        }
    }
    if it.next().is_some() {
        return Err(Error::InvalidConfig("parameter vector too long".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Primitive;

    #[test]
    fn round_trip() {
        let mut scene = Scene::new(0);
        scene.primitives.push(Primitive {
            mu1: Vector3::new(0.1, -0.2, 0.3),
            shape: Shape::Triangle {
                mu2: Vector2::new(0.5, 0.0),
                mu3: Vector2::new(0.1, 0.4),
            },
            rotation: Quaternion::new(0.9, 0.1, -0.2, 0.3),
            scale: [0.05, 0.02],
            opacity: 0.4,
            sh: vec![0.1, 0.2, 0.3],
        });
        scene.primitives.push(Primitive::ellipse(Vector3::zeros(), Quaternion::identity(), [0.1, 0.1], 0.9, vec![0.0; 3]));
        let (x, slots) = pack(&scene);
        assert_eq!(x.len(), 3 + 4 + 4 + 2 + 1 + 3 + 3 + 4 + 2 + 1 + 3);
        assert_eq!(slots.len(), x.len());
        assert_eq!(slots[7].group, ParamGroup::Rotation);
        let back = unpack(&scene, &x).unwrap();
        for (a, b) in back.primitives.iter().zip(&scene.primitives) {
            assert_eq!(a.shape, b.shape);
            assert_eq!(a.rotation, b.rotation);
            assert!((a.scale[0] - b.scale[0]).abs() < 1e-15);
            assert!((a.opacity - b.opacity).abs() < 1e-12);
        }
        assert!(unpack(&scene, &x[1..]).is_err());
    }
}
