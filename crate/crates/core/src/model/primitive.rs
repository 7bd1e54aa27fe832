use nalgebra::{Matrix3, Quaternion, UnitQuaternion, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::sh::sh_coeff_count;

/// Which splatting element a primitive is.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrimitiveKind {
    Ellipse,
    Line,
    Triangle,
}

impl PrimitiveKind {
    pub fn vertex_count(self) -> usize {
        match self {
            PrimitiveKind::Ellipse => 1,
            PrimitiveKind::Line => 2,
            PrimitiveKind::Triangle => 3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PrimitiveKind::Ellipse => "ellipse",
            PrimitiveKind::Line => "line",
            PrimitiveKind::Triangle => "triangle",
        }
    }
}

/// Extra vertices, stored as offsets in the primitive's tangent plane
/// (coordinates along the first two rotation columns).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Shape {
    Ellipse,
    Line { mu2: Vector2<f64> },
    Triangle { mu2: Vector2<f64>, mu3: Vector2<f64> },
}

impl Shape {
    pub fn kind(&self) -> PrimitiveKind {
        match self {
            Shape::Ellipse => PrimitiveKind::Ellipse,
            Shape::Line { .. } => PrimitiveKind::Line,
            Shape::Triangle { .. } => PrimitiveKind::Triangle,
        }
    }

    /// Plane-local coordinates of every vertex, the first one being the origin.
    pub fn local_vertices(&self) -> Vec<Vector2<f64>> {
        match *self {
            Shape::Ellipse => vec![Vector2::zeros()],
            Shape::Line { mu2 } => vec![Vector2::zeros(), mu2],
            Shape::Triangle { mu2, mu3 } => vec![Vector2::zeros(), mu2, mu3],
        }
    }
}

/// One planar splatting element. All vertices share one covariance, one
/// opacity and one set of SH coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct Primitive {
    pub mu1: Vector3<f64>,
    pub shape: Shape,
    /// Stored as given; normalized whenever a rotation matrix is needed.
    pub rotation: Quaternion<f64>,
    /// In-plane scales; the third axis is fixed to zero.
    pub scale: [f64; 2],
    pub opacity: f64,
    /// `3 * (k+1)^2` values, coefficient-major (`sh[3 * j + channel]`).
    pub sh: Vec<f64>,
}

impl Primitive {
    pub fn ellipse(mu1: Vector3<f64>, rotation: Quaternion<f64>, scale: [f64; 2], opacity: f64, sh: Vec<f64>) -> Self {
        Primitive {
            mu1,
            shape: Shape::Ellipse,
            rotation,
            scale,
            opacity,
            sh,
        }
    }

    pub fn kind(&self) -> PrimitiveKind {
        self.shape.kind()
    }

    pub fn unit_rotation(&self) -> UnitQuaternion<f64> {
        UnitQuaternion::from_quaternion(self.rotation)
    }

    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        self.unit_rotation().to_rotation_matrix().into_inner()
    }

    /// World-space offset of a plane-local point.
    fn lift(r: &Matrix3<f64>, local: &Vector2<f64>) -> Vector3<f64> {
        r.column(0) * local.x + r.column(1) * local.y
    }

    /// 3D vertex positions: `mu1`, then `mu1 + u R[:,0] + v R[:,1]` for each
    /// stored plane-local vertex.
    pub fn reconstruct_vertices(&self) -> Vec<Vector3<f64>> {
        let r = self.rotation_matrix();
        self.shape
            .local_vertices()
            .iter()
            .enumerate()
            .map(|(i, l)| if i == 0 { self.mu1 } else { self.mu1 + Self::lift(&r, l) })
            .collect()
    }

    /// Mean of the reconstructed vertices. Exactly `mu1` when every offset is zero.
    pub fn centroid(&self) -> Vector3<f64> {
        let r = self.rotation_matrix();
        let locals = self.shape.local_vertices();
        let n = locals.len() as f64;
        let sum: Vector2<f64> = locals.iter().sum();
        self.mu1 + Self::lift(&r, &(sum / n))
    }

    /// World-space covariance `R S S^T R^T` with a zero third scale.
    pub fn covariance(&self) -> Matrix3<f64> {
        let r = self.rotation_matrix();
        let m = Matrix3::from_columns(&[
            r.column(0) * self.scale[0],
            r.column(1) * self.scale[1],
            Vector3::zeros(),
        ]);
        m * m.transpose()
    }

    pub fn normal(&self) -> Vector3<f64> {
        self.rotation_matrix().column(2).into_owned()
    }

    /// Bytes spent on vertex coordinates (8 bytes per stored scalar).
    pub fn vertex_storage_bytes(&self) -> usize {
        8 * match self.shape {
            Shape::Ellipse => 3,
            Shape::Line { .. } => 5,
            Shape::Triangle { .. } => 7,
        }
    }

    pub fn validate(&self, sh_order: usize) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidPrimitive(msg.to_string()));
        if !self.mu1.iter().all(|v| v.is_finite()) {
            return bad("mu1 is not finite");
        }
        match self.shape {
            Shape::Ellipse => {}
            Shape::Line { mu2 } => {
                if !mu2.iter().all(|v| v.is_finite()) {
                    return bad("mu2 is not finite");
                }
            }
            Shape::Triangle { mu2, mu3 } => {
                if !mu2.iter().chain(mu3.iter()).all(|v| v.is_finite()) {
                    return bad("mu2/mu3 not finite");
                }
            }
        }
        let qn = self.rotation.norm();
        if !(qn.is_finite() && qn > 1e-12) {
            return bad("rotation quaternion has zero or non-finite norm");
        }
        if !self.scale.iter().all(|s| s.is_finite() && *s > 0.0) {
            return bad("scale components must be positive");
        }
        if !(0.0..=1.0).contains(&self.opacity) {
            return bad("opacity outside [0, 1]");
        }
        let expected = sh_coeff_count(sh_order);
        if self.sh.len() != expected {
            return Err(Error::ShCoefficientCount {
                order: sh_order,
                expected,
                got: self.sh.len(),
            });
        }
        if !self.sh.iter().all(|v| v.is_finite()) {
            return bad("SH coefficients not finite");
        }
        Ok(())
    }
}
