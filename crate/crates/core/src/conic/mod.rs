//! Plane conics in homogeneous form: Gaussian level sets, duals, pencil-based
//! intersection and common tangents.

mod intersect;
mod tangent;

use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};

use crate::error::{Error, Result};
use crate::math;

pub use intersect::{intersect_conics, split_degenerate};
pub use tangent::{
    common_tangents, relative_discriminant, select_line_tangents, select_triangle_tangent,
    tangency_point,
};

/// Largest-magnitude entry of a slice, with sign.
fn signed_max(values: &[f64]) -> f64 {
    values.iter().copied().fold(0.0, |m, v| if v.abs() > m.abs() { v } else { m })
}

/// Homogeneous plane point `(u, v, w)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HomPoint(pub Vector3<f64>);

impl HomPoint {
    pub fn new(u: f64, v: f64, w: f64) -> Self {
        HomPoint(Vector3::new(u, v, w))
    }

    pub fn from_affine(p: &Vector2<f64>) -> Self {
        HomPoint(Vector3::new(p.x, p.y, 1.0))
    }

    /// Scaled so that the largest-magnitude entry is exactly `+1`.
    pub fn normalized(&self) -> HomPoint {
        let m = signed_max(self.0.as_slice());
        if m == 0.0 {
            *self
        } else {
            HomPoint(self.0 / m)
        }
    }

    /// Affine coordinates, or `None` for points at infinity.
    pub fn to_affine(&self) -> Option<Vector2<f64>> {
        let n = self.0.amax();
        if self.0.z.abs() <= 1e-15 * n {
            None
        } else {
            Some(Vector2::new(self.0.x / self.0.z, self.0.y / self.0.z))
        }
    }

    /// Distance between normalized representatives.
    pub fn distance(&self, other: &HomPoint) -> f64 {
        (self.normalized().0 - other.normalized().0).amax()
    }
}

/// Homogeneous line `l0 x + l1 y + l2 = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Line2(pub Vector3<f64>);

impl Line2 {
    pub fn new(l0: f64, l1: f64, l2: f64) -> Self {
        Line2(Vector3::new(l0, l1, l2))
    }

    pub fn through(a: &Vector2<f64>, b: &Vector2<f64>) -> Self {
        Line2(HomPoint::from_affine(a).0.cross(&HomPoint::from_affine(b).0))
    }

    pub fn is_finite_line(&self) -> bool {
        self.0.x.hypot(self.0.y) > 1e-14 * self.0.amax()
    }

    /// Unit normal form with a canonical sign (`l0 > 0`, or `l0 == 0` and `l1 > 0`).
    pub fn normalized(&self) -> Line2 {
        let n = self.0.x.hypot(self.0.y);
        if n == 0.0 {
            return *self;
        }
        let mut l = self.0 / n;
        if l.x < 0.0 || (l.x == 0.0 && l.y < 0.0) {
            l = -l;
        }
        Line2(l)
    }

    /// Signed value `l . (x, y, 1)`, proportional to signed distance.
    pub fn eval(&self, p: &Vector2<f64>) -> f64 {
        self.0.x * p.x + self.0.y * p.y + self.0.z
    }

    pub fn distance(&self, p: &Vector2<f64>) -> f64 {
        self.eval(p).abs() / self.0.x.hypot(self.0.y)
    }

    pub fn meet(&self, other: &Line2) -> HomPoint {
        HomPoint(self.0.cross(&other.0))
    }

    /// Difference of unit-normal forms, up to orientation.
    pub fn coefficient_distance(&self, other: &Line2) -> f64 {
        let a = self.normalized().0;
        let b = other.normalized().0;
        (a - b).amax().min((a + b).amax())
    }
}

/// Symmetric 3x3 conic matrix; `x^T M x = 0` for homogeneous points `x`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Conic {
    m: Matrix3<f64>,
}

impl Conic {
    /// Symmetrizes the input.
    pub fn from_matrix(m: Matrix3<f64>) -> Self {
        Conic {
            m: (m + m.transpose()) * 0.5,
        }
    }

    /// `a x^2 + b xy + c y^2 + d x + e y + f = 0`.
    pub fn from_coefficients(a: f64, b: f64, c: f64, d: f64, e: f64, f: f64) -> Self {
        Conic {
            m: Matrix3::new(a, b / 2.0, d / 2.0, b / 2.0, c, e / 2.0, d / 2.0, e / 2.0, f),
        }
    }

    /// Circle `(x - cx)^2 + (y - cy)^2 = r^2`.
    pub fn circle(center: Vector2<f64>, r: f64) -> Self {
        Conic::from_coefficients(
            1.0,
            0.0,
            1.0,
            -2.0 * center.x,
            -2.0 * center.y,
            center.norm_squared() - r * r,
        )
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.m
    }

    /// `(a, b, c, d, e, f)`.
    pub fn coefficients(&self) -> [f64; 6] {
        let m = &self.m;
        [
            m[(0, 0)],
            2.0 * m[(0, 1)],
            m[(1, 1)],
            2.0 * m[(0, 2)],
            2.0 * m[(1, 2)],
            m[(2, 2)],
        ]
    }

    /// Scaled so that the largest-magnitude entry is exactly `+1`.
    pub fn normalized(&self) -> Conic {
        let s = signed_max(self.m.as_slice());
        if s == 0.0 {
            *self
        } else {
            Conic { m: self.m / s }
        }
    }

    pub fn scaled(&self, s: f64) -> Conic {
        Conic { m: self.m * s }
    }

    pub fn eval(&self, x: &Vector3<f64>) -> f64 {
        (x.transpose() * self.m * x)[(0, 0)]
    }

    pub fn eval_affine(&self, p: &Vector2<f64>) -> f64 {
        self.eval(&Vector3::new(p.x, p.y, 1.0))
    }

    /// Whether two conics agree up to a nonzero scale.
    pub fn proportional(&self, other: &Conic, tol: f64) -> bool {
        let a = self.normalized().m;
        let b = other.normalized().m;
        (a - b).amax().min((a + b).amax()) <= tol
    }

    /// Level set `exp(-1/2 d^T S^-1 d) = cutoff` of a 2D Gaussian.
    pub fn from_gaussian(mean: &Vector2<f64>, cov: &Matrix2<f64>, cutoff: f64) -> Result<Conic> {
        if !(cutoff > 0.0 && cutoff < 1.0) {
            return Err(Error::InvalidConfig(format!("cutoff {cutoff} outside (0,1)")));
        }
        let q = math::spd_inverse(cov, 1e-12).ok_or(Error::DegenerateCovariance)?;
        let k = -2.0 * math::ln(cutoff);
        let qm = q * mean;
        let f = mean.dot(&qm) - k;
        Ok(Conic {
            m: Matrix3::new(
                q[(0, 0)],
                q[(0, 1)],
                -qm.x,
                q[(1, 0)],
                q[(1, 1)],
                -qm.y,
                -qm.x,
                -qm.y,
                f,
            ),
        })
    }

    /// Adjugate (transposed cofactor matrix). Points of the dual are the
    /// lines tangent to `self`.
    pub fn dual(&self) -> Result<Conic> {
        let n = self.normalized();
        if n.m.determinant().abs() <= 1e-12 {
            return Err(Error::SingularConic);
        }
        Ok(Conic { m: adjugate(&self.m) })
    }

    /// Quadratic part.
    pub fn quadratic_part(&self) -> Matrix2<f64> {
        self.m.fixed_view::<2, 2>(0, 0).into_owned()
    }

    pub fn linear_part(&self) -> Vector2<f64> {
        self.m.fixed_view::<2, 1>(0, 2).into_owned()
    }

    /// Center of a central conic.
    pub fn center(&self) -> Option<Vector2<f64>> {
        let q = self.quadratic_part();
        q.try_inverse().map(|qi| -(qi * self.linear_part()))
    }

    /// Value of the conic polynomial at its center.
    pub fn center_value(&self) -> Option<f64> {
        self.center().map(|c| self.m[(2, 2)] + self.linear_part().dot(&c))
    }

    /// Real, non-degenerate ellipse.
    pub fn is_ellipse(&self) -> bool {
        let n = self.normalized();
        let q = n.quadratic_part();
        let det = q.determinant();
        if det <= 0.0 {
            return false;
        }
        match n.center_value() {
            Some(fc) => fc != 0.0 && fc.signum() != q[(0, 0)].signum(),
            None => false,
        }
    }

    /// `M' = T^-T M T^-1` for the point map `x' = T x`.
    pub fn transformed(&self, t_inv: &Matrix3<f64>) -> Conic {
        Conic::from_matrix(t_inv.transpose() * self.m * t_inv)
    }

    /// Axis-aligned half extents of an ellipse around its center.
    pub fn half_extents(&self) -> Option<Vector2<f64>> {
        if !self.is_ellipse() {
            return None;
        }
        let q = self.quadratic_part();
        let fc = self.center_value()?;
        // Shape matrix A = Q / (-F(c)); extents are sqrt of diag(A^-1).
        let a = q / (-fc);
        let ai = a.try_inverse()?;
        Some(Vector2::new(ai[(0, 0)].sqrt(), ai[(1, 1)].sqrt()))
    }
}

pub(crate) fn adjugate(m: &Matrix3<f64>) -> Matrix3<f64> {
    let c = |r0: usize, r1: usize, c0: usize, c1: usize| m[(r0, c0)] * m[(r1, c1)] - m[(r0, c1)] * m[(r1, c0)];
    // adj[i][j] = cofactor[j][i]
    Matrix3::new(
        c(1, 2, 1, 2),
        -c(0, 2, 1, 2),
        c(0, 1, 1, 2),
        -c(1, 2, 0, 2),
        c(0, 2, 0, 2),
        -c(0, 1, 0, 2),
        c(1, 2, 0, 1),
        -c(0, 2, 0, 1),
        c(0, 1, 0, 1),
    )
}

#[cfg(test)]
mod tests;
