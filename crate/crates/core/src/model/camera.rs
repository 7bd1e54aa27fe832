use nalgebra::{Matrix3, Matrix4, Vector2, Vector3, Vector4};

use crate::error::{Error, Result};

/// Pinhole camera. Pixel `(i, j)` is sampled at its center `(i + 0.5, j + 0.5)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Camera {
    /// World-to-camera rigid transform.
    pub view: Matrix4<f64>,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
    pub near: f64,
    pub far: f64,
}

impl Camera {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        view: Matrix4<f64>,
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        width: usize,
        height: usize,
        near: f64,
        far: f64,
    ) -> Result<Self> {
        let cam = Camera {
            view,
            fx,
            fy,
            cx,
            cy,
            width,
            height,
            near,
            far,
        };
        cam.validate()?;
        Ok(cam)
    }

    /// Camera at `eye` looking at `target`; `up` need not be orthogonal.
    /// Camera frame: +x right, +y down, +z forward.
    pub fn look_at(
        eye: Vector3<f64>,
        target: Vector3<f64>,
        up: Vector3<f64>,
        focal: f64,
        width: usize,
        height: usize,
    ) -> Result<Self> {
        let forward = (target - eye).normalize();
        let right = forward.cross(&up).normalize();
        let down = forward.cross(&right);
        let rot = Matrix3::from_rows(&[right.transpose(), down.transpose(), forward.transpose()]);
        let t = -(rot * eye);
        let mut view = Matrix4::identity();
        view.fixed_view_mut::<3, 3>(0, 0).copy_from(&rot);
        view.fixed_view_mut::<3, 1>(0, 3).copy_from(&t);
        Camera::new(
            view,
            focal,
            focal,
            width as f64 / 2.0,
            height as f64 / 2.0,
            width,
            height,
            0.01,
            1000.0,
        )
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidCamera(m.to_string()));
        if !self.view.iter().all(|v| v.is_finite()) {
            return bad("view matrix not finite");
        }
        let r = self.rotation();
        if (r.transpose() * r - Matrix3::identity()).abs().max() > 1e-9 {
            return bad("view rotation block is not orthogonal");
        }
        if (r.determinant() - 1.0).abs() > 1e-9 {
            return bad("view rotation block is not a proper rotation");
        }
        let last = self.view.row(3);
        if (last - Vector4::new(0.0, 0.0, 0.0, 1.0).transpose()).abs().max() > 1e-12 {
            return bad("view matrix last row must be [0 0 0 1]");
        }
        if !(self.fx > 0.0 && self.fy > 0.0 && self.fx.is_finite() && self.fy.is_finite()) {
            return bad("focal lengths must be positive");
        }
        if !(self.cx.is_finite() && self.cy.is_finite()) {
            return bad("principal point not finite");
        }
        if self.width == 0 || self.height == 0 {
            return bad("image size must be at least 1x1");
        }
        if !(self.near > 0.0 && self.far > self.near) {
            return bad("need 0 < near < far");
        }
        Ok(())
    }

    pub fn rotation(&self) -> Matrix3<f64> {
        self.view.fixed_view::<3, 3>(0, 0).into_owned()
    }

    pub fn translation(&self) -> Vector3<f64> {
        self.view.fixed_view::<3, 1>(0, 3).into_owned()
    }

    pub fn to_camera(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation() * p + self.translation()
    }

    /// Camera center in world coordinates.
    pub fn center(&self) -> Vector3<f64> {
        -(self.rotation().transpose() * self.translation())
    }

    /// Pixel coordinates of a camera-frame point (perspective division).
    pub fn project_camera(&self, pc: &Vector3<f64>) -> Vector2<f64> {
        Vector2::new(self.fx * pc.x / pc.z + self.cx, self.fy * pc.y / pc.z + self.cy)
    }

    /// Camera-frame ray direction through pixel position `px`, with unit z.
    pub fn ray_direction(&self, px: &Vector2<f64>) -> Vector3<f64> {
        Vector3::new((px.x - self.cx) / self.fx, (px.y - self.cy) / self.fy, 1.0)
    }

    pub fn pixel_center(i: usize, j: usize) -> Vector2<f64> {
        Vector2::new(i as f64 + 0.5, j as f64 + 0.5)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_camera() -> Camera {
        Camera::new(Matrix4::identity(), 1.0, 1.0, 0.0, 0.0, 4, 4, 0.01, 100.0).unwrap()
    }

    #[test]
    fn on_axis_point_projects_to_principal_point() {
        let c = unit_camera();
        let p = c.project_camera(&c.to_camera(&Vector3::new(0.0, 0.0, 1.0)));
        assert_eq!(p, Vector2::new(0.0, 0.0));
    }

    #[test]
    fn pinhole_division() {
        let c = unit_camera();
        let p = c.project_camera(&c.to_camera(&Vector3::new(1.0, 0.0, 2.0)));
        assert_eq!(p, Vector2::new(0.5, 0.0));
    }

    #[test]
    fn look_at_places_target_on_axis() {
        let c = Camera::look_at(
            Vector3::new(1.0, 2.0, -3.0),
            Vector3::new(0.0, 0.0, 0.0),
            Vector3::new(0.0, -1.0, 0.0),
            50.0,
            64,
            48,
        )
        .unwrap();
        let pc = c.to_camera(&Vector3::zeros());
        assert!(pc.x.abs() < 1e-12 && pc.y.abs() < 1e-12 && pc.z > 0.0);
        assert!((c.center() - Vector3::new(1.0, 2.0, -3.0)).norm() < 1e-12);
    }

    #[test]
    fn rejects_non_rigid_view() {
        let mut v = Matrix4::identity();
        v[(0, 0)] = 2.0;
        assert!(Camera::new(v, 1.0, 1.0, 0.0, 0.0, 4, 4, 0.01, 10.0).is_err());
        assert!(Camera::new(Matrix4::identity(), 0.0, 1.0, 0.0, 0.0, 4, 4, 0.01, 10.0).is_err());
        assert!(Camera::new(Matrix4::identity(), 1.0, 1.0, 0.0, 0.0, 0, 4, 0.01, 10.0).is_err());
    }
}
