use nalgebra::{Matrix2, Matrix2x3, Vector2, Vector3};

use crate::error::{Error, Result};
use crate::math;
use crate::model::{sh_to_color, Camera, Primitive, PrimitiveKind};

/// Screen-space low-pass floor added to the projected covariance (px^2).
pub const LOW_PASS: f64 = 0.3;

/// A primitive projected onto the image plane.
#[derive(Clone, Debug, PartialEq)]
pub struct SplattedPrimitive {
    /// Index of the source primitive in its scene.
    pub index: usize,
    pub kind: PrimitiveKind,
    /// Projected vertices in px; `vertices[0]` is the anchor.
    pub vertices: Vec<Vector2<f64>>,
    /// Shared projected covariance (px^2) and its inverse.
    pub cov: Matrix2<f64>,
    pub cov_inv: Matrix2<f64>,
    /// Camera-frame z of the vertex centroid.
    pub depth: f64,
    pub color: [f64; 3],
    pub opacity: f64,
    /// Camera-frame point on the primitive plane and the plane normal.
    pub plane_point: Vector3<f64>,
    pub plane_normal: Vector3<f64>,
    /// Pixel-space bounding box `[xmin, ymin, xmax, ymax]` of all boundary ellipses.
    pub bbox: [f64; 4],
}

impl SplattedPrimitive {
    /// Squared Mahalanobis distance from vertex `j`.
    pub fn mahalanobis2(&self, p: &Vector2<f64>, j: usize) -> f64 {
        let d = p - self.vertices[j];
        d.dot(&(self.cov_inv * d))
    }

    /// Camera-frame depth where the pixel ray meets the primitive plane.
    pub fn ray_depth(&self, cam: &Camera, px: &Vector2<f64>) -> f64 {
        let dir = cam.ray_direction(px);
        let denom = self.plane_normal.dot(&dir);
        if denom.abs() <= 1e-6 * dir.norm() {
            return self.depth;
        }
        let z = self.plane_normal.dot(&self.plane_point) / denom;
        if z > 0.0 && z.is_finite() {
            z
        } else {
            self.depth
        }
    }
}

/// Jacobian of the perspective projection at a camera-frame point.
pub fn projection_jacobian(cam: &Camera, t: &Vector3<f64>) -> Matrix2x3<f64> {
    let iz = 1.0 / t.z;
    Matrix2x3::new(
        cam.fx * iz,
        0.0,
        -cam.fx * t.x * iz * iz,
        0.0,
        cam.fy * iz,
        -cam.fy * t.y * iz * iz,
    )
}

/// Mahalanobis radius of the truncation contour.
pub fn boundary_radius(cutoff: f64) -> f64 {
    (-2.0 * math::ln(cutoff)).sqrt()
}

/// Projects a primitive. `Ok(None)` means culled: a vertex lies in front of
/// the near plane or the footprint misses the viewport.
pub fn project_primitive(
    prim: &Primitive,
    index: usize,
    cam: &Camera,
    sh_order: usize,
    cutoff: f64,
) -> Result<Option<SplattedPrimitive>> {
    let world = prim.reconstruct_vertices();
    let cam_pts: Vec<Vector3<f64>> = world.iter().map(|v| cam.to_camera(v)).collect();
    if cam_pts.iter().any(|p| !(p.z > cam.near)) {
        return Ok(None);
    }
    let vertices: Vec<Vector2<f64>> = cam_pts.iter().map(|p| cam.project_camera(p)).collect();

    let w = cam.rotation();
    let j = projection_jacobian(cam, &cam_pts[0]);
    let m = j * w;
    let mut cov = m * prim.covariance() * m.transpose();
    cov = (cov + cov.transpose()) * 0.5;
    cov[(0, 0)] += LOW_PASS;
    cov[(1, 1)] += LOW_PASS;
    let cov_inv = math::spd_inverse(&cov, 1e-12)
        .ok_or_else(|| Error::Numerical(format!("projected covariance of primitive {index} is not SPD")))?;

    let r = boundary_radius(cutoff);
    let ext = Vector2::new(cov[(0, 0)].sqrt(), cov[(1, 1)].sqrt()) * r;
    let mut bbox = [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
    for v in &vertices {
        bbox[0] = bbox[0].min(v.x - ext.x);
        bbox[1] = bbox[1].min(v.y - ext.y);
        bbox[2] = bbox[2].max(v.x + ext.x);
        bbox[3] = bbox[3].max(v.y + ext.y);
    }
    if bbox[2] < 0.0 || bbox[3] < 0.0 || bbox[0] > cam.width as f64 || bbox[1] > cam.height as f64 {
        return Ok(None);
    }

    let centroid = prim.centroid();
    let depth = cam.to_camera(&centroid).z;
    let view = centroid - cam.center();
    let n = view.norm();
    let dir = if n > 0.0 { view / n } else { Vector3::z() };
    let color = sh_to_color(&prim.sh, &dir, sh_order)?;

    Ok(Some(SplattedPrimitive {
        index,
        kind: prim.kind(),
        vertices,
        cov,
        cov_inv,
        depth,
        color,
        opacity: prim.opacity,
        plane_point: cam_pts[0],
        plane_normal: w * prim.normal(),
        bbox,
    }))
}
