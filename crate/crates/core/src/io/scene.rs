//! Scene and camera files (JSON). Numbers are written with 17 significant
//! digits so files round-trip exactly.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{Matrix4, Quaternion, Vector2, Vector3};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::model::{Camera, Primitive, PrimitiveKind, Scene, Shape};

fn num(out: &mut String, v: f64) {
    if v == 0.0 {
        // keeps -0.0 and 0.0 apart without an odd exponent form
        out.push_str(if v.is_sign_negative() { "-0.0" } else { "0.0" });
    } else {
        write!(out, "{v:.16e}").unwrap();
    }
}

fn array(out: &mut String, vals: &[f64]) {
    out.push('[');
    for (i, v) in vals.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        num(out, *v);
    }
    out.push(']');
}

/// Deterministic JSON text of a scene.
pub fn scene_to_json(scene: &Scene) -> String {
    let mut s = String::new();
    writeln!(s, "{{").unwrap();
    writeln!(s, "  \"sh_order\": {},", scene.sh_order).unwrap();
    s.push_str("  \"background\": ");
    array(&mut s, &scene.background);
    s.push_str(",\n  \"primitives\": [");
    for (i, p) in scene.primitives.iter().enumerate() {
        s.push_str(if i == 0 { "\n" } else { ",\n" });
        write!(s, "    {{\"kind\": \"{}\", \"mu1\": ", p.kind().as_str()).unwrap();
        array(&mut s, p.mu1.as_slice());
        match p.shape {
            Shape::Ellipse => {}
            Shape::Line { mu2 } => {
                s.push_str(", \"mu2\": ");
                array(&mut s, mu2.as_slice());
            }
            Shape::Triangle { mu2, mu3 } => {
                s.push_str(", \"mu2\": ");
                array(&mut s, mu2.as_slice());
                s.push_str(", \"mu3\": ");
                array(&mut s, mu3.as_slice());
            }
        }
        s.push_str(", \"rotation\": ");
        let q = &p.rotation;
        array(&mut s, &[q.w, q.i, q.j, q.k]);
        s.push_str(", \"scale\": ");
        array(&mut s, &p.scale);
        s.push_str(", \"opacity\": ");
        num(&mut s, p.opacity);
        s.push_str(", \"sh\": ");
        array(&mut s, &p.sh);
        s.push('}');
    }
    if !scene.primitives.is_empty() {
        s.push_str("\n  ");
    }
    s.push_str("]\n}\n");
    s
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneFile {
    sh_order: usize,
    #[serde(default)]
    background: [f64; 3],
    primitives: Vec<PrimitiveFile>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PrimitiveFile {
    kind: PrimitiveKind,
    mu1: [f64; 3],
    mu2: Option<[f64; 2]>,
    mu3: Option<[f64; 2]>,
    /// `(w, x, y, z)`.
    rotation: [f64; 4],
    scale: [f64; 2],
    opacity: f64,
    sh: Vec<f64>,
}

impl PrimitiveFile {
    fn into_primitive(self, index: usize) -> Result<Primitive> {
        let bad = |m: &str| Error::InvalidPrimitive(format!("primitive {index}: {m}"));
        let v2 = |a: [f64; 2]| Vector2::new(a[0], a[1]);
        let shape = match (self.kind, self.mu2, self.mu3) {
            (PrimitiveKind::Ellipse, None, None) => Shape::Ellipse,
            (PrimitiveKind::Line, Some(m2), None) => Shape::Line { mu2: v2(m2) },
            (PrimitiveKind::Triangle, Some(m2), Some(m3)) => Shape::Triangle { mu2: v2(m2), mu3: v2(m3) },
            (k, _, _) => {
                return Err(bad(&format!(
                    "a {} takes exactly {} offset(s) (mu2, mu3)",
                    k.as_str(),
                    k.vertex_count() - 1
                )))
            }
        };
        let [w, x, y, z] = self.rotation;
        Ok(Primitive {
            mu1: Vector3::from(self.mu1),
            shape,
            rotation: Quaternion::new(w, x, y, z),
            scale: self.scale,
            opacity: self.opacity,
            sh: self.sh,
        })
    }
}

fn json_error(path: &Path, source: serde_json::Error) -> Error {
    Error::Json {
        path: path.to_path_buf(),
        source,
    }
}

/// Parses scene JSON; `origin` names the source in error messages.
pub fn scene_from_json(text: &str, origin: &Path) -> Result<Scene> {
    let f: SceneFile = serde_json::from_str(text).map_err(|e| json_error(origin, e))?;
    let mut scene = Scene::new(f.sh_order);
    scene.background = f.background;
    for (i, p) in f.primitives.into_iter().enumerate() {
        scene.primitives.push(p.into_primitive(i)?);
    }
    scene.validate()?;
    Ok(scene)
}

pub fn load_scene(path: impl AsRef<Path>) -> Result<Scene> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    scene_from_json(&text, path)
}

pub fn save_scene(path: impl AsRef<Path>, scene: &Scene) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, scene_to_json(scene)).map_err(|e| Error::io(path, e))
}

/// Camera file: either an explicit world-to-camera matrix with intrinsics,
/// or a look-at description.
#[derive(Deserialize)]
#[serde(untagged)]
enum CameraFile {
    Matrix {
        /// Row-major 4x4 world-to-camera transform.
        view: [f64; 16],
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        width: usize,
        height: usize,
        near: f64,
        far: f64,
    },
    LookAt {
        eye: [f64; 3],
        target: [f64; 3],
        up: [f64; 3],
        focal: f64,
        width: usize,
        height: usize,
    },
}

pub fn camera_to_json(cam: &Camera) -> String {
    let mut s = String::from("{\n  \"view\": ");
    let rows: Vec<f64> = (0..4).flat_map(|r| (0..4).map(move |c| (r, c))).map(|(r, c)| cam.view[(r, c)]).collect();
    array(&mut s, &rows);
    for (k, v) in [("fx", cam.fx), ("fy", cam.fy), ("cx", cam.cx), ("cy", cam.cy)] {
        write!(s, ",\n  \"{k}\": ").unwrap();
        num(&mut s, v);
    }
    write!(s, ",\n  \"width\": {},\n  \"height\": {}", cam.width, cam.height).unwrap();
    for (k, v) in [("near", cam.near), ("far", cam.far)] {
        write!(s, ",\n  \"{k}\": ").unwrap();
        num(&mut s, v);
    }
    s.push_str("\n}\n");
    s
}

pub fn camera_from_json(text: &str, origin: &Path) -> Result<Camera> {
    let f: CameraFile = serde_json::from_str(text).map_err(|e| json_error(origin, e))?;
    match f {
        CameraFile::Matrix {
            view,
            fx,
            fy,
            cx,
            cy,
            width,
            height,
            near,
            far,
        } => Camera::new(Matrix4::from_row_slice(&view), fx, fy, cx, cy, width, height, near, far),
        CameraFile::LookAt {
            eye,
            target,
            up,
            focal,
            width,
            height,
        } => Camera::look_at(eye.into(), target.into(), up.into(), focal, width, height),
    }
}

pub fn load_camera(path: impl AsRef<Path>) -> Result<Camera> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    camera_from_json(&text, path)
}

pub fn save_camera(path: impl AsRef<Path>, cam: &Camera) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, camera_to_json(cam)).map_err(|e| Error::io(path, e))
}
