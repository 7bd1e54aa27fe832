use std::collections::HashMap;

use nalgebra::{Matrix3, Quaternion, Rotation3, UnitQuaternion, Vector2, Vector3};

use super::ply::PointCloud;
use super::subsets::Subset;
use crate::model::{sh_coeff_count, sh::dc_from_rgb, Primitive, Scene, Shape};

pub const INITIAL_OPACITY: f64 = 0.5;
const NEIGHBORS: usize = 3;
const DEGENERATE: f64 = 1e-9;

/// Uniform grid for k-nearest-neighbor queries.
struct Grid<'a> {
    points: &'a [Vector3<f64>],
    cell: f64,
    origin: Vector3<f64>,
    cells: HashMap<[i64; 3], Vec<usize>>,
}

impl<'a> Grid<'a> {
    fn new(points: &'a [Vector3<f64>]) -> Self {
        let lo = points.iter().fold(Vector3::repeat(f64::INFINITY), |m, p| m.inf(p));
        let hi = points.iter().fold(Vector3::repeat(f64::NEG_INFINITY), |m, p| m.sup(p));
        let ext = hi - lo;
        // aim for a few points per occupied cell
        let vol: f64 = ext.iter().map(|e| e.max(ext.max() * 1e-3).max(1e-12)).product();
        let cell = (vol / points.len() as f64 * 4.0).cbrt().max(1e-12);
        let mut g = Grid {
            points,
            cell,
            origin: lo,
            cells: HashMap::new(),
        };
        for (i, p) in points.iter().enumerate() {
            let key = g.key(p);
            g.cells.entry(key).or_default().push(i);
        }
        g
    }

    fn key(&self, p: &Vector3<f64>) -> [i64; 3] {
        let q = (p - self.origin) / self.cell;
        [q.x.floor() as i64, q.y.floor() as i64, q.z.floor() as i64]
    }

    /// Mean distance from point `i` to its `k` nearest other points.
    fn mean_knn(&self, i: usize, k: usize) -> Option<f64> {
        let k = k.min(self.points.len() - 1);
        if k == 0 {
            return None;
        }
        let p = self.points[i];
        let c = self.key(&p);
        let mut best: Vec<f64> = Vec::with_capacity(k + 1);
        let mut shell = 0i64;
        loop {
            for dx in -shell..=shell {
                for dy in -shell..=shell {
                    for dz in -shell..=shell {
                        if dx.abs().max(dy.abs()).max(dz.abs()) != shell {
                            continue;
                        }
                        let Some(list) = self.cells.get(&[c[0] + dx, c[1] + dy, c[2] + dz]) else { continue };
                        for &j in list {
                            if j == i {
                                continue;
                            }
                            let d = (self.points[j] - p).norm();
                            let pos = best.partition_point(|&b| b <= d);
                            if pos < k {
                                best.insert(pos, d);
                                best.truncate(k);
                            }
                        }
                    }
                }
            }
            // unvisited points are at least `shell * cell` away
            if best.len() == k && best[k - 1] <= shell as f64 * self.cell {
                break;
            }
            shell += 1;
        }
        Some(best.iter().sum::<f64>() / k as f64)
    }
}

/// Mean distance from every point to its three nearest neighbors.
pub fn mean_neighbor_distances(points: &[Vector3<f64>]) -> Vec<Option<f64>> {
    let g = Grid::new(points);
    (0..points.len()).map(|i| g.mean_knn(i, NEIGHBORS)).collect()
}

fn quaternion(r: &Matrix3<f64>) -> Quaternion<f64> {
    let q = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(*r));
    *q.quaternion()
}

/// Unit vector orthogonal to `a`, preferring the direction closest to `hint`.
fn orthogonal(a: &Vector3<f64>, hint: Option<Vector3<f64>>) -> Vector3<f64> {
    if let Some(h) = hint {
        let v = h - a * a.dot(&h);
        if v.norm() > 1e-6 {
            return v.normalize();
        }
    }
    let k = a.iamin();
    let mut e = Vector3::zeros();
    e[k] = 1.0;
    a.cross(&e).normalize()
}

/// Rotation whose third column is `normal`.
fn frame_from_normal(normal: &Vector3<f64>) -> Matrix3<f64> {
    let z = normal.normalize();
    let x = orthogonal(&z, None);
    Matrix3::from_columns(&[x, z.cross(&x), z])
}

/// Rotation with first column along `dir`; the third column follows `normal_hint` when given.
fn frame_from_direction(dir: &Vector3<f64>, normal_hint: Option<Vector3<f64>>) -> Matrix3<f64> {
    let x = dir.normalize();
    let z = orthogonal(&x, normal_hint);
    Matrix3::from_columns(&[x, z.cross(&x), z])
}

/// Seeds one primitive per subset: Ellipse, Line or Triangle by subset size.
///
/// The lowest point index becomes `mu1`. Both scales are the mean
/// three-nearest-neighbor distance over the subset, opacity starts at 0.5
/// and the SH DC band reproduces the mean subset color. Collinear triples
/// become a Line over their farthest pair, coincident points an Ellipse.
pub fn instantiate_primitives(subsets: &[Subset], cloud: &PointCloud, sh_order: usize) -> Scene {
    let knn = mean_neighbor_distances(&cloud.positions);
    let mut scene = Scene::new(sh_order);
    let n_sh = sh_coeff_count(sh_order);
    for s in subsets {
        let pts: Vec<Vector3<f64>> = s.points.iter().map(|&i| cloud.positions[i]).collect();
        let mut rgb = [0.0; 3];
        for &i in &s.points {
            for (c, v) in rgb.iter_mut().zip(cloud.colors[i]) {
                *c += f64::from(v) / 255.0;
            }
        }
        let rgb = rgb.map(|c| c / s.points.len() as f64);
        let mut sh = vec![0.0; n_sh];
        sh[..3].copy_from_slice(&dc_from_rgb(rgb));

        let dists: Vec<f64> = s.points.iter().filter_map(|&i| knn[i]).collect();
        let scale = if dists.is_empty() {
            1e-2
        } else {
            (dists.iter().sum::<f64>() / dists.len() as f64).max(1e-7)
        };
        let normal = cloud.normals.as_ref().map(|ns| {
            let m: Vector3<f64> = s.points.iter().map(|&i| ns[i]).sum();
            if m.norm() > 1e-9 {
                m.normalize()
            } else {
                ns[s.points[0]]
            }
        });

        let (mu1, shape, rot) = seed_shape(&pts, normal);
        scene.primitives.push(Primitive {
            mu1,
            shape,
            rotation: quaternion(&rot),
            scale: [scale, scale],
            opacity: INITIAL_OPACITY,
            sh,
        });
    }
    scene
}

fn seed_shape(pts: &[Vector3<f64>], normal: Option<Vector3<f64>>) -> (Vector3<f64>, Shape, Matrix3<f64>) {
    let ellipse_rot = normal.map(|n| frame_from_normal(&n)).unwrap_or_else(Matrix3::identity);
    let line = |a: Vector3<f64>, b: Vector3<f64>| {
        let e = b - a;
        let len = e.norm();
        if len <= DEGENERATE {
            (a, Shape::Ellipse, ellipse_rot)
        } else {
            (a, Shape::Line { mu2: Vector2::new(len, 0.0) }, frame_from_direction(&e, normal))
        }
    };
    match pts.len() {
        1 => (pts[0], Shape::Ellipse, ellipse_rot),
        2 => line(pts[0], pts[1]),
        3 => {
            let (e1, e2) = (pts[1] - pts[0], pts[2] - pts[0]);
            let n = e1.cross(&e2);
            let scale2 = e1.norm_squared().max(e2.norm_squared()).max((pts[2] - pts[1]).norm_squared());
            if n.norm() <= DEGENERATE * scale2 {
                let pairs = [(0, 1), (0, 2), (1, 2)];
                let (a, b) = pairs
                    .into_iter()
                    .max_by(|x, y| {
                        (pts[x.0] - pts[x.1]).norm().total_cmp(&(pts[y.0] - pts[y.1]).norm()).then(y.cmp(x))
                    })
                    .unwrap();
                return line(pts[a], pts[b]);
            }
            let x = e1.normalize();
            let z = n.normalize();
            let y = z.cross(&x);
            let r = Matrix3::from_columns(&[x, y, z]);
            let shape = Shape::Triangle {
                mu2: Vector2::new(e1.norm(), 0.0),
                mu3: Vector2::new(e2.dot(&x), e2.dot(&y)),
            };
            (pts[0], shape, r)
        }
        k => panic!("subset of {k} points"),
    }
}
