//! Vertex pruning (the three conversion rules), opacity pruning and
//! clone/split densification.

use nalgebra::{Vector2, Vector3};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::model::{Config, Primitive, PrimitiveKind, Scene, Shape};

/// Split children shrink their scales by this factor.
pub const SPLIT_SCALE_DIVISOR: f64 = 1.6;

/// |Pearson correlation| between the x and y coordinates of plane-local
/// vertices. Zero variance on either axis counts as collinear.
pub fn pearson_collinearity(vertices: &[Vector2<f64>]) -> f64 {
    let n = vertices.len() as f64;
    let mean = vertices.iter().sum::<Vector2<f64>>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for v in vertices {
        let d = v - mean;
        sxx += d.x * d.x;
        syy += d.y * d.y;
        sxy += d.x * d.y;
    }
    if sxx / n < 1e-18 || syy / n < 1e-18 {
        return 1.0;
    }
    (sxy / (sxx * syy).sqrt()).abs().min(1.0)
}

fn max_pairwise_distance(v: &[Vector3<f64>]) -> f64 {
    let mut m: f64 = 0.0;
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            m = m.max((v[i] - v[j]).norm());
        }
    }
    m
}

/// Which conversion rule fired, if any.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Conversion {
    TriangleToEllipse,
    TriangleToLine,
    LineToEllipse,
}

/// Applies the first matching conversion rule; other parameters carry over.
///
/// A Triangle collapses to an Ellipse at `mu1` when all vertices are within
/// `omega_dist`; otherwise, when its plane-local vertices correlate above
/// `omega_pear`, it becomes a Line over its two farthest vertices (the one
/// with the lower vertex index becomes `mu1`). A Line shorter than
/// `omega_dist` collapses to an Ellipse. The rotation is kept, so the
/// covariance is unchanged and the new `mu2` is expressed in the same
/// plane-local frame.
pub fn vertex_prune(prim: &Primitive, omega_dist: f64, omega_pear: f64) -> (Primitive, Option<Conversion>) {
    let world = prim.reconstruct_vertices();
    let mut out = prim.clone();
    match prim.shape {
        Shape::Ellipse => (out, None),
        Shape::Line { .. } => {
            if max_pairwise_distance(&world) < omega_dist {
                out.shape = Shape::Ellipse;
                (out, Some(Conversion::LineToEllipse))
            } else {
                (out, None)
            }
        }
        Shape::Triangle { .. } => {
            if max_pairwise_distance(&world) < omega_dist {
                out.shape = Shape::Ellipse;
                return (out, Some(Conversion::TriangleToEllipse));
            }
            let local = prim.shape.local_vertices();
            if pearson_collinearity(&local) <= omega_pear {
                return (out, None);
            }
            let (a, b) = [(0, 1), (0, 2), (1, 2)]
                .into_iter()
                .max_by(|x, y| {
                    let dx = (world[x.0] - world[x.1]).norm();
                    let dy = (world[y.0] - world[y.1]).norm();
                    // ties go to the lexicographically smaller pair
                    dx.total_cmp(&dy).then(y.cmp(x))
                })
                .unwrap();
            out.mu1 = world[a];
            out.shape = Shape::Line { mu2: local[b] - local[a] };
            (out, Some(Conversion::TriangleToLine))
        }
    }
}

/// Counts and storage of a prune pass.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PruneReport {
    pub triangle_to_ellipse: usize,
    pub triangle_to_line: usize,
    pub line_to_ellipse: usize,
    pub removed: usize,
    pub storage_bytes_before: usize,
    pub storage_bytes_after: usize,
}

/// Removes primitives with opacity below `threshold`; returns the number removed.
pub fn primitive_prune(scene: &mut Scene, threshold: f64) -> usize {
    let before = scene.primitives.len();
    scene.primitives.retain(|p| !(p.opacity < threshold));
    before - scene.primitives.len()
}

/// Vertex pruning of every primitive (rules re-applied until none fires),
/// then opacity pruning.
pub fn prune_pass(scene: &mut Scene, config: &Config) -> PruneReport {
    let mut report = PruneReport {
        storage_bytes_before: scene.vertex_storage_bytes(),
        ..Default::default()
    };
    for p in scene.primitives.iter_mut() {
        loop {
            let (next, rule) = vertex_prune(p, config.omega_dist, config.omega_pear);
            let Some(rule) = rule else { break };
            match rule {
                Conversion::TriangleToEllipse => report.triangle_to_ellipse += 1,
                Conversion::TriangleToLine => report.triangle_to_line += 1,
                Conversion::LineToEllipse => report.line_to_ellipse += 1,
            }
            *p = next;
        }
    }
    report.removed = primitive_prune(scene, config.opacity_prune);
    report.storage_bytes_after = scene.vertex_storage_bytes();
    report
}

/// Thresholds for densification.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensifyParams {
    /// Mean positional-gradient norm that triggers densification.
    pub grad_threshold: f64,
    /// Largest scale still cloned rather than split (world units).
    pub clone_max_scale: f64,
    /// Clone offset is `-step * gradient`.
    pub clone_step: f64,
}

/// Clone or split a primitive whose positional gradient is large.
///
/// Small primitives are cloned: the copy is moved against the gradient.
/// Large ones are split into two children with scales divided by 1.6 and
/// `mu1` drawn from the parent's Gaussian. Children keep `mu2`, `mu3`,
/// rotation, opacity and SH coefficients. Returns the parent unchanged when
/// the gradient is below threshold.
pub fn densify_clone_split(prim: &Primitive, grad: &Vector3<f64>, params: &DensifyParams, rng: &mut impl Rng) -> Vec<Primitive> {
    if !(grad.norm() >= params.grad_threshold) {
        return vec![prim.clone()];
    }
    if prim.scale[0].max(prim.scale[1]) <= params.clone_max_scale {
        let mut copy = prim.clone();
        copy.mu1 -= grad * params.clone_step;
        return vec![prim.clone(), copy];
    }
    let r = prim.rotation_matrix();
    let scale = prim.scale.map(|s| s / SPLIT_SCALE_DIVISOR);
    (0..2)
        .map(|_| {
            let z0: f64 = rng.sample(StandardNormal);
            let z1: f64 = rng.sample(StandardNormal);
            let offset = r.column(0) * (prim.scale[0] * z0) + r.column(1) * (prim.scale[1] * z1);
            Primitive {
                mu1: prim.mu1 + offset,
                scale,
                ..prim.clone()
            }
        })
        .collect()
}

/// Primitive kinds in a scene, as `(ellipses, lines, triangles)`.
pub fn kind_totals(scene: &Scene) -> (usize, usize, usize) {
    let c = scene.kind_counts();
    let g = |k| c.get(&k).copied().unwrap_or(0);
    (g(PrimitiveKind::Ellipse), g(PrimitiveKind::Line), g(PrimitiveKind::Triangle))
}
