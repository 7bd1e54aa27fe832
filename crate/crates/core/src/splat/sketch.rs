use nalgebra::Vector2;

use super::project::{boundary_radius, SplattedPrimitive};
use crate::conic::{
    common_tangents, select_line_tangents, select_triangle_tangent, tangency_point, Conic, Line2,
};
use crate::error::{Error, Result};
use crate::math::{self, cross2};
use crate::model::PrimitiveKind;

/// Vertices closer than this fraction of the boundary radius (in whitened
/// units) are treated as one.
const MERGE_FRACTION: f64 = 1e-3;
const ROOT_PAD: f64 = 1e-9;

/// Quadrangle `[mu_i, mu_j, t_j, t_i]` between an edge and its tangent.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeQuad {
    pub i: usize,
    pub j: usize,
    pub tangent: Line2,
    pub ti: Vector2<f64>,
    pub tj: Vector2<f64>,
}

impl EdgeQuad {
    pub fn corners(&self, vertices: &[Vector2<f64>]) -> [Vector2<f64>; 4] {
        [vertices[self.i], vertices[self.j], self.tj, self.ti]
    }
}

/// Re-sketched boundary of a Line or Triangle on the image plane.
#[derive(Clone, Debug, PartialEq)]
pub struct SketchedBoundary {
    /// Boundary conic of each projected vertex.
    pub conics: Vec<Conic>,
    /// Vertices the sketch is built on (two for a segment, three for a
    /// triangle); may be a subset when vertices coincide or are collinear.
    pub active: Vec<usize>,
    pub edges: Vec<EdgeQuad>,
    /// Whether `active` spans an inner triangle.
    pub inner: bool,
    pub bbox: [f64; 4],
}

/// How a splat's footprint is evaluated.
#[derive(Clone, Debug, PartialEq)]
pub enum Sketch {
    /// Single Gaussian around the anchor.
    Ellipse,
    Boundary(SketchedBoundary),
    /// Maximum over the per-vertex Gaussians; used when no valid sketch exists.
    Merged,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Region {
    Inner,
    /// Quadrangle `quad` of edge `(i, j)`.
    Edge { i: usize, j: usize, quad: usize },
    Vertex(usize),
    Outside,
}

fn whitened_distance(sp: &SplattedPrimitive, a: usize, b: usize) -> f64 {
    sp.mahalanobis2(&sp.vertices[a], b).sqrt()
}

fn same_side(l: &Line2, a: &Vector2<f64>, b: &Vector2<f64>) -> bool {
    l.eval(a) * l.eval(b) > 0.0
}

fn line_edges(sp: &SplattedPrimitive, conics: &[Conic], i: usize, j: usize) -> Result<Vec<EdgeQuad>> {
    let cands = common_tangents(&conics[i], &conics[j])?;
    let (l1, l2) = select_line_tangents(&cands, &conics[i], &conics[j])?;
    let mut out = Vec::with_capacity(2);
    for l in [l1, l2] {
        out.push(edge_quad(sp, conics, i, j, l)?);
    }
    let (vi, vj) = (sp.vertices[i], sp.vertices[j]);
    if cross2(&(vj - vi), &(out[0].ti - vi)) * cross2(&(vj - vi), &(out[1].ti - vi)) >= 0.0 {
        return Err(Error::DegenerateSketch("segment tangents on one side"));
    }
    Ok(out)
}

fn edge_quad(sp: &SplattedPrimitive, conics: &[Conic], i: usize, j: usize, l: Line2) -> Result<EdgeQuad> {
    let ti = tangency_point(&l, &conics[i])?;
    let tj = tangency_point(&l, &conics[j])?;
    let (vi, vj) = (sp.vertices[i], sp.vertices[j]);
    if (tj - ti).dot(&(vj - vi)) <= 0.0 || cross2(&(vj - vi), &(ti - vi)) * cross2(&(vj - vi), &(tj - vi)) <= 0.0 {
        return Err(Error::DegenerateSketch("self-intersecting quadrangle"));
    }
    Ok(EdgeQuad { i, j, tangent: l, ti, tj })
}

fn triangle_edges(sp: &SplattedPrimitive, conics: &[Conic], tri: [usize; 3]) -> Result<Vec<EdgeQuad>> {
    let mut out = Vec::with_capacity(3);
    for (a, b, c) in [(0, 1, 2), (0, 2, 1), (1, 2, 0)] {
        let (i, j, k) = (tri[a], tri[b], tri[c]);
        let (vi, vj, vk) = (sp.vertices[i], sp.vertices[j], sp.vertices[k]);
        let external: Vec<Line2> = common_tangents(&conics[i], &conics[j])?
            .into_iter()
            .filter(|l| same_side(l, &vi, &vj))
            .collect();
        let l = select_triangle_tangent(&external, &vk)?;
        if !same_side(&l, &vi, &vk) {
            return Err(Error::DegenerateSketch("third vertex beyond tangent"));
        }
        let q = edge_quad(sp, conics, i, j, l)?;
        if cross2(&(vj - vi), &(q.ti - vi)) * cross2(&(vj - vi), &(vk - vi)) >= 0.0 {
            return Err(Error::DegenerateSketch("quadrangle overlaps the triangle"));
        }
        out.push(q);
    }
    Ok(out)
}

/// Builds the boundary sketch of a Line or Triangle splat.
///
/// Vertices that nearly coincide are merged, and a nearly collinear triangle
/// is sketched over its two farthest vertices. Fails with
/// [`Error::DegenerateSketch`] when nothing is left to connect or the
/// tangent construction breaks down.
pub fn resketch(sp: &SplattedPrimitive, cutoff: f64) -> Result<SketchedBoundary> {
    if sp.kind == PrimitiveKind::Ellipse {
        return Err(Error::DegenerateSketch("ellipse has no sketch"));
    }
    let conics = sp
        .vertices
        .iter()
        .map(|v| Conic::from_gaussian(v, &sp.cov, cutoff))
        .collect::<Result<Vec<_>>>()?;
    let eps = MERGE_FRACTION * boundary_radius(cutoff);

    let mut active: Vec<usize> = Vec::with_capacity(3);
    for k in 0..sp.vertices.len() {
        if active.iter().all(|&a| whitened_distance(sp, a, k) >= eps) {
            active.push(k);
        }
    }
    if active.len() == 3 {
        // height over the longest edge, in whitened units
        let pairs = [(0, 1), (0, 2), (1, 2)];
        let (a, b) = pairs
            .into_iter()
            .map(|(a, b)| (active[a], active[b]))
            .max_by(|x, y| whitened_distance(sp, x.0, x.1).total_cmp(&whitened_distance(sp, y.0, y.1)))
            .unwrap();
        let c = active.iter().copied().find(|&k| k != a && k != b).unwrap();
        let l = Line2::through(&sp.vertices[a], &sp.vertices[b]);
        // Mahalanobis distance to the line through a and b
        let n = Vector2::new(l.0.x, l.0.y);
        let height = l.eval(&sp.vertices[c]).abs() / n.dot(&(sp.cov * n)).sqrt();
        if height < eps {
            active = vec![a.min(b), a.max(b)];
        }
    }
    let edges = match active.len() {
        2 => line_edges(sp, &conics, active[0], active[1])?,
        3 => triangle_edges(sp, &conics, [active[0], active[1], active[2]])?,
        _ => return Err(Error::DegenerateSketch("coincident vertices")),
    };
    Ok(SketchedBoundary {
        conics,
        inner: active.len() == 3,
        active,
        edges,
        bbox: sp.bbox,
    })
}

/// Sketch used by the renderer, with the merged fallback for degenerate input.
pub fn sketch_for(sp: &SplattedPrimitive, cutoff: f64) -> Sketch {
    if sp.kind == PrimitiveKind::Ellipse {
        return Sketch::Ellipse;
    }
    match resketch(sp, cutoff) {
        Ok(s) => Sketch::Boundary(s),
        Err(e) => {
            if sp.vertices.windows(2).any(|w| w[0] != w[1]) {
                log::debug!("primitive {}: merged fallback ({e})", sp.index);
            }
            Sketch::Merged
        }
    }
}

fn in_triangle(p: &Vector2<f64>, a: &Vector2<f64>, b: &Vector2<f64>, c: &Vector2<f64>) -> bool {
    let d1 = cross2(&(b - a), &(p - a));
    let d2 = cross2(&(c - b), &(p - b));
    let d3 = cross2(&(a - c), &(p - c));
    (d1 >= 0.0 && d2 >= 0.0 && d3 >= 0.0) || (d1 <= 0.0 && d2 <= 0.0 && d3 <= 0.0)
}

fn in_convex_quad(p: &Vector2<f64>, q: &[Vector2<f64>; 4]) -> bool {
    let mut pos = false;
    let mut neg = false;
    for k in 0..4 {
        let c = cross2(&(q[(k + 1) % 4] - q[k]), &(p - q[k]));
        pos |= c > 0.0;
        neg |= c < 0.0;
    }
    !(pos && neg)
}

/// Region of a pixel position; precedence Inner > Edge > Vertex > Outside.
pub fn classify_region(p: &Vector2<f64>, sp: &SplattedPrimitive, sketch: &SketchedBoundary, cutoff: f64) -> Region {
    let v = &sp.vertices;
    if sketch.inner {
        let [a, b, c] = [sketch.active[0], sketch.active[1], sketch.active[2]];
        if in_triangle(p, &v[a], &v[b], &v[c]) {
            return Region::Inner;
        }
    }
    for (k, e) in sketch.edges.iter().enumerate() {
        if in_convex_quad(p, &e.corners(v)) {
            return Region::Edge { i: e.i, j: e.j, quad: k };
        }
    }
    let mut best = (f64::INFINITY, 0);
    for &j in &sketch.active {
        let d2 = sp.mahalanobis2(p, j);
        if d2 < best.0 {
            best = (d2, j);
        }
    }
    let r = boundary_radius(cutoff);
    if best.0 <= r * r {
        Region::Vertex(best.1)
    } else {
        Region::Outside
    }
}

/// Solves `p = (1-l)(mu_i + t a_i) + l (mu_j + t a_j)` for `(t, l)` in the
/// unit square, with `a_i = t_i - mu_i` and `a_j = t_j - mu_j`. Among valid
/// roots the smaller `t` wins.
pub fn edge_fraction_solve(
    p: &Vector2<f64>,
    mu_i: &Vector2<f64>,
    mu_j: &Vector2<f64>,
    t_i: &Vector2<f64>,
    t_j: &Vector2<f64>,
) -> Option<(f64, f64)> {
    let ai = t_i - mu_i;
    let aj = t_j - mu_j;
    let e = mu_j - mu_i;
    let da = aj - ai;
    let w = p - mu_i;
    let a = cross2(&ai, &da);
    let b = cross2(&ai, &e) - cross2(&w, &da);
    let c = -cross2(&w, &e);
    let mut best: Option<(f64, f64)> = None;
    for t in math::solve_quadratic(a, b, c) {
        if !(-ROOT_PAD..=1.0 + ROOT_PAD).contains(&t) {
            continue;
        }
        let v = e + da * t;
        let vv = v.norm_squared();
        if vv == 0.0 {
            continue;
        }
        let lambda = (w - ai * t).dot(&v) / vv;
        if !(-ROOT_PAD..=1.0 + ROOT_PAD).contains(&lambda) {
            continue;
        }
        if best.is_none_or(|(bt, _)| t < bt) {
            best = Some((t.clamp(0.0, 1.0), lambda.clamp(0.0, 1.0)));
        }
    }
    best
}

/// Truncated Gaussian fading around vertex `j`.
pub fn vertex_fading(p: &Vector2<f64>, sp: &SplattedPrimitive, j: usize, cutoff: f64) -> f64 {
    let g = math::exp(-0.5 * sp.mahalanobis2(p, j));
    if g < cutoff {
        0.0
    } else {
        sp.opacity * g
    }
}

/// Fading `gamma` of a splat at pixel position `p`.
pub fn fading(p: &Vector2<f64>, sp: &SplattedPrimitive, sketch: &Sketch, cutoff: f64) -> f64 {
    match sketch {
        Sketch::Ellipse => vertex_fading(p, sp, 0, cutoff),
        Sketch::Merged => (0..sp.vertices.len())
            .map(|j| vertex_fading(p, sp, j, cutoff))
            .fold(0.0, f64::max),
        Sketch::Boundary(s) => fading_in_region(p, sp, s, classify_region(p, sp, s, cutoff), cutoff),
    }
}

/// Fading for an already classified position.
pub fn fading_in_region(p: &Vector2<f64>, sp: &SplattedPrimitive, s: &SketchedBoundary, region: Region, cutoff: f64) -> f64 {
    match region {
        Region::Inner => sp.opacity,
        Region::Outside => 0.0,
        Region::Vertex(j) => vertex_fading(p, sp, j, cutoff),
        Region::Edge { i, j, quad } => {
            let e = &s.edges[quad];
            let (vi, vj) = (sp.vertices[i], sp.vertices[j]);
            match edge_fraction_solve(p, &vi, &vj, &e.ti, &e.tj) {
                Some((t, _)) => sp.opacity * math::exp(t * t * math::ln(cutoff)),
                None => {
                    log::debug!("primitive {}: edge solve found no root", sp.index);
                    let k = if sp.mahalanobis2(p, i) <= sp.mahalanobis2(p, j) { i } else { j };
                    vertex_fading(p, sp, k, cutoff)
                }
            }
        }
    }
}
