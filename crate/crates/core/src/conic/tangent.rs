use nalgebra::{Matrix2, Matrix3, Vector2};

use super::{intersect_conics, Conic, Line2};
use crate::error::{Error, Result};

const TANGENT_ACCEPT: f64 = 1e-7;
const TANGENCY_POINT_TOL: f64 = 1e-6;

/// Restriction of a conic to a line as `A t^2 + 2 B t + C`, with the line
/// parametrized from the foot of the perpendicular through `origin`.
fn restrict(line: &Line2, conic: &Conic, origin: &Vector2<f64>) -> (Vector2<f64>, Vector2<f64>, f64, f64, f64) {
    let l = line.normalized().0;
    let n = Vector2::new(l.x, l.y);
    let d = Vector2::new(-n.y, n.x);
    let q = origin - n * (n.dot(origin) + l.z);
    let quad = conic.quadratic_part();
    let lin = conic.linear_part();
    let a = d.dot(&(quad * d));
    let b = d.dot(&(quad * q + lin));
    let c = conic.eval_affine(&q);
    (q, d, a, b, c)
}

fn reference_point(conic: &Conic) -> Vector2<f64> {
    conic.center().unwrap_or_else(Vector2::zeros)
}

/// Scale-free discriminant of the conic restricted to the line:
/// `|B^2 - A C| / (|A| |F(center)|)`. Zero for a tangent line; roughly twice
/// the relative penetration (or gap) for nearby secants (or misses).
pub fn relative_discriminant(line: &Line2, conic: &Conic) -> f64 {
    if !line.is_finite_line() {
        return f64::INFINITY;
    }
    let conic = conic.normalized();
    let origin = reference_point(&conic);
    let (_, _, a, b, c) = restrict(line, &conic, &origin);
    let fc = conic.center_value().map(f64::abs).unwrap_or(1.0);
    let denom = a.abs() * fc;
    if denom == 0.0 {
        return f64::INFINITY;
    }
    (b * b - a * c).abs() / denom
}

/// Contact point of a tangent line, as the double root of the restriction.
pub fn tangency_point(line: &Line2, conic: &Conic) -> Result<Vector2<f64>> {
    let rel = relative_discriminant(line, conic);
    if !(rel <= TANGENCY_POINT_TOL) {
        return Err(Error::NotTangent(rel));
    }
    let conic = conic.normalized();
    let origin = reference_point(&conic);
    let (q, d, a, b, _) = restrict(line, &conic, &origin);
    Ok(q + d * (-b / a))
}

/// Affine map whitening the averaged shape of two ellipses, centered between
/// them. Returns `(T, T^-1)` for the point map `x' = T x`.
fn conditioning(e1: &Conic, e2: &Conic) -> Option<(Matrix3<f64>, Matrix3<f64>)> {
    let shape = |e: &Conic| -> Option<(Matrix2<f64>, Vector2<f64>)> {
        let c = e.center()?;
        let fc = e.center_value()?;
        Some((e.quadratic_part() / (-fc), c))
    };
    let (a1, c1) = shape(e1)?;
    let (a2, c2) = shape(e2)?;
    let avg = (a1 + a2) * 0.5;
    let chol = avg.cholesky()?;
    let lt = chol.l().transpose();
    let mid = (c1 + c2) * 0.5;
    let half = (lt * (c2 - c1)).norm() * 0.5;
    let s = half.max(1.0);
    let lin = lt / s;
    let shift = -(lin * mid);
    let t = Matrix3::new(
        lin[(0, 0)],
        lin[(0, 1)],
        shift.x,
        lin[(1, 0)],
        lin[(1, 1)],
        shift.y,
        0.0,
        0.0,
        1.0,
    );
    let t_inv = t.try_inverse()?;
    Some((t, t_inv))
}

/// Lines tangent to both ellipses, as intersections of their duals.
///
/// The computation runs in a whitened frame and maps lines back. Returned
/// lines are in unit-normal form, sorted by coefficients. Proportional inputs
/// give [`Error::InfiniteIntersection`].
pub fn common_tangents(e1: &Conic, e2: &Conic) -> Result<Vec<Line2>> {
    if e1.proportional(e2, 1e-9) {
        return Err(Error::InfiniteIntersection);
    }
    let (t, t_inv) = conditioning(e1, e2).unwrap_or((Matrix3::identity(), Matrix3::identity()));
    let w1 = e1.transformed(&t_inv).normalized();
    let w2 = e2.transformed(&t_inv).normalized();
    let d1 = w1.dual()?;
    let d2 = w2.dual()?;
    let points = intersect_conics(&d1, &d2)?;
    let mut lines: Vec<Line2> = Vec::with_capacity(points.len());
    for p in points {
        let l = Line2(t.transpose() * p.0);
        if !l.is_finite_line() {
            continue;
        }
        let l = l.normalized();
        let w = Line2(p.0);
        if relative_discriminant(&w, &w1) > TANGENT_ACCEPT || relative_discriminant(&w, &w2) > TANGENT_ACCEPT {
            continue;
        }
        if lines.iter().all(|m| m.coefficient_distance(&l) > 1e-9) {
            lines.push(l);
        }
    }
    lines.sort_by(|a, b| lex(&a.0, &b.0));
    Ok(lines)
}

fn lex(a: &nalgebra::Vector3<f64>, b: &nalgebra::Vector3<f64>) -> std::cmp::Ordering {
    a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)).then(a.z.total_cmp(&b.z))
}

/// Candidate farthest from the third vertex.
pub fn select_triangle_tangent(candidates: &[Line2], third_vertex: &Vector2<f64>) -> Result<Line2> {
    let mut best: Option<(f64, Line2)> = None;
    for c in candidates {
        if !c.is_finite_line() {
            continue;
        }
        let l = c.normalized();
        let dist = l.distance(third_vertex);
        best = match best {
            None => Some((dist, l)),
            Some((bd, bl)) => {
                if dist > bd + 1e-9 || (dist >= bd - 1e-9 && lex(&l.0, &bl.0).is_lt()) {
                    Some((dist.max(bd), l))
                } else {
                    Some((bd, bl))
                }
            }
        };
    }
    best.map(|(_, l)| l)
        .ok_or(Error::DegenerateSketch("no tangent candidates"))
}

/// The two external tangents: lines leaving both ellipse centers on the
/// same side.
pub fn select_line_tangents(candidates: &[Line2], e1: &Conic, e2: &Conic) -> Result<(Line2, Line2)> {
    let (Some(c1), Some(c2)) = (e1.center(), e2.center()) else {
        return Err(Error::DegenerateSketch("ellipse without center"));
    };
    let mut external: Vec<Line2> = candidates
        .iter()
        .filter(|l| l.is_finite_line())
        .map(|l| l.normalized())
        .filter(|l| l.eval(&c1) * l.eval(&c2) > 0.0)
        .collect();
    external.sort_by(|a, b| lex(&a.0, &b.0));
    external.dedup_by(|a, b| a.coefficient_distance(b) <= 1e-9);
    match external.len() {
        0 | 1 => Err(Error::DegenerateSketch("fewer than two external tangents")),
        _ => Ok((external[0], external[1])),
    }
}
