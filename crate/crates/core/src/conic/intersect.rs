use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};

use super::{adjugate, Conic, HomPoint, Line2};
use crate::error::{Error, Result};
use crate::math;

const DEDUP_RADIUS: f64 = 1e-7;
const ACCEPT_RESIDUAL: f64 = 1e-8;

/// Split a degenerate conic into its (at most two) real lines.
///
/// A rank-2 conic `g h^T + h g^T` has adjugate `-p p^T` with `p = g x h`;
/// adding the cross-product matrix of `p` leaves a rank-1 matrix whose rows
/// and columns are the two lines. Complex line pairs yield no lines.
pub fn split_degenerate(d: &Conic) -> Vec<Line2> {
    let d = d.normalized();
    let m = d.matrix();
    let b = adjugate(m);
    let i = (0..3).max_by(|&x, &y| b[(x, x)].abs().total_cmp(&b[(y, y)].abs())).unwrap();
    let bii = b[(i, i)];
    if bii.abs() <= 1e-12 {
        // double line (or nearly so): the dominant column.
        let k = (0..3).max_by(|&x, &y| m[(x, x)].abs().total_cmp(&m[(y, y)].abs())).unwrap();
        let dkk = m[(k, k)];
        if dkk == 0.0 {
            return Vec::new();
        }
        let l = m.column(k) / dkk.abs().sqrt();
        return vec![Line2(l.into_owned())];
    }
    if bii > 0.0 {
        return Vec::new();
    }
    let beta = (-bii).sqrt();
    let p = b.column(i) / beta;
    let mp = Matrix3::new(0.0, p.z, -p.y, -p.z, 0.0, p.x, p.y, -p.x, 0.0);
    let c = m + mp;
    let mut best = (0, 0);
    for r in 0..3 {
        for col in 0..3 {
            if c[(r, col)].abs() > c[best].abs() {
                best = (r, col);
            }
        }
    }
    let g = c.row(best.0).transpose();
    let h = c.column(best.1).into_owned();
    vec![Line2(g), Line2(h)]
}

/// Two independent homogeneous points spanning a line.
fn line_basis(l: &Line2) -> (Vector3<f64>, Vector3<f64>) {
    let n = l.0 / l.0.norm();
    let k = (0..3).min_by(|&x, &y| n[x].abs().total_cmp(&n[y].abs())).unwrap();
    let mut e = Vector3::zeros();
    e[k] = 1.0;
    let a = n.cross(&e).normalize();
    let b = n.cross(&a).normalize();
    (a, b)
}

/// Real points where a line meets a conic.
pub(super) fn intersect_line(l: &Line2, c: &Conic) -> Vec<HomPoint> {
    let (a, b) = line_basis(l);
    let m = c.normalized();
    let qa = m.eval(&a);
    let qb = (a.transpose() * m.matrix() * b)[(0, 0)];
    let qc = m.eval(&b);
    let mut disc = qb * qb - qa * qc;
    let mag = qb * qb + (qa * qc).abs();
    if disc < 0.0 {
        if disc >= -1e-13 * mag.max(1e-300) {
            disc = 0.0;
        } else {
            return Vec::new();
        }
    }
    let q = -(qb + disc.sqrt().copysign(qb));
    let mut out = Vec::with_capacity(2);
    if q != 0.0 {
        out.push(HomPoint(a * q + b * qa));
        out.push(HomPoint(a * qc + b * q));
    } else if qa == 0.0 && qc == 0.0 {
        // the line lies on the conic; no isolated intersections
    } else if qa == 0.0 {
        out.push(HomPoint(a));
    } else {
        out.push(HomPoint(b));
    }
    out.into_iter().filter(|p| p.0.amax() > 0.0).collect()
}

/// Newton refinement of a common point of two conics, in the affine chart
/// that fixes the largest coordinate.
fn polish(p: &HomPoint, c1: &Conic, c2: &Conic, steps: usize) -> HomPoint {
    let residual = |x: &Vector3<f64>| c1.eval(x).abs().max(c2.eval(x).abs());
    let mut x = p.normalized().0;
    let mut r = residual(&x);
    for it in 0..steps {
        if r == 0.0 {
            break;
        }
        let k = x.iamax();
        let (i, j) = match k {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        let g1 = c1.matrix() * x * 2.0;
        let g2 = c2.matrix() * x * 2.0;
        let jac = Matrix2::new(g1[i], g1[j], g2[i], g2[j]);
        let Some(inv) = jac.try_inverse() else { break };
        let step = inv * Vector2::new(c1.eval(&x), c2.eval(&x));
        let mut next = x;
        next[i] -= step.x;
        next[j] -= step.y;
        let next = HomPoint(next).normalized().0;
        let rn = residual(&next);
        if rn < r || it < 2 && rn <= r * 4.0 {
            x = next;
            r = rn;
        } else {
            break;
        }
    }
    HomPoint(x)
}

/// All real intersection points of two conics via the degenerate member of
/// their pencil.
///
/// Every real root `l` of `det(M1 + l M2) = 0` gives a degenerate conic
/// through all common points; its real lines are cut with a non-degenerate
/// input conic. Candidates are Newton-polished, filtered by residual and
/// deduplicated. Points are returned normalized (largest entry `+1`).
pub fn intersect_conics(c1: &Conic, c2: &Conic) -> Result<Vec<HomPoint>> {
    let a = c1.normalized();
    let b = c2.normalized();
    if a.proportional(&b, 1e-9) {
        return Err(Error::InfiniteIntersection);
    }
    let (ma, mb) = (*a.matrix(), *b.matrix());
    let det_a = ma.determinant();
    let det_b = mb.determinant();
    let adj_a = adjugate(&ma);
    let adj_b = adjugate(&mb);
    let k1 = (adj_a * mb).trace();
    let k2 = (ma * adj_b).trace();

    let mut members: Vec<Conic> = math::solve_cubic(det_b, k2, k1, det_a)
        .into_iter()
        .map(|l| Conic::from_matrix(ma + mb * l))
        .collect();
    if det_b.abs() <= 1e-12 {
        members.push(b);
    }

    // cut with a non-degenerate input
    let probe = if det_a.abs() > 1e-12 || det_b.abs() <= det_a.abs() { a } else { b };

    let mut candidates = Vec::new();
    for d in &members {
        for line in split_degenerate(d) {
            candidates.extend(intersect_line(&line, &probe));
        }
    }

    let mut out: Vec<HomPoint> = Vec::new();
    for cand in candidates {
        let p = polish(&cand, &a, &b, 8);
        let x = p.0;
        if a.eval(&x).abs() > ACCEPT_RESIDUAL || b.eval(&x).abs() > ACCEPT_RESIDUAL {
            continue;
        }
        if out.iter().all(|q| q.distance(&p) > DEDUP_RADIUS) {
            out.push(p);
        }
    }
    out.sort_by(|p, q| {
        let (p, q) = (p.0, q.0);
        p.x.total_cmp(&q.x).then(p.y.total_cmp(&q.y)).then(p.z.total_cmp(&q.z))
    });
    Ok(out)
}
