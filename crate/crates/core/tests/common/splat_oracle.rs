//! Whitened-space reference for region classification and fading.
//!
//! With a shared covariance every boundary ellipse is a circle of radius
//! `r = sqrt(-2 ln cutoff)` after whitening, so the sketched footprint is
//! the set of points within distance `r` of the (whitened) triangle or
//! segment, and the fading is the Gaussian of that distance.

use nalgebra::{Matrix2, Vector2};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OracleRegion {
    Inner,
    Edge(usize, usize),
    Vertex(usize),
    Outside,
}

pub struct Whitened {
    pub l: Matrix2<f64>,
    pub verts: Vec<Vector2<f64>>,
    pub r: f64,
}

fn cross(a: &Vector2<f64>, b: &Vector2<f64>) -> f64 {
    a.x * b.y - a.y * b.x
}

impl Whitened {
    pub fn new(verts: &[Vector2<f64>], cov: &Matrix2<f64>, cutoff: f64) -> Self {
        // L with L^T L = cov^-1
        let inv = cov.try_inverse().unwrap();
        let c = inv.cholesky().unwrap().l();
        let l = c.transpose();
        Whitened {
            verts: verts.iter().map(|v| l * v).collect(),
            l,
            r: (-2.0 * cutoff.ln()).sqrt(),
        }
    }

    fn segment(&self, p: &Vector2<f64>, i: usize, j: usize) -> (f64, f64) {
        let (a, b) = (self.verts[i], self.verts[j]);
        let e = b - a;
        let s = (p - a).dot(&e) / e.norm_squared();
        let q = a + e * s.clamp(0.0, 1.0);
        (s, (p - q).norm())
    }

    fn pairs(&self) -> Vec<(usize, usize)> {
        if self.verts.len() == 3 {
            vec![(0, 1), (0, 2), (1, 2)]
        } else {
            vec![(0, 1)]
        }
    }

    fn inside_triangle(&self, p: &Vector2<f64>) -> bool {
        if self.verts.len() != 3 {
            return false;
        }
        let v = &self.verts;
        let d = [
            cross(&(v[1] - v[0]), &(p - v[0])),
            cross(&(v[2] - v[1]), &(p - v[1])),
            cross(&(v[0] - v[2]), &(p - v[2])),
        ];
        d.iter().all(|&x| x >= 0.0) || d.iter().all(|&x| x <= 0.0)
    }

    /// Whether `pw` lies on the far side of edge `(i, j)` from the third vertex.
    fn outward(&self, pw: &Vector2<f64>, i: usize, j: usize) -> bool {
        if self.verts.len() != 3 {
            return true;
        }
        let k = 3 - i - j;
        let (a, e) = (self.verts[i], self.verts[j] - self.verts[i]);
        cross(&e, &(pw - a)) * cross(&e, &(self.verts[k] - a)) <= 0.0
    }

    /// Whitened distance from pixel position `p` to the primitive's core.
    pub fn distance(&self, p: &Vector2<f64>) -> f64 {
        let pw = self.l * p;
        if self.inside_triangle(&pw) {
            return 0.0;
        }
        self.pairs()
            .into_iter()
            .map(|(i, j)| self.segment(&pw, i, j).1)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn gamma(&self, p: &Vector2<f64>, alpha: f64, cutoff: f64) -> f64 {
        let d = self.distance(p);
        let g = (-0.5 * d * d).exp();
        if g < cutoff {
            0.0
        } else {
            alpha * g
        }
    }

    pub fn region(&self, p: &Vector2<f64>) -> OracleRegion {
        let pw = self.l * p;
        if self.inside_triangle(&pw) {
            return OracleRegion::Inner;
        }
        for (i, j) in self.pairs() {
            let (s, d) = self.segment(&pw, i, j);
            if (0.0..=1.0).contains(&s) && d <= self.r && self.outward(&pw, i, j) {
                return OracleRegion::Edge(i, j);
            }
        }
        let (j, d) = self
            .verts
            .iter()
            .enumerate()
            .map(|(j, v)| (j, (pw - v).norm()))
            .fold((0, f64::INFINITY), |b, x| if x.1 < b.1 { x } else { b });
        if d <= self.r {
            OracleRegion::Vertex(j)
        } else {
            OracleRegion::Outside
        }
    }

    /// Distance of `p` to the nearest region boundary, in whitened units.
    pub fn boundary_margin(&self, p: &Vector2<f64>) -> f64 {
        let pw = self.l * p;
        let mut m = f64::INFINITY;
        for (i, j) in self.pairs() {
            let (a, b) = (self.verts[i], self.verts[j]);
            let e = (b - a).normalize();
            let n = Vector2::new(-e.y, e.x);
            let h = (pw - a).dot(&n);
            let s = (pw - a).dot(&e);
            let len = (b - a).norm();
            // edge line, the two perpendicular sides and the far side
            m = m.min(h.abs()).min(s.abs()).min((s - len).abs()).min((h.abs() - self.r).abs());
        }
        for v in &self.verts {
            m = m.min(((pw - v).norm() - self.r).abs());
        }
        m
    }
}
