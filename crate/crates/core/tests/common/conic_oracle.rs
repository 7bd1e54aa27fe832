//! Brute-force oracles for conic intersection and common tangents, using
//! only the parametric form of an ellipse.

use nalgebra::{Matrix2, Vector2};
use rand::Rng;

use mixsplat::conic::{Conic, Line2};

/// `{ c + R diag(a, b) (cos t, sin t) }`.
#[derive(Clone, Copy, Debug)]
pub struct Ellipse {
    pub center: Vector2<f64>,
    pub a: f64,
    pub b: f64,
    pub angle: f64,
}

impl Ellipse {
    pub fn axes(&self) -> (Vector2<f64>, Vector2<f64>) {
        let (s, c) = self.angle.sin_cos();
        (Vector2::new(c, s) * self.a, Vector2::new(-s, c) * self.b)
    }

    pub fn point(&self, t: f64) -> Vector2<f64> {
        let (u, v) = self.axes();
        self.center + u * t.cos() + v * t.sin()
    }

    /// Covariance whose one-sigma contour is this ellipse.
    pub fn covariance(&self) -> Matrix2<f64> {
        let (u, v) = self.axes();
        u * u.transpose() + v * v.transpose()
    }

    pub fn conic(&self) -> Conic {
        Conic::from_gaussian(&self.center, &self.covariance(), (-0.5f64).exp()).unwrap()
    }

    /// Implicit function, negative inside: `|x|_{S^-1}^2 - 1`.
    pub fn implicit(&self, p: &Vector2<f64>) -> f64 {
        let d = p - self.center;
        let s = self.covariance().try_inverse().unwrap();
        d.dot(&(s * d)) - 1.0
    }

    /// Support function `max_{x in E} n.x`.
    pub fn support(&self, n: &Vector2<f64>) -> f64 {
        let (u, v) = self.axes();
        n.dot(&self.center) + (n.dot(&u).powi(2) + n.dot(&v).powi(2)).sqrt()
    }
}

pub fn random_ellipse(rng: &mut impl Rng, span: f64, min_axis: f64, max_axis: f64) -> Ellipse {
    Ellipse {
        center: Vector2::new(rng.random_range(-span..span), rng.random_range(-span..span)),
        a: rng.random_range(min_axis..max_axis),
        b: rng.random_range(min_axis..max_axis),
        angle: rng.random_range(0.0..std::f64::consts::PI),
    }
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Sign-change roots of a periodic function on `[0, 2 pi)`.
fn periodic_roots(f: impl Fn(f64) -> f64, samples: usize) -> Vec<f64> {
    let tau = std::f64::consts::TAU;
    let mut roots = Vec::new();
    let mut prev = f(0.0);
    for i in 1..=samples {
        let t = tau * i as f64 / samples as f64;
        let cur = f(t);
        if (prev < 0.0) != (cur < 0.0) {
            roots.push(bisect(&f, tau * (i - 1) as f64 / samples as f64, t));
        }
        prev = cur;
    }
    roots
}

/// Crossings of `e1`'s boundary with `e2`, by dense angular sampling.
pub fn intersections(e1: &Ellipse, e2: &Ellipse, samples: usize) -> Vec<Vector2<f64>> {
    periodic_roots(|t| e2.implicit(&e1.point(t)), samples)
        .into_iter()
        .map(|t| e1.point(t))
        .collect()
}

/// Neither boundary crosses the other and neither contains the other's center.
pub fn disjoint(e1: &Ellipse, e2: &Ellipse) -> bool {
    intersections(e1, e2, 4096).is_empty()
        && e1.implicit(&e2.center) > 0.0
        && e2.implicit(&e1.center) > 0.0
}

/// Common tangents by sweeping line directions. A line `n.x = h` touches an
/// ellipse iff `h` equals its support value in direction `n` or `-n`; the
/// outer tangents are zeros of `h1(n) - h2(n)`, the inner ones of
/// `h1(n) + h2(-n)`. Returns unit-normal lines.
pub fn common_tangents(e1: &Ellipse, e2: &Ellipse, samples: usize) -> Vec<Line2> {
    let dir = |t: f64| Vector2::new(t.cos(), t.sin());
    let outer = |t: f64| e1.support(&dir(t)) - e2.support(&dir(t));
    let inner = |t: f64| e1.support(&dir(t)) + e2.support(&-dir(t));
    let mut lines = Vec::new();
    for t in periodic_roots(outer, samples / 2) {
        let n = dir(t);
        lines.push(Line2::new(n.x, n.y, -e1.support(&n)).normalized());
    }
    for t in periodic_roots(inner, samples / 2) {
        let n = dir(t);
        lines.push(Line2::new(n.x, n.y, -e1.support(&n)).normalized());
    }
    lines
}
