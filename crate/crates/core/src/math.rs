//! Scalar helpers. Transcendentals go through `libm` so that rendered and
//! serialized outputs do not depend on the platform's C math library.

use nalgebra::{Matrix2, Vector2};

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline]
pub fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[inline]
pub fn acos(x: f64) -> f64 {
    libm::acos(x)
}

#[inline]
pub fn cbrt(x: f64) -> f64 {
    libm::cbrt(x)
}

#[inline]
pub fn log10(x: f64) -> f64 {
    libm::log10(x)
}

#[inline]
pub fn atan2(y: f64, x: f64) -> f64 {
    libm::atan2(y, x)
}

#[inline]
pub fn pow(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

/// Real roots of `a t^2 + b t + c = 0`, computed with the cancellation-free
/// form. Handles `a == 0`. Returned in ascending order.
pub fn solve_quadratic(a: f64, b: f64, c: f64) -> Vec<f64> {
    if a == 0.0 {
        if b == 0.0 {
            return Vec::new();
        }
        return vec![-c / b];
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Vec::new();
    }
    let sq = disc.sqrt();
    let q = -0.5 * (b + sq.copysign(b));
    let mut roots = Vec::with_capacity(2);
    if q != 0.0 {
        roots.push(q / a);
        roots.push(c / q);
    } else {
        // b == 0 and disc == 0 -> c == 0
        roots.push(0.0);
    }
    roots.sort_by(|x, y| x.total_cmp(y));
    roots
}

/// Real roots of `c3 x^3 + c2 x^2 + c1 x + c0`.
///
/// Closed form (Cardano / trigonometric) followed by Newton polishing on the
/// original polynomial. A near-double root that the discriminant sign pushes
/// into the complex plane is still reported, so callers see every root that
/// is real up to rounding.
pub fn solve_cubic(c3: f64, c2: f64, c1: f64, c0: f64) -> Vec<f64> {
    let scale = c3.abs().max(c2.abs()).max(c1.abs()).max(c0.abs());
    if scale == 0.0 {
        return Vec::new();
    }
    let (c3, c2, c1, c0) = (c3 / scale, c2 / scale, c1 / scale, c0 / scale);
    if c3.abs() <= 1e-14 {
        return solve_quadratic(c2, c1, c0);
    }
    let b = c2 / c3;
    let c = c1 / c3;
    let d = c0 / c3;
    let shift = b / 3.0;
    let p = c - b * b / 3.0;
    let q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;

    let mut roots = Vec::with_capacity(3);
    let disc = q * q / 4.0 + p * p * p / 27.0;
    if p == 0.0 && q == 0.0 {
        roots.push(-shift);
    } else if disc < 0.0 {
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let theta = acos(arg) / 3.0;
        for k in 0..3 {
            let x = m * cos(theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0);
            roots.push(x - shift);
        }
    } else {
        let sq = disc.sqrt();
        let u = cbrt(-q / 2.0 + sq);
        let v = cbrt(-q / 2.0 - sq);
        roots.push(u + v - shift);
        let imag = 0.5 * 3f64.sqrt() * (u - v).abs();
        if imag <= 1e-6 * (u.abs() + v.abs()) {
            roots.push(-0.5 * (u + v) - shift);
        }
    }

    let eval = |x: f64| ((c3 * x + c2) * x + c1) * x + c0;
    let deriv = |x: f64| (3.0 * c3 * x + 2.0 * c2) * x + c1;
    for r in roots.iter_mut() {
        for _ in 0..4 {
            let f = eval(*r);
            let df = deriv(*r);
            if df == 0.0 || f == 0.0 {
                break;
            }
            let next = *r - f / df;
            if eval(next).abs() < f.abs() {
                *r = next;
            } else {
                break;
            }
        }
    }
    roots.sort_by(|x, y| x.total_cmp(y));
    roots
}

#[inline]
pub fn cross2(a: &Vector2<f64>, b: &Vector2<f64>) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Inverse of a symmetric 2x2 matrix, or `None` when not positive definite
/// within the given relative eigenvalue floor.
pub fn spd_inverse(m: &Matrix2<f64>, rel_floor: f64) -> Option<Matrix2<f64>> {
    let a = m[(0, 0)];
    let b = 0.5 * (m[(0, 1)] + m[(1, 0)]);
    let c = m[(1, 1)];
    if !(a.is_finite() && b.is_finite() && c.is_finite()) {
        return None;
    }
    let tr = a + c;
    let det = a * c - b * b;
    let half = 0.5 * tr;
    let h = 0.5 * (a - c);
    let spread = (h * h + b * b).sqrt();
    let lmax = half + spread;
    let lmin = det / lmax;
    if !(lmax > 0.0) || !(lmin > rel_floor * lmax) {
        return None;
    }
    Some(Matrix2::new(c, -b, -b, a) / det)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_roots() {
        assert_eq!(solve_quadratic(1.0, -3.0, 2.0), vec![1.0, 2.0]);
        assert!(solve_quadratic(1.0, 0.0, 1.0).is_empty());
        assert_eq!(solve_quadratic(0.0, 2.0, -4.0), vec![2.0]);
        let r = solve_quadratic(1.0, -1e8, 1.0);
        assert!((r[0] - 1e-8).abs() < 1e-20);
    }

    #[test]
    fn cubic_three_real() {
        let r = solve_cubic(1.0, -6.0, 11.0, -6.0);
        assert_eq!(r.len(), 3);
        for (x, e) in r.iter().zip([1.0, 2.0, 3.0]) {
            assert!((x - e).abs() < 1e-12);
        }
    }

    #[test]
    fn cubic_one_real() {
        let r = solve_cubic(2.0, 0.0, 2.0, -4.0);
        assert_eq!(r.len(), 1);
        assert!((r[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cubic_double_root_is_reported() {
        // (x-1)^2 (x-2)
        let r = solve_cubic(1.0, -4.0, 5.0, -2.0);
        assert!(r.iter().any(|x| (x - 1.0).abs() < 1e-6));
        assert!(r.iter().any(|x| (x - 2.0).abs() < 1e-12));
    }

    #[test]
    fn cubic_degenerates_to_quadratic() {
        let r = solve_cubic(0.0, 1.0, 0.0, -4.0);
        assert_eq!(r, vec![-2.0, 2.0]);
    }

    #[test]
    fn spd_inverse_rejects_indefinite() {
        assert!(spd_inverse(&Matrix2::new(1.0, 2.0, 2.0, 1.0), 1e-12).is_none());
        let inv = spd_inverse(&Matrix2::new(4.0, 0.0, 0.0, 1.0), 1e-12).unwrap();
        assert!((inv[(0, 0)] - 0.25).abs() < 1e-15);
    }
}
