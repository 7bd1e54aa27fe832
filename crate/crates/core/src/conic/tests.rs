use nalgebra::{Matrix2, Rotation2, Vector2, Vector3};
use proptest::prelude::*;

use super::*;
use crate::math;

fn gauss(p: &Vector2<f64>, mu: &Vector2<f64>, cov: &Matrix2<f64>) -> f64 {
    let d = p - mu;
    math::exp(-0.5 * d.dot(&(cov.try_inverse().unwrap() * d)))
}

fn ellipse(center: Vector2<f64>, r1: f64, r2: f64, angle: f64) -> Conic {
    let rot = Rotation2::new(angle).into_inner();
    let cov = rot * Matrix2::new(r1 * r1, 0.0, 0.0, r2 * r2) * rot.transpose();
    Conic::from_gaussian(&center, &cov, math::exp(-0.5)).unwrap()
}

fn assert_tangent_to(l: &Line2, c: &Conic) {
    let rd = relative_discriminant(l, c);
    assert!(rd <= 1e-7, "rel. discriminant {rd:e}");
}

#[test]
fn gaussian_level_sets() {
    let r = (2.0 * 255f64.ln()).sqrt();
    let c = Conic::from_gaussian(&Vector2::zeros(), &Matrix2::identity(), 1.0 / 255.0).unwrap();
    assert!(c.normalized().eval_affine(&Vector2::new(3.329, 0.0)).abs() < 1e-3);
    assert!(c.eval_affine(&Vector2::new(r, 0.0)).abs() < 1e-12);
    assert!(c.is_ellipse());

    let unit = Conic::from_gaussian(&Vector2::zeros(), &Matrix2::identity(), math::exp(-0.5)).unwrap();
    assert!(unit.proportional(&Conic::circle(Vector2::zeros(), 1.0), 1e-15));

    let mu = Vector2::new(2.0, -1.0);
    let cov = Matrix2::new(4.0, 0.0, 0.0, 1.0);
    let c = Conic::from_gaussian(&mu, &cov, 1.0 / 255.0).unwrap();
    let k = (2.0 * 255f64.ln()).sqrt();
    for i in 0..100 {
        let t = i as f64 / 100.0 * std::f64::consts::TAU;
        let p = mu + Vector2::new(2.0 * k * t.cos(), k * t.sin());
        assert!((gauss(&p, &mu, &cov) - 1.0 / 255.0).abs() < 1e-9);
        assert!(c.eval_affine(&p).abs() < 1e-9);
    }

    let bad = Matrix2::new(1.0, 1.0, 1.0, 1.0);
    assert!(matches!(
        Conic::from_gaussian(&mu, &bad, 0.5),
        Err(Error::DegenerateCovariance)
    ));
}

#[test]
fn dual_examples() {
    let unit = Conic::circle(Vector2::zeros(), 1.0);
    assert!(unit.dual().unwrap().proportional(&unit, 1e-15));

    let shifted = Conic::circle(Vector2::new(4.0, 0.0), 1.0);
    let d = shifted.dual().unwrap();
    assert!(d.eval(&Vector3::new(0.0, -1.0, 1.0)).abs() < 1e-12);
    assert!((Line2::new(0.0, -1.0, 1.0).distance(&Vector2::new(4.0, 0.0)) - 1.0).abs() < 1e-15);

    let degenerate = Conic::from_coefficients(1.0, 0.0, -1.0, 0.0, 0.0, 0.0);
    assert!(matches!(degenerate.dual(), Err(Error::SingularConic)));
}

#[test]
fn dual_matches_expanded_coefficients() {
    let (a, b, c, d, e, f) = (1.3, -0.4, 0.7, 0.9, -1.1, -2.0);
    let got = Conic::from_coefficients(a, b, c, d, e, f).dual().unwrap();
    let want = Conic::from_coefficients(
        c * f - 0.25 * e * e,
        0.5 * d * e - b * f,
        a * f - 0.25 * d * d,
        0.5 * b * e - c * d,
        0.5 * b * d - a * e,
        a * c - 0.25 * b * b,
    );
    assert!(got.proportional(&want, 1e-14));
}

#[test]
fn split_line_pair() {
    // (x - y)(x + 2y - 3) = x^2 + xy - 2y^2 - 3x + 3y
    let pair = Conic::from_coefficients(1.0, 1.0, -2.0, -3.0, 3.0, 0.0);
    let lines = split_degenerate(&pair);
    assert_eq!(lines.len(), 2);
    let want = [Line2::new(1.0, -1.0, 0.0), Line2::new(1.0, 2.0, -3.0)];
    for w in want {
        assert!(lines.iter().any(|l| l.coefficient_distance(&w) < 1e-12), "{lines:?}");
    }
    // x^2 + y^2 = 0 is a complex pair
    assert!(split_degenerate(&Conic::from_coefficients(1.0, 0.0, 1.0, 0.0, 0.0, 0.0)).is_empty());
}

#[test]
fn circle_intersections() {
    let a = Conic::circle(Vector2::zeros(), 1.0);
    let b = Conic::circle(Vector2::new(1.0, 0.0), 1.0);
    let pts = intersect_conics(&a, &b).unwrap();
    assert_eq!(pts.len(), 2);
    let h = 3f64.sqrt() / 2.0;
    for want in [Vector2::new(0.5, h), Vector2::new(0.5, -h)] {
        assert!(pts.iter().any(|p| (p.to_affine().unwrap() - want).norm() < 1e-12));
    }
    let far = Conic::circle(Vector2::new(4.0, 0.0), 1.0);
    let pts = intersect_conics(&a, &far).unwrap();
    assert!(pts.iter().all(|p| p.to_affine().is_none()), "{pts:?}");
    assert!(matches!(
        intersect_conics(&a, &a.scaled(-3.0)),
        Err(Error::InfiniteIntersection)
    ));
}

#[test]
fn tangent_circle_intersection_is_single_point() {
    let a = Conic::circle(Vector2::zeros(), 1.0);
    let b = Conic::circle(Vector2::new(2.0, 0.0), 1.0);
    let pts: Vec<_> = intersect_conics(&a, &b)
        .unwrap()
        .into_iter()
        .filter_map(|p| p.to_affine())
        .collect();
    assert_eq!(pts.len(), 1, "{pts:?}");
    assert!((pts[0] - Vector2::new(1.0, 0.0)).norm() < 1e-6);
}

#[test]
fn common_tangents_of_two_unit_circles() {
    let a = Conic::circle(Vector2::zeros(), 1.0);
    let b = Conic::circle(Vector2::new(4.0, 0.0), 1.0);
    let lines = common_tangents(&a, &b).unwrap();
    assert_eq!(lines.len(), 4, "{lines:?}");
    for l in &lines {
        assert!((l.distance(&Vector2::zeros()) - 1.0).abs() < 1e-9);
        assert!((l.distance(&Vector2::new(4.0, 0.0)) - 1.0).abs() < 1e-9);
        assert_tangent_to(l, &a);
        assert_tangent_to(l, &b);
    }
    let horizontal = lines.iter().filter(|l| l.0.x.abs() < 1e-12).count();
    assert_eq!(horizontal, 2);
    for l in lines.iter().filter(|l| l.0.x.abs() > 1e-12) {
        assert!(l.distance(&Vector2::new(2.0, 0.0)) < 1e-9);
        let slope = -l.0.x / l.0.y;
        assert!((slope.abs() - 1.0 / 3f64.sqrt()).abs() < 1e-9);
    }

    let (e1, e2) = select_line_tangents(&lines, &a, &b).unwrap();
    for (l, want) in [(e1, Line2::new(0.0, 1.0, 1.0)), (e2, Line2::new(0.0, 1.0, -1.0))] {
        assert!(l.coefficient_distance(&want) < 1e-9, "{l:?}");
    }
    let internal: Vec<_> = lines.iter().filter(|l| l.0.x.abs() > 1e-12).collect();
    let x = internal[0].meet(internal[1]).to_affine().unwrap();
    assert!((x - Vector2::new(2.0, 0.0)).norm() < 1e-9);
    assert!(x.x > 0.0 && x.x < 4.0);
}

#[test]
fn nested_and_coincident() {
    let a = Conic::circle(Vector2::zeros(), 1.0);
    let b = Conic::circle(Vector2::zeros(), 2.0);
    assert!(common_tangents(&a, &b).unwrap().is_empty());
    assert!(matches!(common_tangents(&a, &a.scaled(5.0)), Err(Error::InfiniteIntersection)));
}

#[test]
fn overlapping_have_two() {
    let a = ellipse(Vector2::zeros(), 2.0, 1.0, 0.3);
    let b = ellipse(Vector2::new(1.5, 0.5), 1.5, 0.7, -0.4);
    let lines = common_tangents(&a, &b).unwrap();
    assert_eq!(lines.len(), 2);
}

#[test]
fn unequal_circles_external_pair() {
    let a = Conic::circle(Vector2::zeros(), 1.0);
    let b = Conic::circle(Vector2::new(6.0, 0.0), 2.0);
    let lines = common_tangents(&a, &b).unwrap();
    assert_eq!(lines.len(), 4);
    let (l1, l2) = select_line_tangents(&lines, &a, &b).unwrap();
    for l in [l1, l2] {
        assert!(l.eval(&Vector2::zeros()) * l.eval(&Vector2::new(6.0, 0.0)) > 0.0);
    }
    assert!(select_line_tangents(&lines[..1], &a, &b).is_err());
}

#[test]
fn triangle_tangent_choice() {
    let c = [Line2::new(0.0, 1.0, -1.0), Line2::new(0.0, 1.0, 1.0)];
    let up = select_triangle_tangent(&c, &Vector2::new(0.0, 5.0)).unwrap();
    assert!(up.coefficient_distance(&Line2::new(0.0, 1.0, 1.0)) < 1e-15);
    let down = select_triangle_tangent(&c, &Vector2::new(0.0, -5.0)).unwrap();
    assert!(down.coefficient_distance(&Line2::new(0.0, 1.0, -1.0)) < 1e-15);
    assert!(matches!(
        select_triangle_tangent(&[], &Vector2::zeros()),
        Err(Error::DegenerateSketch(_))
    ));
    // equidistant: lexicographically smallest normalized coefficients
    let tie = select_triangle_tangent(&c, &Vector2::zeros()).unwrap();
    assert!(tie.coefficient_distance(&Line2::new(0.0, 1.0, -1.0)) < 1e-15);
}

#[test]
fn tangency_points() {
    let unit = Conic::circle(Vector2::zeros(), 1.0);
    let p = tangency_point(&Line2::new(0.0, 1.0, -1.0), &unit).unwrap();
    assert!((p - Vector2::new(0.0, 1.0)).norm() < 1e-15);
    let p = tangency_point(&Line2::new(1.0, 0.0, 1.0), &unit).unwrap();
    assert!((p - Vector2::new(-1.0, 0.0)).norm() < 1e-15);
    assert!(matches!(
        tangency_point(&Line2::new(0.0, 1.0, -0.5), &unit),
        Err(Error::NotTangent(_))
    ));
    assert!(matches!(
        tangency_point(&Line2::new(0.0, 1.0, -1.5), &unit),
        Err(Error::NotTangent(_))
    ));
}

fn arb_ellipse(span: f64) -> impl Strategy<Value = Conic> {
    (-span..span, -span..span, 0.5..20.0f64, 0.5..20.0f64, 0.0..std::f64::consts::PI)
        .prop_map(|(x, y, r1, r2, a)| ellipse(Vector2::new(x, y), r1, r2, a))
}

fn arb_conic() -> impl Strategy<Value = Conic> {
    proptest::array::uniform6(-10.0..10.0f64)
        .prop_map(|c| Conic::from_coefficients(c[0], c[1], c[2], c[3], c[4], c[5]))
        .prop_filter("nondegenerate", |c| c.normalized().matrix().determinant().abs() > 1e-6)
}

proptest! {
    #[test]
    fn dual_is_an_involution(c in arb_conic()) {
        let dd = c.dual().unwrap().dual().unwrap();
        prop_assert!(dd.proportional(&c, 1e-9));
    }

    #[test]
    fn common_tangents_are_scale_invariant(a in arb_ellipse(60.0), b in arb_ellipse(60.0), s in -5.0..5.0f64) {
        prop_assume!(s.abs() > 1e-3);
        prop_assume!(!a.proportional(&b, 1e-6));
        let l1 = common_tangents(&a, &b).unwrap();
        let l2 = common_tangents(&a.scaled(s), &b.scaled(1.0 / s)).unwrap();
        prop_assert_eq!(l1.len(), l2.len());
        for (x, y) in l1.iter().zip(&l2) {
            prop_assert!(x.coefficient_distance(y) < 1e-9);
        }
    }

    #[test]
    fn tangents_touch_both(a in arb_ellipse(60.0), b in arb_ellipse(60.0)) {
        prop_assume!(!a.proportional(&b, 1e-6));
        for l in common_tangents(&a, &b).unwrap() {
            prop_assert!(relative_discriminant(&l, &a) <= 1e-7);
            prop_assert!(relative_discriminant(&l, &b) <= 1e-7);
            let p = tangency_point(&l, &a).unwrap();
            prop_assert!(l.distance(&p) < 1e-7 * (1.0 + p.norm()));
            prop_assert!(a.normalized().eval_affine(&p).abs() < 1e-7);
        }
    }

    #[test]
    fn intersections_lie_on_both(a in arb_ellipse(10.0), b in arb_ellipse(10.0)) {
        prop_assume!(!a.proportional(&b, 1e-6));
        let pts = intersect_conics(&a, &b).unwrap();
        prop_assert!(pts.len() <= 4);
        for p in pts {
            prop_assert!(a.normalized().eval(&p.0).abs() <= 1e-8);
            prop_assert!(b.normalized().eval(&p.0).abs() <= 1e-8);
        }
    }
}
