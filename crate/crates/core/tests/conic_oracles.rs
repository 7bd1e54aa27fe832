mod common;

use common::conic_oracle::{self, random_ellipse};
use mixsplat::conic::{common_tangents, intersect_conics, relative_discriminant, tangency_point};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn intersections_match_sampling_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut with_points = 0;
    for _ in 0..300 {
        let e1 = random_ellipse(&mut rng, 5.0, 0.5, 6.0);
        let e2 = random_ellipse(&mut rng, 5.0, 0.5, 6.0);
        let oracle = conic_oracle::intersections(&e1, &e2, 20_000);
        let got: Vec<_> = intersect_conics(&e1.conic(), &e2.conic())
            .unwrap()
            .into_iter()
            .filter_map(|p| p.to_affine())
            .collect();
        assert_eq!(got.len(), oracle.len(), "{e1:?} {e2:?}: {got:?} vs {oracle:?}");
        for o in &oracle {
            assert!(got.iter().any(|g| (g - o).norm() < 1e-5), "{o:?} missing from {got:?}");
        }
        with_points += usize::from(!oracle.is_empty());
    }
    assert!(with_points > 50);
}

#[test]
fn tangents_match_line_space_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut checked = 0;
    while checked < 100 {
        let e1 = random_ellipse(&mut rng, 40.0, 0.3, 15.0);
        let e2 = random_ellipse(&mut rng, 40.0, 0.3, 15.0);
        let oracle = conic_oracle::common_tangents(&e1, &e2, 200_000);
        let (c1, c2) = (e1.conic(), e2.conic());
        let got = common_tangents(&c1, &c2).unwrap();
        assert_eq!(got.len(), oracle.len(), "{e1:?} {e2:?}");
        if conic_oracle::disjoint(&e1, &e2) {
            assert_eq!(got.len(), 4);
        }
        for o in &oracle {
            assert!(got.iter().any(|g| g.coefficient_distance(o) < 1e-4), "{o:?} not in {got:?}");
        }
        for l in &got {
            assert!(relative_discriminant(l, &c1) <= 1e-7);
            assert!(relative_discriminant(l, &c2) <= 1e-7);
            let p = tangency_point(l, &c1).unwrap();
            assert!(e1.implicit(&p).abs() < 1e-7);
        }
        checked += 1;
    }
}
