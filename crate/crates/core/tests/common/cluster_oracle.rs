//! Textbook O(n^3) agglomerative clustering with average linkage: every
//! step scans all cluster pairs and recomputes linkage from the points.

use nalgebra::Vector3;

/// Merges as `(smaller min index, larger min index, height)` in merge order.
pub fn naive_average_linkage(points: &[Vector3<f64>]) -> Vec<(usize, usize, f64)> {
    let n = points.len();
    let mut clusters: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let dist = |a: &[usize], b: &[usize]| {
        let mut s = 0.0;
        for &i in a {
            for &j in b {
                s += (points[i] - points[j]).norm();
            }
        }
        s / (a.len() * b.len()) as f64
    };
    // cached linkage between live clusters, refreshed only for merged rows
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            d[i][j] = dist(&clusters[i], &clusters[j]);
            d[j][i] = d[i][j];
        }
    }
    let mut alive: Vec<bool> = vec![true; n];
    let mut merges = Vec::with_capacity(n.saturating_sub(1));
    for _ in 1..n {
        let mut best = (f64::INFINITY, usize::MAX, usize::MAX);
        for i in 0..n {
            if !alive[i] {
                continue;
            }
            for j in i + 1..n {
                if !alive[j] {
                    continue;
                }
                let key = (d[i][j], clusters[i][0].min(clusters[j][0]), clusters[i][0].max(clusters[j][0]));
                if key.0 < best.0 || (key.0 == best.0 && (key.1, key.2) < (best.1, best.2)) {
                    best = (key.0, i, j);
                }
            }
        }
        let (h, i, j) = best;
        let (a, b) = (clusters[i][0], clusters[j][0]);
        let moved = std::mem::take(&mut clusters[j]);
        clusters[i].extend(moved);
        clusters[i].sort_unstable();
        alive[j] = false;
        for k in 0..n {
            if alive[k] && k != i {
                d[i][k] = dist(&clusters[i], &clusters[k]);
                d[k][i] = d[i][k];
            }
        }
        merges.push((a.min(b), a.max(b), h));
    }
    merges
}
