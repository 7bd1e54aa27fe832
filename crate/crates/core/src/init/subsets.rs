use std::collections::VecDeque;

use super::cluster::ClusterTree;
use crate::model::ColorMetric;

/// Weighted RGB distance on the 0-255 scale.
pub fn color_distance(c1: [u8; 3], c2: [u8; 3], metric: ColorMetric) -> f64 {
    let [r1, g1, b1] = c1.map(f64::from);
    let [r2, g2, b2] = c2.map(f64::from);
    let (dr, dg, db) = (r1 - r2, g1 - g2, b1 - b2);
    match metric {
        ColorMetric::Rgb => (dr * dr + dg * dg + db * db).sqrt(),
        ColorMetric::Redmean => {
            let rm = 0.5 * (r1 + r2);
            ((2.0 + rm / 256.0) * dr * dr + 4.0 * dg * dg + (2.0 + (255.0 - rm) / 256.0) * db * db).sqrt()
        }
    }
}

/// Whether the largest pairwise color distance is at most `omega`.
pub fn color_similar(colors: &[[u8; 3]], omega: f64, metric: ColorMetric) -> bool {
    for (k, &a) in colors.iter().enumerate() {
        for &b in &colors[k + 1..] {
            if color_distance(a, b, metric) > omega {
                return false;
            }
        }
    }
    true
}

/// One extracted tree node and its points (ascending).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Subset {
    pub node: usize,
    pub points: Vec<usize>,
}

/// Level-order walk from the root. A node is output when it holds 1-3
/// points of similar color and no ancestor was output; every other internal
/// node passes its children on, so leaves are always reachable.
pub fn extract_subsets(tree: &ClusterTree, colors: &[[u8; 3]], omega: f64, metric: ColorMetric) -> Vec<Subset> {
    let mut out = Vec::new();
    let mut queue = VecDeque::from([tree.root()]);
    while let Some(k) = queue.pop_front() {
        let node = &tree.nodes[k];
        if node.size <= 3 {
            let points = tree.points(k);
            let cs: Vec<[u8; 3]> = points.iter().map(|&i| colors[i]).collect();
            if color_similar(&cs, omega, metric) {
                out.push(Subset { node: k, points });
                continue;
            }
        }
        if let Some((a, b)) = node.children {
            queue.push_back(a);
            queue.push_back(b);
        }
    }
    out
}
