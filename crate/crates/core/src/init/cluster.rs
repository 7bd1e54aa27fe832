//! Agglomerative clustering of point positions into a binary dendrogram.

use nalgebra::Vector3;

use crate::model::Linkage;

#[derive(Clone, Debug, PartialEq)]
pub struct ClusterNode {
    /// Children of an internal node; leaves have none.
    pub children: Option<(usize, usize)>,
    /// Merge height (linkage distance); zero for leaves.
    pub height: f64,
    pub size: usize,
    /// Smallest point index below this node.
    pub min_index: usize,
}

/// Rooted binary dendrogram. Nodes `0..n` are the leaves (node `i` is point
/// `i`); internal nodes follow in merge order and the last node is the root.
#[derive(Clone, Debug, PartialEq)]
pub struct ClusterTree {
    pub n_leaves: usize,
    pub nodes: Vec<ClusterNode>,
}

impl ClusterTree {
    pub fn root(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn is_leaf(&self, node: usize) -> bool {
        node < self.n_leaves
    }

    /// Point indices below `node`, ascending.
    pub fn points(&self, node: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.nodes[node].size);
        let mut stack = vec![node];
        while let Some(k) = stack.pop() {
            match self.nodes[k].children {
                None => out.push(k),
                Some((a, b)) => {
                    stack.push(a);
                    stack.push(b);
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Parent of every node (`None` for the root).
    pub fn parents(&self) -> Vec<Option<usize>> {
        let mut p = vec![None; self.nodes.len()];
        for (k, n) in self.nodes.iter().enumerate() {
            if let Some((a, b)) = n.children {
                p[a] = Some(k);
                p[b] = Some(k);
            }
        }
        p
    }

    /// Merges as `(min_index of first, min_index of second, height)`, in
    /// tree order; handy for comparing trees.
    pub fn merge_sequence(&self) -> Vec<(usize, usize, f64)> {
        self.nodes[self.n_leaves..]
            .iter()
            .map(|n| {
                let (a, b) = n.children.unwrap();
                let (x, y) = (self.nodes[a].min_index, self.nodes[b].min_index);
                (x.min(y), x.max(y), n.height)
            })
            .collect()
    }
}

/// Condensed symmetric distance matrix.
struct Condensed {
    n: usize,
    d: Vec<f64>,
}

impl Condensed {
    fn idx(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        i * self.n - i * (i + 1) / 2 + (j - i - 1)
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        self.d[self.idx(i, j)]
    }

    fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.d[k] = v;
    }
}

/// Exact clustering with a nearest-neighbor chain over a dense distance
/// matrix (O(n^2) memory). Ties in nearest-neighbor search go to the cluster
/// with the smallest point index.
pub fn build_cluster_tree(positions: &[Vector3<f64>], linkage: Linkage) -> ClusterTree {
    let n = positions.len();
    assert!(n >= 1, "clustering needs at least one point");
    let mut m = Condensed {
        n,
        d: Vec::with_capacity(n * (n - 1) / 2),
    };
    for i in 0..n {
        for j in i + 1..n {
            m.d.push((positions[i] - positions[j]).norm());
        }
    }
    // A cluster lives in the slot of its smallest point index.
    let mut active = vec![true; n];
    let mut size = vec![1usize; n];
    let mut merges: Vec<(usize, usize, f64)> = Vec::with_capacity(n.saturating_sub(1));
    let mut chain: Vec<usize> = Vec::new();
    while merges.len() + 1 < n {
        if chain.is_empty() {
            chain.push(active.iter().position(|&a| a).unwrap());
        }
        loop {
            let a = *chain.last().unwrap();
            let prev = chain.len().checked_sub(2).map(|k| chain[k]);
            let mut best = prev.map(|p| (m.get(a, p), p));
            for c in 0..n {
                if !active[c] || c == a || Some(c) == prev {
                    continue;
                }
                let dc = m.get(a, c);
                match best {
                    Some((bd, bc)) if !(dc < bd || (dc == bd && Some(bc) != prev && c < bc)) => {}
                    _ => best = Some((dc, c)),
                }
            }
            let (h, b) = best.unwrap();
            if Some(b) == prev {
                chain.pop();
                chain.pop();
                let (lo, hi) = (a.min(b), a.max(b));
                let (nl, nh) = (size[lo] as f64, size[hi] as f64);
                for k in 0..n {
                    if !active[k] || k == lo || k == hi {
                        continue;
                    }
                    let (dl, dh) = (m.get(k, lo), m.get(k, hi));
                    let v = match linkage {
                        Linkage::Single => dl.min(dh),
                        Linkage::Complete => dl.max(dh),
                        Linkage::Average => (nl * dl + nh * dh) / (nl + nh),
                    };
                    m.set(k, lo, v);
                }
                active[hi] = false;
                size[lo] += size[hi];
                merges.push((lo, hi, h));
                break;
            }
            chain.push(b);
        }
    }
    // NN-chain emits merges out of height order; a stable sort keeps every
    // merge after the merges that built its inputs.
    merges.sort_by(|x, y| x.2.total_cmp(&y.2));
    assemble(n, &merges)
}

/// Builds nodes from slot merges `(slot_a, slot_b, height)` sorted by height.
fn assemble(n: usize, merges: &[(usize, usize, f64)]) -> ClusterTree {
    let mut nodes: Vec<ClusterNode> = (0..n)
        .map(|i| ClusterNode {
            children: None,
            height: 0.0,
            size: 1,
            min_index: i,
        })
        .collect();
    // current top node of each slot
    let mut top: Vec<usize> = (0..n).collect();
    for &(a, b, h) in merges {
        let (na, nb) = (top[a], top[b]);
        let (first, second) = if nodes[na].min_index <= nodes[nb].min_index { (na, nb) } else { (nb, na) };
        let node = ClusterNode {
            children: Some((first, second)),
            height: h,
            size: nodes[na].size + nodes[nb].size,
            min_index: nodes[first].min_index,
        };
        nodes.push(node);
        let id = nodes.len() - 1;
        top[a.min(b)] = id;
    }
    ClusterTree { n_leaves: n, nodes }
}

/// Clustering for large clouds: a median k-d split into chunks of at most
/// `max_chunk` points, exact clustering inside each chunk, and the k-d
/// hierarchy above them. Chunk roots are joined at the larger child height
/// plus the distance between chunk centroids, which keeps heights monotone.
pub fn build_cluster_tree_chunked(positions: &[Vector3<f64>], linkage: Linkage, max_chunk: usize) -> ClusterTree {
    let n = positions.len();
    if n <= max_chunk.max(2) {
        return build_cluster_tree(positions, linkage);
    }
    let mut nodes: Vec<ClusterNode> = (0..n)
        .map(|i| ClusterNode {
            children: None,
            height: 0.0,
            size: 1,
            min_index: i,
        })
        .collect();
    let ids: Vec<usize> = (0..n).collect();
    let (root, _) = chunk(positions, ids, linkage, max_chunk.max(2), &mut nodes);
    debug_assert_eq!(root, nodes.len() - 1);
    ClusterTree { n_leaves: n, nodes }
}

fn centroid(positions: &[Vector3<f64>], ids: &[usize]) -> Vector3<f64> {
    ids.iter().map(|&i| positions[i]).sum::<Vector3<f64>>() / ids.len() as f64
}

/// Returns the subtree root and its centroid.
fn chunk(
    positions: &[Vector3<f64>],
    mut ids: Vec<usize>,
    linkage: Linkage,
    max_chunk: usize,
    nodes: &mut Vec<ClusterNode>,
) -> (usize, Vector3<f64>) {
    if ids.len() <= max_chunk {
        ids.sort_unstable();
        let local: Vec<Vector3<f64>> = ids.iter().map(|&i| positions[i]).collect();
        let sub = build_cluster_tree(&local, linkage);
        let c = centroid(positions, &ids);
        if ids.len() == 1 {
            return (ids[0], c);
        }
        let offset = nodes.len();
        let map = |k: usize| if k < ids.len() { ids[k] } else { k - ids.len() + offset };
        for node in &sub.nodes[sub.n_leaves..] {
            let (a, b) = node.children.unwrap();
            nodes.push(ClusterNode {
                children: Some((map(a), map(b))),
                height: node.height,
                size: node.size,
                min_index: ids[node.min_index],
            });
        }
        return (nodes.len() - 1, c);
    }
    let lo = ids.iter().fold(Vector3::repeat(f64::INFINITY), |m, &i| m.inf(&positions[i]));
    let hi = ids.iter().fold(Vector3::repeat(f64::NEG_INFINITY), |m, &i| m.sup(&positions[i]));
    let axis = (hi - lo).imax();
    ids.sort_by(|&a, &b| positions[a][axis].total_cmp(&positions[b][axis]).then(a.cmp(&b)));
    let right = ids.split_off(ids.len() / 2);
    let (l, cl) = chunk(positions, ids, linkage, max_chunk, nodes);
    let (r, cr) = chunk(positions, right, linkage, max_chunk, nodes);
    let (sl, sr) = (nodes[l].size, nodes[r].size);
    let height = nodes[l].height.max(nodes[r].height) + (cl - cr).norm();
    let (first, second) = if nodes[l].min_index <= nodes[r].min_index { (l, r) } else { (r, l) };
    nodes.push(ClusterNode {
        children: Some((first, second)),
        height,
        size: sl + sr,
        min_index: nodes[first].min_index,
    });
    let c = (cl * sl as f64 + cr * sr as f64) / (sl + sr) as f64;
    (nodes.len() - 1, c)
}
