//! Point-cloud initialization: clustering, subset extraction, instantiation.

pub mod cluster;
pub mod instantiate;
pub mod ply;
pub mod subsets;

pub use cluster::{build_cluster_tree, build_cluster_tree_chunked, ClusterNode, ClusterTree};
pub use instantiate::{instantiate_primitives, mean_neighbor_distances};
pub use ply::{load_point_cloud, parse_ply, save_point_cloud, PlyError, PointCloud};
pub use subsets::{color_distance, color_similar, extract_subsets, Subset};

use crate::model::Config;

/// Clouds larger than this are clustered chunk-wise.
pub const EXACT_CLUSTER_LIMIT: usize = 8192;

/// Full initialization: cluster, extract subsets and seed primitives.
pub fn initialize(cloud: &PointCloud, config: &Config) -> crate::Result<crate::model::Scene> {
    Ok(initialize_with_subsets(cloud, config)?.0)
}

/// Number of extracted subsets of size 1, 2 and 3.
pub fn subset_histogram(subsets: &[Subset]) -> [usize; 3] {
    let mut h = [0; 3];
    for s in subsets {
        h[s.points.len() - 1] += 1;
    }
    h
}

/// [`initialize`], also returning the subsets the primitives were seeded from.
pub fn initialize_with_subsets(cloud: &PointCloud, config: &Config) -> crate::Result<(crate::model::Scene, Vec<Subset>)> {
    cloud.validate()?;
    config.validate()?;
    let tree = if cloud.len() <= EXACT_CLUSTER_LIMIT {
        build_cluster_tree(&cloud.positions, config.linkage)
    } else {
        log::info!("{} points: clustering in chunks of {EXACT_CLUSTER_LIMIT}", cloud.len());
        build_cluster_tree_chunked(&cloud.positions, config.linkage, EXACT_CLUSTER_LIMIT)
    };
    let subsets = extract_subsets(&tree, &cloud.colors, config.omega_color, config.color_metric);
    let scene = instantiate_primitives(&subsets, cloud, config.sh_order);
    Ok((scene, subsets))
}
