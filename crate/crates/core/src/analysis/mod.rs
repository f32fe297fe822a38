//! Cross-run analytics: trajectory rows, cosine similarity, complete-linkage
//! clustering and method ranking.

mod cluster;
mod ranking;
mod similarity;
mod trajectory;

pub use cluster::{complete_linkage_cluster, Dendrogram, DendrogramNode, Merge};
pub use ranking::{rank_methods, ErrorTable, RankingTable};
pub use similarity::{cosine_similarity, similarity_matrix, SimilarityMatrix};
pub use trajectory::{build_row, build_trajectory, resample, Aggregation, Metric, TrajectoryMatrix, DEFAULT_GRID_POINTS};
