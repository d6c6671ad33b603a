//! Embedding-geometry uncertainty scores: Mahalanobis distance to class
//! centroids, Local Outlier Factor and Isolation Forest. All are oriented so
//! that larger values mean "further from the training distribution".

mod isof;
mod lof;
mod mahalanobis;

pub use isof::{average_path_length, IsofModel, IsolationTree, Node, DEFAULT_SUBSAMPLE, DEFAULT_TREES};
pub use lof::{LofModel, DEFAULT_K as DEFAULT_LOF_K, DISTANCE_FLOOR};
pub use mahalanobis::TrainStats;
