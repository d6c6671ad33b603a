//! Uncertainty scores for text classifiers and the evaluation harness around
//! them: probability-based and embedding-based scores, discrimination and
//! calibration metrics, selective prediction, and cross-split aggregation.
//!
//! Every score is oriented so that larger means more uncertain. Metrics turn
//! scores into confidences with [`confidence::to_confidence`] per (split, fold).

pub mod analysis;
pub mod confidence;
pub mod error;
pub mod f1;
pub mod features;
pub mod hybrid;
pub mod io;
pub mod metrics;
pub mod pipeline;
pub mod prob_scores;
pub mod record;
pub mod registry;
pub mod report;
pub mod selective;
pub mod synth;
pub mod tables;

pub use error::{Error, Result};
pub use record::{EvalSplit, PredictionRecord, TrainRecord, TrainSet};
pub use registry::{Method, Metric, Orientation};
