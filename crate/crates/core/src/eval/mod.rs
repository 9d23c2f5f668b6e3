//! Matching predicted against annotated waves, scoring, and lead fusion.

mod evaluate;
mod matching;
mod metrics;
mod normalize;
mod vote;

pub use evaluate::{
    evaluate, evaluate_masks, EvalMode, EvaluationConfig, MetricsReport, Predictor, WaveTally, REPORT_HEADER,
};
pub use matching::{correspondence_matrix, corresponds, resolve_matches, CorrespondenceMatrix, Match};
pub use metrics::{delineation_errors, detection_metrics, DelineationErrors, DetectionMetrics, ErrorSign};
pub use normalize::{normalization_scale, normalize_input, DEFAULT_WINDOW};
pub use vote::majority_vote;
