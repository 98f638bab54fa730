//! Metrics, repeated-split benchmarking, feature-map comparison and holdout
//! verification.

mod harness;
mod holdout;
mod metrics;
mod output;

pub use harness::{
    compare_feature_maps, pick_winner, run_benchmark, AdvantageRow, BenchmarkReport,
    FeatureMapComparison, FeatureMapRow, ModelSummary, PredictionRow, QKR, REFERENCE,
};
pub use holdout::{verify_holdout, HoldoutReport, HoldoutRow};
pub use metrics::{advantage_ratio, metrics, pearson, reference_metrics, Metric, MetricSet, Summary};
pub use output::{write_benchmark_files, write_csv_rows, BENCHMARK_CSV, BENCHMARK_JSON, PLOT_DIR};
