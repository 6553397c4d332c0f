//! Accuracy metrics, depth conversion and benchmark drivers.
//!
//! Metrics are computed on disparity. PSNR uses the span of the scene's
//! disparity range as its peak value.

pub mod benchmark;
pub mod metrics;

pub use benchmark::{
    count_rows_csv, depth_count_sweep, run_algorithm, run_benchmark, time_median, Algorithm,
    BenchmarkParams, CountRow, EvalReport, ReportRow, Scene, REPORT_HEADER,
};
pub use metrics::{disparity_to_depth, error_map, mse, psnr, psnr_from_mse, DepthMap};
