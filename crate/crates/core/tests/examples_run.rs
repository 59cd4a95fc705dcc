//! Runs every example's body so the examples stay in step with the library.

#[allow(dead_code)]
#[path = "../examples/manifest_io.rs"]
mod manifest_io;

#[test]
fn manifest_io_runs() {
    manifest_io::run_example().unwrap();
}

#[allow(dead_code)]
#[path = "../examples/sampling_plans.rs"]
mod sampling_plans;

#[test]
fn sampling_plans_runs() {
    sampling_plans::run_example().unwrap();
}

#[allow(dead_code)]
#[path = "../examples/distribution_smoothing.rs"]
mod distribution_smoothing;

#[test]
fn distribution_smoothing_runs() {
    distribution_smoothing::run_example().unwrap();
}

#[allow(dead_code)]
#[path = "../examples/dgs_pipeline.rs"]
mod dgs_pipeline;

#[test]
fn dgs_pipeline_runs() {
    dgs_pipeline::run_example().unwrap();
}

#[allow(dead_code)]
#[path = "../examples/minimax_metrics.rs"]
mod minimax_metrics;

#[test]
fn minimax_metrics_runs() {
    minimax_metrics::run_example().unwrap();
}

#[allow(dead_code)]
#[path = "../examples/dag_guidance.rs"]
mod dag_guidance;

#[test]
fn dag_guidance_runs() {
    dag_guidance::run_example().unwrap();
}

#[allow(dead_code)]
#[path = "../examples/kde_report.rs"]
mod kde_report;

#[test]
fn kde_report_runs() {
    kde_report::run_example().unwrap();
}
