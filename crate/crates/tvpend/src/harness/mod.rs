//! The reproduction surface: named scenarios, the metrics engine,
//! configuration files, CSV/SVG emission, and the full comparison suite.

pub mod config;
pub mod metrics;
pub mod report;
pub mod scenario;
pub mod svg;

pub use config::{build_setup, ControllerConfig, RunConfig};
pub use metrics::{
    compute_metrics, step_metrics, ChannelMetrics, Metrics, MetricsError, RecoveryMetrics,
    StepMetrics, Verdict, SETTLING_BAND,
};
pub use report::{
    csv_string, parse_csv, read_csv, render_metrics, render_suite_tables, write_csv, CsvData,
    SuiteRow, CSV_COLUMNS,
};
pub use scenario::{builtin_scenarios, find_scenario, Knot, Profile, Scenario, Transition};
pub use svg::plot;
