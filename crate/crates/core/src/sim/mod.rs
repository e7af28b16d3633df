//! Scenario driver: loads a scenario, evolves trust period by period, solves
//! each period and writes CSV traces and charts.

mod chart;
mod output;
mod run;
mod scenario;

use thiserror::Error;

pub use chart::{emit_charts, render_svg, Series};
pub use output::{emit_csv, format_g6, render_csv, CSV_FILES};
pub use run::{run, trust_trajectory, PeriodOutcome, Trace, TraceRecord};
pub use scenario::{
    load_scenario, FlowSpec, LinkSpec, Scenario, ScenarioFile, TrustSpec, SCENARIO_VERSION,
};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed scenario: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid scenario field `{field}`: {message}")]
    Validation { field: String, message: String },
    #[error(transparent)]
    Trust(#[from] crate::trust::TrustError),
    #[error(transparent)]
    Interference(#[from] crate::interference::InterferenceError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("trace is empty")]
    EmptyTrace,
}
