//! Fixtures for the benchmarks.

use std::path::PathBuf;

use trustnum_core::sim::{load_scenario, Scenario};

pub fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}

/// The bundled eight-node scenario at one source rate.
pub fn fig5(max_rate: f64) -> Scenario {
    load_scenario(scenario_path("paper_fig5.json"))
        .expect("bundled scenario")
        .with_max_rate(max_rate)
        .expect("valid rate")
}
