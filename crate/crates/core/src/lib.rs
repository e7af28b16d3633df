//! Trust-aware network utility maximization for multipath flows over
//! wireless multihop networks.
//!
//! Sources split traffic across paths in proportion to how much they trust
//! the relays, subject to link capacity, interference, per-path delay and a
//! reliability floor. The problem is solved by dual decomposition: links
//! post prices, sources pick rates, links pick margins and a scheduler picks
//! a capacity vertex each iteration.

// `!(x > 0.0)` style checks are deliberate: they reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod interference;
pub mod optimizer;
pub mod oracle;
pub mod sim;
pub mod topology;
pub mod trust;

pub use interference::{
    build_conflict_graph, enumerate_independent_sets, CapacityRegion, CapacityVector,
    ConflictGraph, InterferenceError, InterferenceModel,
};
pub use optimizer::{
    solve, Convergence, CornerRule, Diagnostics, DualState, PrimalState, Problem, SchedulePolicy,
    Solution, SolverError, SolverParams,
};
pub use oracle::{brute_force, check_feasible, OracleConfig, OracleError, OracleResult};
pub use sim::{emit_charts, emit_csv, load_scenario, run, Scenario, SimError, Trace, TraceRecord};
pub use topology::{Flow, LinkId, Network, NodeId, Path, TopologyError};
pub use trust::{TrustError, TrustState};
