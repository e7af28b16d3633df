//! Slot-by-slot simulation: one solve per trust update period.

use crate::interference::{build_conflict_graph, CapacityRegion};
use crate::optimizer::{solve, Convergence, DualState, Problem, Solution, SolverError};
use crate::topology::LinkId;
use crate::trust::TrustState;

use super::{Scenario, SimError};

/// Result of the solve for one update period.
#[derive(Debug, Clone)]
pub struct PeriodOutcome {
    /// 1-based.
    pub period: usize,
    /// Node trust used for this period.
    pub trust: Vec<f64>,
    /// `None` when the solver failed outright; see `error`.
    pub solution: Option<Solution>,
    pub error: Option<String>,
}

impl PeriodOutcome {
    pub fn converged(&self) -> bool {
        self.solution
            .as_ref()
            .is_some_and(|s| s.convergence.is_some())
    }

    pub fn convergence(&self) -> Option<Convergence> {
        self.solution.as_ref().and_then(|s| s.convergence)
    }
}

/// State of the network during one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    /// 1-based.
    pub slot: u64,
    /// 1-based.
    pub period: usize,
    /// Per-flow path rates, kbps.
    pub x: Vec<Vec<f64>>,
    pub sigma: Vec<f64>,
    pub c_hat: Vec<f64>,
    pub lambda: Vec<f64>,
    pub mu: Vec<Vec<f64>>,
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
    pub iterations: u64,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct Trace {
    pub scenario: String,
    /// Per-flow maximum rate used for this run.
    pub max_rates: Vec<f64>,
    /// `<flow><k>` for each path, k 1-based, in flow order.
    pub path_labels: Vec<String>,
    /// `<src>-<dst>` for each link.
    pub link_labels: Vec<String>,
    pub periods: Vec<PeriodOutcome>,
    pub records: Vec<TraceRecord>,
}

impl Trace {
    pub fn all_converged(&self) -> bool {
        self.periods.iter().all(PeriodOutcome::converged)
    }

    /// Records of one period (1-based).
    pub fn period_records(&self, period: usize) -> impl Iterator<Item = &TraceRecord> {
        self.records.iter().filter(move |r| r.period == period)
    }
}

/// Trust for each period: the first schedule row as is, then one EWMA
/// update per row.
pub fn trust_trajectory(scenario: &Scenario) -> Result<Vec<TrustState>, SimError> {
    let mut state = scenario.initial_trust();
    let mut out = Vec::with_capacity(scenario.periods());
    for row in &scenario.trust_schedule {
        state = state.ewma_update_row(row)?;
        out.push(state.clone());
    }
    Ok(out)
}

/// Runs the whole scenario. Solver failures in a period are recorded in
/// its [`PeriodOutcome`] and do not stop the run.
pub fn run(scenario: &Scenario) -> Result<Trace, SimError> {
    let net = &scenario.network;
    let cg = build_conflict_graph(net, &scenario.interference)?;
    let region = CapacityRegion::enumerate(net, &cg, scenario.enumeration_cap)?;
    let links = net.link_count();
    let path_labels = scenario
        .flows
        .iter()
        .flat_map(|f| (1..=f.paths.len()).map(move |k| format!("{}{k}", f.name)))
        .collect();
    let link_labels = (0..links).map(|e| net.link_label(LinkId(e))).collect();

    let mut periods = Vec::with_capacity(scenario.periods());
    let mut records = Vec::with_capacity(scenario.slots as usize);
    let mut warm: Option<DualState> = None;
    for (p, trust) in trust_trajectory(scenario)?.into_iter().enumerate() {
        let problem = Problem::new(net, &scenario.flows, &trust, &region, &cg, scenario.kappa);
        let warm_ref = if scenario.warm_start {
            warm.as_ref()
        } else {
            None
        };
        let (solution, error) = match solve(&problem, &scenario.solver, warm_ref) {
            Ok(s) => (Some(s), None),
            Err(SolverError::NoConvergence(s)) => {
                let msg = format!("no convergence after {} iterations", s.iterations);
                (Some(*s), Some(msg))
            }
            Err(e) => (None, Some(e.to_string())),
        };
        if let Some(s) = &solution {
            warm = Some(s.last_dual.clone());
        }

        let template = match &solution {
            Some(s) => TraceRecord {
                slot: 0,
                period: p + 1,
                x: s.primal.x.clone(),
                sigma: s.primal.sigma.clone(),
                c_hat: s.primal.c_hat.clone(),
                lambda: s.dual.lambda.clone(),
                mu: s.dual.mu.clone(),
                primal: s.diagnostics.primal,
                dual: s.diagnostics.dual,
                gap: s.diagnostics.gap,
                iterations: s.iterations,
                converged: s.convergence.is_some(),
            },
            None => {
                let nan_paths: Vec<Vec<f64>> = scenario
                    .flows
                    .iter()
                    .map(|f| vec![f64::NAN; f.paths.len()])
                    .collect();
                TraceRecord {
                    slot: 0,
                    period: p + 1,
                    x: nan_paths.clone(),
                    sigma: vec![f64::NAN; links],
                    c_hat: vec![f64::NAN; links],
                    lambda: vec![f64::NAN; links],
                    mu: nan_paths,
                    primal: f64::NAN,
                    dual: f64::NAN,
                    gap: f64::NAN,
                    iterations: 0,
                    converged: false,
                }
            }
        };
        let first = p as u64 * scenario.update_period;
        for t in 0..scenario.update_period {
            records.push(TraceRecord {
                slot: first + t + 1,
                ..template.clone()
            });
        }
        periods.push(PeriodOutcome {
            period: p + 1,
            trust: trust.values().to_vec(),
            solution,
            error,
        });
    }

    Ok(Trace {
        scenario: scenario.name.clone(),
        max_rates: scenario.flows.iter().map(|f| f.max_rate).collect(),
        path_labels,
        link_labels,
        periods,
        records,
    })
}
