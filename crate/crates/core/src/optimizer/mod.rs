//! Dual-decomposition solver for trust-weighted multipath utility
//! maximization under link capacity, margin and delay constraints.

mod delay;
mod diagnostics;
mod rate;
mod solve;

pub use delay::{delay_control, dphi, margin_supremum, phi};
pub use diagnostics::{diagnostics, dual_value, slacks, Diagnostics, Slacks};
pub use rate::{rate_supremum, source_rate_control, RateControl};
pub use solve::{solve, Convergence, Solution};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interference::{CapacityRegion, ConflictGraph};
use crate::topology::{routing_matrix, Flow, LinkId, Network, RoutingMatrix};
use crate::trust::{trust_incidence, TrustIncidenceMatrix, TrustState};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid solver parameters: {0}")]
    InvalidParams(String),
    #[error(
        "flow {flow}: reliability threshold {threshold} exceeds the best reachable {reachable}"
    )]
    Infeasible {
        flow: String,
        threshold: f64,
        reachable: f64,
    },
    #[error("rate {rate} on path {path} is not positive")]
    NonPositiveRate { path: usize, rate: f64 },
    #[error("warm-start state does not match the problem dimensions")]
    DimensionMismatch,
    #[error("no convergence after {} iterations", .0.iterations)]
    NoConvergence(Box<Solution>),
}

/// How the per-iteration link schedule is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchedulePolicy {
    /// Best vertex of the capacity region.
    #[default]
    Exact,
    /// Heaviest-link-first replay of the distributed policy.
    Greedy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverParams {
    pub gamma: f64,
    pub epsilon: f64,
    pub max_iter: u64,
    pub x_floor: f64,
    pub sigma_min: f64,
    /// Upper margin bound; the largest link capacity when absent.
    pub sigma_max: Option<f64>,
    pub lambda_init: f64,
    pub mu_init: f64,
    /// Iterations between averaged-iterate recoveries.
    pub check_interval: u64,
    /// Relative duality gap accepted as convergence of the averaged iterate.
    pub gap_tol: f64,
    pub corner: CornerRule,
    #[serde(skip)]
    pub schedule: SchedulePolicy,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            gamma: 0.01,
            epsilon: 1e-4,
            max_iter: 50_000,
            x_floor: 1e-6,
            sigma_min: 1e-4,
            sigma_max: None,
            lambda_init: 1.0,
            mu_init: 1.0,
            check_interval: 200,
            gap_tol: 1e-2,
            corner: CornerRule::Kkt,
            schedule: SchedulePolicy::Exact,
        }
    }
}

impl SolverParams {
    pub fn validate(&self, network: &Network) -> Result<(), SolverError> {
        let bad = |m: &str| Err(SolverError::InvalidParams(m.to_string()));
        if !(self.gamma > 0.0) {
            return bad("gamma must be positive");
        }
        if !(self.epsilon > 0.0) {
            return bad("epsilon must be positive");
        }
        if !(self.x_floor > 0.0) {
            return bad("x_floor must be positive");
        }
        if !(self.sigma_min > 0.0) || !(self.sigma_min < self.sigma_max(network)) {
            return bad("margin bounds must satisfy 0 < sigma_min < sigma_max");
        }
        if !(self.lambda_init >= 0.0) || !(self.mu_init >= 0.0) {
            return bad("initial prices must be nonnegative");
        }
        if self.check_interval == 0 {
            return bad("check_interval must be positive");
        }
        if !(self.gap_tol > 0.0) {
            return bad("gap_tol must be positive");
        }
        Ok(())
    }

    pub fn sigma_max(&self, network: &Network) -> f64 {
        self.sigma_max.unwrap_or_else(|| network.max_capacity())
    }
}

/// Everything the solver needs for one trust snapshot.
#[derive(Debug, Clone)]
pub struct Problem<'a> {
    pub network: &'a Network,
    pub flows: &'a [Flow],
    pub region: &'a CapacityRegion,
    pub conflicts: &'a ConflictGraph,
    pub routing: Vec<RoutingMatrix>,
    pub trust: Vec<TrustIncidenceMatrix>,
    /// Links carried by at least one path. Others hold no margin and no price.
    pub used: Vec<bool>,
    /// Delay of a link is `kappa / sigma`.
    pub kappa: f64,
}

impl<'a> Problem<'a> {
    pub fn new(
        network: &'a Network,
        flows: &'a [Flow],
        trust: &TrustState,
        region: &'a CapacityRegion,
        conflicts: &'a ConflictGraph,
        kappa: f64,
    ) -> Self {
        let routing = flows.iter().map(|f| routing_matrix(f, network)).collect();
        let trust = flows
            .iter()
            .map(|f| trust_incidence(trust, f, network))
            .collect();
        let mut used = vec![false; network.link_count()];
        for f in flows {
            for (u, v) in used.iter_mut().zip(f.used_links(network)) {
                *u |= v;
            }
        }
        Problem {
            network,
            flows,
            region,
            conflicts,
            routing,
            trust,
            used,
            kappa,
        }
    }

    pub fn link_count(&self) -> usize {
        self.network.link_count()
    }

    /// Trust-weighted price along each path of flow `s`: `(T_s lambda)_k`.
    pub fn path_prices(&self, s: usize, lambda: &[f64]) -> Vec<f64> {
        let t = &self.trust[s];
        (0..t.rows())
            .map(|k| t.row(k).iter().zip(lambda).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Trust-weighted load on every link.
    pub fn link_flows(&self, x: &[Vec<f64>]) -> Vec<f64> {
        let mut out = vec![0.0; self.link_count()];
        for (t, xs) in self.trust.iter().zip(x) {
            for (k, &xk) in xs.iter().enumerate() {
                for (o, &w) in out.iter_mut().zip(t.row(k)) {
                    *o += w * xk;
                }
            }
        }
        out
    }

    /// Per-path delay `sum kappa / sigma` over the path's links.
    pub fn path_delays(&self, sigma: &[f64]) -> Vec<Vec<f64>> {
        self.flows
            .iter()
            .map(|f| {
                f.paths
                    .iter()
                    .map(|p| p.links().iter().map(|l| self.kappa * phi(sigma[l.0])).sum())
                    .collect()
            })
            .collect()
    }
}

/// Per-link prices and per-path delay prices.
#[derive(Debug, Clone, PartialEq)]
pub struct DualState {
    pub lambda: Vec<f64>,
    pub mu: Vec<Vec<f64>>,
    pub iteration: u64,
}

impl DualState {
    pub fn initial(problem: &Problem, params: &SolverParams) -> Self {
        DualState {
            lambda: problem
                .used
                .iter()
                .map(|&u| if u { params.lambda_init } else { 0.0 })
                .collect(),
            mu: problem
                .flows
                .iter()
                .map(|f| vec![params.mu_init; f.paths.len()])
                .collect(),
            iteration: 0,
        }
    }

    fn fits(&self, problem: &Problem) -> bool {
        self.lambda.len() == problem.link_count()
            && self.mu.len() == problem.flows.len()
            && self
                .mu
                .iter()
                .zip(problem.flows)
                .all(|(m, f)| m.len() == f.paths.len())
    }
}

/// How rate control handles a stationary point outside the flow's
/// constraint set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CornerRule {
    /// Exact constrained maximizer, see [`rate_supremum`].
    #[default]
    Kkt,
    /// Proportional scaling and reliability projection, see
    /// [`source_rate_control`].
    Scale,
}

/// Path rates, link margins and allocated link capacities.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimalState {
    pub x: Vec<Vec<f64>>,
    pub sigma: Vec<f64>,
    pub c_hat: Vec<f64>,
}

/// Source utility `sum_k t_k ln x_k`. Paths with zero trust contribute
/// nothing.
pub fn utility(trust: &[f64], rates: &[f64]) -> Result<f64, SolverError> {
    let mut u = 0.0;
    for (k, (&t, &x)) in trust.iter().zip(rates).enumerate() {
        if t == 0.0 {
            continue;
        }
        if !(x > 0.0) {
            return Err(SolverError::NonPositiveRate { path: k, rate: x });
        }
        u += t * x.ln();
    }
    Ok(u)
}

/// Aggregate delay price on each link: `sum_s sum_k mu_sk R_s[k][l]`.
pub fn mu_link(problem: &Problem, mu: &[Vec<f64>]) -> Vec<f64> {
    let mut out = vec![0.0; problem.link_count()];
    for (r, ms) in problem.routing.iter().zip(mu) {
        for (k, &m) in ms.iter().enumerate() {
            for (o, &bit) in out.iter_mut().zip(r.row(k)) {
                if bit == 1 {
                    *o += m;
                }
            }
        }
    }
    out
}

/// `c_hat - trust-weighted load - sigma` on one link.
pub fn lambda_subgradient(link: LinkId, primal: &PrimalState, problem: &Problem) -> f64 {
    let mut load = 0.0;
    for (t, xs) in problem.trust.iter().zip(&primal.x) {
        for (k, &x) in xs.iter().enumerate() {
            load += t.get(k, link) * x;
        }
    }
    primal.c_hat[link.0] - load - primal.sigma[link.0]
}

/// One projected subgradient step on both price families.
pub fn dual_update(
    dual: &DualState,
    primal: &PrimalState,
    problem: &Problem,
    params: &SolverParams,
) -> DualState {
    let load = problem.link_flows(&primal.x);
    let lambda = dual
        .lambda
        .iter()
        .enumerate()
        .map(|(l, &lam)| {
            if !problem.used[l] {
                return 0.0;
            }
            let g = primal.c_hat[l] - load[l] - primal.sigma[l];
            (lam - params.gamma * g).max(0.0)
        })
        .collect();
    let delays = problem.path_delays(&primal.sigma);
    let mu = dual
        .mu
        .iter()
        .zip(&delays)
        .zip(problem.flows)
        .map(|((ms, ds), f)| {
            ms.iter()
                .zip(ds)
                .map(|(&m, &d)| (m - params.gamma * (f.delay_bound - d)).max(0.0))
                .collect()
        })
        .collect();
    DualState {
        lambda,
        mu,
        iteration: dual.iteration + 1,
    }
}


#[cfg(test)]
mod tests {
    use super::testing::*;
    use super::*;
    use crate::topology::fixtures::{fig5_flow, fig5_network};

    #[test]
    fn utility_values() {
        assert!((utility(&[1.0], &[std::f64::consts::E]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(utility(&[1.0, 1.0], &[1.0, 1.0]).unwrap(), 0.0);
        assert_eq!(utility(&[0.0, 1.0], &[-3.0, 1.0]).unwrap(), 0.0);
        assert!(matches!(
            utility(&[1.0], &[0.0]),
            Err(SolverError::NonPositiveRate { path: 0, .. })
        ));
    }

    #[test]
    fn mu_link_sums_crossing_paths() {
        let net = fig5_network();
        let flows = vec![fig5_flow(&net, 10.0)];
        let inst = Instance::new(net, flows, vec![1.0; 8]);
        let p = inst.problem();
        let mu = vec![vec![0.2, 0.3, 0.0, 0.0, 0.7]];
        let m = mu_link(&p, &mu);
        // (s,1) carries p1 and p2.
        assert!((m[0] - 0.5).abs() < 1e-15);
        // (5,6) carries p5 only.
        assert_eq!(m[9], 0.7);
        // (3,2) carries p3 only, priced at zero.
        assert_eq!(m[6], 0.0);
    }

    #[test]
    fn subgradient_arithmetic() {
        let inst = single_link(14.0, 100.0);
        let p = inst.problem();
        let primal = PrimalState {
            x: vec![vec![9.5]],
            sigma: vec![0.3],
            c_hat: vec![10.0],
        };
        assert!((lambda_subgradient(LinkId(0), &primal, &p) - 0.2).abs() < 1e-12);
        let idle = PrimalState {
            x: vec![vec![0.0]],
            sigma: vec![1e-4],
            c_hat: vec![0.0],
        };
        assert_eq!(lambda_subgradient(LinkId(0), &idle, &p), -1e-4);
        let tight = PrimalState {
            x: vec![vec![9.5]],
            sigma: vec![0.5],
            c_hat: vec![10.0],
        };
        assert_eq!(lambda_subgradient(LinkId(0), &tight, &p), 0.0);
    }

    #[test]
    fn dual_update_steps_and_projects() {
        let inst = single_link(14.0, 2.0);
        let p = inst.problem();
        let params = SolverParams::default();
        let primal = PrimalState {
            x: vec![vec![9.5]],
            sigma: vec![0.4],
            c_hat: vec![10.0],
        };
        // Delay 1/0.4 = 2.5 exceeds the bound of 2.
        let d = DualState {
            lambda: vec![1.0],
            mu: vec![vec![0.5]],
            iteration: 7,
        };
        let next = dual_update(&d, &primal, &p, &params);
        assert!((next.lambda[0] - (1.0 - 0.01 * 0.1)).abs() < 1e-12);
        assert!((next.mu[0][0] - 0.505).abs() < 1e-12);
        assert_eq!(next.iteration, 8);

        let primal = PrimalState {
            x: vec![vec![8.0]],
            sigma: vec![1.0],
            c_hat: vec![10.0],
        };
        let d = DualState {
            lambda: vec![0.001],
            mu: vec![vec![0.0]],
            iteration: 0,
        };
        let next = dual_update(&d, &primal, &p, &params);
        assert_eq!(next.lambda[0], 0.0);
        assert_eq!(next.mu[0][0], 0.0);
    }

    #[test]
    fn params_validation() {
        let net = fig5_network();
        assert!(SolverParams::default().validate(&net).is_ok());
        let p = SolverParams {
            gamma: 0.0,
            ..Default::default()
        };
        assert!(p.validate(&net).is_err());
        let p = SolverParams {
            sigma_min: 20.0,
            ..Default::default()
        };
        assert!(p.validate(&net).is_err());
        assert_eq!(SolverParams::default().sigma_max(&net), 10.0);
    }
}
