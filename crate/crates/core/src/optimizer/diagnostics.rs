//! Primal and dual objectives, constraint slacks and stationarity residuals.

use crate::interference::max_weight_schedule_exact;

use super::{
    margin_supremum, mu_link, rate_supremum, utility, DualState, PrimalState, Problem, SolverError,
    SolverParams,
};

/// Constraint slacks; every entry is `>= 0` exactly when its constraint
/// holds.
#[derive(Debug, Clone, PartialEq)]
pub struct Slacks {
    /// Per link: `c_hat - load - sigma`. Links on no path carry no margin,
    /// so theirs is `c_hat - load`.
    pub capacity: Vec<f64>,
    /// Per flow and path: `D_s - sum kappa / sigma`.
    pub delay: Vec<Vec<f64>>,
    /// Per flow: `R_s - sum_k x_k`.
    pub rate_cap: Vec<f64>,
    /// Per flow: `sum_k t_k x_k - R_thres`.
    pub reliability: Vec<f64>,
}

impl Slacks {
    pub fn min(&self) -> f64 {
        self.capacity
            .iter()
            .chain(self.delay.iter().flatten())
            .chain(&self.rate_cap)
            .chain(&self.reliability)
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn min_capacity(&self) -> f64 {
        self.capacity.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn min_delay(&self) -> f64 {
        self.delay
            .iter()
            .flatten()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    /// Total source utility.
    pub primal: f64,
    /// Dual function value.
    pub dual: f64,
    /// `dual - primal`.
    pub gap: f64,
    pub slacks: Slacks,
    /// Largest `|t_k / x_k - (T lambda)_k|` over flows whose rates are
    /// strictly inside their constraint set.
    pub kkt_rate: Option<f64>,
    /// Largest `|lambda - kappa mu_link / sigma^2|` over links with an
    /// unclamped margin.
    pub kkt_delay: Option<f64>,
}

impl Diagnostics {
    /// Gap relative to `max(|primal|, 1)`.
    pub fn relative_gap(&self) -> f64 {
        self.gap / self.primal.abs().max(1.0)
    }
}

pub fn slacks(primal: &PrimalState, problem: &Problem) -> Slacks {
    let load = problem.link_flows(&primal.x);
    let capacity = (0..problem.link_count())
        .map(|l| {
            let margin = if problem.used[l] {
                primal.sigma[l]
            } else {
                0.0
            };
            primal.c_hat[l] - load[l] - margin
        })
        .collect();
    let delay = problem
        .path_delays(&primal.sigma)
        .into_iter()
        .zip(problem.flows)
        .map(|(ds, f)| ds.into_iter().map(|d| f.delay_bound - d).collect())
        .collect();
    let rate_cap = problem
        .flows
        .iter()
        .zip(&primal.x)
        .map(|(f, xs)| f.max_rate - xs.iter().sum::<f64>())
        .collect();
    let reliability = problem
        .flows
        .iter()
        .zip(&problem.trust)
        .zip(&primal.x)
        .map(|((f, t), xs)| {
            let d: f64 = t.path_trust().iter().zip(xs).map(|(a, b)| a * b).sum();
            d - f.reliability_threshold
        })
        .collect();
    Slacks {
        capacity,
        delay,
        rate_cap,
        reliability,
    }
}

/// Dual function: the supremum of the Lagrangian over rates, margins and
/// schedules, plus the delay-price credit `sum mu_sk D_s`.
pub fn dual_value(problem: &Problem, dual: &DualState, params: &SolverParams) -> f64 {
    let sigma_max = params.sigma_max(problem.network);
    let mut h = 0.0;
    for (s, f) in problem.flows.iter().enumerate() {
        let den = problem.path_prices(s, &dual.lambda);
        let t = problem.trust[s].path_trust();
        h += rate_supremum(t, &den, f.max_rate, f.reliability_threshold, params.x_floor).1;
        h += dual.mu[s].iter().sum::<f64>() * f.delay_bound;
    }
    let ml = mu_link(problem, &dual.mu);
    for l in (0..problem.link_count()).filter(|&l| problem.used[l]) {
        h += margin_supremum(
            dual.lambda[l],
            ml[l],
            problem.kappa,
            params.sigma_min,
            sigma_max,
        );
    }
    h + max_weight_schedule_exact(problem.region, &dual.lambda).1
}

pub fn diagnostics(
    primal: &PrimalState,
    dual: &DualState,
    problem: &Problem,
    params: &SolverParams,
) -> Result<Diagnostics, SolverError> {
    let mut u = 0.0;
    for (t, xs) in problem.trust.iter().zip(&primal.x) {
        u += utility(t.path_trust(), xs)?;
    }
    let h = dual_value(problem, dual, params);
    let slacks = slacks(primal, problem);

    let mut kkt_rate: Option<f64> = None;
    for (s, f) in problem.flows.iter().enumerate() {
        let xs = &primal.x[s];
        let t = problem.trust[s].path_trust();
        let den = problem.path_prices(s, &dual.lambda);
        let inside = xs.iter().all(|&x| x > params.x_floor)
            && slacks.rate_cap[s] > 0.0
            && (f.reliability_threshold == 0.0 || slacks.reliability[s] > 0.0)
            && t.iter().zip(&den).all(|(&a, &d)| a > 0.0 && d > 0.0);
        if inside {
            let r = (0..xs.len())
                .map(|k| (t[k] / xs[k] - den[k]).abs())
                .fold(0.0, f64::max);
            kkt_rate = Some(kkt_rate.map_or(r, |v| v.max(r)));
        }
    }

    let sigma_max = params.sigma_max(problem.network);
    let ml = mu_link(problem, &dual.mu);
    let mut kkt_delay: Option<f64> = None;
    #[allow(clippy::needless_range_loop)]
    for l in 0..problem.link_count() {
        let s = primal.sigma[l];
        if problem.used[l]
            && s > params.sigma_min
            && s < sigma_max
            && dual.lambda[l] > 0.0
            && ml[l] > 0.0
        {
            let r = (dual.lambda[l] - problem.kappa * ml[l] / (s * s)).abs();
            kkt_delay = Some(kkt_delay.map_or(r, |v| v.max(r)));
        }
    }

    Ok(Diagnostics {
        primal: u,
        dual: h,
        gap: h - u,
        slacks,
        kkt_rate,
        kkt_delay,
    })
}
