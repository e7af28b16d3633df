//! Brute-force reference optimizer for desk-size instances.
//!
//! Searches schedule mixtures on a simplex grid and, for each mixture, path
//! rates on a coarse-to-fine grid. Given rates and a mixture, the best
//! margin on each used link is all of its leftover capacity (capped at
//! `sigma_max`), since utility does not depend on margins and a larger
//! margin only lowers delay.

use thiserror::Error;

use crate::interference::CapacityRegion;
use crate::topology::{Flow, Network};
use crate::trust::{trust_incidence, TrustIncidenceMatrix, TrustState};

pub const MAX_FLOWS: usize = 2;
pub const MAX_PATHS: usize = 4;
pub const MAX_LINKS: usize = 6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("instance too large for brute force ({flows} flows, {paths} paths, {links} links)")]
    TooLarge {
        flows: usize,
        paths: usize,
        links: usize,
    },
    #[error("no feasible grid point")]
    NoFeasiblePoint,
    #[error("invalid oracle configuration: {0}")]
    BadConfig(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleConfig {
    /// Final rate grid spacing in kbps.
    pub resolution: f64,
    /// Spacing of the coarse mixture grid on the simplex.
    pub beta_step: f64,
    /// Smallest mixture transfer tried during refinement.
    pub beta_resolution: f64,
    pub x_floor: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub kappa: f64,
}

impl OracleConfig {
    /// Bounds shared with the solver defaults; `sigma_max` is the largest
    /// capacity.
    pub fn for_network(network: &Network, kappa: f64) -> Self {
        OracleConfig {
            resolution: 1e-3,
            beta_step: 0.1,
            beta_resolution: 1e-3,
            x_floor: 1e-6,
            sigma_min: 1e-4,
            sigma_max: network.max_capacity(),
            kappa,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub objective: f64,
    pub x: Vec<Vec<f64>>,
    pub sigma: Vec<f64>,
    /// Mixture weights over the region's vertices.
    pub beta: Vec<f64>,
    pub c_hat: Vec<f64>,
    pub resolution: f64,
    pub evaluations: u64,
}

struct Search<'a> {
    flows: &'a [Flow],
    trust: Vec<TrustIncidenceMatrix>,
    used: Vec<bool>,
    cfg: &'a OracleConfig,
    evaluations: u64,
}

impl Search<'_> {
    fn paths(&self) -> usize {
        self.flows.iter().map(|f| f.paths.len()).sum()
    }

    /// Objective of a flattened rate vector under capacities `c_hat`, or
    /// `None` when infeasible.
    fn evaluate(&mut self, x: &[f64], c_hat: &[f64]) -> Option<f64> {
        self.evaluations += 1;
        let mut load = vec![0.0; c_hat.len()];
        let mut u = 0.0;
        let mut at = 0;
        for (f, t) in self.flows.iter().zip(&self.trust) {
            let xs = &x[at..at + f.paths.len()];
            at += f.paths.len();
            if xs.iter().sum::<f64>() > f.max_rate + 1e-12 {
                return None;
            }
            let pt = t.path_trust();
            let delivered: f64 = pt.iter().zip(xs).map(|(a, b)| a * b).sum();
            if delivered < f.reliability_threshold - 1e-12 {
                return None;
            }
            for (k, &xk) in xs.iter().enumerate() {
                if pt[k] > 0.0 {
                    u += pt[k] * xk.ln();
                }
                for (l, w) in t.row(k).iter().enumerate() {
                    load[l] += w * xk;
                }
            }
        }
        let sigma = self.margins(&load, c_hat);
        if (0..sigma.len()).any(|l| self.used[l] && sigma[l] < self.cfg.sigma_min) {
            return None;
        }
        for f in self.flows {
            for p in &f.paths {
                let d: f64 = p.links().iter().map(|l| self.cfg.kappa / sigma[l.0]).sum();
                if d > f.delay_bound + 1e-12 {
                    return None;
                }
            }
        }
        Some(u)
    }

    fn margins(&self, load: &[f64], c_hat: &[f64]) -> Vec<f64> {
        load.iter()
            .zip(c_hat)
            .zip(&self.used)
            .map(|((l, c), &u)| {
                if u {
                    (c - l).min(self.cfg.sigma_max)
                } else {
                    self.cfg.sigma_min
                }
            })
            .collect()
    }

    /// Best rates for fixed capacities: full grid at a coarse spacing, then
    /// a 5-point window per coordinate around the incumbent at halving
    /// spacings.
    fn best_rates(&mut self, c_hat: &[f64]) -> Option<(f64, Vec<f64>)> {
        let n = self.paths();
        let caps: Vec<f64> = self
            .flows
            .iter()
            .flat_map(|f| std::iter::repeat_n(f.max_rate, f.paths.len()))
            .collect();
        let floor = self.cfg.x_floor;
        let intervals = if n <= 2 { 20 } else { 10 };
        let mut step: Vec<f64> = caps
            .iter()
            .map(|c| (c - floor) / intervals as f64)
            .collect();

        let mut best: Option<(f64, Vec<f64>)> = None;
        let coarse: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..=intervals)
                    .map(|j| floor + j as f64 * step[i])
                    .collect()
            })
            .collect();
        self.scan(&coarse, c_hat, &mut best);
        while step.iter().any(|&s| s > self.cfg.resolution) {
            let Some((_, center)) = best.clone() else {
                break;
            };
            step.iter_mut()
                .for_each(|s| *s = (*s / 2.0).max(self.cfg.resolution));
            let axes: Vec<Vec<f64>> = (0..n)
                .map(|i| {
                    (-2..=2)
                        .map(|j| center[i] + j as f64 * step[i])
                        .filter(|&v| v >= floor && v <= caps[i])
                        .collect()
                })
                .collect();
            self.scan(&axes, c_hat, &mut best);
        }
        best
    }

    fn scan(&mut self, axes: &[Vec<f64>], c_hat: &[f64], best: &mut Option<(f64, Vec<f64>)>) {
        let n = axes.len();
        if axes.iter().any(|a| a.is_empty()) {
            return;
        }
        let mut idx = vec![0usize; n];
        let mut x = vec![0.0; n];
        loop {
            for i in 0..n {
                x[i] = axes[i][idx[i]];
            }
            if let Some(u) = self.evaluate(&x, c_hat) {
                if best.as_ref().is_none_or(|b| u > b.0) {
                    *best = Some((u, x.clone()));
                }
            }
            let mut i = 0;
            loop {
                if i == n {
                    return;
                }
                idx[i] += 1;
                if idx[i] < axes[i].len() {
                    break;
                }
                idx[i] = 0;
                i += 1;
            }
        }
    }
}

fn mixture(region: &CapacityRegion, beta: &[f64]) -> Vec<f64> {
    let n = region.vertices().first().map_or(0, |v| v.0.len());
    let mut c = vec![0.0; n];
    for (b, v) in beta.iter().zip(region.vertices()) {
        for (ci, r) in c.iter_mut().zip(&v.0) {
            *ci += b * r;
        }
    }
    c
}

/// All weight vectors on `k` coordinates with entries in multiples of
/// `1 / steps` summing to one.
fn simplex_grid(k: usize, steps: usize) -> Vec<Vec<usize>> {
    fn rec(k: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k == 1 {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for v in 0..=left {
            cur.push(v);
            rec(k - 1, left - v, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k > 0 {
        rec(k, steps, &mut Vec::new(), &mut out);
    }
    out
}

/// Exhaustive grid search for the best feasible point of the full problem.
pub fn brute_force(
    network: &Network,
    flows: &[Flow],
    trust: &TrustState,
    region: &CapacityRegion,
    cfg: &OracleConfig,
) -> Result<OracleResult, OracleError> {
    let paths: usize = flows.iter().map(|f| f.paths.len()).sum();
    if flows.len() > MAX_FLOWS || paths > MAX_PATHS || network.link_count() > MAX_LINKS {
        return Err(OracleError::TooLarge {
            flows: flows.len(),
            paths,
            links: network.link_count(),
        });
    }
    if !(cfg.resolution > 0.0) || !(cfg.beta_step > 0.0 && cfg.beta_step <= 1.0) {
        return Err(OracleError::BadConfig(
            "resolution and beta_step must be positive".into(),
        ));
    }
    let mut used = vec![false; network.link_count()];
    for f in flows {
        for (u, v) in used.iter_mut().zip(f.used_links(network)) {
            *u |= v;
        }
    }
    let mut search = Search {
        flows,
        trust: flows
            .iter()
            .map(|f| trust_incidence(trust, f, network))
            .collect(),
        used,
        cfg,
        evaluations: 0,
    };

    // The empty set is dominated by any maximal set, so it gets no weight.
    let support: Vec<usize> = (0..region.len())
        .filter(|&e| !region.sets()[e].is_empty())
        .collect();
    let full = |w: &[f64]| -> Vec<f64> {
        let mut beta = vec![0.0; region.len()];
        for (&e, &v) in support.iter().zip(w) {
            beta[e] = v;
        }
        if support.is_empty() && !beta.is_empty() {
            beta[0] = 1.0;
        }
        beta
    };

    let steps = (1.0 / cfg.beta_step).round().max(1.0) as usize;
    let mut best: Option<(f64, Vec<f64>, Vec<f64>)> = None;
    let grid = if support.is_empty() {
        vec![vec![]]
    } else {
        simplex_grid(support.len(), steps)
    };
    for g in grid {
        let w: Vec<f64> = g.iter().map(|&v| v as f64 / steps as f64).collect();
        let beta = full(&w);
        if let Some((u, x)) = search.best_rates(&mixture(region, &beta)) {
            if best.as_ref().is_none_or(|b| u > b.0) {
                best = Some((u, x, w));
            }
        }
    }
    let Some((mut u, mut x, mut w)) = best else {
        return Err(OracleError::NoFeasiblePoint);
    };

    // Pairwise mass transfers at halving amounts.
    let mut delta = cfg.beta_step / 2.0;
    while delta >= cfg.beta_resolution && w.len() > 1 {
        let mut improved = true;
        while improved {
            improved = false;
            for i in 0..w.len() {
                for j in 0..w.len() {
                    if i == j || w[i] < delta {
                        continue;
                    }
                    let mut cand = w.clone();
                    cand[i] -= delta;
                    cand[j] += delta;
                    if let Some((cu, cx)) = search.best_rates(&mixture(region, &full(&cand))) {
                        if cu > u + 1e-12 {
                            (u, x, w) = (cu, cx, cand);
                            improved = true;
                        }
                    }
                }
            }
        }
        delta /= 2.0;
    }

    let beta = full(&w);
    let c_hat = mixture(region, &beta);
    let mut load = vec![0.0; network.link_count()];
    let mut xs = Vec::new();
    let mut at = 0;
    for (f, t) in flows.iter().zip(&search.trust) {
        let part = x[at..at + f.paths.len()].to_vec();
        at += f.paths.len();
        for (k, &xk) in part.iter().enumerate() {
            for (l, wgt) in t.row(k).iter().enumerate() {
                load[l] += wgt * xk;
            }
        }
        xs.push(part);
    }
    let sigma = search.margins(&load, &c_hat);
    Ok(OracleResult {
        objective: u,
        x: xs,
        sigma,
        beta,
        c_hat,
        resolution: cfg.resolution,
        evaluations: search.evaluations,
    })
}

/// A violated constraint found by [`check_feasible`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    RateFloor { flow: usize, path: usize },
    RateCap { flow: usize },
    Reliability { flow: usize },
    MarginBounds { link: usize },
    Capacity { link: usize },
    Delay { flow: usize, path: usize },
    Mixture,
}

/// Independent check of every constraint of the full problem at a point
/// given by rates, margins and mixture weights. Recomputes trust products
/// directly from node values.
#[allow(clippy::too_many_arguments)]
pub fn check_feasible(
    network: &Network,
    flows: &[Flow],
    trust: &TrustState,
    region: &CapacityRegion,
    x: &[Vec<f64>],
    sigma: &[f64],
    beta: &[f64],
    cfg: &OracleConfig,
    tol: f64,
) -> Vec<Violation> {
    let mut out = Vec::new();
    if beta.len() != region.len()
        || beta.iter().any(|&b| b < -tol)
        || (beta.iter().sum::<f64>() - 1.0).abs() > tol
    {
        out.push(Violation::Mixture);
    }
    let c_hat = mixture(region, beta);
    let mut load = vec![0.0; network.link_count()];
    let mut used = vec![false; network.link_count()];
    for (s, f) in flows.iter().enumerate() {
        let xs = &x[s];
        let mut delivered = 0.0;
        for (k, p) in f.paths.iter().enumerate() {
            if xs[k] < cfg.x_floor - tol {
                out.push(Violation::RateFloor { flow: s, path: k });
            }
            let mut prefix = 1.0;
            for (&l, &rx) in p.links().iter().zip(p.receivers()) {
                prefix *= trust.value(rx);
                load[l.0] += prefix * xs[k];
                used[l.0] = true;
            }
            delivered += prefix * xs[k];
            let d: f64 = p.links().iter().map(|l| cfg.kappa / sigma[l.0]).sum();
            if d > f.delay_bound + tol {
                out.push(Violation::Delay { flow: s, path: k });
            }
        }
        if xs.iter().sum::<f64>() > f.max_rate + tol {
            out.push(Violation::RateCap { flow: s });
        }
        if delivered < f.reliability_threshold - tol {
            out.push(Violation::Reliability { flow: s });
        }
    }
    for l in (0..network.link_count()).filter(|&l| used[l]) {
        if sigma[l] < cfg.sigma_min - tol || sigma[l] > cfg.sigma_max + tol {
            out.push(Violation::MarginBounds { link: l });
        }
        if c_hat[l] - load[l] - sigma[l] < -tol {
            out.push(Violation::Capacity { link: l });
        }
    }
    out
}
