//! Source rate control.

use crate::topology::Flow;
use crate::trust::TrustIncidenceMatrix;

use super::SolverError;

/// Output of [`source_rate_control`].
#[derive(Debug, Clone, PartialEq)]
pub struct RateControl {
    pub rates: Vec<f64>,
    /// No floor, cap, reliability correction or zero-price fallback was
    /// applied, so every rate is the unconstrained stationary point.
    pub interior: bool,
    /// Some trusted path had zero trust-weighted price.
    pub zero_price: bool,
}

fn reachable(flow: &Flow, t: &[f64]) -> f64 {
    flow.max_rate * t.iter().cloned().fold(0.0, f64::max)
}

/// Rates of one flow at link prices `lambda`: `x_k = t_k / (T lambda)_k`,
/// then floored, scaled onto the rate cap, and shifted onto the reliability
/// hyperplane if it is violated.
pub fn source_rate_control(
    flow: &Flow,
    trust: &TrustIncidenceMatrix,
    lambda: &[f64],
    x_floor: f64,
) -> Result<RateControl, SolverError> {
    let t = trust.path_trust();
    let best = reachable(flow, t);
    if flow.reliability_threshold > best {
        return Err(SolverError::Infeasible {
            flow: flow.name.clone(),
            threshold: flow.reliability_threshold,
            reachable: best,
        });
    }
    let den: Vec<f64> = (0..trust.rows())
        .map(|k| trust.row(k).iter().zip(lambda).map(|(a, b)| a * b).sum())
        .collect();

    let n = t.len();
    let mut interior = true;
    let mut zero_price = false;
    let mut x = vec![0.0; n];
    for k in 0..n {
        if t[k] == 0.0 {
            x[k] = x_floor;
            interior = false;
        } else if den[k] > 0.0 {
            x[k] = t[k] / den[k];
        } else {
            zero_price = true;
        }
    }
    if zero_price {
        interior = false;
        let free = |k: usize| t[k] > 0.0 && den[k] <= 0.0;
        let others: f64 = (0..n).filter(|&k| !free(k)).map(|k| x[k]).sum();
        let tsum: f64 = (0..n).filter(|&k| free(k)).map(|k| t[k]).sum();
        let share = (flow.max_rate - others).max(0.0);
        for k in (0..n).filter(|&k| free(k)) {
            x[k] = share * t[k] / tsum;
        }
    }

    for v in x.iter_mut() {
        if *v < x_floor {
            *v = x_floor;
            interior = false;
        }
    }
    let total: f64 = x.iter().sum();
    if total > flow.max_rate {
        let f = flow.max_rate / total;
        x.iter_mut().for_each(|v| *v *= f);
        interior = false;
    }
    let delivered: f64 = t.iter().zip(&x).map(|(a, b)| a * b).sum();
    if delivered < flow.reliability_threshold {
        let tt: f64 = t.iter().map(|a| a * a).sum();
        let shift = (flow.reliability_threshold - delivered) / tt;
        for (v, &tk) in x.iter_mut().zip(t) {
            *v = (*v + shift * tk).max(x_floor);
        }
        interior = false;
    }
    Ok(RateControl {
        rates: x,
        interior,
        zero_price,
    })
}

/// Exact maximizer of `sum_k t_k ln x_k - den_k x_k` over
/// `{x >= x_floor, sum x <= max_rate, sum t x >= threshold}`, returned with
/// its value.
///
/// Stationarity gives `x_k = max(x_floor, t_k / (den_k + nu - rho t_k))`
/// with multipliers `nu` for the cap and `rho` for the reliability bound,
/// both found by bisection.
pub fn rate_supremum(
    t: &[f64],
    den: &[f64],
    max_rate: f64,
    threshold: f64,
    x_floor: f64,
) -> (Vec<f64>, f64) {
    let n = t.len();
    let mut x = vec![0.0; n];
    let fill = |nu: f64, rho: f64, x: &mut [f64]| -> bool {
        for k in 0..n {
            if t[k] == 0.0 {
                x[k] = x_floor;
                continue;
            }
            let d = den[k] + nu - rho * t[k];
            if d <= 0.0 {
                return false;
            }
            x[k] = (t[k] / d).max(x_floor);
        }
        true
    };
    let cap_multiplier = |rho: f64, x: &mut Vec<f64>| -> f64 {
        let lower = (0..n)
            .filter(|&k| t[k] > 0.0)
            .map(|k| rho * t[k] - den[k])
            .fold(0.0, f64::max);
        if lower == 0.0 && fill(0.0, rho, x) && x.iter().sum::<f64>() <= max_rate {
            return 0.0;
        }
        let tsum: f64 = t.iter().sum();
        let room = (max_rate - n as f64 * x_floor).max(f64::MIN_POSITIVE);
        let (mut lo, mut hi) = (lower, lower + tsum / room + 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if fill(mid, rho, x) && x.iter().sum::<f64>() <= max_rate {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        fill(hi, rho, x);
        hi
    };
    let delivered = |x: &[f64]| -> f64 { t.iter().zip(x).map(|(a, b)| a * b).sum() };

    cap_multiplier(0.0, &mut x);
    if delivered(&x) < threshold {
        let mut hi = 1.0;
        for _ in 0..200 {
            cap_multiplier(hi, &mut x);
            if delivered(&x) >= threshold {
                break;
            }
            hi *= 2.0;
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            cap_multiplier(mid, &mut x);
            if delivered(&x) >= threshold {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        cap_multiplier(hi, &mut x);
    }
    let value = (0..n)
        .map(|k| if t[k] > 0.0 { t[k] * x[k].ln() } else { 0.0 } - den[k] * x[k])
        .sum();
    (x, value)
}
