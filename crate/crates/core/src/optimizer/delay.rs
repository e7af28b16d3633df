//! Link margin control.

/// Per-link delay as a function of margin.
pub fn phi(sigma: f64) -> f64 {
    1.0 / sigma
}

pub fn dphi(sigma: f64) -> f64 {
    -1.0 / (sigma * sigma)
}

/// Margin maximizing `-lambda * sigma - kappa * mu_link * phi(sigma)` on
/// `[sigma_min, sigma_max]`.
///
/// An unpriced delay (`mu_link = 0`) takes the smallest margin even when the
/// link price is also zero.
pub fn delay_control(lambda: f64, mu_link: f64, kappa: f64, sigma_min: f64, sigma_max: f64) -> f64 {
    if mu_link <= 0.0 {
        sigma_min
    } else if lambda <= 0.0 {
        sigma_max
    } else {
        (kappa * mu_link / lambda)
            .sqrt()
            .clamp(sigma_min, sigma_max)
    }
}

/// Maximum of `-lambda * sigma - kappa * mu_link / sigma` over the margin
/// bounds.
pub fn margin_supremum(
    lambda: f64,
    mu_link: f64,
    kappa: f64,
    sigma_min: f64,
    sigma_max: f64,
) -> f64 {
    let s = delay_control(lambda, mu_link, kappa, sigma_min, sigma_max);
    -lambda * s - kappa * mu_link * phi(s)
}
