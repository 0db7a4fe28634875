//! Log-densities of the prior families, on the natural scale.

use statrs::function::gamma::ln_gamma;
use std::f64::consts::PI;

/// `log N(x | mu, sigma^2)`.
pub fn normal_log_density(x: f64, mu: f64, sigma: f64) -> f64 {
    let z = (x - mu) / sigma;
    -0.5 * (2.0 * PI).ln() - sigma.ln() - 0.5 * z * z
}

/// Log-normal log-density with log-scale location `mu` and scale `sigma`.
pub fn log_normal_log_density(x: f64, mu: f64, sigma: f64) -> f64 {
    if !(x > 0.0) {
        return f64::NEG_INFINITY;
    }
    let lx = x.ln();
    -lx + normal_log_density(lx, mu, sigma)
}

/// Gamma log-density in shape-rate form, `b^a / Gamma(a) x^(a-1) e^(-b x)`.
pub fn gamma_log_density(x: f64, shape: f64, rate: f64) -> f64 {
    if !(x > 0.0) {
        return f64::NEG_INFINITY;
    }
    shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * x.ln() - rate * x
}
