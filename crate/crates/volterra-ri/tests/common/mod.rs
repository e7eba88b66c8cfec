//! Shared oracles for the integration suites. Everything here is written
//! directly from closed forms, independent of the library's evaluation
//! paths.

/// Mean of the square-root diffusion dλ = (b1 − a1 λ)dt + σ√λ dW at time t.
pub fn cir_mean(lambda0: f64, b1: f64, a1: f64, t: f64) -> f64 {
    let e = (-a1 * t).exp();
    lambda0 * e + b1 / a1 * (1.0 - e)
}

/// Variance of the square-root diffusion at time t.
pub fn cir_variance(lambda0: f64, b1: f64, a1: f64, sigma: f64, t: f64) -> f64 {
    let e = (-a1 * t).exp();
    lambda0 * sigma * sigma / a1 * (e - e * e)
        + b1 / a1 * sigma * sigma / (2.0 * a1) * (1.0 - e) * (1.0 - e)
}

/// Conditional-mean closed form of the Markov mortality model.
pub fn markov_cond_mean(lambda_t: f64, b1: f64, a1: f64, horizon: f64) -> f64 {
    let e = (-a1 * horizon).exp();
    lambda_t * e + b1 / a1 * (1.0 - e)
}
