//! Mortality intensity driven by a stochastic Volterra square-root equation.
//!
//! The intensity decomposes as λ̂_t = l(t) + λ_t where l is a deterministic
//! baseline shift and λ solves
//!
//! λ_t = λ_0 + ∫_0^t K(t-s)(b_1 − a_1 λ_s) ds + ∫_0^t K(t-s) σ_λ √λ_s dW_0(s).
//!
//! Simulation uses a left-point Euler scheme on the convolution with exactly
//! integrated kernel cells and full truncation: the diffusion reads √(λ⁺) and
//! stored values are clamped at zero. A constant (or effectively constant)
//! kernel collapses the convolution to a running sum, recovering the classic
//! square-root diffusion at O(n) per path.

mod cond_mean;
mod riccati;

pub use cond_mean::{conditional_mean, CondMeanContext, MeanRoute};
pub use riccati::{
    exp_functional, global_existence_margin, moment_bound_probe, solve_riccati, RiccatiSolution,
};

use crate::error::{Error, Result};
use crate::grid::DiscreteGrid;
use crate::kernels::KernelSpec;
use crate::rng::{stream_rng, StreamKind};
use crate::timefn::TimeFn;
use rand::Rng;
use rand_distr::StandardNormal;

/// Parameters of the intensity model.
#[derive(Debug, Clone)]
pub struct MortalityParams {
    pub lambda0: f64,
    /// Mean-reversion numerator; the long-run level is b1 / a1.
    pub b1: f64,
    /// Mean-reversion speed.
    pub a1: f64,
    pub sigma_lambda: f64,
    /// Deterministic baseline shift l(t) ≥ 0 (zero by default).
    pub l: TimeFn,
    pub kernel: KernelSpec,
}

impl MortalityParams {
    pub fn new(
        lambda0: f64,
        b1: f64,
        a1: f64,
        sigma_lambda: f64,
        l: TimeFn,
        kernel: KernelSpec,
    ) -> Result<Self> {
        for (name, v) in [("lambda0", lambda0), ("b1", b1), ("a1", a1)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Parameter(format!("{name} must be positive, got {v}")));
            }
        }
        if !(sigma_lambda >= 0.0) || !sigma_lambda.is_finite() {
            return Err(Error::Parameter(format!(
                "sigma_lambda must be nonnegative, got {sigma_lambda}"
            )));
        }
        Ok(Self { lambda0, b1, a1, sigma_lambda, l, kernel })
    }

    /// Long-run mean level b1/a1 of the intensity.
    pub fn mean_level(&self) -> f64 {
        self.b1 / self.a1
    }
}

/// A simulated trajectory of (λ, λ̂) with its driving Brownian increments.
///
/// Increments are retained because conditional forecasts of future mortality
/// weigh the realized history ∫ E_B(s-u) σ_λ √λ_u dW_0(u).
#[derive(Debug, Clone)]
pub struct MortalityPath {
    grid: DiscreteGrid,
    lambda: Vec<f64>,
    lambda_hat: Vec<f64>,
    dw0: Vec<f64>,
}

impl MortalityPath {
    /// Reassemble a path from stored pieces (lengths must match the grid and
    /// intensities must be nonnegative).
    pub fn from_parts(
        grid: DiscreteGrid,
        lambda: Vec<f64>,
        lambda_hat: Vec<f64>,
        dw0: Vec<f64>,
    ) -> Result<Self> {
        if lambda.len() != grid.n_nodes()
            || lambda_hat.len() != grid.n_nodes()
            || dw0.len() != grid.n_steps()
        {
            return Err(Error::Shape(format!(
                "path pieces ({}, {}, {}) do not fit a grid with {} nodes",
                lambda.len(),
                lambda_hat.len(),
                dw0.len(),
                grid.n_nodes()
            )));
        }
        if lambda.iter().any(|v| *v < 0.0) {
            return Err(Error::Parameter("lambda values must be nonnegative".into()));
        }
        Ok(Self { grid, lambda, lambda_hat, dw0 })
    }

    pub fn grid(&self) -> &DiscreteGrid {
        &self.grid
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn lambda_hat(&self) -> &[f64] {
        &self.lambda_hat
    }

    pub fn dw0(&self) -> &[f64] {
        &self.dw0
    }

    pub fn lambda_at(&self, i: usize) -> f64 {
        self.lambda[i]
    }

    pub fn lambda_hat_at(&self, i: usize) -> f64 {
        self.lambda_hat[i]
    }

    /// Trapezoid of λ over the first `i` cells.
    pub fn integrated_lambda(&self, i: usize) -> f64 {
        let dt = self.grid.dt();
        let mut acc = 0.0;
        for j in 0..i {
            acc += 0.5 * (self.lambda[j] + self.lambda[j + 1]) * dt;
        }
        acc
    }
}

/// Simulates one path; deterministic in `(params, grid, seed)`.
pub fn simulate_path(params: &MortalityParams, grid: &DiscreteGrid, seed: u64) -> Result<MortalityPath> {
    simulate_path_indexed(params, grid, seed, 0)
}

/// Simulates the path with index `path_index` of the Monte Carlo family
/// rooted at `seed` (substream scheme in [`crate::rng`]).
pub fn simulate_path_indexed(
    params: &MortalityParams,
    grid: &DiscreteGrid,
    seed: u64,
    path_index: u64,
) -> Result<MortalityPath> {
    let mut rng = stream_rng(seed, path_index, StreamKind::MortalityW0);
    let sqrt_dt = grid.dt().sqrt();
    let dw0: Vec<f64> = (0..grid.n_steps())
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            z * sqrt_dt
        })
        .collect();
    simulate_with_increments(params, grid, dw0)
}

/// Continuation sampler: reuses `prefix` increments (a realized history) and
/// draws the remaining ones fresh, so the path is measurable with respect to
/// the realized past plus new randomness.
pub fn simulate_path_with_prefix(
    params: &MortalityParams,
    grid: &DiscreteGrid,
    prefix: &[f64],
    seed: u64,
    path_index: u64,
) -> Result<MortalityPath> {
    if prefix.len() > grid.n_steps() {
        return Err(Error::Shape(format!(
            "prefix of {} increments exceeds grid with {} steps",
            prefix.len(),
            grid.n_steps()
        )));
    }
    let mut rng = stream_rng(seed, path_index, StreamKind::MortalityW0);
    let sqrt_dt = grid.dt().sqrt();
    let mut dw0 = Vec::with_capacity(grid.n_steps());
    dw0.extend_from_slice(prefix);
    for _ in prefix.len()..grid.n_steps() {
        let z: f64 = rng.sample(StandardNormal);
        dw0.push(z * sqrt_dt);
    }
    simulate_with_increments(params, grid, dw0)
}

/// Core scheme, pure in the increments.
pub fn simulate_with_increments(
    params: &MortalityParams,
    grid: &DiscreteGrid,
    dw0: Vec<f64>,
) -> Result<MortalityPath> {
    if dw0.len() != grid.n_steps() {
        return Err(Error::Shape(format!(
            "{} increments for a grid with {} steps",
            dw0.len(),
            grid.n_steps()
        )));
    }
    let n = grid.n_steps();
    let dt = grid.dt();
    let mut lambda = vec![0.0; n + 1];
    lambda[0] = params.lambda0;
    // Combined per-node source: drift plus cell-averaged diffusion, so that
    // lambda_i = lambda_0 + sum_j W_{i-j} * src_j.
    let mut src = vec![0.0; n];

    if let Some(c_eff) = params.kernel.as_effective_constant() {
        let w = c_eff * dt;
        let mut acc = 0.0;
        for i in 1..=n {
            let prev = lambda[i - 1];
            src[i - 1] = (params.b1 - params.a1 * prev)
                + params.sigma_lambda * prev.sqrt() * dw0[i - 1] / dt;
            acc += src[i - 1];
            lambda[i] = (params.lambda0 + w * acc).max(0.0);
        }
    } else {
        let w = params.kernel.cell_weights(grid);
        for i in 1..=n {
            let prev = lambda[i - 1];
            src[i - 1] = (params.b1 - params.a1 * prev)
                + params.sigma_lambda * prev.sqrt() * dw0[i - 1] / dt;
            let mut acc = 0.0;
            for j in 0..i {
                acc += w[i - j - 1] * src[j];
            }
            lambda[i] = (params.lambda0 + acc).max(0.0);
        }
    }

    let lambda_hat = (0..=n)
        .map(|i| params.l.eval(grid.node(i)) + lambda[i])
        .collect();
    Ok(MortalityPath { grid: grid.clone(), lambda, lambda_hat, dw0 })
}
