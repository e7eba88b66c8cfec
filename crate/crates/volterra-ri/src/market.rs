//! Financial and insurance dynamics.
//!
//! The insurer earns premiums at safety loading θ, cedes a 1−a(t) fraction of
//! each claim to a reinsurer charging loading η ≥ θ, and invests π(t) in a
//! risky asset dS = S(μ dt + σ dW₁). Claims arrive as a compound Poisson
//! process whose intensity k₁λ̂_t is driven by the simulated mortality path.
//! In compensated form the wealth follows
//!
//! dX = [rX + ν₁π + η k₁λ̂ μ_z a + (θ−η) k₁λ̂ μ_z] dt + πσ dW₁ − ∫ a z Ñ(dt,dz),
//!
//! which the propagator implements with an Euler drift/diffusion step and
//! exact jump application (the compensator is folded back into the drift, so
//! per step the drift carries (1+η) k₁λ̂ μ_z a and jumps subtract a·z).

use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::grid::DiscreteGrid;
use crate::mortality::MortalityPath;
use crate::rng::{stream_rng, StreamKind};
use crate::timefn::TimeFn;

/// Market and insurance coefficients.
#[derive(Debug, Clone)]
pub struct MarketParams {
    pub r: TimeFn,
    pub mu: TimeFn,
    pub sigma: TimeFn,
    /// Insurer safety loading θ.
    pub theta: f64,
    /// Reinsurer safety loading η ≥ θ.
    pub eta: f64,
    /// Claim-intensity multiplier k₁ (arrival intensity is k₁ λ̂_t).
    pub k1: f64,
}

impl MarketParams {
    pub fn new(r: TimeFn, mu: TimeFn, sigma: TimeFn, theta: f64, eta: f64, k1: f64) -> Result<Self> {
        if !(theta >= 0.0) || !theta.is_finite() {
            return Err(Error::Parameter(format!("theta must be nonnegative, got {theta}")));
        }
        if !(eta >= theta) || !eta.is_finite() {
            return Err(Error::Parameter(format!(
                "reinsurer loading eta must satisfy eta >= theta, got eta = {eta}, theta = {theta}"
            )));
        }
        if !(k1 >= 0.0) || !k1.is_finite() {
            return Err(Error::Parameter(format!("k1 must be nonnegative, got {k1}")));
        }
        if let Some(s) = sigma.as_constant() {
            if !(s > 0.0) {
                return Err(Error::Parameter(format!("sigma must be positive, got {s}")));
            }
        }
        Ok(Self { r, mu, sigma, theta, eta, k1 })
    }

    /// Excess return ν₁(t) = μ(t) − r(t).
    pub fn nu1(&self, t: f64) -> f64 {
        self.mu.eval(t) - self.r.eval(t)
    }

    /// Reinsurance drift loading ν₂(t) = η k₁ λ̂_t μ_z.
    pub fn nu2(&self, claims: &ClaimModel, lambda_hat: f64) -> f64 {
        self.eta * self.k1 * lambda_hat * claims.mean()
    }

    /// Premium drift c_t = (θ − η) k₁ λ̂_t μ_z.
    pub fn premium_drift(&self, claims: &ClaimModel, lambda_hat: f64) -> f64 {
        (self.theta - self.eta) * self.k1 * lambda_hat * claims.mean()
    }

    /// exp(−∫_a^b r).
    pub fn discount(&self, a: f64, b: f64) -> f64 {
        (-self.r.integral(a, b)).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClaimFamily {
    Exponential,
    Gamma,
    Lognormal,
    BoundedUniform,
}

#[derive(Debug, Clone, PartialEq)]
enum ClaimDist {
    Exp { rate: f64 },
    Gamma { shape: f64, scale: f64 },
    Lognormal { mu: f64, sigma: f64 },
    Uniform { a: f64, b: f64 },
    Point { v: f64 },
}

/// Claim-size distribution moment-matched to (μ_z, E[z²]) at construction.
#[derive(Debug, Clone)]
pub struct ClaimModel {
    family: ClaimFamily,
    mu_z: f64,
    m2: f64,
    z_max: Option<f64>,
    dist: ClaimDist,
}

impl ClaimModel {
    pub fn family(&self) -> ClaimFamily {
        self.family
    }

    /// μ_z = E[z].
    pub fn mean(&self) -> f64 {
        self.mu_z
    }

    /// E[z²].
    pub fn second_moment(&self) -> f64 {
        self.m2
    }

    /// Essential supremum of the claim size where one is known: the declared
    /// cap takes precedence, else the intrinsic support bound of a bounded
    /// family. `None` for unbounded families without a cap.
    pub fn max_claim(&self) -> Option<f64> {
        self.z_max.or(match self.dist {
            ClaimDist::Uniform { b, .. } => Some(b),
            ClaimDist::Point { v } => Some(v),
            _ => None,
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let z = match &self.dist {
            ClaimDist::Exp { rate } => rand_distr::Exp::new(*rate).unwrap().sample(rng),
            ClaimDist::Gamma { shape, scale } => {
                rand_distr::Gamma::new(*shape, *scale).unwrap().sample(rng)
            }
            ClaimDist::Lognormal { mu, sigma } => {
                rand_distr::LogNormal::new(*mu, *sigma).unwrap().sample(rng)
            }
            ClaimDist::Uniform { a, b } => rand_distr::Uniform::new(*a, *b).unwrap().sample(rng),
            ClaimDist::Point { v } => *v,
        };
        match self.z_max {
            Some(m) => z.min(m),
            None => z,
        }
    }
}

/// Fits the claim family to (μ_z, E[z²]) in closed form, verifying the moment
/// identities to 1e-10. A declared `z_max` must be moment-immaterial: the
/// truncated tail may not shift either moment by more than 1e-10.
pub fn moment_fit(
    family: ClaimFamily,
    mu_z: f64,
    m2: f64,
    z_max: Option<f64>,
) -> Result<ClaimModel> {
    if !(mu_z > 0.0) || !mu_z.is_finite() {
        return Err(Error::MomentFit(format!("mean claim mu_z must be positive, got {mu_z}")));
    }
    if !(m2 >= mu_z * mu_z) || !m2.is_finite() {
        return Err(Error::MomentFit(format!(
            "second moment must satisfy m2 >= mu_z^2, got m2 = {m2}, mu_z = {mu_z}"
        )));
    }
    if let Some(m) = z_max {
        if !(m > 0.0) {
            return Err(Error::MomentFit(format!("z_max must be positive, got {m}")));
        }
    }
    let var = m2 - mu_z * mu_z;
    let degenerate = var <= 1e-14 * m2;

    let dist = match family {
        ClaimFamily::Exponential => {
            if (m2 - 2.0 * mu_z * mu_z).abs() > 1e-9 * m2 {
                return Err(Error::MomentFit(format!(
                    "exponential claims force E[z^2] = 2 mu_z^2 = {}, got {m2}",
                    2.0 * mu_z * mu_z
                )));
            }
            ClaimDist::Exp { rate: 1.0 / mu_z }
        }
        ClaimFamily::Gamma => {
            if degenerate {
                return Err(Error::MomentFit(
                    "gamma claims cannot be a point mass; use BoundedUniform".into(),
                ));
            }
            let shape = mu_z * mu_z / var;
            let scale = var / mu_z;
            ClaimDist::Gamma { shape, scale }
        }
        ClaimFamily::Lognormal => {
            if degenerate {
                return Err(Error::MomentFit(
                    "lognormal claims cannot be a point mass; use BoundedUniform".into(),
                ));
            }
            let s2 = (m2 / (mu_z * mu_z)).ln();
            ClaimDist::Lognormal { mu: mu_z.ln() - 0.5 * s2, sigma: s2.sqrt() }
        }
        ClaimFamily::BoundedUniform => {
            if degenerate {
                ClaimDist::Point { v: mu_z }
            } else {
                let half_width = (3.0 * var).sqrt();
                let a = mu_z - half_width;
                let b = mu_z + half_width;
                if a < 0.0 {
                    return Err(Error::MomentFit(format!(
                        "uniform claims need m2 <= 4/3 mu_z^2 for a nonnegative lower \
                         endpoint; fitted support [{a:.6}, {b:.6}]"
                    )));
                }
                ClaimDist::Uniform { a, b }
            }
        }
    };

    let model = ClaimModel { family, mu_z, m2, z_max, dist };
    if let Some(m) = z_max {
        check_cap_feasible(&model, m)?;
    }
    verify_moments(&model)?;
    Ok(model)
}

/// Analytic moments of the fitted distribution must reproduce the inputs.
fn verify_moments(model: &ClaimModel) -> Result<()> {
    let (mean, second) = match &model.dist {
        ClaimDist::Exp { rate } => (1.0 / rate, 2.0 / (rate * rate)),
        ClaimDist::Gamma { shape, scale } => {
            (shape * scale, shape * scale * scale * (shape + 1.0))
        }
        ClaimDist::Lognormal { mu, sigma } => (
            (mu + 0.5 * sigma * sigma).exp(),
            (2.0 * mu + 2.0 * sigma * sigma).exp(),
        ),
        ClaimDist::Uniform { a, b } => ((a + b) / 2.0, (a * a + a * b + b * b) / 3.0),
        ClaimDist::Point { v } => (*v, v * v),
    };
    let tol = 1e-10;
    if (mean - model.mu_z).abs() > tol * model.mu_z || (second - model.m2).abs() > tol * model.m2 {
        return Err(Error::Consistency(format!(
            "fitted claim moments ({mean}, {second}) drifted from ({}, {})",
            model.mu_z, model.m2
        )));
    }
    Ok(())
}

/// Tail mass above the cap must be immaterial for both moments.
fn check_cap_feasible(model: &ClaimModel, cap: f64) -> Result<()> {
    use statrs::distribution::{ContinuousCDF, Normal};
    use statrs::function::gamma::gamma_ur;
    let (dm1, dm2) = match &model.dist {
        ClaimDist::Exp { rate } => {
            let e = (-rate * cap).exp();
            (
                (cap + 1.0 / rate) * e,
                (cap * cap + 2.0 * cap / rate + 2.0 / (rate * rate)) * e,
            )
        }
        ClaimDist::Gamma { shape, scale } => {
            let x = cap / scale;
            (
                shape * scale * gamma_ur(shape + 1.0, x),
                shape * (shape + 1.0) * scale * scale * gamma_ur(shape + 2.0, x),
            )
        }
        ClaimDist::Lognormal { mu, sigma } => {
            let n = Normal::new(0.0, 1.0).unwrap();
            let l = cap.ln();
            (
                (mu + 0.5 * sigma * sigma).exp() * (1.0 - n.cdf((l - mu - sigma * sigma) / sigma)),
                (2.0 * mu + 2.0 * sigma * sigma).exp()
                    * (1.0 - n.cdf((l - mu - 2.0 * sigma * sigma) / sigma)),
            )
        }
        ClaimDist::Uniform { b, .. } => {
            if cap < *b {
                return Err(Error::MomentFit(format!(
                    "cap {cap} truncates the fitted uniform support (upper endpoint {b})"
                )));
            }
            (0.0, 0.0)
        }
        ClaimDist::Point { v } => {
            if cap < *v {
                return Err(Error::MomentFit(format!(
                    "cap {cap} truncates the point mass at {v}"
                )));
            }
            (0.0, 0.0)
        }
    };
    if dm1 > 1e-10 * model.mu_z || dm2 > 1e-10 * model.m2 {
        return Err(Error::MomentFit(format!(
            "cap {cap} shifts the fitted moments by ({dm1:.2e}, {dm2:.2e}); \
             declared caps must be moment-immaterial"
        )));
    }
    Ok(())
}

/// One claim arrival.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClaimEvent {
    /// Step index i: the claim lands in (t_i, t_{i+1}].
    pub step: usize,
    /// Event time (mid-step), strictly inside the horizon.
    pub time: f64,
    pub size: f64,
}

/// One realized market path: risky asset, claim arrivals, and the mortality
/// path that drove the claim intensity.
#[derive(Debug, Clone)]
pub struct MarketScenario {
    grid: DiscreteGrid,
    mortality: Arc<MortalityPath>,
    /// Node index of the control origin inside the mortality grid.
    mort_offset: usize,
    asset: Vec<f64>,
    dw1: Vec<f64>,
    claim_in_step: Vec<Option<f64>>,
    claim_events: Vec<ClaimEvent>,
}

impl MarketScenario {
    pub fn grid(&self) -> &DiscreteGrid {
        &self.grid
    }

    pub fn mortality(&self) -> &Arc<MortalityPath> {
        &self.mortality
    }

    pub fn mort_offset(&self) -> usize {
        self.mort_offset
    }

    /// λ̂ at control node i.
    pub fn lambda_hat_at(&self, i: usize) -> f64 {
        self.mortality.lambda_hat_at(self.mort_offset + i)
    }

    pub fn asset(&self) -> &[f64] {
        &self.asset
    }

    pub fn dw1(&self) -> &[f64] {
        &self.dw1
    }

    pub fn claim_in_step(&self) -> &[Option<f64>] {
        &self.claim_in_step
    }

    pub fn claim_events(&self) -> &[ClaimEvent] {
        &self.claim_events
    }

    /// Replay constructor for stored or synthetic scenarios.
    pub fn from_parts(
        grid: DiscreteGrid,
        mortality: Arc<MortalityPath>,
        mort_offset: usize,
        asset: Vec<f64>,
        dw1: Vec<f64>,
        claim_in_step: Vec<Option<f64>>,
    ) -> Result<Self> {
        check_alignment(&grid, &mortality, mort_offset)?;
        if asset.len() != grid.n_nodes()
            || dw1.len() != grid.n_steps()
            || claim_in_step.len() != grid.n_steps()
        {
            return Err(Error::Shape("scenario pieces do not fit the grid".into()));
        }
        let claim_events = claim_in_step
            .iter()
            .enumerate()
            .filter_map(|(i, z)| {
                z.map(|size| ClaimEvent {
                    step: i,
                    time: grid.node(i) + 0.5 * grid.dt(),
                    size,
                })
            })
            .collect();
        Ok(Self { grid, mortality, mort_offset, asset, dw1, claim_in_step, claim_events })
    }
}

fn check_alignment(grid: &DiscreteGrid, mortality: &MortalityPath, offset: usize) -> Result<()> {
    let mg = mortality.grid();
    if (mg.dt() - grid.dt()).abs() > 1e-12 * grid.dt() {
        return Err(Error::Shape(format!(
            "mortality grid step {} differs from market grid step {}",
            mg.dt(),
            grid.dt()
        )));
    }
    if offset + grid.n_steps() > mg.n_steps() {
        return Err(Error::Resolution(format!(
            "mortality path ({} steps) does not cover offset {} + {} market steps",
            mg.n_steps(),
            offset,
            grid.n_steps()
        )));
    }
    Ok(())
}

/// Simulates asset, claim arrivals (per-step thinning against k₁λ̂ dt, at
/// most one claim per step) and claim sizes on the shared grid. Claim sizes
/// are pre-drawn one per step from their own substream so arrival thinning
/// and diffusion draws stay aligned under common random numbers.
pub fn simulate_scenario(
    market: &MarketParams,
    claims: &ClaimModel,
    mortality: Arc<MortalityPath>,
    mort_offset: usize,
    grid: &DiscreteGrid,
    seed: u64,
    path_index: u64,
) -> Result<MarketScenario> {
    check_alignment(grid, &mortality, mort_offset)?;
    let n = grid.n_steps();
    let dt = grid.dt();
    let sqrt_dt = dt.sqrt();

    let mut rng_w1 = stream_rng(seed, path_index, StreamKind::AssetW1);
    let mut rng_thin = stream_rng(seed, path_index, StreamKind::ClaimThinning);
    let mut rng_size = stream_rng(seed, path_index, StreamKind::ClaimSizes);

    let mut dw1 = Vec::with_capacity(n);
    let mut asset = Vec::with_capacity(n + 1);
    asset.push(1.0);
    let mut claim_in_step = Vec::with_capacity(n);
    let mut claim_events = Vec::new();

    for i in 0..n {
        let t = grid.node(i);
        let z: f64 = rng_w1.sample(StandardNormal);
        let dw = z * sqrt_dt;
        dw1.push(dw);
        let mu = market.mu.eval(t);
        let sg = market.sigma.eval(t);
        let prev = asset[i];
        asset.push(prev * ((mu - 0.5 * sg * sg) * dt + sg * dw).exp());

        let size = claims.sample(&mut rng_size);
        let intensity = market.k1 * mortality.lambda_hat_at(mort_offset + i);
        let p = (intensity * dt).min(1.0);
        let u: f64 = rng_thin.random();
        if u < p {
            claim_in_step.push(Some(size));
            claim_events.push(ClaimEvent { step: i, time: t + 0.5 * dt, size });
        } else {
            claim_in_step.push(None);
        }
    }

    Ok(MarketScenario {
        grid: grid.clone(),
        mortality,
        mort_offset,
        asset,
        dw1,
        claim_in_step,
        claim_events,
    })
}

/// Wealth trajectory with the controls that produced it (materialized even
/// when the control rule is state-dependent).
#[derive(Debug, Clone)]
pub struct WealthPath {
    grid: DiscreteGrid,
    x: Vec<f64>,
    pi: Vec<f64>,
    a: Vec<f64>,
}

impl WealthPath {
    pub fn grid(&self) -> &DiscreteGrid {
        &self.grid
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn x_at(&self, i: usize) -> f64 {
        self.x[i]
    }

    pub fn terminal(&self) -> f64 {
        *self.x.last().unwrap()
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }
}

/// Euler drift/diffusion step with exact jump application; the control rule
/// is consulted at each left node with the running wealth.
pub fn propagate_wealth_with<F>(
    scenario: &MarketScenario,
    market: &MarketParams,
    claims: &ClaimModel,
    mut law: F,
    x0: f64,
) -> Result<WealthPath>
where
    F: FnMut(usize, f64) -> (f64, f64),
{
    let grid = scenario.grid().clone();
    let n = grid.n_steps();
    let dt = grid.dt();
    let mu_z = claims.mean();
    let mut x = Vec::with_capacity(n + 1);
    let mut pi_used = Vec::with_capacity(n + 1);
    let mut a_used = Vec::with_capacity(n + 1);
    x.push(x0);
    for i in 0..n {
        let t = grid.node(i);
        let xi = x[i];
        let (pi, a) = law(i, xi);
        if a < 0.0 {
            return Err(Error::Parameter(format!(
                "reinsurance control must be nonnegative, got {a} at step {i}"
            )));
        }
        pi_used.push(pi);
        a_used.push(a);
        let lam = scenario.lambda_hat_at(i);
        let drift = market.r.eval(t) * xi
            + market.nu1(t) * pi
            + (1.0 + market.eta) * market.k1 * lam * mu_z * a
            + (market.theta - market.eta) * market.k1 * lam * mu_z;
        let mut next = xi + drift * dt + pi * market.sigma.eval(t) * scenario.dw1()[i];
        if let Some(z) = scenario.claim_in_step()[i] {
            next -= a * z;
        }
        x.push(next);
    }
    // Terminal node carries the law's value for completeness.
    let (pi_t, a_t) = law(n, x[n]);
    pi_used.push(pi_t);
    a_used.push(a_t);
    Ok(WealthPath { grid, x, pi: pi_used, a: a_used })
}
