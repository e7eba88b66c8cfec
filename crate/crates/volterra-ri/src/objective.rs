//! Mean-variance objective evaluation and numerical verification of the
//! open-loop equilibrium property.
//!
//! The insurer minimizes J(t, x_t; u) = ½ Var_t(X_T) − (φ₁x_t + φ₂) E_t[X_T].
//! A candidate control is an equilibrium when no spike perturbation on
//! [t, t+ε) improves J to first order as ε ↓ 0. Verification runs two
//! independent routes:
//!
//! 1. the closed-form adjoint diagonal: p*(t;t), Z₁*(t;t) and the integrated
//!    jump term satisfy ν₁p* + σZ₁* = 0 plus a variational inequality in the
//!    reinsurance leg, checked node by node along simulated paths;
//! 2. a common-random-number Monte Carlo estimate of
//!    [J(perturbed) − J(equilibrium)]/ε over a decreasing ε ladder.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::DiscreteGrid;
use crate::kernels::ResolventTable;
use crate::market::{
    propagate_wealth_with, ClaimModel, MarketParams, MarketScenario, WealthPath,
};
use crate::mortality::{
    simulate_path_with_prefix, CondMeanContext, MeanRoute, MortalityParams, MortalityPath,
};
use crate::strategies::{
    constant_ra_strategy, constrained_ra_strategy, ConstraintSet, EquilibriumCoefficients,
    MFactorEngine, Regime, RiskAversion, StrategySchedule,
};

/// Monte Carlo estimate of the objective.
#[derive(Debug, Clone)]
pub struct ObjectiveEstimate {
    pub j: f64,
    pub mean_xt: f64,
    pub var_xt: f64,
    pub n_paths: u64,
    /// Delta-method standard error of J; NaN for a single path.
    pub std_error: f64,
}

impl ObjectiveEstimate {
    /// J is always recomputed from its own fields: ½ var − weight · mean.
    pub fn from_samples(samples: &[f64], weight: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Parameter("objective needs at least one sample".into()));
        }
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let m2 = samples.iter().map(|x| x * x).sum::<f64>() / n;
        let var = (m2 - mean * mean).max(0.0);
        let j = 0.5 * var - weight * mean;
        let std_error = if samples.len() < 2 {
            f64::NAN
        } else {
            // Covariance of (X, X²) against the gradient (−mean−w, ½).
            let mut c11 = 0.0;
            let mut c12 = 0.0;
            let mut c22 = 0.0;
            for x in samples {
                let d1 = x - mean;
                let d2 = x * x - m2;
                c11 += d1 * d1;
                c12 += d1 * d2;
                c22 += d2 * d2;
            }
            c11 /= n;
            c12 /= n;
            c22 /= n;
            let g1 = -mean - weight;
            let g2 = 0.5;
            ((g1 * g1 * c11 + 2.0 * g1 * g2 * c12 + g2 * g2 * c22) / n)
                .max(0.0)
                .sqrt()
        };
        Ok(Self { j, mean_xt: mean, var_xt: var, n_paths: samples.len() as u64, std_error })
    }
}

/// Everything needed to launch conditional Monte Carlo from a point on the
/// control window.
#[derive(Clone)]
pub struct EvalSetup {
    pub market: MarketParams,
    pub claims: ClaimModel,
    pub mort_params: MortalityParams,
    /// Mortality grid, possibly starting before the control origin.
    pub full_grid: DiscreteGrid,
    /// Node of the control origin inside the mortality grid.
    pub ctrl_offset: usize,
    pub ctrl_steps: usize,
    /// Lag table for the mortality kernel at scale a₁ covering the full grid.
    pub table: Arc<ResolventTable>,
    pub x0: f64,
}

impl EvalSetup {
    pub fn new(
        market: MarketParams,
        claims: ClaimModel,
        mort_params: MortalityParams,
        full_grid: DiscreteGrid,
        ctrl_offset: usize,
        x0: f64,
    ) -> Result<Self> {
        let ctrl_steps = full_grid
            .n_steps()
            .checked_sub(ctrl_offset)
            .ok_or_else(|| Error::Resolution("control offset beyond the grid".into()))?;
        if ctrl_steps == 0 {
            return Err(Error::Resolution("empty control window".into()));
        }
        let lag = DiscreteGrid::new(
            0.0,
            full_grid.t_end() - full_grid.t0(),
            full_grid.n_steps(),
        )?;
        let table = Arc::new(ResolventTable::build(
            &mort_params.kernel,
            mort_params.a1,
            &lag,
        )?);
        Ok(Self { market, claims, mort_params, full_grid, ctrl_offset, ctrl_steps, table, x0 })
    }

    pub fn ctrl_grid(&self) -> Result<DiscreteGrid> {
        self.full_grid.window(self.ctrl_offset, self.ctrl_steps)
    }

    /// Control-node index of control time `t`.
    pub fn ctrl_index_of(&self, t: f64) -> Result<usize> {
        self.ctrl_grid()?.index_of(t)
    }
}

/// Conditioning state (t, X_t, realized mortality history up to t).
#[derive(Debug, Clone)]
pub struct EvalPoint {
    /// Node index of t inside the control window.
    pub eval_idx: usize,
    pub x_t: f64,
    /// Realized Brownian increments of the mortality path up to t
    /// (history window included).
    pub trunk_dw0: Vec<f64>,
}

impl EvalPoint {
    /// Time-zero point: conditioning only on the observed history window.
    pub fn initial(setup: &EvalSetup, trunk: &MortalityPath) -> Self {
        Self {
            eval_idx: 0,
            x_t: setup.x0,
            trunk_dw0: trunk.dw0()[..setup.ctrl_offset].to_vec(),
        }
    }
}

/// A control policy: a rule that can be re-evaluated on any scenario
/// (closed-loop reading, required so perturbed paths keep following the
/// equilibrium rule after the perturbation window).
/// Control law bound to one scenario: maps (local step, wealth) to (π, a).
pub type ControlFn = Box<dyn FnMut(usize, f64) -> (f64, f64)>;

pub trait Policy: Send + Sync {
    /// Control law for one continuation scenario starting at global control
    /// node `eval_idx`.
    fn law(
        &self,
        setup: &EvalSetup,
        scenario: &MarketScenario,
        eval_idx: usize,
    ) -> Result<ControlFn>;

    /// Constraint set of the reinsurance leg.
    fn constraint(&self) -> ConstraintSet;

    fn regime(&self) -> Regime;
}

/// Deterministic constant-risk-aversion policy (plain or projected).
pub struct ConstantRaPolicy {
    schedule: Arc<StrategySchedule>,
}

impl ConstantRaPolicy {
    pub fn new(setup: &EvalSetup, risk: &RiskAversion, constrained: bool) -> Result<Self> {
        let grid = setup.ctrl_grid()?;
        let schedule = if constrained {
            constrained_ra_strategy(&setup.market, &setup.claims, risk, &grid)?
        } else {
            constant_ra_strategy(&setup.market, &setup.claims, risk, &grid)?
        };
        Ok(Self { schedule: Arc::new(schedule) })
    }

    pub fn schedule(&self) -> &Arc<StrategySchedule> {
        &self.schedule
    }
}

impl Policy for ConstantRaPolicy {
    fn law(
        &self,
        _setup: &EvalSetup,
        _scenario: &MarketScenario,
        eval_idx: usize,
    ) -> Result<ControlFn> {
        let schedule = self.schedule.clone();
        Ok(Box::new(move |i, _| schedule.control_at(eval_idx + i)))
    }

    fn constraint(&self) -> ConstraintSet {
        self.schedule.constraint()
    }

    fn regime(&self) -> Regime {
        Regime::Constant
    }
}

/// State-dependent equilibrium policy; recomputes the wealth-scaling factor
/// per scenario from the scenario's own mortality history.
pub struct StateDependentPolicy {
    risk: RiskAversion,
    route: MeanRoute,
}

impl StateDependentPolicy {
    pub fn new(risk: RiskAversion, route: MeanRoute) -> Result<Self> {
        if risk.regime() != Regime::StateDependent {
            return Err(Error::Parameter("state-dependent policy needs phi1 > 0".into()));
        }
        Ok(Self { risk, route })
    }

    /// Per-node equilibrium coefficients on [eval_idx, T] for one scenario.
    pub fn coefficients(
        &self,
        setup: &EvalSetup,
        scenario: &MarketScenario,
        eval_idx: usize,
    ) -> Result<Vec<EquilibriumCoefficients>> {
        let ctx = CondMeanContext::with_route(
            &setup.mort_params,
            scenario.mortality().clone(),
            Some(setup.table.clone()),
            self.route,
        )?;
        let offset = setup.ctrl_offset + eval_idx;
        let steps = setup.ctrl_steps - eval_idx;
        let mut engine =
            MFactorEngine::new(&setup.market, &setup.claims, &self.risk, ctx, offset, steps)?;
        engine.sweep()
    }
}

impl Policy for StateDependentPolicy {
    fn law(
        &self,
        setup: &EvalSetup,
        scenario: &MarketScenario,
        eval_idx: usize,
    ) -> Result<ControlFn> {
        let coeff = self.coefficients(setup, scenario, eval_idx)?;
        Ok(Box::new(move |i, x| {
            let c = &coeff[i];
            (c.zeta1 * x, c.zeta2 * x.max(0.0))
        }))
    }

    fn constraint(&self) -> ConstraintSet {
        ConstraintSet::NonNegative
    }

    fn regime(&self) -> Regime {
        Regime::StateDependent
    }
}

/// Spike perturbation of a base policy on [t, t+ε).
#[derive(Debug, Clone, Copy)]
pub struct PerturbationSpec {
    /// Evaluation time t (control clock).
    pub t: f64,
    pub epsilon: f64,
    /// Additive investment bump ρ₁.
    pub rho1: f64,
    /// Reinsurance replacement level ρ₂ ∈ D; `None` keeps the base control
    /// (the zero perturbation in that leg).
    pub rho2: Option<f64>,
}

/// Wraps a policy with the spike on the first `eps_steps` local steps.
struct PerturbedPolicy<'a> {
    inner: &'a dyn Policy,
    eps_steps: usize,
    rho1: f64,
    rho2: Option<f64>,
}

impl Policy for PerturbedPolicy<'_> {
    fn law(
        &self,
        setup: &EvalSetup,
        scenario: &MarketScenario,
        eval_idx: usize,
    ) -> Result<ControlFn> {
        if let Some(r2) = self.rho2 {
            if !self.inner.constraint().contains(r2) {
                return Err(Error::Parameter(format!(
                    "replacement level {r2} violates the {:?} constraint",
                    self.inner.constraint()
                )));
            }
        }
        let mut inner = self.inner.law(setup, scenario, eval_idx)?;
        let eps_steps = self.eps_steps;
        let rho1 = self.rho1;
        let rho2 = self.rho2;
        Ok(Box::new(move |i, x| {
            let (pi, a) = inner(i, x);
            if i < eps_steps {
                (pi + rho1, rho2.unwrap_or(a))
            } else {
                (pi, a)
            }
        }))
    }

    fn constraint(&self) -> ConstraintSet {
        self.inner.constraint()
    }

    fn regime(&self) -> Regime {
        self.inner.regime()
    }
}

/// Multiplies the investment leg of a base policy (falsification controls:
/// 1.1 breaks optimality, −1.0 is the anti-equilibrium).
pub struct ScaledPiPolicy<P: Policy> {
    pub inner: P,
    pub factor: f64,
}

impl<P: Policy> Policy for ScaledPiPolicy<P> {
    fn law(
        &self,
        setup: &EvalSetup,
        scenario: &MarketScenario,
        eval_idx: usize,
    ) -> Result<ControlFn> {
        let mut inner = self.inner.law(setup, scenario, eval_idx)?;
        let f = self.factor;
        Ok(Box::new(move |i, x| {
            let (pi, a) = inner(i, x);
            (f * pi, a)
        }))
    }

    fn constraint(&self) -> ConstraintSet {
        self.inner.constraint()
    }

    fn regime(&self) -> Regime {
        self.inner.regime()
    }
}

/// Simulates the continuation scenario for one Monte Carlo path index.
fn continuation_scenario(
    setup: &EvalSetup,
    point: &EvalPoint,
    seed: u64,
    path_index: u64,
) -> Result<MarketScenario> {
    let mort = simulate_path_with_prefix(
        &setup.mort_params,
        &setup.full_grid,
        &point.trunk_dw0,
        seed,
        path_index,
    )?;
    let cont_offset = setup.ctrl_offset + point.eval_idx;
    let cont_grid = setup
        .full_grid
        .window(cont_offset, setup.ctrl_steps - point.eval_idx)?;
    crate::market::simulate_scenario(
        &setup.market,
        &setup.claims,
        Arc::new(mort),
        cont_offset,
        &cont_grid,
        seed,
        path_index,
    )
}

fn terminal_wealth(
    setup: &EvalSetup,
    point: &EvalPoint,
    policy: &dyn Policy,
    scenario: &MarketScenario,
) -> Result<f64> {
    let mut law = policy.law(setup, scenario, point.eval_idx)?;
    let w = propagate_wealth_with(scenario, &setup.market, &setup.claims, &mut law, point.x_t)?;
    Ok(w.terminal())
}

/// Common-random-number Monte Carlo estimate of J(t, x_t; policy).
pub fn evaluate_objective(
    policy: &dyn Policy,
    setup: &EvalSetup,
    point: &EvalPoint,
    risk: &RiskAversion,
    n_paths: u64,
    seed: u64,
) -> Result<ObjectiveEstimate> {
    if n_paths < 2 {
        return Err(Error::Parameter("objective evaluation needs n_paths >= 2".into()));
    }
    let samples = collect_samples(setup, point, n_paths, seed, |scenario| {
        terminal_wealth(setup, point, policy, scenario)
    })?;
    ObjectiveEstimate::from_samples(&samples, risk.weight(point.x_t))
}

/// Deterministically ordered parallel map over path indices.
fn collect_samples<T, F>(
    setup: &EvalSetup,
    point: &EvalPoint,
    n_paths: u64,
    seed: u64,
    f: F,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&MarketScenario) -> Result<T> + Sync,
{
    (0..n_paths)
        .into_par_iter()
        .map(|k| {
            let scenario = continuation_scenario(setup, point, seed, k)?;
            f(&scenario)
        })
        .collect()
}

/// Adjoint diagonal (p*(t;t), Z₁*(t;t), ∫ z Z₂*(t,z;t) δ(dz)).
#[derive(Debug, Clone, Copy)]
pub struct AdjointDiagonal {
    pub p: f64,
    pub z1: f64,
    /// ∫ z Z₂* δ(dz) = −M_t a*(t) k₁ λ̂_t E[z²].
    pub jump_integral: f64,
}

/// Constant-regime diagonal: p*(t;t) = Φ_t = −φ₂e^{∫_t^T r},
/// Z₁* = e^{∫_t^T 2r} π*σ.
#[allow(clippy::too_many_arguments)]
pub fn adjoint_constant_regime(
    market: &MarketParams,
    claims: &ClaimModel,
    risk: &RiskAversion,
    pi_star: f64,
    a_star: f64,
    lambda_hat: f64,
    t: f64,
    t_end: f64,
) -> Result<AdjointDiagonal> {
    if risk.regime() != Regime::Constant {
        return Err(Error::Parameter("constant-regime adjoint needs phi1 = 0".into()));
    }
    let int_r = market.r.integral(t, t_end);
    let m = (2.0 * int_r).exp();
    let phi = -risk.phi2() * int_r.exp();
    Ok(AdjointDiagonal {
        p: phi,
        z1: m * pi_star * market.sigma.eval(t),
        jump_integral: -m * a_star * market.k1 * lambda_hat * claims.second_moment(),
    })
}

/// State-dependent diagonal: p*(t;t) = −Γ_t^{(1)} X*_t, Z₁* = M_t π*σ.
#[allow(clippy::too_many_arguments)]
pub fn adjoint_state_dependent(
    market: &MarketParams,
    claims: &ClaimModel,
    m_t: f64,
    gamma1_t: f64,
    x_t: f64,
    pi_star: f64,
    a_star: f64,
    lambda_hat: f64,
    t: f64,
) -> AdjointDiagonal {
    AdjointDiagonal {
        p: -gamma1_t * x_t,
        z1: m_t * pi_star * market.sigma.eval(t),
        jump_integral: -m_t * a_star * market.k1 * lambda_hat * claims.second_moment(),
    }
}

/// First-order-condition residuals at one node.
#[derive(Debug, Clone, Copy)]
pub struct FocReport {
    /// |ν₁ p* + σ Z₁*|, zero at equilibrium.
    pub martingale_residual: f64,
    /// g(t) = ν₂ p* − ∫ z Z₂* δ(dz); the variational inequality holds when
    /// g = 0 at interior a*, g ≥ 0 at a* = 0, g ≤ 0 at the upper boundary.
    pub vi_value: f64,
    /// Distance to satisfying the variational inequality.
    pub vi_residual: f64,
}

/// Evaluates both first-order conditions from the adjoint diagonal.
pub fn verify_first_order_condition(
    adjoint: &AdjointDiagonal,
    market: &MarketParams,
    claims: &ClaimModel,
    lambda_hat: f64,
    t: f64,
    a_star: f64,
    constraint: ConstraintSet,
) -> FocReport {
    let nu1 = market.nu1(t);
    let nu2 = market.nu2(claims, lambda_hat);
    let martingale_residual = (nu1 * adjoint.p + market.sigma.eval(t) * adjoint.z1).abs();
    let g = nu2 * adjoint.p - adjoint.jump_integral;
    let boundary_tol = 1e-12;
    let vi_residual = if a_star <= boundary_tol {
        (-g).max(0.0)
    } else if constraint == ConstraintSet::UnitInterval && a_star >= 1.0 - boundary_tol {
        g.max(0.0)
    } else {
        g.abs()
    };
    FocReport { martingale_residual, vi_value: g, vi_residual }
}

/// Second-order coefficient Θ(t) = ½e^{∫_t^T 2r}(σ² + k₁λ̂E[z²]); strictly
/// positive, which makes the first-order conditions sufficient.
pub fn theta_second_order(
    market: &MarketParams,
    claims: &ClaimModel,
    lambda_hat: f64,
    t: f64,
    t_end: f64,
) -> f64 {
    let sg = market.sigma.eval(t);
    0.5 * (2.0 * market.r.integral(t, t_end)).exp()
        * (sg * sg + market.k1 * lambda_hat * claims.second_moment())
}

/// First-order conditions at every node of a constant-regime schedule along
/// one scenario.
pub fn foc_along_path_constant(
    market: &MarketParams,
    claims: &ClaimModel,
    risk: &RiskAversion,
    schedule: &StrategySchedule,
    scenario: &MarketScenario,
) -> Result<Vec<FocReport>> {
    let grid = schedule.grid();
    let t_end = grid.t_end();
    let mut out = Vec::with_capacity(grid.n_nodes());
    for i in 0..grid.n_nodes() {
        let t = grid.node(i);
        let lam = scenario.lambda_hat_at(i);
        let (pi, a) = schedule.control_at(i);
        let adj = adjoint_constant_regime(market, claims, risk, pi, a, lam, t, t_end)?;
        if theta_second_order(market, claims, lam, t, t_end) <= 0.0 {
            return Err(Error::Consistency("second-order coefficient not positive".into()));
        }
        out.push(verify_first_order_condition(
            &adj,
            market,
            claims,
            lam,
            t,
            a,
            schedule.constraint(),
        ));
    }
    Ok(out)
}

/// First-order conditions along a realized state-dependent equilibrium path.
pub fn foc_along_path_state_dependent(
    market: &MarketParams,
    claims: &ClaimModel,
    coefficients: &[EquilibriumCoefficients],
    wealth: &WealthPath,
    scenario: &MarketScenario,
) -> Result<Vec<FocReport>> {
    let grid = wealth.grid();
    if coefficients.len() != grid.n_nodes() {
        return Err(Error::Shape("coefficient count does not match the wealth grid".into()));
    }
    let t_end = grid.t_end();
    let mut out = Vec::with_capacity(grid.n_nodes());
    #[allow(clippy::needless_range_loop)]
    for i in 0..grid.n_nodes() {
        let t = grid.node(i);
        let lam = scenario.lambda_hat_at(i);
        let c = &coefficients[i];
        if c.m < 1.0 {
            return Err(Error::Consistency(format!(
                "wealth-scaling factor {} below its lower bound at node {i}",
                c.m
            )));
        }
        let x = wealth.x_at(i);
        let (pi, a) = (wealth.pi()[i], wealth.a()[i]);
        let adj = adjoint_state_dependent(market, claims, c.m, c.gamma1, x, pi, a, lam, t);
        if theta_second_order(market, claims, lam, t, t_end) <= 0.0 {
            return Err(Error::Consistency("second-order coefficient not positive".into()));
        }
        out.push(verify_first_order_condition(
            &adj,
            market,
            claims,
            lam,
            t,
            a,
            ConstraintSet::NonNegative,
        ));
    }
    Ok(out)
}

/// One rung of the ε ladder.
#[derive(Debug, Clone, Copy)]
pub struct LadderPoint {
    pub epsilon: f64,
    /// [J(perturbed) − J(base)] / ε.
    pub estimate: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone)]
pub struct PerturbationReport {
    pub spec: PerturbationSpec,
    pub points: Vec<LadderPoint>,
}

impl PerturbationReport {
    /// True when no rung is significantly negative at `z` standard errors.
    pub fn accepted(&self, z: f64) -> bool {
        self.points.iter().all(|p| p.estimate >= -z * p.std_error)
    }
}

/// Estimates the perturbation difference quotient over the ladder
/// ε, ε/2, ε/4 with common random numbers (base and perturbed wealth are
/// propagated through identical scenarios).
pub fn perturbation_test(
    policy: &dyn Policy,
    setup: &EvalSetup,
    point: &EvalPoint,
    risk: &RiskAversion,
    spec: &PerturbationSpec,
    n_paths: u64,
    seed: u64,
) -> Result<PerturbationReport> {
    let ctrl_grid = setup.ctrl_grid()?;
    if n_paths < 2 {
        return Err(Error::Parameter("perturbation test needs n_paths >= 2".into()));
    }
    if spec.epsilon <= 0.0 {
        return Err(Error::Parameter("perturbation window must be positive".into()));
    }
    if spec.t + spec.epsilon > ctrl_grid.t_end() + 1e-12 {
        return Err(Error::Parameter(format!(
            "perturbation window [{}, {}] leaves the horizon (T = {})",
            spec.t,
            spec.t + spec.epsilon,
            ctrl_grid.t_end()
        )));
    }
    if ctrl_grid.index_of(spec.t)? != point.eval_idx {
        return Err(Error::Parameter(
            "perturbation time must match the evaluation point".into(),
        ));
    }
    let weight = risk.weight(point.x_t);
    let dt = ctrl_grid.dt();
    // Each path simulates its scenario once; base and every ladder rung are
    // propagated through the same shocks.
    let rungs: Vec<(usize, f64)> = [1u32, 2, 4]
        .iter()
        .map(|divisor| {
            let eps = spec.epsilon / *divisor as f64;
            let eps_steps = ((eps / dt).round() as usize).max(1);
            (eps_steps, eps_steps as f64 * dt)
        })
        .collect();
    let samples = collect_samples(setup, point, n_paths, seed, |scenario| {
        let xb = terminal_wealth(setup, point, policy, scenario)?;
        let mut xp = [0.0; 3];
        for (slot, (eps_steps, _)) in xp.iter_mut().zip(&rungs) {
            let perturbed = PerturbedPolicy {
                inner: policy,
                eps_steps: *eps_steps,
                rho1: spec.rho1,
                rho2: spec.rho2,
            };
            *slot = terminal_wealth(setup, point, &perturbed, scenario)?;
        }
        Ok((xb, xp))
    })?;
    let points = rungs
        .iter()
        .enumerate()
        .map(|(r, (_, eps_exact))| {
            let pairs: Vec<(f64, f64)> = samples.iter().map(|(xb, xp)| (*xb, xp[r])).collect();
            difference_quotient(&pairs, weight, *eps_exact)
        })
        .collect();
    Ok(PerturbationReport { spec: *spec, points })
}

/// Paired delta-method estimate of [J_p − J_b]/ε.
fn difference_quotient(pairs: &[(f64, f64)], weight: f64, eps: f64) -> LadderPoint {
    let n = pairs.len() as f64;
    let mut mb = 0.0;
    let mut mp = 0.0;
    let mut sb = 0.0;
    let mut sp = 0.0;
    for (xb, xp) in pairs {
        mb += xb;
        mp += xp;
        sb += xb * xb;
        sp += xp * xp;
    }
    mb /= n;
    mp /= n;
    sb /= n;
    sp /= n;
    let jb = 0.5 * (sb - mb * mb) - weight * mb;
    let jp = 0.5 * (sp - mp * mp) - weight * mp;

    // Delta method over the 4-vector (Xp, Xp², Xb, Xb²).
    let g = [-(mp + weight), 0.5, mb + weight, -0.5];
    let mut cov = [[0.0_f64; 4]; 4];
    for (xb, xp) in pairs {
        let d = [xp - mp, xp * xp - sp, xb - mb, xb * xb - sb];
        for r in 0..4 {
            for c in 0..4 {
                cov[r][c] += d[r] * d[c];
            }
        }
    }
    let mut var = 0.0;
    for r in 0..4 {
        for c in 0..4 {
            cov[r][c] /= n;
            var += g[r] * g[c] * cov[r][c];
        }
    }
    let std_error = (var.max(0.0) / n).sqrt() / eps;
    LadderPoint { epsilon: eps, estimate: (jp - jb) / eps, std_error }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::KernelSpec;
    use crate::market::{moment_fit, ClaimFamily};
    use crate::mortality::simulate_path;
    use crate::timefn::TimeFn;
    use approx::assert_relative_eq;

    fn setup_markov(k1: f64, r: f64) -> EvalSetup {
        let market = MarketParams::new(
            TimeFn::constant(r),
            TimeFn::constant(0.07),
            TimeFn::constant(0.2),
            0.2,
            0.2,
            k1,
        )
        .unwrap();
        let claims = moment_fit(ClaimFamily::Gamma, 1.0, 1.2, None).unwrap();
        let mp = crate::mortality::MortalityParams::new(
            0.18,
            0.15,
            0.5,
            0.1,
            TimeFn::zero(),
            KernelSpec::constant(1.0).unwrap(),
        )
        .unwrap();
        let grid = DiscreteGrid::new(0.0, 3.0, 192).unwrap();
        EvalSetup::new(market, claims, mp, grid, 0, 10.0).unwrap()
    }

    fn setup_sd_theta_eq_eta() -> EvalSetup {
        setup_markov(10.0, 0.05)
    }

    fn point_zero(setup: &EvalSetup) -> EvalPoint {
        EvalPoint { eval_idx: 0, x_t: setup.x0, trunk_dw0: Vec::new() }
    }

    #[test]
    fn degenerate_objective_is_exact() {
        // No claims, r = 0, zero controls: X_T = x deterministic.
        let setup = setup_markov(0.0, 0.0);
        let risk = RiskAversion::constant(1.0).unwrap();
        let policy = ConstantRaPolicy::new(&setup, &RiskAversion::constant(0.0).unwrap(), false)
            .unwrap();
        let est = evaluate_objective(&policy, &setup, &point_zero(&setup), &risk, 16, 3).unwrap();
        assert_relative_eq!(est.mean_xt, 10.0, max_relative = 1e-12);
        assert_eq!(est.var_xt, 0.0);
        assert_relative_eq!(est.j, -10.0, max_relative = 1e-12);
    }

    #[test]
    fn estimate_recomputes_j_from_fields() {
        let est = ObjectiveEstimate::from_samples(&[9.0, 11.0, 10.5], 2.0).unwrap();
        assert_eq!(est.j, 0.5 * est.var_xt - 2.0 * est.mean_xt);
        let single = ObjectiveEstimate::from_samples(&[9.0], 2.0).unwrap();
        assert!(single.std_error.is_nan());
        assert_eq!(single.var_xt, 0.0);
    }

    #[test]
    fn equilibrium_beats_zero_strategy() {
        let setup = setup_markov(10.0, 0.05);
        let risk = RiskAversion::constant(1.0).unwrap();
        let point = point_zero(&setup);
        let star = ConstantRaPolicy::new(&setup, &risk, false).unwrap();
        let zero = ConstantRaPolicy::new(&setup, &RiskAversion::constant(0.0).unwrap(), false)
            .unwrap();
        let je = evaluate_objective(&star, &setup, &point, &risk, 4000, 9).unwrap();
        let j0 = evaluate_objective(&zero, &setup, &point, &risk, 4000, 9).unwrap();
        let margin = j0.j - je.j;
        let combined = (je.std_error.powi(2) + j0.std_error.powi(2)).sqrt();
        assert!(margin > 2.0 * combined, "margin {margin} vs 2se {combined}");
    }

    #[test]
    fn standard_error_shrinks_like_sqrt_n() {
        let setup = setup_markov(10.0, 0.05);
        let risk = RiskAversion::constant(1.0).unwrap();
        let point = point_zero(&setup);
        let policy = ConstantRaPolicy::new(&setup, &risk, false).unwrap();
        let a = evaluate_objective(&policy, &setup, &point, &risk, 2000, 5).unwrap();
        let b = evaluate_objective(&policy, &setup, &point, &risk, 4000, 5).unwrap();
        let ratio = a.std_error / b.std_error;
        assert!(
            (ratio - 2.0_f64.sqrt()).abs() < 0.2 * 2.0_f64.sqrt(),
            "ratio {ratio}"
        );
    }

    #[test]
    fn adjoint_terminal_values() {
        let setup = setup_markov(10.0, 0.05);
        let risk = RiskAversion::constant(1.0).unwrap();
        let adj = adjoint_constant_regime(
            &setup.market,
            &setup.claims,
            &risk,
            0.5,
            1.0 / 6.0,
            0.25,
            3.0,
            3.0,
        )
        .unwrap();
        assert_relative_eq!(adj.p, -1.0, max_relative = 1e-14);

        let sd = adjoint_state_dependent(
            &setup.market,
            &setup.claims,
            1.0,
            1.0,
            10.0,
            5.0,
            10.0 / 6.0,
            0.25,
            3.0,
        );
        assert_relative_eq!(sd.p, -10.0, max_relative = 1e-14);

        // a* = 0 kills the jump integral.
        let none = adjoint_state_dependent(
            &setup.market,
            &setup.claims,
            1.2,
            1.0,
            10.0,
            5.0,
            0.0,
            0.25,
            1.0,
        );
        assert_eq!(none.jump_integral, 0.0);
    }

    #[test]
    fn first_order_conditions_cancel_for_constant_regime() {
        let setup = setup_markov(10.0, 0.05);
        let risk = RiskAversion::constant(1.0).unwrap();
        let grid = setup.ctrl_grid().unwrap();
        let schedule =
            constant_ra_strategy(&setup.market, &setup.claims, &risk, &grid).unwrap();
        let mort = Arc::new(simulate_path(&setup.mort_params, &setup.full_grid, 7).unwrap());
        let scenario = crate::market::simulate_scenario(
            &setup.market,
            &setup.claims,
            mort,
            0,
            &grid,
            7,
            0,
        )
        .unwrap();
        let focs =
            foc_along_path_constant(&setup.market, &setup.claims, &risk, &schedule, &scenario)
                .unwrap();
        for f in &focs {
            assert!(f.martingale_residual < 1e-10, "{}", f.martingale_residual);
            assert!(f.vi_residual < 1e-10, "{}", f.vi_residual);
        }
    }

    #[test]
    fn constrained_upper_boundary_satisfies_variational_inequality() {
        let setup = setup_markov(10.0, 0.05);
        // Large phi2 clamps a* at 1.
        let risk = RiskAversion::constant(10.0).unwrap();
        let grid = setup.ctrl_grid().unwrap();
        let schedule =
            constrained_ra_strategy(&setup.market, &setup.claims, &risk, &grid).unwrap();
        assert!(schedule.a().iter().any(|v| *v >= 1.0 - 1e-12));
        let mort = Arc::new(simulate_path(&setup.mort_params, &setup.full_grid, 9).unwrap());
        let scenario = crate::market::simulate_scenario(
            &setup.market,
            &setup.claims,
            mort,
            0,
            &grid,
            9,
            0,
        )
        .unwrap();
        let focs =
            foc_along_path_constant(&setup.market, &setup.claims, &risk, &schedule, &scenario)
                .unwrap();
        for f in &focs {
            assert!(f.martingale_residual < 1e-10);
            assert!(f.vi_residual < 1e-10, "vi residual {}", f.vi_residual);
        }
    }

    #[test]
    fn state_dependent_conditions_cancel_along_equilibrium_path() {
        let setup = setup_sd_theta_eq_eta();
        let risk = RiskAversion::state_dependent(1.0).unwrap();
        let policy = StateDependentPolicy::new(risk, MeanRoute::Markov { c_eff: 1.0 }).unwrap();
        let point = point_zero(&setup);
        let scenario = continuation_scenario(&setup, &point, 13, 0).unwrap();
        let coeff = policy.coefficients(&setup, &scenario, 0).unwrap();
        let wealth = crate::strategies::propagate_equilibrium_wealth(
            &scenario,
            &setup.market,
            &setup.claims,
            &coeff,
            10.0,
        )
        .unwrap();
        let focs = foc_along_path_state_dependent(
            &setup.market,
            &setup.claims,
            &coeff,
            &wealth,
            &scenario,
        )
        .unwrap();
        for f in &focs {
            assert!(f.martingale_residual < 1e-6, "{}", f.martingale_residual);
            assert!(f.vi_residual < 1e-6, "{}", f.vi_residual);
        }
    }

    #[test]
    fn broken_strategy_leaves_visible_residuals() {
        let setup = setup_markov(10.0, 0.05);
        let risk = RiskAversion::constant(1.0).unwrap();
        let grid = setup.ctrl_grid().unwrap();
        let schedule =
            constant_ra_strategy(&setup.market, &setup.claims, &risk, &grid).unwrap();
        let t = 1.0;
        let adj = adjoint_constant_regime(
            &setup.market,
            &setup.claims,
            &risk,
            1.1 * schedule.pi()[grid.index_of(t).unwrap()],
            schedule.a()[grid.index_of(t).unwrap()],
            0.25,
            t,
            3.0,
        )
        .unwrap();
        let foc = verify_first_order_condition(
            &adj,
            &setup.market,
            &setup.claims,
            0.25,
            t,
            schedule.a()[grid.index_of(t).unwrap()],
            ConstraintSet::NonNegative,
        );
        assert!(foc.martingale_residual > 1e-3, "{}", foc.martingale_residual);
    }

    #[test]
    fn zero_perturbation_changes_nothing() {
        let setup = setup_markov(10.0, 0.05);
        let risk = RiskAversion::constant(1.0).unwrap();
        let policy = ConstantRaPolicy::new(&setup, &risk, false).unwrap();
        let point = point_zero(&setup);
        let spec = PerturbationSpec { t: 0.0, epsilon: 0.25, rho1: 0.0, rho2: None };
        let rep = perturbation_test(&policy, &setup, &point, &risk, &spec, 200, 3).unwrap();
        for p in rep.points {
            assert_eq!(p.estimate, 0.0);
        }
    }

    #[test]
    fn equilibrium_policy_passes_perturbation_test() {
        let setup = setup_markov(10.0, 0.05);
        let risk = RiskAversion::constant(1.0).unwrap();
        let policy = ConstantRaPolicy::new(&setup, &risk, false).unwrap();
        let point = point_zero(&setup);
        for spec in [
            PerturbationSpec { t: 0.0, epsilon: 0.4, rho1: 1.0, rho2: None },
            PerturbationSpec { t: 0.0, epsilon: 0.4, rho1: -0.5, rho2: Some(0.5) },
        ] {
            let rep =
                perturbation_test(&policy, &setup, &point, &risk, &spec, 3000, 11).unwrap();
            assert!(rep.accepted(3.0), "{rep:?}");
        }
    }

    #[test]
    fn anti_equilibrium_is_rejected() {
        let setup = setup_markov(10.0, 0.05);
        let risk = RiskAversion::constant(1.0).unwrap();
        let policy = ScaledPiPolicy {
            inner: ConstantRaPolicy::new(&setup, &risk, false).unwrap(),
            factor: -1.0,
        };
        let point = point_zero(&setup);
        // Pushing investment back towards the optimum improves J to first
        // order, so the difference quotient goes significantly negative.
        let spec = PerturbationSpec { t: 0.0, epsilon: 0.4, rho1: 1.0, rho2: None };
        let rep = perturbation_test(&policy, &setup, &point, &risk, &spec, 3000, 17).unwrap();
        assert!(
            rep.points.iter().any(|p| p.estimate < -3.0 * p.std_error),
            "{rep:?}"
        );
    }

    #[test]
    fn perturbation_window_must_fit_horizon() {
        let setup = setup_markov(10.0, 0.05);
        let risk = RiskAversion::constant(1.0).unwrap();
        let policy = ConstantRaPolicy::new(&setup, &risk, false).unwrap();
        let point = point_zero(&setup);
        let spec = PerturbationSpec { t: 0.0, epsilon: 4.0, rho1: 1.0, rho2: None };
        assert!(perturbation_test(&policy, &setup, &point, &risk, &spec, 10, 3).is_err());
    }

    #[test]
    fn theta_is_strictly_positive_along_paths() {
        let setup = setup_markov(10.0, 0.05);
        let mort = Arc::new(simulate_path(&setup.mort_params, &setup.full_grid, 23).unwrap());
        for i in 0..=setup.ctrl_steps {
            let lam = mort.lambda_hat_at(i);
            assert!(theta_second_order(&setup.market, &setup.claims, lam, setup.full_grid.node(i), 3.0) > 0.0);
        }
    }
}
