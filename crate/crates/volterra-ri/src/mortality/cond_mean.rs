//! Conditional expectations of future mortality given path history.
//!
//! With R_B the resolvent of a_1·K and E_B = K − R_B*K = R_B/a_1, the
//! forecast of the intensity reads
//!
//! E[λ̂_s | F_t] = l(s) + (1 − ∫_0^s R_B) λ_0 + b_1 ∫_0^s E_B
//!               + Σ_{u<t} E_B(s−u) σ_λ √λ_u ΔW_0(u),
//!
//! so the realized history adjusts the forecast through the kernel memory.
//! An effectively constant kernel collapses this to the Markov closed form
//! l(s) + λ_t e^{-a₁c(s−t)} + (b₁/a₁)(1 − e^{-a₁c(s−t)}), which depends on
//! the current state only. The Markov route can also be forced on a path
//! simulated under a memory kernel; the comparison harness uses exactly that
//! to isolate the effect of long-range dependence.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::kernels::ResolventTable;
use crate::mortality::{MortalityParams, MortalityPath};

/// How forecasts are computed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeanRoute {
    /// History-weighted Volterra formula (needs a resolvent table).
    Volterra,
    /// Markov closed form with mean-reversion speed `a1 * c_eff`.
    Markov { c_eff: f64 },
}

/// Forecast engine bound to one simulated path.
#[derive(Debug, Clone)]
pub struct CondMeanContext {
    path: Arc<MortalityPath>,
    table: Option<Arc<ResolventTable>>,
    route: MeanRoute,
    a1: f64,
    b1: f64,
    l: crate::timefn::TimeFn,
    /// Deterministic forecast component at each node (Volterra route).
    base: Vec<f64>,
    /// History weights σ_λ √λ_j ΔW_j.
    q: Vec<f64>,
}

impl CondMeanContext {
    /// Route chosen from the kernel: effectively constant kernels take the
    /// Markov closed form, memory kernels the Volterra formula.
    pub fn new(
        params: &MortalityParams,
        path: Arc<MortalityPath>,
        table: Arc<ResolventTable>,
    ) -> Result<Self> {
        let route = match params.kernel.as_effective_constant() {
            Some(c_eff) => MeanRoute::Markov { c_eff },
            None => MeanRoute::Volterra,
        };
        Self::with_route(params, path, Some(table), route)
    }

    pub fn with_route(
        params: &MortalityParams,
        path: Arc<MortalityPath>,
        table: Option<Arc<ResolventTable>>,
        route: MeanRoute,
    ) -> Result<Self> {
        let n = path.grid().n_steps();
        let mut base = Vec::new();
        if route == MeanRoute::Volterra {
            let table = table
                .as_ref()
                .ok_or_else(|| Error::Parameter("Volterra forecasts need a resolvent table".into()))?;
            table.check_compatible(path.grid())?;
            if (table.b_coeff() - params.a1).abs() > 1e-12 * params.a1.max(1.0) {
                return Err(Error::Consistency(format!(
                    "resolvent table was built for scale {}, mortality has a1 = {}",
                    table.b_coeff(),
                    params.a1
                )));
            }
            base = (0..=n)
                .map(|s| {
                    params.l.eval(path.grid().node(s))
                        + (1.0 - table.ir_at(s)) * params.lambda0
                        + params.b1 * table.ie_at(s)
                })
                .collect();
        }
        let q: Vec<f64> = (0..n)
            .map(|j| params.sigma_lambda * path.lambda_at(j).sqrt() * path.dw0()[j])
            .collect();
        Ok(Self {
            path,
            table,
            route,
            a1: params.a1,
            b1: params.b1,
            l: params.l.clone(),
            base,
            q,
        })
    }

    pub fn route(&self) -> MeanRoute {
        self.route
    }

    pub fn path(&self) -> &Arc<MortalityPath> {
        &self.path
    }

    pub fn table(&self) -> Option<&Arc<ResolventTable>> {
        self.table.as_ref()
    }

    /// History weights σ_λ √λ_j ΔW_j (Volterra route adjustments).
    pub fn history_weights(&self) -> &[f64] {
        &self.q
    }

    /// Deterministic forecast component at node `s` (Volterra route).
    pub fn base_at(&self, s: usize) -> f64 {
        self.base[s]
    }

    /// E[λ̂_s | F_t] for grid nodes t ≤ s.
    pub fn cond_mean(&self, t_idx: usize, s_idx: usize) -> Result<f64> {
        if s_idx < t_idx {
            return Err(Error::Domain(format!(
                "forecast horizon s (node {s_idx}) must not precede t (node {t_idx})"
            )));
        }
        let n = self.path.grid().n_steps();
        if s_idx > n {
            return Err(Error::Resolution(format!(
                "node {s_idx} beyond the simulated grid ({n} steps)"
            )));
        }
        match self.route {
            MeanRoute::Markov { c_eff } => {
                let dt = self.path.grid().dt();
                let decay = (-self.a1 * c_eff * (s_idx - t_idx) as f64 * dt).exp();
                Ok(self.l.eval(self.path.grid().node(s_idx))
                    + self.path.lambda_at(t_idx) * decay
                    + self.b1 / self.a1 * (1.0 - decay))
            }
            MeanRoute::Volterra => {
                let table = self.table.as_ref().unwrap();
                let mut adj = 0.0;
                for j in 0..t_idx {
                    adj += table.e_at(s_idx - j) * self.q[j];
                }
                Ok(self.base[s_idx] + adj)
            }
        }
    }

    /// λ0-anchored forecast ignoring all history (the time-0 forecast).
    pub fn unconditional_mean(&self, s_idx: usize) -> Result<f64> {
        self.cond_mean(0, s_idx)
    }
}

/// One-shot forecast E[λ̂_s | F_t] at grid times.
pub fn conditional_mean(
    path: &MortalityPath,
    params: &MortalityParams,
    table: &ResolventTable,
    t: f64,
    s: f64,
) -> Result<f64> {
    if s < t {
        return Err(Error::Domain(format!("needs s >= t, got s = {s}, t = {t}")));
    }
    let t_idx = path.grid().index_of(t)?;
    let s_idx = path.grid().index_of(s)?;
    let ctx = CondMeanContext::new(
        params,
        Arc::new(path.clone()),
        Arc::new(table.clone()),
    )?;
    ctx.cond_mean(t_idx, s_idx)
}
