//! The model-comparison harness.
//!
//! One mortality trajectory is simulated over the full window (observed
//! history plus control horizon) under the long-range-dependent kernel, and
//! one market scenario over the control horizon. Both mortality models then
//! run on exactly the same shocks: the LRD model forecasts future intensity
//! through the kernel memory, its Markov counterpart through the closed form
//! in the current state only. Constant risk aversion yields identical
//! strategies by construction; under state-dependent risk aversion the
//! forecast gap propagates through the wealth-scaling factor into the
//! controls and the wealth paths, reported as percentage differences.

use std::sync::Arc;

use crate::error::Result;
use crate::grid::DiscreteGrid;
use crate::kernels::{KernelSpec, ResolventTable};
use crate::market::{simulate_scenario, MarketScenario, WealthPath};
use crate::mortality::{simulate_path_indexed, CondMeanContext, MortalityParams, MortalityPath};
use crate::rng::checksum_f64;
use crate::strategies::{
    constant_ra_strategy, propagate_equilibrium_wealth, propagate_wealth, MFactorEngine, Regime,
    RiskAversion,
};

use super::config::ExperimentConfig;

/// Floor under percentage-difference denominators; smaller magnitudes yield
/// a null cell instead of an explosion.
pub const PCT_DENOM_FLOOR: f64 = 1e-8;

pub fn pct_diff(lrd: f64, markov: f64) -> Option<f64> {
    if markov.abs() > PCT_DENOM_FLOOR {
        Some(100.0 * (lrd - markov) / markov)
    } else {
        None
    }
}

fn max_abs(series: &[Option<f64>]) -> f64 {
    series
        .iter()
        .flatten()
        .fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Per-risk-level comparison on the shared shocks.
#[derive(Debug, Clone)]
pub struct PhiComparison {
    pub phi1: f64,
    pub wealth_lrd: WealthPath,
    pub wealth_markov: WealthPath,
    /// Percentage differences of the reinsurance strategy per node.
    pub pct_a: Vec<Option<f64>>,
    /// Percentage differences of wealth per node.
    pub pct_x: Vec<Option<f64>>,
    pub max_pct_a: f64,
    pub max_pct_x: f64,
}

/// Ensemble extension: distribution of the per-path max percentage
/// differences over independent shock sets.
#[derive(Debug, Clone)]
pub struct EnsembleRow {
    pub phi1: f64,
    pub mean_max_pct_a: f64,
    pub se_max_pct_a: f64,
    pub mean_max_pct_x: f64,
    pub se_max_pct_x: f64,
    pub n_paths: u64,
}

#[derive(Debug, Clone)]
pub struct ComparisonResult {
    pub mortality: Arc<MortalityPath>,
    pub scenario: MarketScenario,
    pub per_phi: Vec<PhiComparison>,
    pub ensemble: Vec<EnsembleRow>,
    pub regime: Regime,
    pub seed: u64,
    pub dw0_checksum: u64,
    pub dw1_checksum: u64,
    pub claims_checksum: u64,
}

struct ModelPair {
    lrd: KernelSpec,
    markov: KernelSpec,
}

fn comparison_kernels(config: &ExperimentConfig) -> Result<ModelPair> {
    let c = config.mortality.kernel.scale();
    Ok(ModelPair {
        lrd: KernelSpec::fractional(c, config.alpha_lrd)?,
        markov: KernelSpec::fractional(c, config.alpha_markov)?,
    })
}

/// Controls and wealth for both models on one shock set.
#[allow(clippy::too_many_arguments)]
fn compare_on_path(
    config: &ExperimentConfig,
    params_lrd: &MortalityParams,
    kernels: &ModelPair,
    table_lrd: &Arc<ResolventTable>,
    table_markov: &Arc<ResolventTable>,
    path: &Arc<MortalityPath>,
    scenario: &MarketScenario,
    phi1: f64,
) -> Result<PhiComparison> {
    let offset = config.hist_steps();
    let n = config.ctrl_steps;
    let risk = RiskAversion::state_dependent(phi1)?;

    let run = |kernel: &KernelSpec, table: &Arc<ResolventTable>| -> Result<WealthPath> {
        let params_model = MortalityParams::new(
            params_lrd.lambda0,
            params_lrd.b1,
            params_lrd.a1,
            params_lrd.sigma_lambda,
            params_lrd.l.clone(),
            kernel.clone(),
        )?;
        let ctx = CondMeanContext::new(&params_model, path.clone(), table.clone())?;
        let mut engine = MFactorEngine::new(
            &config.market,
            &config.claims,
            &risk,
            ctx,
            offset,
            n,
        )?;
        let coeff = engine.sweep()?;
        propagate_equilibrium_wealth(scenario, &config.market, &config.claims, &coeff, config.x0)
    };

    let wealth_lrd = run(&kernels.lrd, table_lrd)?;
    let wealth_markov = run(&kernels.markov, table_markov)?;

    let pct_a: Vec<Option<f64>> = (0..=n)
        .map(|i| pct_diff(wealth_lrd.a()[i], wealth_markov.a()[i]))
        .collect();
    let pct_x: Vec<Option<f64>> = (0..=n)
        .map(|i| pct_diff(wealth_lrd.x_at(i), wealth_markov.x_at(i)))
        .collect();
    Ok(PhiComparison {
        phi1,
        max_pct_a: max_abs(&pct_a),
        max_pct_x: max_abs(&pct_x),
        pct_a,
        pct_x,
        wealth_lrd,
        wealth_markov,
    })
}

/// Runs the full comparison for a config (single shared path; optional
/// ensemble extension).
pub fn run_section5(config: &ExperimentConfig) -> Result<ComparisonResult> {
    let kernels = comparison_kernels(config)?;
    let full_grid = config.full_grid()?;
    let offset = config.hist_steps();
    let ctrl_grid = full_grid.window(offset, config.ctrl_steps)?;
    let params_lrd = MortalityParams::new(
        config.mortality.lambda0,
        config.mortality.b1,
        config.mortality.a1,
        config.mortality.sigma_lambda,
        config.mortality.l.clone(),
        kernels.lrd.clone(),
    )?;

    let lag = DiscreteGrid::new(
        0.0,
        full_grid.t_end() - full_grid.t0(),
        full_grid.n_steps(),
    )?;
    let table_lrd = Arc::new(ResolventTable::build(&kernels.lrd, params_lrd.a1, &lag)?);
    let table_markov = Arc::new(ResolventTable::build(&kernels.markov, params_lrd.a1, &lag)?);

    let simulate_pair = |path_index: u64| -> Result<(Arc<MortalityPath>, MarketScenario)> {
        let path = Arc::new(simulate_path_indexed(
            &params_lrd,
            &full_grid,
            config.seed,
            path_index,
        )?);
        let scenario = simulate_scenario(
            &config.market,
            &config.claims,
            path.clone(),
            offset,
            &ctrl_grid,
            config.seed,
            path_index,
        )?;
        Ok((path, scenario))
    };

    let (path, scenario) = simulate_pair(0)?;

    let per_phi = match config.risk.regime() {
        Regime::Constant => {
            // Both models share the deterministic schedule, so the
            // differences are identically zero and emitted as such.
            let schedule =
                constant_ra_strategy(&config.market, &config.claims, &config.risk, &ctrl_grid)?;
            let wealth = propagate_wealth(
                &scenario,
                &config.market,
                &config.claims,
                &schedule,
                config.x0,
            )?;
            let n = config.ctrl_steps;
            let pct_a: Vec<Option<f64>> =
                (0..=n).map(|i| pct_diff(schedule.a()[i], schedule.a()[i])).collect();
            let pct_x: Vec<Option<f64>> =
                (0..=n).map(|i| pct_diff(wealth.x_at(i), wealth.x_at(i))).collect();
            vec![PhiComparison {
                phi1: 0.0,
                max_pct_a: max_abs(&pct_a),
                max_pct_x: max_abs(&pct_x),
                pct_a,
                pct_x,
                wealth_lrd: wealth.clone(),
                wealth_markov: wealth,
            }]
        }
        Regime::StateDependent => {
            let mut out = Vec::with_capacity(config.phi1_sweep.len());
            for &phi1 in &config.phi1_sweep {
                out.push(compare_on_path(
                    config,
                    &params_lrd,
                    &kernels,
                    &table_lrd,
                    &table_markov,
                    &path,
                    &scenario,
                    phi1,
                )?);
            }
            out
        }
    };

    let mut ensemble = Vec::new();
    if config.ensemble_paths > 0 && config.risk.regime() == Regime::StateDependent {
        for &phi1 in &config.phi1_sweep {
            let mut maxes_a = Vec::with_capacity(config.ensemble_paths as usize);
            let mut maxes_x = Vec::with_capacity(config.ensemble_paths as usize);
            for k in 1..=config.ensemble_paths {
                let (p, s) = simulate_pair(k)?;
                let cmp = compare_on_path(
                    config,
                    &params_lrd,
                    &kernels,
                    &table_lrd,
                    &table_markov,
                    &p,
                    &s,
                    phi1,
                )?;
                maxes_a.push(cmp.max_pct_a);
                maxes_x.push(cmp.max_pct_x);
            }
            let stats = |v: &[f64]| {
                let n = v.len() as f64;
                let mean = v.iter().sum::<f64>() / n;
                let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
                (mean, if v.len() > 1 { (var / n).sqrt() } else { f64::NAN })
            };
            let (ma, sa) = stats(&maxes_a);
            let (mx, sx) = stats(&maxes_x);
            ensemble.push(EnsembleRow {
                phi1,
                mean_max_pct_a: ma,
                se_max_pct_a: sa,
                mean_max_pct_x: mx,
                se_max_pct_x: sx,
                n_paths: config.ensemble_paths,
            });
        }
    }

    let claims_stream: Vec<f64> = scenario
        .claim_events()
        .iter()
        .flat_map(|e| [e.step as f64, e.size])
        .collect();

    Ok(ComparisonResult {
        dw0_checksum: checksum_f64(path.dw0()),
        dw1_checksum: checksum_f64(scenario.dw1()),
        claims_checksum: checksum_f64(&claims_stream),
        mortality: path,
        scenario,
        per_phi,
        ensemble,
        regime: config.risk.regime(),
        seed: config.seed,
    })
}
