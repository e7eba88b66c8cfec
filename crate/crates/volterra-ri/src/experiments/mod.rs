//! Experiment orchestration: configuration, the model-comparison harness,
//! CSV export, and the drivers behind the command-line subcommands.

pub mod config;
pub mod csv;
pub mod section5;

pub use config::{load_config, load_config_str, ExperimentConfig};
pub use csv::{export_csv, fmt_sig12};
pub use section5::{pct_diff, ComparisonResult, EnsembleRow, PhiComparison, PCT_DENOM_FLOOR};

use std::fmt::Write as _;
use std::path::PathBuf;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::market::simulate_scenario;
use crate::mortality::{simulate_path_indexed, MeanRoute};
use crate::objective::{
    foc_along_path_constant, foc_along_path_state_dependent, ConstantRaPolicy, EvalPoint,
    EvalSetup, ObjectiveEstimate, PerturbationSpec, Policy, ScaledPiPolicy,
    StateDependentPolicy,
};
use crate::strategies::{check_assumptions, BoundedClaimVerdict, Regime};

/// Reserved path index of the trunk (conditioning) trajectory; Monte Carlo
/// paths use indices 0, 1, 2, ...
pub const TRUNK_PATH_INDEX: u64 = u64::MAX;

/// Global CLI flag overrides applied on top of a parsed config.
#[derive(Debug, Clone, Default)]
pub struct CliOverrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub paths: Option<u64>,
    pub steps: Option<usize>,
}

pub fn apply_overrides(cfg: &mut ExperimentConfig, o: &CliOverrides) -> Result<()> {
    if let Some(s) = o.seed {
        cfg.seed = s;
    }
    if let Some(dir) = &o.out {
        cfg.out_dir = dir.clone();
    }
    if let Some(p) = o.paths {
        if p == 0 {
            return Err(Error::Parameter("--paths must be >= 1".into()));
        }
        cfg.n_paths = p;
    }
    if let Some(n) = o.steps {
        if n == 0 {
            return Err(Error::Parameter("--steps must be >= 1".into()));
        }
        cfg.ctrl_steps = n;
    }
    Ok(())
}

/// Caps the rayon pool from `VOLTERRA_RI_THREADS` (0 or unset = automatic).
/// Safe to call more than once; later calls are ignored by rayon.
pub fn configure_threads() {
    if let Ok(v) = std::env::var("VOLTERRA_RI_THREADS") {
        if let Ok(n) = v.trim().parse::<usize>() {
            if n > 0 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

/// Evaluation setup (grids, resolvent table) derived from a config.
pub fn eval_setup(cfg: &ExperimentConfig) -> Result<EvalSetup> {
    EvalSetup::new(
        cfg.market.clone(),
        cfg.claims.clone(),
        cfg.mortality.clone(),
        cfg.full_grid()?,
        cfg.hist_steps(),
        cfg.x0,
    )
}

/// Equilibrium policy matching the config's regime and kernel.
pub fn policy_for(cfg: &ExperimentConfig, setup: &EvalSetup) -> Result<Box<dyn Policy>> {
    match cfg.risk.regime() {
        Regime::Constant => Ok(Box::new(ConstantRaPolicy::new(setup, &cfg.risk, false)?)),
        Regime::StateDependent => {
            let route = match cfg.mortality.kernel.as_effective_constant() {
                Some(c_eff) => MeanRoute::Markov { c_eff },
                None => MeanRoute::Volterra,
            };
            Ok(Box::new(StateDependentPolicy::new(cfg.risk, route)?))
        }
    }
}

/// Trunk state at control time `t`: realized history plus equilibrium wealth.
pub fn eval_point_at(
    cfg: &ExperimentConfig,
    setup: &EvalSetup,
    policy: &dyn Policy,
    t: f64,
) -> Result<EvalPoint> {
    let trunk = simulate_path_indexed(
        &cfg.mortality,
        &setup.full_grid,
        cfg.seed,
        TRUNK_PATH_INDEX,
    )?;
    let ctrl_grid = setup.ctrl_grid()?;
    let eval_idx = ctrl_grid.index_of(t)?;
    let trunk = Arc::new(trunk);
    let scenario = simulate_scenario(
        &setup.market,
        &setup.claims,
        trunk.clone(),
        setup.ctrl_offset,
        &ctrl_grid,
        cfg.seed,
        TRUNK_PATH_INDEX,
    )?;
    let mut law = policy.law(setup, &scenario, 0)?;
    let wealth = crate::market::propagate_wealth_with(
        &scenario,
        &setup.market,
        &setup.claims,
        &mut law,
        cfg.x0,
    )?;
    Ok(EvalPoint {
        eval_idx,
        x_t: wealth.x_at(eval_idx),
        trunk_dw0: trunk.dw0()[..setup.ctrl_offset + eval_idx].to_vec(),
    })
}

/// `simulate`: one mortality path and market scenario, written as CSV.
pub fn run_simulate(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let full_grid = cfg.full_grid()?;
    let offset = cfg.hist_steps();
    let ctrl_grid = full_grid.window(offset, cfg.ctrl_steps)?;
    let path = Arc::new(simulate_path_indexed(&cfg.mortality, &full_grid, cfg.seed, 0)?);
    let scenario = simulate_scenario(
        &cfg.market,
        &cfg.claims,
        path.clone(),
        offset,
        &ctrl_grid,
        cfg.seed,
        0,
    )?;
    let mut s = String::from("t,lambda,lambda_hat,asset,claim_size\n");
    for i in 0..full_grid.n_nodes() {
        let (asset, claim) = if i >= offset {
            let j = i - offset;
            (
                Some(scenario.asset()[j]),
                if j < ctrl_grid.n_steps() {
                    scenario.claim_in_step()[j]
                } else {
                    None
                },
            )
        } else {
            (None, None)
        };
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            fmt_sig12(full_grid.node(i)),
            fmt_sig12(path.lambda_at(i)),
            fmt_sig12(path.lambda_hat_at(i)),
            asset.map(fmt_sig12).unwrap_or_else(|| "nan".into()),
            claim.map(fmt_sig12).unwrap_or_else(|| "nan".into()),
        );
    }
    std::fs::create_dir_all(&cfg.out_dir).map_err(|source| Error::Io {
        path: cfg.out_dir.display().to_string(),
        source,
    })?;
    Ok(vec![csv::write_file(&cfg.out_dir, "paths.csv", &s)?])
}

/// `strategy`: tabulate the equilibrium controls for the configured regime.
pub fn run_strategy(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let setup = eval_setup(cfg)?;
    let ctrl_grid = setup.ctrl_grid()?;
    std::fs::create_dir_all(&cfg.out_dir).map_err(|source| Error::Io {
        path: cfg.out_dir.display().to_string(),
        source,
    })?;
    let s = match cfg.risk.regime() {
        Regime::Constant => {
            let plain = crate::strategies::constant_ra_strategy(
                &cfg.market,
                &cfg.claims,
                &cfg.risk,
                &ctrl_grid,
            )?;
            let boxed = crate::strategies::constrained_ra_strategy(
                &cfg.market,
                &cfg.claims,
                &cfg.risk,
                &ctrl_grid,
            )?;
            let mut s = String::from("t,pi,a,a_unit_interval\n");
            for i in 0..ctrl_grid.n_nodes() {
                let _ = writeln!(
                    s,
                    "{},{},{},{}",
                    fmt_sig12(ctrl_grid.node(i)),
                    fmt_sig12(plain.pi()[i]),
                    fmt_sig12(plain.a()[i]),
                    fmt_sig12(boxed.a()[i]),
                );
            }
            s
        }
        Regime::StateDependent => {
            let policy = StateDependentPolicy::new(
                cfg.risk,
                match cfg.mortality.kernel.as_effective_constant() {
                    Some(c_eff) => MeanRoute::Markov { c_eff },
                    None => MeanRoute::Volterra,
                },
            )?;
            let trunk = Arc::new(simulate_path_indexed(
                &cfg.mortality,
                &setup.full_grid,
                cfg.seed,
                TRUNK_PATH_INDEX,
            )?);
            let scenario = simulate_scenario(
                &setup.market,
                &setup.claims,
                trunk,
                setup.ctrl_offset,
                &ctrl_grid,
                cfg.seed,
                TRUNK_PATH_INDEX,
            )?;
            let coeff = policy.coefficients(&setup, &scenario, 0)?;
            let wealth = crate::strategies::propagate_equilibrium_wealth(
                &scenario,
                &setup.market,
                &setup.claims,
                &coeff,
                cfg.x0,
            )?;
            let mut s = String::from("t,m,gamma1,zeta1,zeta2,pi,a,x\n");
            #[allow(clippy::needless_range_loop)]
            for i in 0..ctrl_grid.n_nodes() {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{},{}",
                    fmt_sig12(ctrl_grid.node(i)),
                    fmt_sig12(coeff[i].m),
                    fmt_sig12(coeff[i].gamma1),
                    fmt_sig12(coeff[i].zeta1),
                    fmt_sig12(coeff[i].zeta2),
                    fmt_sig12(wealth.pi()[i]),
                    fmt_sig12(wealth.a()[i]),
                    fmt_sig12(wealth.x_at(i)),
                );
            }
            s
        }
    };
    Ok(vec![csv::write_file(&cfg.out_dir, "strategy.csv", &s)?])
}

/// `compare`: the full comparison harness plus CSV export.
pub fn run_compare(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let result = section5::run_section5(cfg)?;
    export_csv(&result, cfg, &cfg.out_dir)
}

/// `check`: human-readable sufficient-condition report (never fails the
/// process on a FAIL verdict; honesty is the point).
pub fn run_check(cfg: &ExperimentConfig) -> Result<String> {
    let rep = check_assumptions(&cfg.market, &cfg.claims, &cfg.mortality, &cfg.risk, cfg.t_end)?;
    let mut s = String::new();
    let _ = writeln!(s, "sufficient-condition report (horizon T = {})", cfg.t_end);
    let _ = writeln!(s, "  C2 bound, uniqueness (k1(2+eta)eta):        {:.6}", rep.c2_uniqueness);
    let _ = writeln!(
        s,
        "  C2 bound, volatility loading (125 eta^4 ...): {:.6}",
        rep.c2_u0
    );
    let _ = writeln!(
        s,
        "  C2 bound, admissibility (18 eta phi1 k1):    {:.6}",
        rep.c2_admissibility
    );
    let _ = writeln!(s, "  required C2 = max of the above:             {:.6}", rep.c2_required);
    let _ = writeln!(
        s,
        "  exponential-moment margin a1^2 - 2 C2 s^2:   {:.6}  [{}]",
        rep.exponential_moment_margin,
        if rep.exponential_moment_ok { "PASS" } else { "FAIL" }
    );
    let _ = writeln!(
        s,
        "  bounded-claim condition:                     {}",
        match rep.bounded_claims {
            BoundedClaimVerdict::Pass => "PASS",
            BoundedClaimVerdict::Fail => "FAIL",
            BoundedClaimVerdict::NotVerifiable => "NOT VERIFIABLE (unbounded claim family)",
        }
    );
    let _ = writeln!(s, "  sup of the E_B integral:                     {:.6}", rep.sup_eb_integral);
    if !rep.exponential_moment_ok {
        let _ = writeln!(
            s,
            "note: the bounds are sufficient, not necessary; simulation and the \
             first-order-condition checks remain available."
        );
    }
    Ok(s)
}

/// Outcome of the `verify` driver.
pub struct VerifyOutcome {
    pub report: String,
    pub files: Vec<PathBuf>,
    pub passed: bool,
}

/// `verify`: first-order conditions along the trunk equilibrium path plus a
/// perturbation ladder and an objective table.
pub fn run_verify(cfg: &ExperimentConfig) -> Result<VerifyOutcome> {
    let setup = eval_setup(cfg)?;
    let ctrl_grid = setup.ctrl_grid()?;
    let policy = policy_for(cfg, &setup)?;
    let mut report = String::new();
    let mut passed = true;

    // First-order conditions node by node on the trunk scenario.
    let trunk = Arc::new(simulate_path_indexed(
        &cfg.mortality,
        &setup.full_grid,
        cfg.seed,
        TRUNK_PATH_INDEX,
    )?);
    let scenario = simulate_scenario(
        &setup.market,
        &setup.claims,
        trunk.clone(),
        setup.ctrl_offset,
        &ctrl_grid,
        cfg.seed,
        TRUNK_PATH_INDEX,
    )?;
    let focs = match cfg.risk.regime() {
        Regime::Constant => {
            let schedule = crate::strategies::constant_ra_strategy(
                &cfg.market,
                &cfg.claims,
                &cfg.risk,
                &ctrl_grid,
            )?;
            foc_along_path_constant(&cfg.market, &cfg.claims, &cfg.risk, &schedule, &scenario)?
        }
        Regime::StateDependent => {
            let sd = StateDependentPolicy::new(
                cfg.risk,
                match cfg.mortality.kernel.as_effective_constant() {
                    Some(c_eff) => MeanRoute::Markov { c_eff },
                    None => MeanRoute::Volterra,
                },
            )?;
            let coeff = sd.coefficients(&setup, &scenario, 0)?;
            let wealth = crate::strategies::propagate_equilibrium_wealth(
                &scenario,
                &setup.market,
                &setup.claims,
                &coeff,
                cfg.x0,
            )?;
            foc_along_path_state_dependent(&cfg.market, &cfg.claims, &coeff, &wealth, &scenario)?
        }
    };
    let worst_m = focs.iter().map(|f| f.martingale_residual).fold(0.0_f64, f64::max);
    let worst_v = focs.iter().map(|f| f.vi_residual).fold(0.0_f64, f64::max);
    let foc_ok = worst_m < 1e-6 && worst_v < 1e-6;
    passed &= foc_ok;
    let _ = writeln!(
        report,
        "first-order conditions: max residuals {:.3e} / {:.3e}  [{}]",
        worst_m,
        worst_v,
        if foc_ok { "PASS" } else { "FAIL" }
    );

    // Perturbation ladder at t = 0.
    let point = eval_point_at(cfg, &setup, policy.as_ref(), 0.0)?;
    let n_paths = cfg.n_paths.max(2);
    let mut pert_lines = String::from("epsilon,rho1,rho2,estimate,std_error\n");
    for spec in [
        PerturbationSpec { t: 0.0, epsilon: 0.4, rho1: 1.0, rho2: None },
        PerturbationSpec { t: 0.0, epsilon: 0.4, rho1: -1.0, rho2: Some(0.5) },
        PerturbationSpec { t: 0.0, epsilon: 0.2, rho1: 0.5, rho2: Some(0.0) },
    ] {
        let rep = crate::objective::perturbation_test(
            policy.as_ref(),
            &setup,
            &point,
            &cfg.risk,
            &spec,
            n_paths,
            cfg.seed,
        )?;
        let ok = rep.accepted(3.0);
        passed &= ok;
        let _ = writeln!(
            report,
            "perturbation (rho1 = {}, rho2 = {:?}): min estimate {:.4e}  [{}]",
            spec.rho1,
            spec.rho2,
            rep.points
                .iter()
                .map(|p| p.estimate)
                .fold(f64::INFINITY, f64::min),
            if ok { "PASS" } else { "FAIL" }
        );
        for p in rep.points {
            let _ = writeln!(
                pert_lines,
                "{},{},{},{},{}",
                fmt_sig12(p.epsilon),
                fmt_sig12(spec.rho1),
                spec.rho2.map(fmt_sig12).unwrap_or_else(|| "nan".into()),
                fmt_sig12(p.estimate),
                fmt_sig12(p.std_error),
            );
        }
    }

    // Falsification control: scaling the investment leg must break the
    // martingale condition visibly.
    let broken = ScaledPiPolicy {
        inner: ConstantRaPolicy::new(
            &setup,
            &crate::strategies::RiskAversion::constant(1.0)?,
            false,
        )?,
        factor: 1.1,
    };
    let _ = &broken; // diagnostic policies exercised in the acceptance suite
    let _ = writeln!(report, "falsification controls: see acceptance suite");

    // Objective table (allows n_paths = 1; SE is then nan).
    use rayon::prelude::*;
    let samples: Vec<f64> = (0..cfg.n_paths)
        .into_par_iter()
        .map(|k| {
            let scen = simulate_scenario(
                &setup.market,
                &setup.claims,
                Arc::new(
                    crate::mortality::simulate_path_with_prefix(
                        &cfg.mortality,
                        &setup.full_grid,
                        &point.trunk_dw0,
                        cfg.seed,
                        k,
                    )
                    .expect("validated parameters"),
                ),
                setup.ctrl_offset,
                &ctrl_grid,
                cfg.seed,
                k,
            )?;
            let mut law = policy.law(&setup, &scen, 0)?;
            let w = crate::market::propagate_wealth_with(
                &scen,
                &setup.market,
                &setup.claims,
                &mut law,
                cfg.x0,
            )?;
            Ok(w.terminal())
        })
        .collect::<Result<_>>()?;
    let est = ObjectiveEstimate::from_samples(&samples, cfg.risk.weight(cfg.x0))?;
    let _ = writeln!(
        report,
        "objective at t = 0: J = {:.6} (mean {:.6}, var {:.6}, se {})",
        est.j,
        est.mean_xt,
        est.var_xt,
        fmt_sig12(est.std_error)
    );
    let mut objective_csv = String::from("j,mean_xt,var_xt,n_paths,std_error\n");
    let _ = writeln!(
        objective_csv,
        "{},{},{},{},{}",
        fmt_sig12(est.j),
        fmt_sig12(est.mean_xt),
        fmt_sig12(est.var_xt),
        est.n_paths,
        fmt_sig12(est.std_error),
    );

    std::fs::create_dir_all(&cfg.out_dir).map_err(|source| Error::Io {
        path: cfg.out_dir.display().to_string(),
        source,
    })?;
    let mut foc_csv = String::from("t,martingale_residual,vi_value,vi_residual\n");
    for (i, f) in focs.iter().enumerate() {
        let _ = writeln!(
            foc_csv,
            "{},{},{},{}",
            fmt_sig12(ctrl_grid.node(i)),
            fmt_sig12(f.martingale_residual),
            fmt_sig12(f.vi_value),
            fmt_sig12(f.vi_residual),
        );
    }
    let files = vec![
        csv::write_file(&cfg.out_dir, "foc.csv", &foc_csv)?,
        csv::write_file(&cfg.out_dir, "perturbation.csv", &pert_lines)?,
        csv::write_file(&cfg.out_dir, "objective.csv", &objective_csv)?,
    ];
    Ok(VerifyOutcome { report, files, passed })
}

/// Exit-code policy: validation failures are 1, runtime failures 2.
pub fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::Parameter(_)
        | Error::Domain(_)
        | Error::Shape(_)
        | Error::MomentFit(_)
        | Error::Config { .. } => 1,
        Error::Convergence(_)
        | Error::BlowUp { .. }
        | Error::Consistency(_)
        | Error::Resolution(_)
        | Error::Io { .. } => 2,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::evaluate_objective;

    fn small_cfg(extra: &str) -> ExperimentConfig {
        let base = "grid.steps = 48\nmortality.hist_t0 = -1.0\nsim.n_paths = 64\n";
        load_config_str(&format!("{base}{extra}")).unwrap()
    }

    #[test]
    fn evaluate_objective_used_by_drivers_respects_min_paths() {
        let cfg = small_cfg("risk.phi1 = 0\nrisk.phi2 = 1\n");
        let setup = eval_setup(&cfg).unwrap();
        let policy = policy_for(&cfg, &setup).unwrap();
        let trunk = simulate_path_indexed(
            &cfg.mortality,
            &setup.full_grid,
            cfg.seed,
            TRUNK_PATH_INDEX,
        )
        .unwrap();
        let point = EvalPoint::initial(&setup, &trunk);
        assert!(evaluate_objective(policy.as_ref(), &setup, &point, &cfg.risk, 1, 3).is_err());
    }

    #[test]
    fn simulate_and_strategy_drivers_write_files() {
        let dir = std::env::temp_dir().join("vri_driver_test");
        let mut cfg = small_cfg("risk.phi1 = 1.0\n");
        cfg.out_dir = dir.clone();
        let files = run_simulate(&cfg).unwrap();
        assert!(files[0].ends_with("paths.csv"));
        let content = std::fs::read_to_string(&files[0]).unwrap();
        assert!(content.starts_with("t,lambda,lambda_hat,asset,claim_size\n"));
        // history rows carry the nan sentinel in the asset column
        let second = content.lines().nth(1).unwrap();
        assert!(second.contains("nan"));

        let files = run_strategy(&cfg).unwrap();
        let content = std::fs::read_to_string(&files[0]).unwrap();
        assert!(content.starts_with("t,m,gamma1,zeta1,zeta2,pi,a,x\n"));
    }

    #[test]
    fn check_driver_reports_honest_fail_for_baseline() {
        let cfg = small_cfg("");
        let text = run_check(&cfg).unwrap();
        assert!(text.contains("FAIL"), "{text}");
        assert!(text.contains("36.000000"), "{text}");
        assert!(text.contains("NOT VERIFIABLE"), "{text}");
    }

    #[test]
    fn verify_driver_passes_for_constant_regime() {
        let dir = std::env::temp_dir().join("vri_verify_test");
        let mut cfg = small_cfg("risk.phi1 = 0\nrisk.phi2 = 1.0\n");
        cfg.n_paths = 400;
        cfg.out_dir = dir;
        let out = run_verify(&cfg).unwrap();
        assert!(out.passed, "{}", out.report);
        assert_eq!(out.files.len(), 3);
    }

    #[test]
    fn single_path_objective_table_uses_nan_sentinel() {
        let dir = std::env::temp_dir().join("vri_verify_single");
        let mut cfg = small_cfg("risk.phi1 = 0\nrisk.phi2 = 1.0\n");
        cfg.n_paths = 1;
        cfg.out_dir = dir;
        let out = run_verify(&cfg).unwrap();
        let objective = out.files.iter().find(|f| f.ends_with("objective.csv")).unwrap();
        let content = std::fs::read_to_string(objective).unwrap();
        let row = content.lines().nth(1).unwrap();
        assert!(row.ends_with(",1,nan"), "row: {row}");
    }

    #[test]
    fn overrides_apply() {
        let mut cfg = small_cfg("");
        apply_overrides(
            &mut cfg,
            &CliOverrides {
                seed: Some(7),
                out: Some(PathBuf::from("elsewhere")),
                paths: Some(11),
                steps: Some(32),
            },
        )
        .unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.n_paths, 11);
        assert_eq!(cfg.ctrl_steps, 32);
        assert!(cfg.out_dir.ends_with("elsewhere"));
    }
}
