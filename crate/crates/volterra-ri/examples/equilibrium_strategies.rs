//! The three equilibrium control regimes: constant risk aversion, its
//! [0,1]-projected variant, and state-dependent risk aversion with the
//! wealth-scaling factor M.
//!
//! Run with `cargo run --example equilibrium_strategies`.

use std::sync::Arc;

use volterra_ri::grid::DiscreteGrid;
use volterra_ri::kernels::{KernelSpec, ResolventTable};
use volterra_ri::market::{moment_fit, ClaimFamily, MarketParams};
use volterra_ri::mortality::{simulate_path, CondMeanContext, MortalityParams};
use volterra_ri::strategies::{
    constant_ra_strategy, constrained_ra_strategy, MFactorEngine, RiskAversion,
};
use volterra_ri::timefn::TimeFn;

fn main() -> volterra_ri::Result<()> {
    let market = MarketParams::new(
        TimeFn::constant(0.05),
        TimeFn::constant(0.07),
        TimeFn::constant(0.2),
        0.2,
        0.2,
        10.0,
    )?;
    let claims = moment_fit(ClaimFamily::Gamma, 1.0, 1.2, None)?;
    let grid = DiscreteGrid::new(0.0, 3.0, 6)?;

    println!("constant risk aversion (phi2 = 1): deterministic controls");
    let risk = RiskAversion::constant(1.0)?;
    let plain = constant_ra_strategy(&market, &claims, &risk, &grid)?;
    println!("{:>6} {:>10} {:>10}", "t", "pi*", "a*");
    for i in 0..grid.n_nodes() {
        println!("{:>6.2} {:>10.6} {:>10.6}", grid.node(i), plain.pi()[i], plain.a()[i]);
    }

    println!("\nwith phi2 = 10 the unconstrained a* leaves [0,1]; projection clamps it:");
    let big = RiskAversion::constant(10.0)?;
    let unbounded = constant_ra_strategy(&market, &claims, &big, &grid)?;
    let boxed = constrained_ra_strategy(&market, &claims, &big, &grid)?;
    println!("{:>6} {:>12} {:>12}", "t", "a* (free)", "a* in [0,1]");
    for i in 0..grid.n_nodes() {
        println!("{:>6.2} {:>12.6} {:>12.6}", grid.node(i), unbounded.a()[i], boxed.a()[i]);
    }

    println!("\nstate-dependent risk aversion (phi1 = 1, theta = eta):");
    let fine = DiscreteGrid::new(0.0, 3.0, 192)?;
    let params = MortalityParams::new(
        0.18,
        0.15,
        0.5,
        0.1,
        TimeFn::zero(),
        KernelSpec::fractional(1.0, 1.33)?,
    )?;
    let path = Arc::new(simulate_path(&params, &fine, 262)?);
    let lag = DiscreteGrid::new(0.0, 3.0, 192)?;
    let table = Arc::new(ResolventTable::build(&params.kernel, params.a1, &lag)?);
    let ctx = CondMeanContext::new(&params, path, table)?;
    let sd = RiskAversion::state_dependent(1.0)?;
    let mut engine = MFactorEngine::new(&market, &claims, &sd, ctx, 0, 192)?;
    let coeff = engine.sweep()?;
    println!(
        "{:>6} {:>10} {:>10} {:>10} {:>14} {:>14}",
        "t", "M", "Gamma1", "zeta1", "pi*(X=10)", "a*(X=10)"
    );
    for i in (0..=192).step_by(32) {
        let c = &coeff[i];
        println!(
            "{:>6.2} {:>10.6} {:>10.6} {:>10.6} {:>14.6} {:>14.6}",
            fine.node(i),
            c.m,
            c.gamma1,
            c.zeta1,
            c.zeta1 * 10.0,
            c.zeta2 * 10.0
        );
    }
    println!("M decreases to exactly 1 at T; controls scale with current wealth.");
    Ok(())
}
