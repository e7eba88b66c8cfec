//! Exponential functional of integrated intensity via the Volterra-Riccati
//! equation, cross-checked against Monte Carlo.
//!
//! Run with `cargo run --example exp_functional` (release recommended).

use volterra_ri::grid::DiscreteGrid;
use volterra_ri::kernels::KernelSpec;
use volterra_ri::mortality::{
    exp_functional, simulate_path, simulate_path_indexed, solve_riccati, MortalityParams,
};
use volterra_ri::timefn::TimeFn;

fn main() -> volterra_ri::Result<()> {
    let grid = DiscreteGrid::new(0.0, 3.0, 1024)?;
    let c0 = 0.1;

    for (label, kernel) in [
        ("Markov (K = 1)", KernelSpec::constant(1.0)?),
        ("LRD (alpha = 1.33)", KernelSpec::fractional(1.0, 1.33)?),
    ] {
        let params = MortalityParams::new(0.18, 0.15, 0.5, 0.1, TimeFn::zero(), kernel)?;
        let psi = solve_riccati(&params, &grid, c0)?;
        println!(
            "{label}: psi(T) = {:.8}, fixed-point residual = {:.2e}",
            psi.psi_at(grid.n_steps()),
            psi.residual(&params)
        );

        let path = simulate_path(&params, &grid, 1)?;
        let transform = exp_functional(&params, c0, &path, 0)?;

        let n_paths = if label.starts_with("Markov") { 40_000 } else { 4_000 };
        let (mut sum, mut sum2) = (0.0, 0.0);
        for k in 0..n_paths {
            let p = simulate_path_indexed(&params, &grid, 7, k)?;
            let v = (c0 * p.integrated_lambda(grid.n_steps())).exp();
            sum += v;
            sum2 += v * v;
        }
        let mean = sum / n_paths as f64;
        let se = ((sum2 / n_paths as f64 - mean * mean) / n_paths as f64).sqrt();
        println!(
            "  E[exp(c0 int lambda)]: transform {:.6}, Monte Carlo {:.6} +/- {:.6} ({} paths)",
            transform,
            mean,
            se,
            n_paths
        );
    }
    Ok(())
}
